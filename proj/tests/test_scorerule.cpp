#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "objprior/scorerule/bregman.hpp"
#include "objprior/scorerule/convex_generator.hpp"
#include "objprior/scorerule/density_grid.hpp"
#include "objprior/scorerule/euler_lagrange.hpp"
#include "objprior/scorerule/finite_difference.hpp"
#include "objprior/scorerule/score_zero.hpp"
#include "objprior/scorerule/scores.hpp"

using namespace objprior;

namespace {

const double kInvSqrt2Pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);

double std_normal_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

std::vector<DensityGrid> normal_lattice(double lo, double hi, double h) {
    std::vector<DensityGrid> out;
    for (double m : {-0.5, -0.25, 0.0, 0.25, 0.5}) {
        for (double s : {0.75, 0.875, 1.0, 1.125, 1.25}) out.push_back(tabulate(NormalDensity{m, s}, lo, hi, h));
    }
    return out;
}

}  // namespace

TEST(FiniteDifference, CentralStencilsOnSine) {
    const auto f = [](double x) { return std::sin(x); };
    EXPECT_NEAR(fd::central1(f, 0.3, 1e-3), std::cos(0.3), 1e-12);
    EXPECT_NEAR(fd::central2(f, 0.3, 1e-3), -std::sin(0.3), 1e-7);
}

TEST(FiniteDifference, AlongGridOrdersOneToFour) {
    const double h = 0.01;
    const auto x = uniform_points(0.0, 2.0, h);
    std::vector<double> v(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) v[i] = std::exp(x[i]);
    for (int order = 1; order <= 4; ++order) {
        const auto d = fd::along_grid(v, h, order);
        EXPECT_EQ(d.offset, fd::half_width(order));
        for (std::size_t i = d.offset; i < d.end(); ++i) EXPECT_NEAR(d.at_grid(i), std::exp(x[i]), 1e-6 * std::exp(x[i]));
    }
}

TEST(FiniteDifference, ShortGridThrowsStencilError) {
    const std::vector<double> v{1, 2, 3, 4};
    EXPECT_THROW(fd::along_grid(v, 0.1, 1), StencilError);
}

TEST(ConvexGenerator, BuiltinsAreConvexWithConsistentDerivatives) {
    const std::vector<double> pts{-3.0, -1.2, -0.4, 0.3, 0.9, 2.5, 7.0};
    for (const auto& g : {generators::square(), generators::inverse_square(true), generators::inverse_square(false),
                          generators::entropy(), generators::shifted_entropy()}) {
        const auto check = validate(g, pts);
        EXPECT_TRUE(check.convex) << g.name;
        EXPECT_TRUE(check.derivatives_consistent) << g.name << " worst " << check.worst_relative_error;
    }
}

TEST(ConvexGenerator, NegatedSquareIsNotConvex) {
    const std::vector<double> pts{-1.0, 0.5, 2.0};
    EXPECT_FALSE(validate(generators::negated_square(), pts).convex);
}

TEST(PhiGenerator, LocalityAndHomogeneityOnRandomPoints) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> pos(0.01, 5.0), lam(0.1, 10.0), ratio(-4.0, 4.0);
    const auto square = PhiGenerator::from_alpha(generators::square());
    const auto inv = PhiGenerator::from_alpha(generators::inverse_square(true));
    const auto fisher = fisher_phi();
    for (int i = 0; i < 1000; ++i) {
        const double u = pos(rng);
        const double r = ratio(rng);
        const double v = u * r;
        const double l = lam(rng);
        EXPECT_LE(locality_defect(square, u, v), 1e-8);
        EXPECT_LE(homogeneity_defect(square, u, v, l), 1e-8);
        EXPECT_LE(locality_defect(fisher, u, v), 1e-8);
        EXPECT_LE(homogeneity_defect(fisher, u, v, l), 1e-8);
        const double vneg = -u * (0.05 + std::abs(r));
        EXPECT_LE(locality_defect(inv, u, vneg), 1e-8);
        EXPECT_LE(homogeneity_defect(inv, u, vneg, l), 1e-8);
    }
}

TEST(PhiGenerator, FisherPhiMatchesSquarePerspective) {
    const auto a = PhiGenerator::from_alpha(generators::square());
    const auto b = fisher_phi();
    for (double u : {0.1, 1.0, 3.0}) {
        for (double v : {-2.0, 0.0, 1.5}) EXPECT_NEAR(a(u, v), b(u, v), 1e-12);
    }
}

TEST(CheckConvexity, SquareGeneratorIsConvex) {
    std::vector<std::pair<double, double>> pts;
    for (double u : {0.05, 0.5, 2.0}) {
        for (double v : {-3.0, -0.2, 0.0, 0.7, 4.0}) pts.emplace_back(u, v);
    }
    EXPECT_TRUE(check_convexity(PhiGenerator::from_alpha(generators::square()), pts));
}

TEST(CheckConvexity, InverseSquareIsConvexOnEachBranch) {
    std::vector<std::pair<double, double>> neg, posb;
    for (double u : {0.05, 0.5, 2.0}) {
        for (double r : {0.1, 1.0, 5.0}) {
            neg.emplace_back(u, -r * u);
            posb.emplace_back(u, r * u);
        }
    }
    EXPECT_TRUE(check_convexity(PhiGenerator::from_alpha(generators::inverse_square(true)), neg));
    EXPECT_TRUE(check_convexity(PhiGenerator::from_alpha(generators::inverse_square(false)), posb));
}

TEST(CheckConvexity, NegatedSquareFails) {
    const std::vector<std::pair<double, double>> pts{{1.0, 0.5}, {2.0, -1.0}};
    EXPECT_FALSE(check_convexity(PhiGenerator::from_alpha(generators::negated_square()), pts));
}

TEST(DensityGrid, AnalyticDerivativesMatchCentralDifferences) {
    const NormalDensity n{0.3, 1.4};
    const ExponentialDensity e{1.7};
    const LomaxDensity l{2.0, 1.0};
    const auto check = [](const auto& d, double x) {
        const auto j = d.template jet<double>(x);
        for (int k = 1; k <= 2; ++k) {
            const auto fk = [&](double t) { return d.template jet<double>(t)[k - 1]; };
            const double num = fd::central1(fk, x, 1e-3 * std::max(1.0, std::abs(x)));
            EXPECT_NEAR(num, j[k], 1e-5 * std::max(std::abs(j[k]), 1e-3 * std::abs(j[0]))) << "order " << k << " at " << x;
        }
    };
    for (double x : {-2.0, -0.5, 0.4, 1.9}) check(n, x);
    for (double x : {0.1, 0.8, 3.0}) {
        check(e, x);
        check(l, x);
    }
}

TEST(DensityGrid, TrapezoidMassNearOne) {
    const auto g = tabulate(NormalDensity{0.0, 1.0}, -8.0, 8.0, 0.01);
    EXPECT_NEAR(trapezoid(g.q(0), g.h), 1.0, 1e-3);
}

TEST(DensityGrid, MissingOrderThrowsShapeError) {
    const auto g = tabulate(NormalDensity{}, -1.0, 1.0, 0.1, 1);
    EXPECT_EQ(g.max_order(), 1);
    EXPECT_THROW(g.q(2), ShapeError);
}

TEST(ScoreOrder2, InverseSquareVanishesOnLomax) {
    const auto s = score_order2(generators::inverse_square(true));
    for (double x : {0.0, 0.5, 2.0, 10.0}) {
        const auto j = LomaxDensity{1.0, 1.0}.jet<double>(x);
        EXPECT_NEAR(s(j[0], j[1], j[2]), 0.0, 1e-12) << x;
    }
}

TEST(ScoreOrder2, SquareOnStandardNormalAtZero) {
    const auto s = score_order2(generators::square());
    const auto j = NormalDensity{}.jet<double>(0.0);
    EXPECT_NEAR(s(j[0], j[1], j[2]), -2.0, 1e-12);
}

TEST(ScoreOrder2, SquareOnExponentialIsOne) {
    const auto s = score_order2(generators::square());
    for (double x : {0.1, 1.0, 4.0}) {
        const auto j = ExponentialDensity{1.0}.jet<double>(x);
        EXPECT_NEAR(s(j[0], j[1], j[2]), 1.0, 1e-12);
    }
}

TEST(ScoreOrder2, RatioOutsideDomainNamesIt) {
    const auto s = score_order2(generators::inverse_square(true));
    try {
        s(1.0, 0.5, 0.0);
        FAIL() << "expected DomainError";
    } catch (const DomainError& e) {
        EXPECT_NE(std::string(e.what()).find("0.5"), std::string::npos) << e.what();
    }
}

TEST(Hyvarinen, FlatPointIsZero) { EXPECT_DOUBLE_EQ(hyvarinen_score(1.0, 0.0, 0.0), 0.0); }

TEST(Hyvarinen, StandardNormalAtOne) {
    const auto j = NormalDensity{}.jet<double>(1.0);
    EXPECT_NEAR(hyvarinen_score(j[0], j[1], j[2]), -1.0, 1e-12);
}

TEST(Hyvarinen, AgreesWithOrder2SquareOnRandomStates) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> q(0.01, 3.0), d(-5.0, 5.0);
    const auto s = score_order2(generators::square());
    for (int i = 0; i < 100; ++i) {
        const double a = q(rng), b = d(rng), c = d(rng);
        EXPECT_NEAR(s(a, b, c), hyvarinen_score(a, b, c), 1e-10 * std::max(1.0, std::abs(hyvarinen_score(a, b, c))));
    }
}

TEST(Hyvarinen, NonPositiveDensityIsDomainError) { EXPECT_THROW(hyvarinen_score(0.0, 1.0, 1.0), DomainError); }

TEST(InverseSquareScore, LomaxAtTwoIsZero) {
    const auto j = LomaxDensity{1.0, 1.0}.jet<double>(2.0);
    EXPECT_NEAR(inverse_square_score(j[0], j[1], j[2]), 0.0, 1e-12);
}

TEST(InverseSquareScore, ExponentialIsMinusThree) {
    const auto j = ExponentialDensity{1.0}.jet<double>(0.7);
    EXPECT_NEAR(inverse_square_score(j[0], j[1], j[2]), -3.0, 1e-12);
}

TEST(InverseSquareScore, StationaryPointIsSingular) {
    EXPECT_THROW(inverse_square_score(1.0, 0.0, -1.0), SingularityError);
}

TEST(ScoreOrderM, ZeroOrderEntropyIsLogScore) {
    const auto s = score_order_m({generators::shifted_entropy()}, 0);
    EXPECT_NEAR(s(0.0, std::vector<double>{0.5}), std::log(2.0), 1e-15);
    for (double q : {1e-3, 0.2, 1.0, 4.0}) EXPECT_EQ(s(0.0, std::vector<double>{q}), -std::log(q));
}

TEST(ScoreOrderM, OrderOneSquareMatchesHyvarinen) {
    const auto g = tabulate(NormalDensity{}, -6.0, 6.0, 0.01);
    const auto s = score_order_m({generators::square()}, 1).evaluate(g);
    for (std::size_t i = s.offset; i < s.end(); ++i) {
        const double ref = hyvarinen_score(g.derivs[0][i], g.derivs[1][i], g.derivs[2][i]);
        ASSERT_NEAR(s.at_grid(i), ref, 1e-4) << "x = " << g.x[i];
    }
}

TEST(ScoreOrderM, OrderTwoOnExponentialIsRateSquared) {
    // ratios q_{j+1}/q_j are all -r, so every partial is constant and S = -dphi/dq0 = r^2.
    const double r = 1.5;
    const auto g = tabulate(ExponentialDensity{r}, 0.5, 3.0, 0.01);
    const auto s = score_order_m({generators::square(), generators::square()}, 2).evaluate(g);
    for (double v : s.values) ASSERT_NEAR(v, r * r, 1e-6);
}

TEST(ScoreOrderM, OrderTwoSquareGeneratorsProperOnNormal) {
    const double h = 0.01;
    const auto p = tabulate(NormalDensity{}, -10.0 + h / 2, 10.0 + h / 2, h);
    const auto pert = normal_lattice(-10.0 + h / 2, 10.0 + h / 2, h);
    const auto s = score_order_m({generators::square(), generators::square()}, 2);
    EXPECT_TRUE(propriety_check(s, p, pert).proper);
}

TEST(ScoreOrderM, HigherOrdersAreExperimental) {
    EXPECT_FALSE(score_order_m({generators::square(), generators::square()}, 2).experimental);
    EXPECT_TRUE(score_order_m({generators::square(), generators::square(), generators::square()}, 3).experimental);
}

TEST(ScoreOrderM, ShortGridIsStencilError) {
    const auto g = tabulate(NormalDensity{}, -0.1, 0.2, 0.1);  // 4 points, stencil needs 5
    EXPECT_THROW(score_order_m({generators::square()}, 1).evaluate(g), StencilError);
}

TEST(Bregman1d, IdenticalGridsGiveZero) {
    const auto p = tabulate(NormalDensity{}, -8, 8, 0.01);
    EXPECT_NEAR(bregman_div_1d(generators::entropy(), p, p), 0.0, 1e-12);
}

TEST(Bregman1d, EntropyGivesKullbackLeibler) {
    const auto p = tabulate(NormalDensity{0.0, 1.0}, -12, 12, 0.005);
    const auto q = tabulate(NormalDensity{0.5, 1.3}, -12, 12, 0.005);
    std::vector<double> f(p.size());
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = p.derivs[0][i] * std::log(p.derivs[0][i] / q.derivs[0][i]);
    EXPECT_NEAR(bregman_div_1d(generators::entropy(), p, q), trapezoid(f, p.h), 1e-4);
    // closed form KL(N(0,1) || N(0.5, 1.3^2))
    const double kl = std::log(1.3) + (1.0 + 0.25) / (2 * 1.69) - 0.5;
    EXPECT_NEAR(bregman_div_1d(generators::entropy(), p, q), kl, 1e-4);
}

TEST(Bregman1d, SquareGivesL2) {
    const auto p = tabulate(NormalDensity{0.0, 1.0}, -10, 10, 0.01);
    const auto q = tabulate(NormalDensity{1.0, 2.0}, -10, 10, 0.01);
    std::vector<double> f(p.size());
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = std::pow(p.derivs[0][i] - q.derivs[0][i], 2);
    EXPECT_NEAR(bregman_div_1d(generators::square(), p, q), trapezoid(f, p.h), 1e-6);
}

TEST(Bregman1d, MismatchedGridsThrow) {
    const auto p = tabulate(NormalDensity{}, -5, 5, 0.01);
    const auto q = tabulate(NormalDensity{}, -5, 5, 0.02);
    EXPECT_THROW(bregman_div_1d(generators::square(), p, q), ShapeError);
}

TEST(Bregman2d, IdenticalGridsGiveZero) {
    const auto p = tabulate(NormalDensity{}, -8, 8, 0.01);
    EXPECT_NEAR(bregman_div_2d(fisher_phi(), p, p), 0.0, 1e-12);
}

TEST(Bregman2d, GaussianFisherDivergence) {
    const auto p = tabulate(NormalDensity{0.0, 1.0}, -12, 12, 0.005);
    const auto q = tabulate(NormalDensity{0.0, 2.0}, -12, 12, 0.005);
    // oracle: integral of phi(x) (x - x/4)^2 = 9/16
    EXPECT_NEAR(bregman_div_2d(fisher_phi(), p, q), 9.0 / 16.0, 2e-3);
}

TEST(Bregman2d, FisherEqualsScoreDifferenceQuadrature) {
    const auto p = tabulate(NormalDensity{0.2, 0.9}, -12, 12, 0.005);
    const auto q = tabulate(NormalDensity{-0.4, 1.6}, -12, 12, 0.005);
    std::vector<double> f(p.size());
    for (std::size_t i = 0; i < f.size(); ++i) {
        const double d = p.derivs[1][i] / p.derivs[0][i] - q.derivs[1][i] / q.derivs[0][i];
        f[i] = p.derivs[0][i] * d * d;
    }
    EXPECT_NEAR(bregman_div_2d(fisher_phi(), p, q), trapezoid(f, p.h), 1e-4);
}

TEST(Bregman2d, MissingDerivativesThrow) {
    const auto p = tabulate(NormalDensity{}, -5, 5, 0.01, 0);
    EXPECT_THROW(bregman_div_2d(fisher_phi(), p, p), ShapeError);
}

TEST(Bregman, NonnegativeOnRandomPairs) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> mean(-1.5, 1.5), sd(0.6, 1.8);
    for (int i = 0; i < 50; ++i) {
        const auto p = tabulate(NormalDensity{mean(rng), sd(rng)}, -16, 16, 0.02, 2);
        const auto q = tabulate(NormalDensity{mean(rng), sd(rng)}, -16, 16, 0.02, 2);
        EXPECT_GE(bregman_div_1d(generators::entropy(), p, q), -1e-9);
        EXPECT_GE(bregman_div_1d(generators::square(), p, q), -1e-9);
        EXPECT_GE(bregman_div_2d(fisher_phi(), p, q), -1e-9);
    }
}

TEST(Decomposition, IdenticalNormalsFisher) {
    const auto p = tabulate(NormalDensity{}, -12, 12, 0.005);
    const auto d = decomposition_check(fisher_phi(), p, p);
    EXPECT_NEAR(d.divergence, 0.0, 1e-12);
    EXPECT_LE(d.residual, 1e-6);
    EXPECT_FALSE(d.boundary_warning);
}

TEST(Decomposition, DifferentNormalsFisher) {
    const auto p = tabulate(NormalDensity{0.0, 1.0}, -12, 12, 0.005);
    const auto q = tabulate(NormalDensity{0.0, 2.0}, -12, 12, 0.005);
    const auto d = decomposition_check(fisher_phi(), p, q);
    EXPECT_LE(d.residual, 1e-3 * (1.0 + std::abs(d.divergence)));
}

TEST(Decomposition, LomaxPairWithInverseSquareGenerator) {
    const auto p = tabulate(LomaxDensity{1.0, 1.0}, 0.0, 50.0, 0.01);
    const auto q = tabulate(LomaxDensity{2.0, 1.0}, 0.0, 50.0, 0.01);
    const auto d = decomposition_check(PhiGenerator::from_alpha(generators::inverse_square(true)), p, q);
    EXPECT_LE(d.residual, 1e-2);
    EXPECT_TRUE(d.boundary_warning);
    EXPECT_GE(d.divergence, 0.0);
}

TEST(Propriety, LogScoreOnNormalLattice) {
    const auto p = tabulate(NormalDensity{}, -10, 10, 0.01);
    const auto pert = normal_lattice(-10, 10, 0.01);
    EXPECT_TRUE(propriety_check(log_score(), p, pert).proper);
}

TEST(Propriety, HyvarinenOnNormalLattice) {
    const auto p = tabulate(NormalDensity{}, -10, 10, 0.01);
    const auto pert = normal_lattice(-10, 10, 0.01);
    EXPECT_TRUE(propriety_check(hyvarinen(), p, pert).proper);
}

TEST(Propriety, PositiveLogScoreIsImproper) {
    const ScoreFunction plus_log{0, "+log q", [](double, std::span<const double> j) { return std::log(j[0]); }, {}};
    const auto p = tabulate(NormalDensity{}, -10, 10, 0.01);
    const auto pert = normal_lattice(-10, 10, 0.01);
    const auto r = propriety_check(plus_log, p, pert);
    EXPECT_FALSE(r.proper);
    ASSERT_TRUE(r.violator.has_value());
}

TEST(EulerLagrange, HyvarinenOnNormal) {
    const auto q = tabulate(NormalDensity{}, -4, 4, 1e-3);
    const auto r = euler_lagrange_residual(hyvarinen(), q);
    EXPECT_EQ(r.offset, 2u);
    EXPECT_EQ(r.values.size(), q.size() - 4);
    EXPECT_LE(max_abs(r), 1e-3);
}

TEST(EulerLagrange, InverseSquareOnLomax) {
    const auto q = tabulate(LomaxDensity{1.0, 1.0}, 0.1, 20.0, 0.02);
    EXPECT_LE(max_abs(euler_lagrange_residual(inverse_square(), q)), 1e-3);
}

TEST(EulerLagrange, IdentityScoreIsNotAScore) {
    const ScoreFunction identity{2, "S=q", [](double, std::span<const double> j) { return j[0]; }, {}};
    const auto q = tabulate(NormalDensity{}, -4, 4, 0.01);
    const auto r = euler_lagrange_residual(identity, q);
    // the residual is q itself: above 1e-2 on |x| < 2.6, most of [-4, 4]
    std::size_t big = 0;
    for (double v : r.values) big += std::abs(v) > 1e-2;
    EXPECT_GT(static_cast<double>(big) / static_cast<double>(r.values.size()), 0.5);
    EXPECT_GT(max_abs(r), 1e-1);
}

TEST(ScoreZero, UAtOneIsMinusOne) {
    const auto g = solve_score_zero(1.0, 20.0, 1e-3);
    const std::size_t i = 1000;
    ASSERT_NEAR(g.x[i], 1.0, 1e-12);
    EXPECT_NEAR(g.derivs[1][i] / g.derivs[0][i], -1.0, 1e-10);
}

TEST(ScoreZero, MatchesClosedForm) {
    const auto g = solve_score_zero(1.0, 20.0, 1e-3);
    double sup = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) sup = std::max(sup, std::abs(g.derivs[0][i] - 1.0 / std::pow(1.0 + g.x[i], 2)));
    EXPECT_LE(sup, 1e-6);
}

TEST(ScoreZero, ScaleTwoAtOrigin) {
    const auto g = solve_score_zero(2.0, 20.0, 1e-2);
    EXPECT_NEAR(g.derivs[0][0], 0.5, 1e-6);
}

TEST(ScoreZero, DerivativesSatisfyScoreEquation) {
    const auto g = solve_score_zero(1.0, 20.0, 1e-3);
    for (std::size_t i = 0; i < g.size(); i += 997) {
        EXPECT_NEAR(inverse_square_score(g.derivs[0][i], g.derivs[1][i], g.derivs[2][i]), 0.0, 1e-9);
    }
}

TEST(ScoreZero, Errors) {
    EXPECT_THROW(solve_score_zero(0.0, 20.0, 1e-2), DomainError);
    EXPECT_THROW(solve_score_zero(1.0, 20.0, 0.5), ResolutionError);
}

TEST(ScoreFunction, PointwiseMatchesStandardNormalFormula) {
    const auto s = hyvarinen();
    for (double x : {-1.5, 0.2, 2.0}) {
        const double q = std_normal_pdf(x);
        EXPECT_NEAR(s(q, -x * q, (x * x - 1) * q), x * x - 2.0, 1e-12);
    }
}
