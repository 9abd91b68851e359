#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "objprior/models.hpp"

using namespace objprior;

namespace {

const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

double naive_normal(double y, double m, double s) {
    return std::exp(-0.5 * (y - m) * (y - m) / (s * s)) / (s * std::sqrt(2.0 * std::numbers::pi));
}

}  // namespace

TEST(NormalScale, SingleStandardPoint) {
    const NormalScaleModel m{0.0, {0.0}};
    EXPECT_NEAR(loglik_normal_scale(m, 1.0), -kHalfLog2Pi, 1e-12);
}

TEST(NormalScale, TwoPoints) {
    const NormalScaleModel m{0.0, {1.0, -1.0}};
    EXPECT_NEAR(loglik_normal_scale(m, 1.0), -std::log(2.0 * std::numbers::pi) - 1.0, 1e-12);
}

TEST(NormalScale, AgreesWithDirectSum) {
    const NormalScaleModel m{0.5, {0.1, -2.0, 3.3, 0.7}};
    double direct = 0.0;
    for (double y : m.data) direct += std::log(naive_normal(y, 0.5, 1.7));
    EXPECT_NEAR(m.loglik(1.7), direct, 1e-9);
}

TEST(NormalScale, NonPositiveSigma) {
    const NormalScaleModel m{0.0, {1.0}};
    EXPECT_THROW(m.loglik(0.0), DomainError);
    EXPECT_THROW(m.loglik(-1.0), DomainError);
}

TEST(LogNormalLocation, UnitObservation) {
    const LogNormalLocationModel m(1.0, {1.0});
    EXPECT_NEAR(loglik_lognormal_loc(m, 0.0), -kHalfLog2Pi, 1e-12);
}

TEST(LogNormalLocation, AgreesWithDirectSum) {
    const std::vector<double> y{0.3, 1.9, 12.0, 4.4};
    const LogNormalLocationModel m(1.0, y);
    for (double mu : {-1.0, 0.4, 2.0}) {
        double direct = 0.0;
        for (double v : y) direct += std::log(naive_normal(std::log(v), mu, 1.0) / v);
        EXPECT_NEAR(m.loglik(mu), direct, 1e-9);
    }
}

TEST(LogNormalLocation, RejectsNonPositiveData) {
    EXPECT_THROW(LogNormalLocationModel(1.0, {1.0, 0.0}), DomainError);
}

TEST(Mixture, SingleComponentIsGaussian) {
    const MixtureModel m{{1.0}, {0.3}, {1.4}};
    const std::vector<double> y{0.0, 1.0, -2.5};
    double direct = 0.0;
    for (double v : y) direct += std::log(naive_normal(v, 0.3, 1.4));
    EXPECT_NEAR(loglik_mixture(m, y), direct, 1e-9);
}

TEST(Mixture, DuplicateComponents) {
    const MixtureModel m{{0.5, 0.5}, {0.0, 0.0}, {1.0, 1.0}};
    const std::vector<double> y{0.0};
    EXPECT_NEAR(loglik_mixture(m, y), -kHalfLog2Pi, 1e-12);
}

TEST(Mixture, ExampleDominatedBySecondComponent) {
    const auto m = three_component_example();
    const std::vector<double> y{-10.0};
    double naive = 0.0;
    for (std::size_t l = 0; l < 3; ++l) naive += m.weights[l] * naive_normal(-10.0, m.means[l], m.sds[l]);
    EXPECT_NEAR(loglik_mixture(m, y), std::log(naive), 1e-9);
    const double second = std::log(m.weights[1] * naive_normal(-10.0, m.means[1], m.sds[1]));
    EXPECT_NEAR(loglik_mixture(m, y), second, 1e-6);
}

TEST(Mixture, StableFarInTheTail) {
    const auto m = three_component_example();
    const std::vector<double> y{-200.0};
    EXPECT_TRUE(std::isfinite(loglik_mixture(m, y)));
}

TEST(Mixture, PermutationInvariant) {
    const auto m = three_component_example();
    const MixtureModel p{{m.weights[2], m.weights[0], m.weights[1]},
                         {m.means[2], m.means[0], m.means[1]},
                         {m.sds[2], m.sds[0], m.sds[1]}};
    const std::vector<double> y{-11.0, -0.5, 2.0, 6.8, 15.0};
    EXPECT_NEAR(loglik_mixture(m, y), loglik_mixture(p, y), 1e-10);
}

TEST(Mixture, Errors) {
    const auto m = three_component_example();
    EXPECT_THROW(loglik_mixture(m, std::vector<double>{}), ContractError);
    const MixtureModel bad_sum{{0.5, 0.4}, {0, 1}, {1, 1}};
    EXPECT_THROW(loglik_mixture(bad_sum, std::vector<double>{0.0}), DomainError);
    const MixtureModel bad_sd{{0.5, 0.5}, {0, 1}, {1, 0}};
    EXPECT_THROW(loglik_mixture(bad_sd, std::vector<double>{0.0}), DomainError);
}

TEST(SampleMixture, StandardNormalMean) {
    const MixtureModel m{{1.0}, {0.0}, {1.0}};
    Rng rng(17);
    const auto y = sample_mixture(m, 100000, rng);
    double mean = 0.0;
    for (double v : y) mean += v;
    EXPECT_NEAR(mean / 1e5, 0.0, 0.02);
}

TEST(SampleMixture, ExampleProportions) {
    const auto m = three_component_example();
    Rng rng(23);
    const auto y = sample_mixture(m, 10000, rng);
    // components are separated well enough to classify by nearest boundary
    std::vector<double> counts(3, 0.0);
    for (double v : y) counts[v < -5.0 ? 1 : (v > 3.8 ? 2 : 0)] += 1.0;
    EXPECT_NEAR(counts[0] / 1e4, 0.25, 0.05);
    EXPECT_NEAR(counts[1] / 1e4, 0.65, 0.05);
    EXPECT_NEAR(counts[2] / 1e4, 0.10, 0.05);
}

TEST(SampleMixture, Deterministic) {
    const auto m = three_component_example();
    Rng a(99), b(99);
    EXPECT_EQ(sample_mixture(m, 500, a), sample_mixture(m, 500, b));
}

TEST(SampleMixture, LoglikStaysFinite) {
    const auto m = three_component_example();
    Rng rng(3);
    const auto y = sample_mixture(m, 2000, rng);
    for (int i = 0; i < 200; ++i) {
        const MixtureModel p{{0.2, 0.3, 0.5}, {-20.0 + 0.2 * i, 0.1 * i, 30.0}, {0.05 + 0.01 * i, 2.0, 0.3}};
        ASSERT_TRUE(std::isfinite(loglik_mixture(p, y)));
    }
}

TEST(EightSchools, StandardValues) {
    const auto d = EightSchoolsData::standard();
    const std::vector<double> y{28, 8, -3, 7, -1, 1, 18, 12};
    const std::vector<double> s{15, 10, 16, 11, 9, 11, 10, 18};
    EXPECT_EQ(d.y, y);
    EXPECT_EQ(d.s, s);
}

TEST(Hierarchical, ZeroEffectsFirstTerm) {
    const auto d = EightSchoolsData::standard();
    HierarchicalState st{0.0, std::vector<double>(8, 0.0), 4.0};
    double first = 0.0;
    for (std::size_t j = 0; j < 8; ++j) first += std::log(naive_normal(d.y[j], 0.0, d.s[j]));
    const double second = 8.0 * std::log(naive_normal(0.0, 0.0, 2.0));
    EXPECT_NEAR(loglik_hierarchical(d, st), first + second, 1e-9);
}

TEST(Hierarchical, OneGroupToy) {
    const EightSchoolsData d{{0.0}, {1.0}};
    const HierarchicalState st{0.0, {0.0}, 1.0};
    EXPECT_NEAR(loglik_hierarchical(d, st), -std::log(2.0 * std::numbers::pi), 1e-12);
}

TEST(Hierarchical, DecreasesAwayFromResidual) {
    const auto d = EightSchoolsData::standard();
    // sigma_alpha2 huge so the effect prior is nearly flat over the range probed
    HierarchicalState st{2.0, std::vector<double>(8, 0.0), 1e12};
    st.alpha[0] = d.y[0] - st.mu;
    double prev = loglik_hierarchical(d, st);
    for (double off : {1.0, 2.0, 5.0, 10.0}) {
        st.alpha[0] = d.y[0] - st.mu + off;
        const double cur = loglik_hierarchical(d, st);
        EXPECT_LT(cur, prev);
        prev = cur;
    }
}

TEST(Hierarchical, NonPositiveVariance) {
    const auto d = EightSchoolsData::standard();
    EXPECT_THROW(loglik_hierarchical(d, HierarchicalState{0.0, std::vector<double>(8, 0.0), 0.0}), DomainError);
}

TEST(Galaxy, LoadsBundledFile) {
    const auto g = load_galaxy(OBJPRIOR_GALAXY_FILE);
    ASSERT_EQ(g.velocities.size(), 82u);
    for (double v : g.velocities) {
        EXPECT_GT(v, 5.0);
        EXPECT_LT(v, 40.0);
    }
    EXPECT_NE(g.checksum, 0u);
}

TEST(Galaxy, RejectsWrongCountAndRange) {
    const auto dir = std::filesystem::temp_directory_path();
    const auto short_file = dir / "objprior_galaxy_short.txt";
    std::ofstream(short_file) << "10.0\n20.0\n";
    EXPECT_THROW(load_galaxy(short_file.string()), ContractError);

    const auto range_file = dir / "objprior_galaxy_range.txt";
    {
        std::ofstream out(range_file);
        for (int i = 0; i < 81; ++i) out << "20.0\n";
        out << "45.0\n";
    }
    EXPECT_THROW(load_galaxy(range_file.string()), DomainError);
    EXPECT_THROW(load_galaxy((dir / "objprior_no_such_file.txt").string()), std::runtime_error);
}
