#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <span>
#include <string>
#include <vector>

#include <boost/math/distributions/inverse_gamma.hpp>

#include "objprior/errors.hpp"
#include "objprior/random.hpp"
#include "objprior/scorerule/density_grid.hpp"
#include "objprior/scorerule/scores.hpp"

namespace objprior {

// q(x) = a / (a + x)^2 on (0, inf): the solution of the u^-2 score equation, a
// Lomax law with shape 1 and scale a. a = 1 is the only choice invariant under
// x -> 1/x.
class ScorePriorPositive {
public:
    explicit ScorePriorPositive(double a = 1.0) : a_(a) {
        if (!(a > 0.0) || !std::isfinite(a)) throw DomainError("score prior scale must be positive");
    }

    double scale() const noexcept { return a_; }

    double pdf(double x) const {
        check(x);
        return a_ / ((a_ + x) * (a_ + x));
    }

    double log_pdf(double x) const {
        check(x);
        return std::log(a_) - 2.0 * std::log(a_ + x);
    }

    double cdf(double x) const {
        check(x);
        return x / (a_ + x);
    }

    double quantile(double u) const {
        if (!(u > 0.0 && u < 1.0)) throw BoundaryError("quantile argument must lie in (0, 1)");
        return a_ * u / (1.0 - u);
    }

    double sample(Rng& rng) const { return quantile(uniform_open(rng)); }

private:
    static void check(double x) {
        if (!(x >= 0.0) || !std::isfinite(x)) throw DomainError("score prior support is [0, inf)");
    }

    double a_;
};

// Symmetric extension to the real line: a / (2 (|x| + a)^2).
class ScorePriorReal {
public:
    explicit ScorePriorReal(double a = 1.0) : half_(a) {}

    double scale() const noexcept { return half_.scale(); }

    double pdf(double x) const {
        check(x);
        return 0.5 * half_.pdf(std::abs(x));
    }

    double log_pdf(double x) const {
        check(x);
        return half_.log_pdf(std::abs(x)) - std::log(2.0);
    }

    double cdf(double x) const {
        check(x);
        const double upper = 0.5 + 0.5 * half_.cdf(std::abs(x));
        return x >= 0.0 ? upper : 1.0 - upper;
    }

    double quantile(double u) const {
        if (!(u > 0.0 && u < 1.0)) throw BoundaryError("quantile argument must lie in (0, 1)");
        if (u == 0.5) return 0.0;
        if (u > 0.5) return half_.quantile(2.0 * u - 1.0);
        return -half_.quantile(1.0 - 2.0 * u);
    }

    double sample(Rng& rng) const {
        const double magnitude = half_.sample(rng);
        return uniform_open(rng) < 0.5 ? -magnitude : magnitude;
    }

private:
    static void check(double x) {
        if (!std::isfinite(x)) throw DomainError("score prior argument must be finite");
    }

    ScorePriorPositive half_;
};

// Comparator priors. The improper kinds expose only an unnormalised log density.
class ComparatorPrior {
public:
    enum class Kind { jeffreys_scale, flat, inverse_gamma };

    static ComparatorPrior jeffreys_scale() { return ComparatorPrior(Kind::jeffreys_scale, 0, 0); }
    static ComparatorPrior flat() { return ComparatorPrior(Kind::flat, 0, 0); }

    // Inverse gamma with shape and rate on a variance: rate^shape/Gamma(shape) x^-(shape+1) e^-rate/x.
    static ComparatorPrior inverse_gamma(double shape = 1.0, double rate = 1.0) {
        if (!(shape > 0.0) || !(rate > 0.0)) throw DomainError("inverse-gamma parameters must be positive");
        return ComparatorPrior(Kind::inverse_gamma, shape, rate);
    }

    Kind kind() const noexcept { return kind_; }
    bool is_proper() const noexcept { return kind_ == Kind::inverse_gamma; }
    double shape() const noexcept { return shape_; }
    double rate() const noexcept { return rate_; }

    std::string name() const {
        switch (kind_) {
            case Kind::jeffreys_scale: return "jeffreys";
            case Kind::flat: return "flat";
            case Kind::inverse_gamma: return "inverse_gamma";
        }
        return "?";
    }

    double log_pdf(double x) const {
        switch (kind_) {
            case Kind::jeffreys_scale:
                if (!(x > 0.0)) throw DomainError("Jeffreys scale prior support is (0, inf)");
                return -std::log(x);
            case Kind::flat:
                if (!std::isfinite(x)) throw DomainError("flat prior argument must be finite");
                return 0.0;
            case Kind::inverse_gamma:
                if (!(x > 0.0)) throw DomainError("inverse-gamma support is (0, inf)");
                return shape_ * std::log(rate_) - std::lgamma(shape_) - (shape_ + 1.0) * std::log(x) -
                       rate_ / x;
        }
        return 0.0;
    }

    double pdf(double x) const { return std::exp(proper().log_pdf(x)); }
    double cdf(double x) const { return boost::math::cdf(dist(), x); }

    double quantile(double u) const {
        if (!(u > 0.0 && u < 1.0)) throw BoundaryError("quantile argument must lie in (0, 1)");
        return boost::math::quantile(dist(), u);
    }

    double sample(Rng& rng) const {
        proper();
        return 1.0 / gamma_draw(rng, shape_, rate_);
    }

private:
    ComparatorPrior(Kind k, double shape, double rate) : kind_(k), shape_(shape), rate_(rate) {}

    const ComparatorPrior& proper() const {
        if (!is_proper()) throw ContractError(name() + " prior is improper; only log_pdf is available");
        return *this;
    }

    boost::math::inverse_gamma_distribution<double> dist() const {
        proper();
        return boost::math::inverse_gamma_distribution<double>(shape_, rate_);
    }

    Kind kind_;
    double shape_;
    double rate_;
};

// Largest |a/(a x + 1)^2 - a/(a + x)^2| over the grid: the density of 1/theta
// when theta ~ a/(a+theta)^2, against the prior itself. Zero iff a = 1.
inline double invariance_check(double a, std::span<const double> grid) {
    if (!(a > 0.0)) throw DomainError("invariance check needs a > 0");
    double worst = 0.0;
    for (double x : grid) {
        if (!(x > 0.0)) throw DomainError("invariance grid must lie in (0, inf)");
        const double transformed = a / ((a * x + 1.0) * (a * x + 1.0));
        const double prior = a / ((a + x) * (a + x));
        worst = std::max(worst, std::abs(transformed - prior));
    }
    return worst;
}

// 1000 geometrically spaced points on [0.01, 100].
inline std::vector<double> standard_prior_grid() {
    std::vector<double> x(1000);
    for (std::size_t i = 0; i < x.size(); ++i) {
        x[i] = 0.01 * std::pow(1e4, static_cast<double>(i) / static_cast<double>(x.size() - 1));
    }
    return x;
}

// Max |inverse_square_score| over the grid using analytic derivatives of the
// Lomax density with the given scale and shape (shape 1 is the score prior).
template <std::floating_point T = double>
T prior_score_residual(double a, std::span<const double> grid, double shape = 1.0) {
    const LomaxDensity density{a, shape};
    T worst = 0;
    for (double x : grid) {
        const auto j = density.template jet<T>(static_cast<T>(x));
        worst = std::max(worst, std::abs(inverse_square_score<T>(j[0], j[1], j[2])));
    }
    return worst;
}

template <std::floating_point T = double>
T prior_score_residual(double a, double shape = 1.0) {
    const auto grid = standard_prior_grid();
    return prior_score_residual<T>(a, grid, shape);
}

}  // namespace objprior
