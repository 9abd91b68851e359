#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <utility>

#include "objprior/errors.hpp"
#include "objprior/scorerule/finite_difference.hpp"

namespace objprior {

// Open interval (lo, hi).
struct Interval {
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();

    bool contains(double u) const noexcept { return u > lo && u < hi; }
    static Interval real() { return {}; }
    static Interval positive() { return {0.0, std::numeric_limits<double>::infinity()}; }
    static Interval negative() { return {-std::numeric_limits<double>::infinity(), 0.0}; }
};

// A scalar convex function with its first two derivatives. Used both as the
// ratio generator alpha of phi(u, v) = u alpha(v/u) and, for one-dimensional
// Bregman divergences, directly as a function of density values.
struct ConvexGenerator {
    std::string name;
    std::function<double(double)> value;
    std::function<double(double)> d1;
    std::function<double(double)> d2;
    Interval domain;

    double operator()(double u) const { return value(u); }
};

namespace generators {

inline ConvexGenerator square() {
    return {"u^2", [](double u) { return u * u; }, [](double u) { return 2.0 * u; },
            [](double) { return 2.0; }, Interval::real()};
}

// u^-2, registered on one sign branch; it is not convex across 0.
inline ConvexGenerator inverse_square(bool negative_branch = true) {
    return {negative_branch ? "u^-2 (u<0)" : "u^-2 (u>0)",
            [](double u) { return 1.0 / (u * u); },
            [](double u) { return -2.0 / (u * u * u); },
            [](double u) { return 6.0 / (u * u * u * u); },
            negative_branch ? Interval::negative() : Interval::positive()};
}

// Concave; only useful as a counterexample.
inline ConvexGenerator negated_square() {
    return {"-u^2", [](double u) { return -u * u; }, [](double u) { return -2.0 * u; },
            [](double) { return -2.0; }, Interval::real()};
}

// t log t on (0, inf); generates the Kullback-Leibler divergence.
inline ConvexGenerator entropy() {
    return {"t log t", [](double t) { return t * std::log(t); },
            [](double t) { return std::log(t) + 1.0; }, [](double t) { return 1.0 / t; },
            Interval::positive()};
}

// t log t - t; its derivative log t yields the log score.
inline ConvexGenerator shifted_entropy() {
    return {"t log t - t", [](double t) { return t * std::log(t) - t; },
            [](double t) { return std::log(t); }, [](double t) { return 1.0 / t; },
            Interval::positive()};
}

}  // namespace generators

struct GeneratorCheck {
    bool convex = true;
    bool derivatives_consistent = true;
    double worst_relative_error = 0.0;
};

// Checks alpha'' > 0 and that d1, d2 agree with central differences (relative
// tolerance 1e-6) on the supplied points. Points outside the domain are skipped.
inline GeneratorCheck validate(const ConvexGenerator& gen, std::span<const double> points) {
    GeneratorCheck out;
    for (double u : points) {
        if (!gen.domain.contains(u)) continue;
        if (!(gen.d2(u) > 0.0)) out.convex = false;
        double step = 1e-3 * std::max(std::abs(u), 1e-3);
        // keep the stencil inside the domain
        while (!gen.domain.contains(u - 2 * step) || !gen.domain.contains(u + 2 * step)) step *= 0.25;
        const double fd1 = fd::central1(gen.value, u, step);
        const double fd2 = fd::central1(gen.d1, u, step);
        const double e1 = std::abs(fd1 - gen.d1(u)) / std::max(1.0, std::abs(gen.d1(u)));
        const double e2 = std::abs(fd2 - gen.d2(u)) / std::max(1.0, std::abs(gen.d2(u)));
        out.worst_relative_error = std::max({out.worst_relative_error, e1, e2});
    }
    out.derivatives_consistent = out.worst_relative_error <= 1e-6;
    return out;
}

// A function phi(u, v) of (density, derivative) with its partial derivatives.
// Second partials are optional; when absent they are taken by finite differences
// of the first partials.
struct PhiGenerator {
    using Fn = std::function<double(double, double)>;

    std::string name;
    Fn value;
    Fn du;
    Fn dv;
    Fn duu;
    Fn duv;
    Fn dvv;
    // Admissible ratios v/u; phi is only evaluated inside it.
    Interval ratio_domain = Interval::real();

    double operator()(double u, double v) const { return value(u, v); }

    double second_uv(double u, double v) const {
        if (duv) return duv(u, v);
        const double s = 1e-4 * std::max(std::abs(u), 1e-12);
        return fd::central1([&](double t) { return dv(t, v); }, u, s);
    }

    double second_vv(double u, double v) const {
        if (dvv) return dvv(u, v);
        const double s = 1e-4 * std::max(std::abs(v), 1e-12);
        return fd::central1([&](double t) { return dv(u, t); }, v, s);
    }

    // phi(u, v) = u alpha(v / u).
    static PhiGenerator from_alpha(const ConvexGenerator& alpha) {
        PhiGenerator phi;
        phi.name = "u*alpha(v/u), alpha=" + alpha.name;
        phi.ratio_domain = alpha.domain;
        phi.value = [alpha](double u, double v) { return u * alpha.value(v / u); };
        phi.du = [alpha](double u, double v) {
            const double r = v / u;
            return alpha.value(r) - r * alpha.d1(r);
        };
        phi.dv = [alpha](double u, double v) { return alpha.d1(v / u); };
        phi.duu = [alpha](double u, double v) {
            const double r = v / u;
            return alpha.d2(r) * r * r / u;
        };
        phi.duv = [alpha](double u, double v) {
            const double r = v / u;
            return -alpha.d2(r) * r / u;
        };
        phi.dvv = [alpha](double u, double v) { return alpha.d2(v / u) / u; };
        return phi;
    }
};

// v^2 / u, the generator of the Fisher divergence, supplied directly.
inline PhiGenerator fisher_phi() {
    PhiGenerator phi;
    phi.name = "v^2/u";
    phi.value = [](double u, double v) { return v * v / u; };
    phi.du = [](double u, double v) { return -v * v / (u * u); };
    phi.dv = [](double u, double v) { return 2.0 * v / u; };
    phi.duu = [](double u, double v) { return 2.0 * v * v / (u * u * u); };
    phi.duv = [](double u, double v) { return -2.0 * v / (u * u); };
    phi.dvv = [](double u, double) { return 2.0 / u; };
    return phi;
}

// |phi - (u phi_u + v phi_v)| / max(1, |phi|).
inline double locality_defect(const PhiGenerator& phi, double u, double v) {
    const double f = phi.value(u, v);
    return std::abs(f - (u * phi.du(u, v) + v * phi.dv(u, v))) / std::max(1.0, std::abs(f));
}

// |phi(lu, lv) - l phi(u, v)| / max(1, |l phi(u, v)|).
inline double homogeneity_defect(const PhiGenerator& phi, double u, double v, double lambda) {
    const double scaled = lambda * phi.value(u, v);
    return std::abs(phi.value(lambda * u, lambda * v) - scaled) / std::max(1.0, std::abs(scaled));
}

// Positive semidefiniteness of a finite-difference Hessian of phi (taken from the
// first partials) at every point. Eigenvalues may dip to -1e-8 relative to the
// Hessian's scale; 1-homogeneous phi always has one null direction.
inline bool check_convexity(const PhiGenerator& phi,
                            std::span<const std::pair<double, double>> points) {
    for (const auto& [u, v] : points) {
        const double su = 1e-5 * std::max(std::abs(u), 1e-8);
        const double sv = 1e-5 * std::max(std::abs(v), 1e-8);
        const double huu = fd::central1([&](double t) { return phi.du(t, v); }, u, su);
        const double hvv = fd::central1([&](double t) { return phi.dv(u, t); }, v, sv);
        const double huv = 0.5 * (fd::central1([&](double t) { return phi.du(u, t); }, v, sv) +
                                  fd::central1([&](double t) { return phi.dv(t, v); }, u, su));
        const double mean = 0.5 * (huu + hvv);
        const double diff = 0.5 * (huu - hvv);
        const double radius = std::sqrt(diff * diff + huv * huv);
        const double lowest = mean - radius;
        const double scale = std::max(1.0, std::abs(mean) + radius);
        if (!std::isfinite(lowest) || lowest < -1e-8 * scale) return false;
    }
    return true;
}

}  // namespace objprior
