#pragma once

#include <array>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <functional>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "objprior/errors.hpp"
#include "objprior/scorerule/finite_difference.hpp"

namespace objprior {

inline constexpr int kMaxJetOrder = 4;

// Density value and derivatives q, q', ..., q'''' at one point.
template <std::floating_point T>
using Jet = std::array<T, kMaxJetOrder + 1>;

// Densities with closed-form derivatives. jet() is a template so that exact
// identities can be checked in extended precision.

struct NormalDensity {
    double mean = 0.0;
    double sd = 1.0;

    template <std::floating_point T>
    Jet<T> jet(T x) const {
        const T s = static_cast<T>(sd);
        const T z = (x - static_cast<T>(mean)) / s;
        const T q = std::exp(-z * z / 2) / (s * std::sqrt(2 * std::numbers::pi_v<T>));
        const T z2 = z * z;
        return {q, -z / s * q, (z2 - 1) / (s * s) * q, -(z2 * z - 3 * z) / (s * s * s) * q,
                (z2 * z2 - 6 * z2 + 3) / (s * s * s * s) * q};
    }
};

// rate * exp(-rate x) on (0, inf).
struct ExponentialDensity {
    double rate = 1.0;

    template <std::floating_point T>
    Jet<T> jet(T x) const {
        const T r = static_cast<T>(rate);
        Jet<T> out{};
        out[0] = r * std::exp(-r * x);
        for (int k = 1; k <= kMaxJetOrder; ++k) out[k] = -r * out[k - 1];
        return out;
    }
};

// Lomax(shape, scale a): (shape/a) (1 + x/a)^-(shape+1) on (0, inf).
// shape = 1 gives a / (a + x)^2.
struct LomaxDensity {
    double scale = 1.0;
    double shape = 1.0;

    template <std::floating_point T>
    Jet<T> jet(T x) const {
        const T a = static_cast<T>(scale);
        const T s = static_cast<T>(shape);
        const T t = a + x;
        const T p = s + 1;
        Jet<T> out{};
        out[0] = s * std::pow(a, s) * std::pow(t, -p);
        for (int k = 1; k <= kMaxJetOrder; ++k) out[k] = -(p + (k - 1)) / t * out[k - 1];
        return out;
    }
};

template <class D>
concept AnalyticDensity = requires(const D& d, double x) {
    { d.template jet<double>(x) } -> std::same_as<Jet<double>>;
};

// A density and (some of) its derivatives tabulated on a uniform grid.
// derivs[k] holds q^(k); trailing orders may be empty.
struct DensityGrid {
    std::vector<double> x;
    double h = 0.0;
    std::array<std::vector<double>, kMaxJetOrder + 1> derivs;

    std::size_t size() const noexcept { return x.size(); }

    int max_order() const noexcept {
        int k = -1;
        while (k < kMaxJetOrder && derivs[k + 1].size() == x.size() && !x.empty()) ++k;
        return k;
    }

    bool has_order(int k) const noexcept { return k <= max_order(); }

    std::span<const double> q(int k = 0) const {
        if (!has_order(k)) throw ShapeError("density grid lacks derivative order " + std::to_string(k));
        return derivs[k];
    }

    Jet<double> jet(std::size_t i) const {
        Jet<double> j{};
        const int m = max_order();
        for (int k = 0; k <= m; ++k) j[k] = derivs[k][i];
        return j;
    }
};

inline std::vector<double> uniform_points(double lo, double hi, double h) {
    if (!(h > 0.0) || !(hi > lo)) throw ContractError("uniform grid needs lo < hi and h > 0");
    const auto n = static_cast<std::size_t>(std::llround((hi - lo) / h)) + 1;
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = lo + static_cast<double>(i) * h;
    return x;
}

template <AnalyticDensity D>
DensityGrid tabulate(const D& density, double lo, double hi, double h, int order = kMaxJetOrder) {
    DensityGrid g;
    g.x = uniform_points(lo, hi, h);
    g.h = h;
    for (int k = 0; k <= order; ++k) g.derivs[k].resize(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        const auto j = density.template jet<double>(g.x[i]);
        for (int k = 0; k <= order; ++k) g.derivs[k][i] = j[k];
    }
    return g;
}

// Derivatives by central differences of the density function itself, with step
// `step` (five-point stencils).
inline DensityGrid tabulate_fd(const std::function<double(double)>& q, double lo, double hi,
                               double h, int order, double step = 1e-3) {
    if (order > kMaxJetOrder) throw ContractError("finite-difference tabulation supports order <= 4");
    DensityGrid g;
    g.x = uniform_points(lo, hi, h);
    g.h = h;
    for (int k = 0; k <= order; ++k) g.derivs[k].resize(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double xi = g.x[i];
        g.derivs[0][i] = q(xi);
        if (order >= 1) g.derivs[1][i] = fd::central1(q, xi, step);
        if (order >= 2) g.derivs[2][i] = fd::central2(q, xi, step);
        if (order >= 3) {
            // (f(x+2s) - 2f(x+s) + 2f(x-s) - f(x-2s)) / 2s^3
            g.derivs[3][i] = (q(xi + 2 * step) - 2 * q(xi + step) + 2 * q(xi - step) -
                              q(xi - 2 * step)) /
                             (2 * step * step * step);
        }
        if (order >= 4) {
            g.derivs[4][i] = (q(xi + 2 * step) - 4 * q(xi + step) + 6 * q(xi) -
                              4 * q(xi - step) + q(xi - 2 * step)) /
                             (step * step * step * step);
        }
    }
    return g;
}

inline double trapezoid(std::span<const double> f, double h) {
    if (f.size() < 2) return 0.0;
    double s = 0.5 * (f.front() + f.back());
    for (std::size_t i = 1; i + 1 < f.size(); ++i) s += f[i];
    return s * h;
}

inline double trapezoid(const GridSeries& f, double h) { return trapezoid(f.values, h); }

inline void require_same_grid(const DensityGrid& p, const DensityGrid& q) {
    if (p.size() != q.size() || p.size() < 2) throw ShapeError("density grids differ in length");
    if (std::abs(p.h - q.h) > 1e-12 * std::abs(p.h) ||
        std::abs(p.x.front() - q.x.front()) > 1e-12 * std::max(1.0, std::abs(p.x.front()))) {
        throw ShapeError("density grids do not share abscissae");
    }
}

}  // namespace objprior
