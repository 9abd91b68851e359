#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <string>

#include "objprior/errors.hpp"
#include "objprior/scorerule/density_grid.hpp"

namespace objprior {

// Solves S(q, q', q'') = 0 for the u^-2 score numerically. With u = q'/q the
// equation reduces to u' = u^2 / 2; starting from u(0) = -2/a, the system
//     u' = u^2/2,  l' = u,  M' = exp(l)
// is integrated by classical RK4 (l = log q - log q(0), M the unnormalised mass).
// The mass beyond x_max follows from the first integral q^{-1/2} linear in x:
// tail = -2 q(x_max) / u(x_max).
inline DensityGrid solve_score_zero(double a, double x_max, double h) {
    if (!(a > 0.0)) throw DomainError("score-zero solution needs a > 0");
    if (!(h > 0.0) || !(x_max > 0.0)) throw ContractError("x_max and h must be positive");
    if (h > x_max / 100.0) {
        throw ResolutionError("step " + std::to_string(h) + " exceeds x_max/100 = " +
                              std::to_string(x_max / 100.0));
    }

    using State = std::array<double, 3>;
    const auto rhs = [](const State& s) {
        return State{0.5 * s[0] * s[0], s[0], std::exp(s[1])};
    };
    const auto axpy = [](const State& s, double k, const State& d) {
        return State{s[0] + k * d[0], s[1] + k * d[1], s[2] + k * d[2]};
    };

    DensityGrid g;
    g.x = uniform_points(0.0, x_max, h);
    g.h = g.x.size() > 1 ? g.x[1] - g.x[0] : h;
    const std::size_t n = g.x.size();
    std::vector<State> path(n);
    path[0] = {-2.0 / a, 0.0, 0.0};
    for (std::size_t i = 1; i < n; ++i) {
        const State& s = path[i - 1];
        const State k1 = rhs(s);
        const State k2 = rhs(axpy(s, 0.5 * g.h, k1));
        const State k3 = rhs(axpy(s, 0.5 * g.h, k2));
        const State k4 = rhs(axpy(s, g.h, k3));
        State next{};
        for (int j = 0; j < 3; ++j) next[j] = s[j] + g.h / 6.0 * (k1[j] + 2 * k2[j] + 2 * k3[j] + k4[j]);
        path[i] = next;
    }

    const State& end = path.back();
    const double mass = end[2] - 2.0 * std::exp(end[1]) / end[0];
    for (auto& d : g.derivs) d.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double u = path[i][0];
        const double q = std::exp(path[i][1]) / mass;
        // q^(k) = c_k u^k q with c = 1, 1, 3/2, 3, 15/2 when u' = u^2/2
        g.derivs[0][i] = q;
        g.derivs[1][i] = u * q;
        g.derivs[2][i] = 1.5 * u * u * q;
        g.derivs[3][i] = 3.0 * u * u * u * q;
        g.derivs[4][i] = 7.5 * u * u * u * u * q;
    }
    return g;
}

}  // namespace objprior
