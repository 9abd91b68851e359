#pragma once

#include <cmath>
#include <concepts>
#include <cstddef>
#include <functional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "objprior/errors.hpp"
#include "objprior/scorerule/convex_generator.hpp"
#include "objprior/scorerule/density_grid.hpp"
#include "objprior/scorerule/finite_difference.hpp"

namespace objprior {

// 2 q''/q - (q'/q)^2.
template <std::floating_point T>
T hyvarinen_score(T q, T q1, T q2) {
    if (!(q > 0)) throw DomainError("Hyvarinen score needs q > 0");
    const T r = q1 / q;
    return 2 * q2 / q - r * r;
}

// Score generated by alpha(u) = u^-2:  3 (q/q')^2 {2 q q''/(q')^2 - 3}.
// Vanishes identically on q = a/(a+x)^2.
template <std::floating_point T>
T inverse_square_score(T q, T q1, T q2) {
    if (!(q > 0)) throw DomainError("inverse-square score needs q > 0");
    if (q1 == 0 || !std::isfinite(q / q1)) {
        throw SingularityError("inverse-square score is undefined where q' = 0");
    }
    const T r = q / q1;
    return 3 * r * r * (2 * q * q2 / (q1 * q1) - 3);
}

// A scoring rule S(q, q', ..., q^(order)). Pointwise scores take the jet at one
// point; scores built from total x-derivatives are only available on grids,
// where values near the edges are dropped.
struct ScoreFunction {
    using Pointwise = std::function<double(double x, std::span<const double> jet)>;
    using OnGrid = std::function<GridSeries(const DensityGrid&)>;

    int order = 0;
    std::string provenance;
    Pointwise pointwise;
    OnGrid grid;
    bool experimental = false;

    bool is_pointwise() const noexcept { return static_cast<bool>(pointwise); }

    double operator()(double x, std::span<const double> jet) const {
        if (!pointwise) throw ContractError("score '" + provenance + "' is only defined on grids");
        return pointwise(x, jet);
    }

    double operator()(double q, double q1, double q2) const {
        const double jet[3] = {q, q1, q2};
        return (*this)(0.0, jet);
    }

    GridSeries evaluate(const DensityGrid& g) const {
        if (grid) return grid(g);
        if (!g.has_order(order)) {
            throw ShapeError("score '" + provenance + "' needs derivatives up to order " +
                             std::to_string(order));
        }
        GridSeries out{0, std::vector<double>(g.size())};
        std::vector<double> jet(static_cast<std::size_t>(order) + 1);
        for (std::size_t i = 0; i < g.size(); ++i) {
            for (int k = 0; k <= order; ++k) jet[k] = g.derivs[k][i];
            out.values[i] = pointwise(g.x[i], jet);
        }
        return out;
    }
};

inline ScoreFunction log_score() {
    return {0, "log score",
            [](double, std::span<const double> j) {
                if (!(j[0] > 0)) throw DomainError("log score needs q > 0");
                return -std::log(j[0]);
            },
            {}};
}

inline ScoreFunction hyvarinen() {
    return {2, "Hyvarinen",
            [](double, std::span<const double> j) { return hyvarinen_score(j[0], j[1], j[2]); },
            {}};
}

inline ScoreFunction inverse_square() {
    return {2, "alpha(u)=u^-2",
            [](double, std::span<const double> j) { return inverse_square_score(j[0], j[1], j[2]); },
            {}};
}

// S(q, q', q'') = d/dx alpha'(q'/q) - alpha(q'/q) + (q'/q) alpha'(q'/q), with the
// total derivative expanded as alpha''(q'/q) (q q'' - q'^2) / q^2.
inline ScoreFunction score_order2(const ConvexGenerator& gen) {
    auto eval = [gen](double x, std::span<const double> j) {
        const double q = j[0];
        if (!(q > 0)) throw DomainError("order-2 score needs q > 0");
        const double r = j[1] / q;
        if (!gen.domain.contains(r)) {
            std::ostringstream msg;
            msg << "ratio q'/q = " << r << " at x = " << x << " lies outside the domain ("
                << gen.domain.lo << ", " << gen.domain.hi << ") of generator " << gen.name;
            throw DomainError(msg.str());
        }
        const double a1 = gen.d1(r);
        return gen.d2(r) * (j[2] * q - j[1] * j[1]) / (q * q) - gen.value(r) + r * a1;
    };
    return {2, "order-2 score from " + gen.name, eval, {}};
}

// S = -phi_u(q, q') + d/dx phi_v(q, q') for a generator satisfying the locality
// condition; d/dx phi_v = phi_vu q' + phi_vv q''.
inline ScoreFunction score_from_phi(const PhiGenerator& phi) {
    auto eval = [phi](double x, std::span<const double> j) {
        const double q = j[0];
        if (!(q > 0)) throw DomainError("score needs q > 0");
        if (!phi.ratio_domain.contains(j[1] / q)) {
            std::ostringstream msg;
            msg << "ratio q'/q = " << j[1] / q << " at x = " << x << " outside domain of " << phi.name;
            throw DomainError(msg.str());
        }
        return -phi.du(q, j[1]) + phi.second_uv(q, j[1]) * j[1] + phi.second_vv(q, j[1]) * j[2];
    };
    return {2, "score from " + phi.name, eval, {}};
}

// Order-m local score from phi(u_0..u_m) = sum_{j<m} u_j alpha_j(u_{j+1}/u_j)
// (for m = 0, phi = alphas[0] applied to u_0 directly):
//     S(q) = sum_{j=0}^m (-1)^{j+1} d^j/dx^j dphi/dq_j.
// The total derivatives are taken by finite differences along the grid, so the
// result is grid-only. m > 2 is accepted but marked experimental.
inline ScoreFunction score_order_m(std::vector<ConvexGenerator> alphas, int m) {
    if (m < 0) throw ContractError("order m must be non-negative");
    const std::size_t expected = m == 0 ? 1 : static_cast<std::size_t>(m);
    if (alphas.size() != expected) {
        throw ContractError("order-" + std::to_string(m) + " score needs " +
                            std::to_string(expected) + " generators");
    }

    ScoreFunction s;
    s.order = 2 * m;
    s.experimental = m > 2;
    s.provenance = "order-m score, m=" + std::to_string(m);

    if (m == 0) {
        const ConvexGenerator phi = alphas[0];
        s.pointwise = [phi](double, std::span<const double> j) {
            if (!phi.domain.contains(j[0])) throw DomainError("q outside generator domain");
            return -phi.d1(j[0]);
        };
        return s;
    }

    s.grid = [alphas = std::move(alphas), m](const DensityGrid& g) {
        if (!g.has_order(m)) {
            throw ShapeError("order-" + std::to_string(m) + " score needs derivatives up to order " +
                             std::to_string(m));
        }
        const std::size_t n = g.size();
        const std::size_t w = fd::half_width(m);
        if (n < 2 * w + 1) {
            throw StencilError("grid of " + std::to_string(n) + " points is too short for the order-" +
                               std::to_string(m) + " stencil");
        }
        // partials[j][i] = dphi/du_j at grid point i
        std::vector<std::vector<double>> partials(m + 1, std::vector<double>(n, 0.0));
        for (std::size_t i = 0; i < n; ++i) {
            for (int j = 0; j < m; ++j) {
                const double u = g.derivs[j][i];
                const double v = g.derivs[j + 1][i];
                const double r = v / u;
                const auto& a = alphas[j];
                if (!std::isfinite(r) || !a.domain.contains(r)) {
                    throw DomainError("ratio q_" + std::to_string(j + 1) + "/q_" + std::to_string(j) +
                                      " outside generator domain at x = " + std::to_string(g.x[i]));
                }
                partials[j][i] += a.value(r) - r * a.d1(r);
                partials[j + 1][i] += a.d1(r);
            }
        }
        GridSeries out{w, std::vector<double>(n - 2 * w, 0.0)};
        for (int j = 0; j <= m; ++j) {
            const GridSeries dj = fd::along_grid(partials[j], g.h, j);
            const double sign = (j % 2 == 0) ? -1.0 : 1.0;
            for (std::size_t i = out.offset; i < out.end(); ++i) {
                out.values[i - out.offset] += sign * dj.at_grid(i);
            }
        }
        return out;
    };
    return s;
}

}  // namespace objprior
