#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

#include "objprior/errors.hpp"
#include "objprior/scorerule/density_grid.hpp"
#include "objprior/scorerule/finite_difference.hpp"
#include "objprior/scorerule/scores.hpp"

namespace objprior {

namespace detail {

// dS/dq_k at a jet, five-point stencil in slot k. The step follows the larger of
// the slot and 1% of q: a step tied to the slot alone collapses where q' or q''
// crosses zero, and the grid differences then amplify the roundoff.
inline double slot_partial(const ScoreFunction& score, double x, std::array<double, 3> jet, int k) {
    const double scale = std::max({std::abs(jet[k]), 1e-2 * std::abs(jet[0]), 1e-300});
    const double step = 1e-3 * scale;
    auto at = [&](double v) {
        auto j = jet;
        j[k] = v;
        return score(x, j);
    };
    return fd::central1(at, jet[k], step);
}

}  // namespace detail

// Pointwise residual of the order-two Euler-Lagrange operator applied to S at q:
//     q dS/dq - d/dx (q dS/dq') + d^2/dx^2 (q dS/dq'').
// It vanishes for proper local scores of order two. Partials in the (q, q', q'')
// slots and the total x-derivatives are five-point finite differences; the two
// points at each grid end are dropped.
inline GridSeries euler_lagrange_residual(const ScoreFunction& score, const DensityGrid& q) {
    if (!score.is_pointwise() || score.order > 2) {
        throw ContractError("Euler-Lagrange residual needs a pointwise score of order <= 2");
    }
    if (!q.has_order(2)) throw ShapeError("Euler-Lagrange residual needs q, q', q''");
    const std::size_t n = q.size();
    if (n < 5) throw StencilError("Euler-Lagrange residual needs at least 5 grid points");

    std::vector<double> a(n), b(n), c(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::array<double, 3> jet{q.derivs[0][i], q.derivs[1][i], q.derivs[2][i]};
        const double x = q.x[i];
        a[i] = jet[0] * detail::slot_partial(score, x, jet, 0);
        b[i] = score.order >= 1 ? jet[0] * detail::slot_partial(score, x, jet, 1) : 0.0;
        c[i] = score.order >= 2 ? jet[0] * detail::slot_partial(score, x, jet, 2) : 0.0;
    }
    const GridSeries db = fd::along_grid(b, q.h, 1);
    const GridSeries dc = fd::along_grid(c, q.h, 2);
    GridSeries out{2, std::vector<double>(n - 4)};
    for (std::size_t i = 2; i + 2 < n; ++i) {
        out.values[i - 2] = a[i] - db.at_grid(i) + dc.at_grid(i);
    }
    return out;
}

inline double max_abs(const GridSeries& s) {
    double m = 0.0;
    for (double v : s.values) m = std::max(m, std::abs(v));
    return m;
}

}  // namespace objprior
