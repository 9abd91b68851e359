#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "objprior/errors.hpp"
#include "objprior/scorerule/convex_generator.hpp"
#include "objprior/scorerule/density_grid.hpp"
#include "objprior/scorerule/scores.hpp"

namespace objprior {

// Integral of phi(p) - phi(q) - phi'(q)(p - q) over the shared grid.
inline double bregman_div_1d(const ConvexGenerator& phi, const DensityGrid& p, const DensityGrid& q) {
    require_same_grid(p, q);
    const auto pv = p.q(0);
    const auto qv = q.q(0);
    std::vector<double> f(p.size());
    for (std::size_t i = 0; i < f.size(); ++i) {
        f[i] = phi.value(pv[i]) - phi.value(qv[i]) - phi.d1(qv[i]) * (pv[i] - qv[i]);
    }
    return trapezoid(f, p.h);
}

// Integral of phi(p,p') - phi(q,q') - phi_u(q,q')(p-q) - phi_v(q,q')(p'-q').
inline double bregman_div_2d(const PhiGenerator& phi, const DensityGrid& p, const DensityGrid& q) {
    require_same_grid(p, q);
    if (!p.has_order(1) || !q.has_order(1)) {
        throw ShapeError("two-dimensional Bregman divergence needs first derivatives of p and q");
    }
    std::vector<double> f(p.size());
    for (std::size_t i = 0; i < f.size(); ++i) {
        const double u = p.derivs[0][i], v = p.derivs[1][i];
        const double s = q.derivs[0][i], t = q.derivs[1][i];
        f[i] = phi.value(u, v) - phi.value(s, t) - phi.du(s, t) * (u - s) - phi.dv(s, t) * (v - t);
    }
    return trapezoid(f, p.h);
}

struct Decomposition {
    double divergence = 0.0;      // D(p, q)
    double information = 0.0;     // I(p) = integral of phi(p, p')
    double expected_score = 0.0;  // integral of p S(q)
    double boundary_term = 0.0;   // [p phi_v(q, q')] between the grid ends
    double residual = 0.0;        // |D - I - E_p S(q) + boundary_term|
    bool boundary_warning = false;
};

// D(p, q) = I(p) + E_p S(q) - [p phi_v(q, q')]. The bracket vanishes for densities
// that decay at the grid ends; it is reported (and flagged when an edge density
// exceeds 1e-6) rather than assumed away.
inline Decomposition decomposition_check(const PhiGenerator& phi, const DensityGrid& p,
                                         const DensityGrid& q) {
    require_same_grid(p, q);
    if (!q.has_order(2)) throw ShapeError("decomposition needs q'' to evaluate the score");
    Decomposition out;
    out.divergence = bregman_div_2d(phi, p, q);

    std::vector<double> info(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) info[i] = phi.value(p.derivs[0][i], p.derivs[1][i]);
    out.information = trapezoid(info, p.h);

    const ScoreFunction score = score_from_phi(phi);
    const GridSeries sq = score.evaluate(q);
    std::vector<double> ps(sq.values.size());
    for (std::size_t i = 0; i < ps.size(); ++i) ps[i] = p.derivs[0][sq.offset + i] * sq.values[i];
    out.expected_score = trapezoid(ps, p.h);

    const std::size_t last = p.size() - 1;
    const auto edge = [&](std::size_t i) {
        return p.derivs[0][i] * phi.dv(q.derivs[0][i], q.derivs[1][i]);
    };
    out.boundary_term = edge(last) - edge(0);
    out.boundary_warning = std::max({p.derivs[0][0], p.derivs[0][last], q.derivs[0][0],
                                     q.derivs[0][last]}) > 1e-6;
    out.residual = std::abs(out.divergence - out.information - out.expected_score + out.boundary_term);
    return out;
}

struct ProprietyResult {
    bool proper = true;
    double expected_at_truth = 0.0;              // E_p S(p)
    std::vector<double> expected_at_perturbed;   // E_p S(q_k)
    std::optional<std::size_t> violator;         // first k with E_p S(q_k) < E_p S(p) - 1e-6

    explicit operator bool() const noexcept { return proper; }
};

// Integral of p S(q) on the grid, restricted to the points where S(q) is available.
inline double expected_score(const ScoreFunction& score, const DensityGrid& p, const DensityGrid& q) {
    require_same_grid(p, q);
    const GridSeries s = score.evaluate(q);
    std::vector<double> f(s.values.size());
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = p.derivs[0][s.offset + i] * s.values[i];
    return trapezoid(f, p.h);
}

inline ProprietyResult propriety_check(const ScoreFunction& score, const DensityGrid& p,
                                       std::span<const DensityGrid> perturbations) {
    ProprietyResult out;
    out.expected_at_truth = expected_score(score, p, p);
    for (std::size_t k = 0; k < perturbations.size(); ++k) {
        const double e = expected_score(score, p, perturbations[k]);
        out.expected_at_perturbed.push_back(e);
        if (out.expected_at_truth > e + 1e-6 && !out.violator) {
            out.proper = false;
            out.violator = k;
        }
    }
    return out;
}

}  // namespace objprior
