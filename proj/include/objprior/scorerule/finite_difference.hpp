#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "objprior/errors.hpp"

namespace objprior {

// Values defined on the index range [offset, offset + values.size()) of some grid.
struct GridSeries {
    std::size_t offset = 0;
    std::vector<double> values;

    std::size_t end() const noexcept { return offset + values.size(); }
    bool covers(std::size_t i) const noexcept { return i >= offset && i < end(); }
    double at_grid(std::size_t i) const { return values.at(i - offset); }
};

namespace fd {

// Half width of the stencil used by along_grid() for a derivative of the given order.
constexpr std::size_t half_width(int order) noexcept {
    if (order <= 0) return 0;
    if (order <= 2) return 2;
    return 2 + half_width(order - 2);
}

namespace detail {

inline GridSeries apply5(const GridSeries& f, double h, int order) {
    const std::size_t n = f.values.size();
    if (n < 5) {
        throw StencilError("finite-difference stencil needs 5 points, grid series has " +
                           std::to_string(n));
    }
    GridSeries out;
    out.offset = f.offset + 2;
    out.values.resize(n - 4);
    const auto& v = f.values;
    if (order == 1) {
        const double c = 1.0 / (12.0 * h);
        for (std::size_t i = 2; i + 2 < n; ++i) {
            out.values[i - 2] = (v[i - 2] - 8.0 * v[i - 1] + 8.0 * v[i + 1] - v[i + 2]) * c;
        }
    } else {
        const double c = 1.0 / (12.0 * h * h);
        for (std::size_t i = 2; i + 2 < n; ++i) {
            out.values[i - 2] =
                (-v[i - 2] + 16.0 * v[i - 1] - 30.0 * v[i] + 16.0 * v[i + 1] - v[i + 2]) * c;
        }
    }
    return out;
}

}  // namespace detail

// d^order/dx^order of grid values with spacing h, fourth-order accurate.
// Orders above two are composed from the second-derivative stencil.
inline GridSeries along_grid(GridSeries f, double h, int order) {
    if (order < 0) throw ContractError("negative derivative order");
    while (order > 2) {
        f = detail::apply5(f, h, 2);
        order -= 2;
    }
    if (order == 0) return f;
    return detail::apply5(f, h, order);
}

inline GridSeries along_grid(std::span<const double> values, double h, int order) {
    return along_grid(GridSeries{0, {values.begin(), values.end()}}, h, order);
}

// Central differences of a scalar function, for slot derivatives and cross-checks.
template <class F>
double central1(F&& f, double x, double step) {
    return (f(x - 2 * step) - 8.0 * f(x - step) + 8.0 * f(x + step) - f(x + 2 * step)) /
           (12.0 * step);
}

template <class F>
double central2(F&& f, double x, double step) {
    return (-f(x - 2 * step) + 16.0 * f(x - step) - 30.0 * f(x) + 16.0 * f(x + step) -
            f(x + 2 * step)) /
           (12.0 * step * step);
}

}  // namespace fd
}  // namespace objprior
