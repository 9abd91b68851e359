#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace objprior {

// All sampling uses the 64-bit Mersenne Twister. Streams are derived from a
// base seed with splitmix64, so replicate r of a study is bound to (seed, r)
// and not to execution order.
using Rng = std::mt19937_64;

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) noexcept {
    return splitmix64(splitmix64(base) ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

// Uniform on the open interval (0, 1).
inline double uniform_open(Rng& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double v = u(rng);
    while (v <= 0.0) v = u(rng);
    return v;
}

inline double std_normal(Rng& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    return n(rng);
}

inline double gamma_draw(Rng& rng, double shape, double rate = 1.0) {
    std::gamma_distribution<double> g(shape, 1.0 / rate);
    return g(rng);
}

inline std::vector<double> dirichlet_draw(Rng& rng, std::span<const double> concentration) {
    std::vector<double> w(concentration.size());
    double total = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        w[i] = gamma_draw(rng, concentration[i]);
        total += w[i];
    }
    for (double& v : w) v /= total;
    return w;
}

// Index drawn with probability proportional to weights (not necessarily normalised).
inline std::size_t categorical_draw(Rng& rng, std::span<const double> weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    double u = uniform_open(rng) * total;
    for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
        if (u < weights[i]) return i;
        u -= weights[i];
    }
    return weights.size() - 1;
}

}  // namespace objprior
