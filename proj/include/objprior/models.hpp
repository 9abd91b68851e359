#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <limits>
#include <numbers>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <stdexcept>
#include <vector>

#include "objprior/errors.hpp"
#include "objprior/random.hpp"

namespace objprior {

inline constexpr double kLogSqrt2Pi = 0.91893853320467274178;

inline double normal_log_density(double y, double mean, double sd) {
    const double z = (y - mean) / sd;
    return -0.5 * z * z - std::log(sd) - kLogSqrt2Pi;
}

// y ~ N(mu0, sigma^2) with known mu0.
struct NormalScaleModel {
    double mu0 = 0.0;
    std::vector<double> data;

    double loglik(double sigma) const {
        if (!(sigma > 0.0)) throw DomainError("normal scale needs sigma > 0");
        double ss = 0.0;
        for (double y : data) ss += (y - mu0) * (y - mu0);
        const auto n = static_cast<double>(data.size());
        return -n * (std::log(sigma) + kLogSqrt2Pi) - 0.5 * ss / (sigma * sigma);
    }
};

// log y ~ N(mu, sigma0^2) with known sigma0.
struct LogNormalLocationModel {
    double sigma0 = 1.0;
    std::vector<double> data;

    LogNormalLocationModel() = default;
    LogNormalLocationModel(double s0, std::vector<double> y) : sigma0(s0), data(std::move(y)) {
        for (double v : data) {
            if (!(v > 0.0)) throw DomainError("log-normal data must be strictly positive");
            const double ly = std::log(v);
            sum_log_ += ly;
            sum_log2_ += ly * ly;
        }
    }

    // Uses sums of log y and (log y)^2 cached at construction.
    double loglik(double mu) const {
        const auto n = static_cast<double>(data.size());
        const double ss = sum_log2_ - 2.0 * mu * sum_log_ + n * mu * mu;
        return -0.5 * ss / (sigma0 * sigma0) - n * (std::log(sigma0) + kLogSqrt2Pi) - sum_log_;
    }

private:
    double sum_log_ = 0.0;
    double sum_log2_ = 0.0;
};

inline double loglik_normal_scale(const NormalScaleModel& m, double sigma) { return m.loglik(sigma); }
inline double loglik_lognormal_loc(const LogNormalLocationModel& m, double mu) { return m.loglik(mu); }

// Location-scale component family used by mixtures.
struct GaussianFamily {
    static double log_density(double y, double loc, double scale) {
        return normal_log_density(y, loc, scale);
    }
    static double sample(Rng& rng, double loc, double scale) { return loc + scale * std_normal(rng); }
};

// sum_l w_l f(y | mu_l, sigma_l).
template <class Family = GaussianFamily>
struct BasicMixtureModel {
    std::vector<double> weights;
    std::vector<double> means;
    std::vector<double> sds;

    std::size_t k() const noexcept { return weights.size(); }

    void validate() const {
        if (weights.empty() || means.size() != weights.size() || sds.size() != weights.size()) {
            throw ContractError("mixture needs equally many weights, means and sds");
        }
        const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
        if (std::abs(total - 1.0) > 1e-12) throw DomainError("mixture weights must sum to 1");
        for (double w : weights) {
            if (!(w >= 0.0)) throw DomainError("mixture weights must be non-negative");
        }
        for (double s : sds) {
            if (!(s > 0.0)) throw DomainError("mixture component sds must be positive");
        }
    }

    // log sum_l w_l f_l(y), stabilised by the largest term.
    double log_density(double y) const {
        double top = -std::numeric_limits<double>::infinity();
        thread_local std::vector<double> terms;
        terms.resize(k());
        for (std::size_t l = 0; l < k(); ++l) {
            terms[l] = std::log(weights[l]) + Family::log_density(y, means[l], sds[l]);
            top = std::max(top, terms[l]);
        }
        if (!std::isfinite(top)) return top;
        double s = 0.0;
        for (double t : terms) s += std::exp(t - top);
        return top + std::log(s);
    }
};

using MixtureModel = BasicMixtureModel<>;

template <class Family>
double loglik_mixture(const BasicMixtureModel<Family>& model, std::span<const double> data) {
    if (data.empty()) throw ContractError("mixture log-likelihood needs data");
    model.validate();
    double total = 0.0;
    for (double y : data) total += model.log_density(y);
    return total;
}

// Ancestral sampling: component label, then a draw from that component.
template <class Family>
std::vector<double> sample_mixture(const BasicMixtureModel<Family>& model, std::size_t n, Rng& rng) {
    if (n < 1) throw ContractError("sample size must be at least 1");
    model.validate();
    std::vector<double> y(n);
    for (auto& v : y) {
        const std::size_t l = categorical_draw(rng, model.weights);
        v = Family::sample(rng, model.means[l], model.sds[l]);
    }
    return y;
}

// 0.25 N(0, 1.2^2) + 0.65 N(-10, 1) + 0.10 N(7, 0.8^2)
inline MixtureModel three_component_example() {
    return {{0.25, 0.65, 0.10}, {0.0, -10.0, 7.0}, {1.2, 1.0, 0.8}};
}

// Equal-weight designs for the repeated-sampling study, k in {3, 4, 5}.
inline MixtureModel repeated_sampling_design(std::size_t k) {
    switch (k) {
        case 3: return {{1.0 / 3, 1.0 / 3, 1.0 / 3}, {-10.0, 0.0, 7.0}, {1.0, 0.8, 1.2}};
        case 4: return {{0.25, 0.25, 0.25, 0.25}, {-10.0, -3.0, 0.0, 7.0}, {1.0, 0.9, 0.8, 1.2}};
        case 5:
            return {{0.2, 0.2, 0.2, 0.2, 0.2}, {-10.0, -3.0, 0.0, 3.0, 7.0}, {1.0, 0.9, 0.8, 1.0, 1.2}};
        default: throw ContractError("repeated-sampling designs exist for k = 3, 4, 5");
    }
}

// Per-school effect estimates with known standard errors.
struct EightSchoolsData {
    std::vector<double> y;
    std::vector<double> s;

    std::size_t size() const noexcept { return y.size(); }

    static EightSchoolsData standard() {
        return {{28, 8, -3, 7, -1, 1, 18, 12}, {15, 10, 16, 11, 9, 11, 10, 18}};
    }
};

struct HierarchicalState {
    double mu = 0.0;
    std::vector<double> alpha;
    double sigma_alpha2 = 1.0;
};

// sum_j log N(y_j; mu + alpha_j, s_j^2) + sum_j log N(alpha_j; 0, sigma_alpha^2)
inline double loglik_hierarchical(const EightSchoolsData& data, const HierarchicalState& state) {
    if (!(state.sigma_alpha2 > 0.0)) throw DomainError("between-group variance must be positive");
    if (state.alpha.size() != data.size() || data.s.size() != data.size()) {
        throw ContractError("hierarchical state and data differ in group count");
    }
    const double tau = std::sqrt(state.sigma_alpha2);
    double total = 0.0;
    for (std::size_t j = 0; j < data.size(); ++j) {
        total += normal_log_density(data.y[j], state.mu + state.alpha[j], data.s[j]);
        total += normal_log_density(state.alpha[j], 0.0, tau);
    }
    return total;
}

// FNV-1a, 64 bit.
inline std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

struct GalaxyData {
    std::vector<double> velocities;  // 1000 km/s
    std::uint64_t checksum = 0;      // FNV-1a of the file bytes
};

// One velocity per line (blank lines and '#' comments ignored); exactly 82
// values, each in (5, 40).
inline GalaxyData load_galaxy(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open galaxy data file '" + path + "'");
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    GalaxyData out;
    out.checksum = fnv1a64(bytes);
    std::istringstream lines(bytes);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(lines, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::istringstream field(line);
        double v = 0.0;
        std::string rest;
        if (!(field >> v) || (field >> rest)) {
            throw ContractError(path + ":" + std::to_string(lineno) + ": expected one number");
        }
        if (!(v > 5.0 && v < 40.0)) {
            throw DomainError(path + ":" + std::to_string(lineno) + ": velocity " + std::to_string(v) +
                              " outside (5, 40)");
        }
        out.velocities.push_back(v);
    }
    if (out.velocities.size() != 82) {
        throw ContractError("galaxy data must have 82 rows, found " +
                            std::to_string(out.velocities.size()));
    }
    return out;
}

}  // namespace objprior
