#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "objprior/errors.hpp"
#include "objprior/mcmc/chain.hpp"
#include "objprior/models.hpp"
#include "objprior/priors.hpp"
#include "objprior/random.hpp"

namespace objprior {

// Symmetric Dirichlet on the weights; score priors on every mean and sd.
struct MixturePriors {
    double dirichlet_concentration = 1.0;
    ScorePriorReal mean_prior{1.0};
    ScorePriorPositive sd_prior{1.0};
};

struct MixtureState {
    std::vector<double> weights;
    std::vector<double> means;
    std::vector<double> sds;
    std::vector<std::size_t> labels;  // 0-based component of each observation
};

inline std::string mixture_name(const char* prefix, std::size_t l) { return prefix + std::to_string(l + 1); }

inline std::vector<std::string> mixture_parameter_names(std::size_t k) {
    std::vector<std::string> names;
    for (const char* p : {"w", "mu", "sigma"}) {
        for (std::size_t l = 0; l < k; ++l) names.push_back(mixture_name(p, l));
    }
    return names;
}

// Split sorted data into k contiguous chunks; component l starts at chunk l's mean and sd.
inline MixtureState quantile_initialisation(std::span<const double> data, std::size_t k) {
    std::vector<double> sorted(data.begin(), data.end());
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    const double mean_all = std::accumulate(sorted.begin(), sorted.end(), 0.0) / static_cast<double>(n);
    double var_all = 0.0;
    for (double y : sorted) var_all += (y - mean_all) * (y - mean_all);
    const double fallback_sd = std::max(std::sqrt(var_all / static_cast<double>(n)) / static_cast<double>(k), 1e-3);

    MixtureState s;
    s.weights.assign(k, 1.0 / static_cast<double>(k));
    s.labels.assign(n, 0);
    for (std::size_t l = 0; l < k; ++l) {
        const std::size_t lo = l * n / k;
        const std::size_t hi = (l + 1) * n / k;
        double m = 0.0;
        for (std::size_t i = lo; i < hi; ++i) m += sorted[i];
        m /= static_cast<double>(hi - lo);
        double v = 0.0;
        for (std::size_t i = lo; i < hi; ++i) v += (sorted[i] - m) * (sorted[i] - m);
        const double sd = hi - lo > 1 ? std::sqrt(v / static_cast<double>(hi - lo - 1)) : 0.0;
        s.means.push_back(m);
        s.sds.push_back(sd > 1e-3 ? sd : fallback_sd);
    }
    return s;
}

// Metropolis-within-Gibbs for a k-component mixture. One sweep:
//   labels  ~ categorical, p(z_i = l) proportional to w_l f(y_i | mu_l, sigma_l)
//   weights ~ Dirichlet(c + n_1, ..., c + n_k)
//   mu_l, log sigma_l: random-walk Metropolis given the observations labelled l
template <class Family = GaussianFamily>
Chain mwg_mixture(std::span<const double> data, std::size_t k, const MixturePriors& priors,
                  const McmcConfig& cfg) {
    cfg.validate();
    if (k < 1) throw ConfigError("mixture needs k >= 1");
    if (k > data.size()) throw ConfigError("mixture with k > n components");

    MixtureState s = quantile_initialisation(data, k);
    Rng rng(cfg.seed);
    const std::size_t n = data.size();

    std::vector<ProposalScale> mean_step, sd_step;
    for (std::size_t l = 0; l < k; ++l) {
        mean_step.emplace_back(cfg.proposal_for(mixture_name("mu", l)), cfg);
        sd_step.emplace_back(cfg.proposal_for(mixture_name("sigma", l)), cfg);
    }

    std::vector<std::vector<std::size_t>> members(k);
    std::vector<double> logw(k), prob(k), conc(k), row(3 * k);

    constexpr bool gaussian = std::is_same_v<Family, GaussianFamily>;
    const auto component_loglik = [&](std::size_t l, double mu, double sd) {
        double t = 0.0;
        if constexpr (gaussian) {
            for (std::size_t i : members[l]) t += (data[i] - mu) * (data[i] - mu);
            const auto m = static_cast<double>(members[l].size());
            return -0.5 * t / (sd * sd) - m * (std::log(sd) + kLogSqrt2Pi);
        } else {
            for (std::size_t i : members[l]) t += Family::log_density(data[i], mu, sd);
            return t;
        }
    };
    std::vector<double> log_const(k), inv_sd(k);

    Chain chain(mixture_parameter_names(k), cfg);
    for (std::size_t it = 0; it < cfg.n_iter; ++it) {
        for (auto& m : members) m.clear();
        for (std::size_t l = 0; l < k; ++l) {
            log_const[l] = std::log(s.weights[l]) - std::log(s.sds[l]);
            inv_sd[l] = 1.0 / s.sds[l];
        }
        for (std::size_t i = 0; i < n; ++i) {
            double top = -HUGE_VAL;
            for (std::size_t l = 0; l < k; ++l) {
                if constexpr (gaussian) {
                    const double z = (data[i] - s.means[l]) * inv_sd[l];
                    logw[l] = log_const[l] - 0.5 * z * z;
                } else {
                    logw[l] = std::log(s.weights[l]) + Family::log_density(data[i], s.means[l], s.sds[l]);
                }
                top = std::max(top, logw[l]);
            }
            for (std::size_t l = 0; l < k; ++l) prob[l] = std::exp(logw[l] - top);
            s.labels[i] = categorical_draw(rng, prob);
            members[s.labels[i]].push_back(i);
        }

        for (std::size_t l = 0; l < k; ++l) {
            conc[l] = priors.dirichlet_concentration + static_cast<double>(members[l].size());
        }
        s.weights = dirichlet_draw(rng, conc);
        for (double& w : s.weights) w = std::max(w, 1e-300);

        for (std::size_t l = 0; l < k; ++l) {
            double current = component_loglik(l, s.means[l], s.sds[l]);

            const double mu_new = s.means[l] + mean_step[l].sd() * std_normal(rng);
            const double ll_mu = component_loglik(l, mu_new, s.sds[l]);
            const double log_ratio_mu = ll_mu + priors.mean_prior.log_pdf(mu_new) - current -
                                        priors.mean_prior.log_pdf(s.means[l]);
            const bool accept_mu = std::log(uniform_open(rng)) < log_ratio_mu;
            if (accept_mu) {
                s.means[l] = mu_new;
                current = ll_mu;
            }
            mean_step[l].record(accept_mu, it);

            const double log_sd = std::log(s.sds[l]);
            const double log_sd_new = log_sd + sd_step[l].sd() * std_normal(rng);
            const double sd_new = std::exp(log_sd_new);
            bool accept_sd = false;
            if (sd_new > 0.0 && std::isfinite(sd_new)) {
                const double ll_sd = component_loglik(l, s.means[l], sd_new);
                const double log_ratio_sd = ll_sd + priors.sd_prior.log_pdf(sd_new) + log_sd_new -
                                            current - priors.sd_prior.log_pdf(s.sds[l]) - log_sd;
                accept_sd = std::log(uniform_open(rng)) < log_ratio_sd;
                if (accept_sd) s.sds[l] = sd_new;
            }
            sd_step[l].record(accept_sd, it);
        }

        if (cfg.keeps(it)) {
            for (std::size_t l = 0; l < k; ++l) {
                row[l] = s.weights[l];
                row[k + l] = s.means[l];
                row[2 * k + l] = s.sds[l];
            }
            chain.append(row);
        }
    }
    for (std::size_t l = 0; l < k; ++l) {
        chain.acceptance()[mixture_name("mu", l)] = mean_step[l].acceptance_rate();
        chain.acceptance()[mixture_name("sigma", l)] = sd_step[l].acceptance_rate();
    }
    return chain;
}

inline std::size_t mixture_components(const Chain& chain) {
    if (chain.cols() % 3 != 0 || chain.cols() == 0) throw ContractError("not a mixture chain");
    const std::size_t k = chain.cols() / 3;
    if (chain.names()[0] != "w1" || chain.names()[k] != "mu1" || chain.names()[2 * k] != "sigma1") {
        throw ContractError("not a mixture chain");
    }
    return k;
}

inline MixtureModel mixture_from_row(std::span<const double> row, std::size_t k) {
    MixtureModel m;
    m.weights.assign(row.begin(), row.begin() + k);
    m.means.assign(row.begin() + k, row.begin() + 2 * k);
    m.sds.assign(row.begin() + 2 * k, row.begin() + 3 * k);
    const double total = std::accumulate(m.weights.begin(), m.weights.end(), 0.0);
    for (double& w : m.weights) w /= total;
    return m;
}

namespace detail {

template <class Less>
Chain relabel(const Chain& chain, Less less) {
    const std::size_t k = mixture_components(chain);
    Chain out = chain;
    std::vector<std::size_t> order(k);
    std::vector<double> buf(3 * k);
    for (std::size_t r = 0; r < chain.rows(); ++r) {
        const auto src = chain.row(r);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return less(src, k, a, b); });
        for (std::size_t l = 0; l < k; ++l) {
            for (std::size_t block = 0; block < 3; ++block) buf[block * k + l] = src[block * k + order[l]];
        }
        std::copy(buf.begin(), buf.end(), out.row(r).begin());
    }
    return out;
}

}  // namespace detail

// Per draw, order components by weight descending; ties broken by mean ascending.
inline Chain relabel_by_weight(const Chain& chain) {
    return detail::relabel(chain, [](std::span<const double> d, std::size_t k, std::size_t a, std::size_t b) {
        if (d[a] != d[b]) return d[a] > d[b];
        return d[k + a] < d[k + b];
    });
}

// Per draw, order components by mean ascending; ties broken by weight descending.
inline Chain relabel_by_mean(const Chain& chain) {
    return detail::relabel(chain, [](std::span<const double> d, std::size_t k, std::size_t a, std::size_t b) {
        if (d[k + a] != d[k + b]) return d[k + a] < d[k + b];
        return d[a] > d[b];
    });
}

}  // namespace objprior
