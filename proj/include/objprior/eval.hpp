#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <map>
#include <functional>
#include <mutex>
#include <numeric>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "objprior/errors.hpp"
#include "objprior/mcmc/chain.hpp"
#include "objprior/mcmc/metropolis.hpp"
#include "objprior/mcmc/mixture_sampler.hpp"
#include "objprior/models.hpp"
#include "objprior/priors.hpp"
#include "objprior/random.hpp"

namespace objprior {

// Linear-interpolation sample quantile (Hyndman-Fan type 7).
inline double sample_quantile(std::vector<double> v, double p) {
    if (v.empty()) throw ContractError("quantile of an empty sample");
    std::sort(v.begin(), v.end());
    const double h = (static_cast<double>(v.size()) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

inline double interquartile_range(const std::vector<double>& v) {
    return sample_quantile(v, 0.75) - sample_quantile(v, 0.25);
}

struct CredibleInterval {
    double lo = 0.0;
    double hi = 0.0;
    bool contains(double x) const noexcept { return lo <= x && x <= hi; }
};

// Equal-tailed interval from posterior draws.
inline CredibleInterval equal_tailed_interval(const std::vector<double>& draws, double level = 0.95) {
    const double tail = 0.5 * (1.0 - level);
    return {sample_quantile(draws, tail), sample_quantile(draws, 1.0 - tail)};
}

struct RmseResult {
    double value = 0.0;
    bool normalized = true;  // false: truth was 0 and the raw RMSE is reported
};

// sqrt(mean((est - truth)^2)) / |truth|; raw RMSE (flagged) when truth = 0.
inline RmseResult normalized_rmse(std::span<const double> estimates, double truth) {
    if (estimates.empty()) throw ContractError("normalized RMSE needs estimates");
    double ss = 0.0;
    for (double e : estimates) ss += (e - truth) * (e - truth);
    const double rmse = std::sqrt(ss / static_cast<double>(estimates.size()));
    if (truth == 0.0) return {rmse, false};
    return {rmse / std::abs(truth), true};
}

inline double coverage95(std::span<const CredibleInterval> intervals, double truth) {
    if (intervals.empty()) throw ContractError("coverage needs at least one interval");
    std::size_t hit = 0;
    for (const auto& ci : intervals) {
        if (ci.lo > ci.hi) throw ContractError("credible interval with lo > hi");
        if (ci.contains(truth)) ++hit;
    }
    return static_cast<double>(hit) / static_cast<double>(intervals.size());
}

struct DicResult {
    double dic = 0.0;
    double mean_deviance = 0.0;     // D-bar
    double deviance_at_mean = 0.0;  // D(theta-bar)
    double p_d = 0.0;
};

// DIC = D-bar + p_D with D = -2 loglik and p_D = D-bar - D(theta-bar); theta-bar
// is the column-wise posterior mean of the chain as given.
inline DicResult dic(const Chain& chain, const std::function<double(std::span<const double>)>& loglik) {
    if (chain.empty()) throw ContractError("DIC needs a non-empty chain");
    double total = 0.0;
    for (std::size_t r = 0; r < chain.rows(); ++r) {
        const double d = -2.0 * loglik(chain.row(r));
        if (!std::isfinite(d)) {
            throw DiagnosticError("non-finite deviance at draw " + std::to_string(r));
        }
        total += d;
    }
    DicResult out;
    out.mean_deviance = total / static_cast<double>(chain.rows());
    const auto theta_bar = chain.column_means();
    out.deviance_at_mean = -2.0 * loglik(theta_bar);
    if (!std::isfinite(out.deviance_at_mean)) throw DiagnosticError("non-finite deviance at the posterior mean");
    out.p_d = out.mean_deviance - out.deviance_at_mean;
    out.dic = out.mean_deviance + out.p_d;
    return out;
}

// DIC of a mixture chain, plugging in the mean of the weight-ordered draws.
inline DicResult mixture_dic(const Chain& chain, std::span<const double> data) {
    const Chain ordered = relabel_by_weight(chain);
    const std::size_t k = mixture_components(ordered);
    return dic(ordered, [&](std::span<const double> row) {
        return loglik_mixture(mixture_from_row(row, k), data);
    });
}

enum class Family { normal_scale, lognormal_location, mixture };
enum class PriorChoice { score, jeffreys, flat };
enum class Ordering { by_mean, by_weight };

inline std::string to_string(Family f) {
    switch (f) {
        case Family::normal_scale: return "normal_scale";
        case Family::lognormal_location: return "lognormal_location";
        case Family::mixture: return "mixture";
    }
    return "?";
}

inline std::string to_string(PriorChoice p) {
    switch (p) {
        case PriorChoice::score: return "score";
        case PriorChoice::jeffreys: return "jeffreys";
        case PriorChoice::flat: return "flat";
    }
    return "?";
}

struct ReplicationPlan {
    Family family = Family::normal_scale;
    PriorChoice prior = PriorChoice::score;
    std::size_t M = 250;
    std::size_t n = 100;
    double truth = 1.0;              // sigma or mu for the scalar families
    MixtureModel mixture_truth;      // used when family == mixture
    Ordering ordering = Ordering::by_mean;
    double prior_scale = 1.0;        // a of the score priors
    McmcConfig mcmc;                 // mcmc.seed is ignored; chains are seeded per replicate
    std::uint64_t base_seed = 1;
    unsigned threads = 0;            // 0: hardware concurrency
    std::vector<std::size_t> order;  // execution order of replicate indices; empty: 1..M

    void validate() const {
        if (M < 1) throw ConfigError("replication needs M >= 1");
        if (n < 2) throw ConfigError("replication needs n >= 2");
        mcmc.validate();
        switch (family) {
            case Family::normal_scale:
                if (!(truth > 0.0)) throw ConfigError("normal-scale truth must be positive");
                if (prior == PriorChoice::flat) throw ConfigError("normal-scale study uses score or jeffreys");
                break;
            case Family::lognormal_location:
                if (prior == PriorChoice::jeffreys) throw ConfigError("location study uses score or flat");
                break;
            case Family::mixture:
                mixture_truth.validate();
                if (prior != PriorChoice::score) throw ConfigError("mixture study uses the score priors");
                break;
        }
    }
};

struct ParameterEstimate {
    std::string name;
    double truth = 0.0;
    double mean = 0.0;
    CredibleInterval interval;
    bool contains_truth() const noexcept { return interval.contains(truth); }
};

struct ReplicateResult {
    std::size_t index = 0;  // 1-based
    std::uint64_t seed = 0;
    bool ok = false;
    std::string error;
    std::vector<ParameterEstimate> estimates;
    std::map<std::string, double> acceptance;
};

struct ParameterAggregate {
    std::string name;
    double truth = 0.0;
    RmseResult rmse;
    double coverage = 0.0;
    double mean_estimate = 0.0;
    double iqr_estimate = 0.0;
};

struct ExperimentReport {
    ReplicationPlan plan;
    std::vector<ReplicateResult> replicates;  // ordered by index
    std::vector<ParameterAggregate> aggregates;
    std::size_t failed = 0;
    double wall_seconds = 0.0;
};

inline std::vector<ParameterEstimate> summarize_chain(const Chain& chain, std::span<const double> truths) {
    std::vector<ParameterEstimate> out;
    for (std::size_t c = 0; c < chain.cols(); ++c) {
        auto draws = chain.column(c);
        ParameterEstimate e;
        e.name = chain.names()[c];
        e.truth = truths[c];
        e.mean = std::accumulate(draws.begin(), draws.end(), 0.0) / static_cast<double>(draws.size());
        e.interval = equal_tailed_interval(draws);
        out.push_back(std::move(e));
    }
    return out;
}

// Truth vector laid out like a mixture chain row, in the given component order.
inline std::vector<double> ordered_mixture_truth(const MixtureModel& m, Ordering ordering) {
    const std::size_t k = m.k();
    std::vector<double> row(3 * k);
    for (std::size_t l = 0; l < k; ++l) {
        row[l] = m.weights[l];
        row[k + l] = m.means[l];
        row[2 * k + l] = m.sds[l];
    }
    Chain tmp(mixture_parameter_names(k), McmcConfig{});
    tmp.append(row);
    const Chain sorted = ordering == Ordering::by_mean ? relabel_by_mean(tmp) : relabel_by_weight(tmp);
    const auto r = sorted.row(0);
    return {r.begin(), r.end()};
}

inline ReplicateResult run_replicate(const ReplicationPlan& plan, std::size_t index) {
    ReplicateResult res;
    res.index = index;
    res.seed = plan.base_seed + index;
    try {
        Rng data_rng(derive_seed(res.seed, 0));
        McmcConfig cfg = plan.mcmc;
        cfg.seed = derive_seed(res.seed, 1);
        Chain chain;
        std::vector<double> truths;
        switch (plan.family) {
            case Family::normal_scale: {
                NormalScaleModel model{0.0, std::vector<double>(plan.n)};
                for (double& y : model.data) y = plan.truth * std_normal(data_rng);
                double ss = 0.0;
                for (double y : model.data) ss += y * y;
                const double mle = std::sqrt(ss / static_cast<double>(plan.n));
                const ScorePriorPositive score(plan.prior_scale);
                const auto jeffreys = ComparatorPrior::jeffreys_scale();
                const bool use_score = plan.prior == PriorChoice::score;
                chain = rw_metropolis(
                    [&](double s) { return model.loglik(s) + (use_score ? score.log_pdf(s) : jeffreys.log_pdf(s)); },
                    mle, cfg, Support::positive, "sigma");
                truths = {plan.truth};
                break;
            }
            case Family::lognormal_location: {
                std::vector<double> y(plan.n);
                double mean_log = 0.0;
                for (double& v : y) {
                    const double ly = plan.truth + std_normal(data_rng);
                    mean_log += ly;
                    v = std::exp(ly);
                }
                mean_log /= static_cast<double>(plan.n);
                const LogNormalLocationModel model(1.0, std::move(y));
                const ScorePriorReal score(plan.prior_scale);
                const bool use_score = plan.prior == PriorChoice::score;
                chain = rw_metropolis(
                    [&](double mu) { return model.loglik(mu) + (use_score ? score.log_pdf(mu) : 0.0); },
                    mean_log, cfg, Support::real, "mu");
                truths = {plan.truth};
                break;
            }
            case Family::mixture: {
                const auto y = sample_mixture(plan.mixture_truth, plan.n, data_rng);
                const MixturePriors priors{1.0, ScorePriorReal(plan.prior_scale),
                                           ScorePriorPositive(plan.prior_scale)};
                const Chain raw = mwg_mixture(y, plan.mixture_truth.k(), priors, cfg);
                chain = plan.ordering == Ordering::by_mean ? relabel_by_mean(raw) : relabel_by_weight(raw);
                truths = ordered_mixture_truth(plan.mixture_truth, plan.ordering);
                break;
            }
        }
        res.estimates = summarize_chain(chain, truths);
        res.acceptance = chain.acceptance();
        res.ok = true;
    } catch (const std::exception& e) {
        res.ok = false;
        res.error = e.what();
    }
    return res;
}

// Aggregates depend only on the replicate results, which are bound to their
// indices; the execution order and thread count do not matter.
inline ExperimentReport run_replication(const ReplicationPlan& plan) {
    plan.validate();
    const auto start = std::chrono::steady_clock::now();
    std::vector<std::size_t> order = plan.order;
    if (order.empty()) {
        order.resize(plan.M);
        std::iota(order.begin(), order.end(), std::size_t{1});
    }
    ExperimentReport report;
    report.plan = plan;
    report.replicates.resize(plan.M);

    std::atomic<std::size_t> next{0};
    const auto worker = [&] {
        for (std::size_t i = next++; i < order.size(); i = next++) {
            const std::size_t idx = order[i];
            if (idx < 1 || idx > plan.M) continue;
            report.replicates[idx - 1] = run_replicate(plan, idx);
        }
    };
    unsigned threads = plan.threads ? plan.threads : std::max(1u, std::thread::hardware_concurrency());
    threads = std::min<unsigned>(threads, static_cast<unsigned>(order.size()));
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    std::vector<const ReplicateResult*> ok;
    for (const auto& r : report.replicates) {
        if (r.ok) ok.push_back(&r);
        else ++report.failed;
    }
    if (!ok.empty()) {
        const std::size_t params = ok.front()->estimates.size();
        for (std::size_t p = 0; p < params; ++p) {
            std::vector<double> est;
            std::vector<CredibleInterval> ci;
            for (const auto* r : ok) {
                est.push_back(r->estimates[p].mean);
                ci.push_back(r->estimates[p].interval);
            }
            ParameterAggregate agg;
            agg.name = ok.front()->estimates[p].name;
            agg.truth = ok.front()->estimates[p].truth;
            agg.rmse = normalized_rmse(est, agg.truth);
            agg.coverage = coverage95(ci, agg.truth);
            agg.mean_estimate = std::accumulate(est.begin(), est.end(), 0.0) / static_cast<double>(est.size());
            agg.iqr_estimate = interquartile_range(est);
            report.aggregates.push_back(std::move(agg));
        }
    }
    report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
}

// replicate,estimate,lo95,hi95,contains_truth (a parameter column is inserted
// after replicate when the report covers more than one parameter).
inline void write_replicates_csv(std::ostream& out, const ExperimentReport& report) {
    const bool multi = !report.aggregates.empty() && report.aggregates.size() > 1;
    out << "replicate," << (multi ? "parameter," : "") << "estimate,lo95,hi95,contains_truth\n";
    out << std::setprecision(10);
    for (const auto& r : report.replicates) {
        if (!r.ok) {
            out << r.index << (multi ? "," : "") << ",NA,NA,NA,NA\n";
            continue;
        }
        for (const auto& e : r.estimates) {
            out << r.index << ',';
            if (multi) out << e.name << ',';
            out << e.mean << ',' << e.interval.lo << ',' << e.interval.hi << ','
                << (e.contains_truth() ? 1 : 0) << '\n';
        }
    }
}

}  // namespace objprior
