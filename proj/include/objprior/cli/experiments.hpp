#pragma once

#include <bit>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iterator>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "objprior/cli/config.hpp"
#include "objprior/errors.hpp"
#include "objprior/eval.hpp"
#include "objprior/mcmc/hierarchical_sampler.hpp"
#include "objprior/mcmc/mixture_sampler.hpp"
#include "objprior/models.hpp"
#include "objprior/priors.hpp"
#include "objprior/scorerule/euler_lagrange.hpp"
#include "objprior/scorerule/score_zero.hpp"
#include "objprior/scorerule/scores.hpp"

namespace objprior::cli {

namespace fs = std::filesystem;

// A required input file is absent (the CLI maps this to exit code 2).
class MissingInputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct RunOutput {
    std::vector<std::string> files;  // relative to the run directory
    nlohmann::json dataset = nlohmann::json::object();
    std::string summary;  // plain-text table
};

inline std::string num(double v) {
    std::ostringstream s;
    s << std::setprecision(10) << v;
    return s.str();
}

inline McmcConfig mcmc_config(const RunConfig& cfg, std::uint64_t seed) {
    McmcConfig m;
    if (cfg.integer("n_iter") < 1 || cfg.integer("burn_in") < 0 || cfg.integer("thin") < 1) {
        throw ConfigError("schedule values must be positive (burn_in may be 0)");
    }
    m.n_iter = static_cast<std::size_t>(cfg.integer("n_iter"));
    m.burn_in = static_cast<std::size_t>(cfg.integer("burn_in"));
    m.thin = static_cast<std::size_t>(cfg.integer("thin"));
    m.default_proposal_sd = cfg.real("proposal_sd");
    m.seed = seed;
    m.validate();
    return m;
}

inline std::size_t positive_count(const RunConfig& cfg, const std::string& key) {
    const long long v = cfg.integer(key);
    if (v < 1) throw ConfigError("key '" + key + "': must be at least 1");
    return static_cast<std::size_t>(v);
}

class RunWriter {
public:
    explicit RunWriter(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

    std::ofstream open(const std::string& name) {
        std::ofstream out(dir_ / name, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + (dir_ / name).string());
        output_.files.push_back(name);
        return out;
    }

    RunOutput& output() noexcept { return output_; }
    const fs::path& dir() const noexcept { return dir_; }

private:
    fs::path dir_;
    RunOutput output_;
};

// Seed for a study cell keyed by a real value, so a cell's data do not depend
// on which other cells run alongside it.
inline std::uint64_t cell_seed(std::uint64_t seed, double key) {
    return derive_seed(seed, std::bit_cast<std::uint64_t>(key));
}

// Replication plan for one cell of the scale or location study.
inline ReplicationPlan scalar_study_plan(Family family, PriorChoice prior, double truth, std::size_t M,
                                         std::size_t n, double a, const McmcConfig& mcmc, std::uint64_t seed) {
    ReplicationPlan plan;
    plan.family = family;
    plan.prior = prior;
    plan.M = M;
    plan.n = n;
    plan.truth = truth;
    plan.prior_scale = a;
    plan.mcmc = mcmc;
    plan.base_seed = cell_seed(seed, truth);
    return plan;
}

// Replication plan for the (k, n) cell of the repeated-sampling mixture study.
inline ReplicationPlan mixture_study_plan(std::size_t k, std::size_t n, std::size_t M, Ordering ordering, double a,
                                          const McmcConfig& mcmc, std::uint64_t seed) {
    ReplicationPlan plan;
    plan.family = Family::mixture;
    plan.prior = PriorChoice::score;
    plan.M = M;
    plan.n = n;
    plan.mixture_truth = repeated_sampling_design(k);
    plan.ordering = ordering;
    plan.prior_scale = a;
    plan.mcmc = mcmc;
    plan.base_seed = derive_seed(seed, static_cast<std::uint64_t>(k * 100000 + n));
    return plan;
}

inline void run_score_check(const RunConfig& cfg, RunWriter& w) {
    const double a = cfg.real("a"), h = cfg.real("step"), x_max = cfg.real("x_max");
    if (!(a > 0.0) || !(h > 0.0) || !(x_max > 0.0)) throw ConfigError("a, step and x_max must be positive");

    struct Row {
        std::string name;
        double value, threshold;
        bool below;  // pass when value <= threshold, else when value > threshold
    };
    std::vector<Row> el;
    const auto normal = tabulate(NormalDensity{0.0, 1.0}, -5.0, 5.0, h);
    const auto lomax = tabulate(LomaxDensity{a, 1.0}, 0.1, 20.0, h);
    el.push_back({"hyvarinen/normal(0,1)", max_abs(euler_lagrange_residual(hyvarinen(), normal)), 1e-3, true});
    el.push_back({"inverse_square/lomax(a)", max_abs(euler_lagrange_residual(inverse_square(), lomax)), 1e-3, true});
    const ScoreFunction identity{2, "S=q", [](double, std::span<const double> j) { return j[0]; }, {}};
    el.push_back({"S=q/normal(0,1)", max_abs(euler_lagrange_residual(identity, normal)), 1e-1, false});

    std::vector<Row> zero;
    const auto grid = solve_score_zero(a, x_max, x_max / 20000.0);
    double sup = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double t = a + grid.x[i];
        sup = std::max(sup, std::abs(grid.q(0)[i] - a / (t * t)));
    }
    zero.push_back({"ode_sup_error", sup, 1e-6, true});
    zero.push_back({"prior_score_residual", static_cast<double>(prior_score_residual<long double>(a)), 1e-12, true});
    zero.push_back({"invariance_check", invariance_check(a, standard_prior_grid()), 1e-12, a == 1.0});

    std::ostringstream text;
    const auto write = [&](const std::string& file, const std::vector<Row>& rows) {
        auto out = w.open(file);
        out << "case,value,threshold,pass\n";
        for (const auto& r : rows) {
            const bool pass = r.below ? r.value <= r.threshold : r.value > r.threshold;
            out << r.name << ',' << num(r.value) << ',' << num(r.threshold) << ',' << (pass ? 1 : 0) << '\n';
            text << std::left << std::setw(28) << r.name << std::setw(16) << num(r.value)
                 << (r.below ? "<= " : ">  ") << num(r.threshold) << (pass ? "  ok" : "  FAIL") << '\n';
        }
    };
    write("euler_lagrange.csv", el);
    write("score_zero.csv", zero);
    w.output().summary = text.str();
}

inline void run_prior_table(const RunConfig& cfg, RunWriter& w) {
    const double a = cfg.real("a"), lo = cfg.real("x_min"), hi = cfg.real("x_max");
    const std::size_t points = positive_count(cfg, "points");
    if (!(a > 0.0) || !(lo > 0.0) || !(hi > lo) || points < 2) throw ConfigError("need a > 0, 0 < x_min < x_max, points >= 2");
    const ScorePriorPositive prior(a);
    const LomaxDensity lomax{a, 1.0};
    auto out = w.open("prior_table.csv");
    out << "x,pdf,cdf,score\n";
    std::vector<double> grid(points);
    double worst = 0.0;
    for (std::size_t i = 0; i < points; ++i) {
        const double x = lo * std::pow(hi / lo, static_cast<double>(i) / static_cast<double>(points - 1));
        grid[i] = x;
        const auto j = lomax.jet<long double>(x);
        const auto s = static_cast<double>(inverse_square_score<long double>(j[0], j[1], j[2]));
        worst = std::max(worst, std::abs(s));
        out << num(x) << ',' << num(prior.pdf(x)) << ',' << num(prior.cdf(x)) << ',' << num(s) << '\n';
    }
    std::ostringstream text;
    text << "a = " << num(a) << "\nmax |score| = " << num(worst)
         << "\ninvariance discrepancy = " << num(invariance_check(a, grid)) << '\n';
    w.output().summary = text.str();
}

struct ScalarStudy {
    Family family;
    std::string truth_key;
    std::vector<PriorChoice> priors;
};

inline void run_scalar_study(const RunConfig& cfg, RunWriter& w, const ScalarStudy& study) {
    const auto truths = cfg.reals(study.truth_key);
    std::vector<PriorChoice> priors;
    for (PriorChoice p : study.priors) {
        if (cfg.text("prior") == "all" || cfg.text("prior") == to_string(p)) priors.push_back(p);
    }
    std::ostringstream header;
    header << study.truth_key;
    for (PriorChoice p : priors) header << ',' << to_string(p) << "_rmse," << to_string(p) << "_coverage," << to_string(p) << "_failed";
    header << ",normalized\n";
    std::ostringstream rows, text;
    text << std::left << std::setw(10) << study.truth_key;
    for (PriorChoice p : priors) text << std::setw(12) << (to_string(p) + " rmse") << std::setw(12) << (to_string(p) + " cov");
    text << '\n';

    for (double truth : truths) {
        rows << num(truth);
        text << std::setw(10) << num(truth);
        bool normalized = true;
        for (PriorChoice p : priors) {
            ReplicationPlan plan = scalar_study_plan(study.family, p, truth, positive_count(cfg, "M"),
                                                     positive_count(cfg, "n"), cfg.real("a"), mcmc_config(cfg, 0),
                                                     cfg.seed());
            plan.threads = static_cast<unsigned>(std::max(0LL, cfg.integer("threads")));
            const auto report = run_replication(plan);
            {
                auto out = w.open("replicates_" + to_string(p) + "_" + study.truth_key + num(truth) + ".csv");
                write_replicates_csv(out, report);
            }
            if (report.aggregates.empty()) {
                rows << ",NA,NA," << report.failed;
                text << std::setw(12) << "NA" << std::setw(12) << "NA";
                continue;
            }
            const auto& agg = report.aggregates.front();
            normalized = normalized && agg.rmse.normalized;
            rows << ',' << num(agg.rmse.value) << ',' << num(agg.coverage) << ',' << report.failed;
            text << std::setw(12) << num(std::round(agg.rmse.value * 1e4) / 1e4) << std::setw(12)
                 << num(std::round(agg.coverage * 1e3) / 1e3);
        }
        rows << ',' << (normalized ? 1 : 0) << '\n';
        text << (normalized ? "" : "  (raw RMSE: truth is 0)") << '\n';
    }
    auto out = w.open("summary.csv");
    out << header.str() << rows.str();
    w.output().summary = text.str();
}

inline Ordering ordering_of(const RunConfig& cfg) {
    return cfg.text("ordering") == "mean" ? Ordering::by_mean : Ordering::by_weight;
}

inline MixturePriors mixture_priors(const RunConfig& cfg) {
    const double a = cfg.real("a");
    if (!(a > 0.0)) throw ConfigError("key 'a': must be positive");
    return {1.0, ScorePriorReal(a), ScorePriorPositive(a)};
}

inline void write_chain(RunWriter& w, const std::string& stem, const Chain& chain) {
    {
        auto out = w.open(stem + ".csv");
        chain.write_csv(out);
    }
    auto side = w.open(stem + ".json");
    side << chain.sidecar().dump(2) << '\n';
}

struct MixtureSingleRun {
    std::vector<double> data;
    Chain chain;  // relabelled
    std::vector<ParameterEstimate> estimates;
};

// Draw n points from the three-component example and fit it; the data use
// stream 0 of the seed and the chain stream 1.
inline MixtureSingleRun mixture_single_run(std::uint64_t seed, std::size_t n, const MixturePriors& priors,
                                           Ordering ordering, McmcConfig mcmc) {
    const MixtureModel truth = three_component_example();
    Rng rng(derive_seed(seed, 0));
    MixtureSingleRun run;
    run.data = sample_mixture(truth, n, rng);
    mcmc.seed = derive_seed(seed, 1);
    const Chain raw = mwg_mixture(run.data, truth.k(), priors, mcmc);
    run.chain = ordering == Ordering::by_mean ? relabel_by_mean(raw) : relabel_by_weight(raw);
    run.estimates = summarize_chain(run.chain, ordered_mixture_truth(truth, ordering));
    return run;
}

// Fit a k-component mixture to the data with chain seed derived from (seed, k).
inline Chain galaxy_fit(std::span<const double> data, std::size_t k, const MixturePriors& priors, McmcConfig mcmc,
                        std::uint64_t seed) {
    mcmc.seed = derive_seed(seed, static_cast<std::uint64_t>(k));
    return mwg_mixture(data, k, priors, mcmc);
}

inline void run_mixture_single(const RunConfig& cfg, RunWriter& w) {
    const auto run = mixture_single_run(cfg.seed(), positive_count(cfg, "n"), mixture_priors(cfg), ordering_of(cfg),
                                        mcmc_config(cfg, 0));
    {
        auto out = w.open("data.csv");
        out << "y\n" << std::setprecision(12);
        for (double v : run.data) out << v << '\n';
    }
    write_chain(w, "chain", run.chain);
    const auto& est = run.estimates;
    auto out = w.open("summary.csv");
    out << "parameter,truth,mean,lo95,hi95,contains_truth\n";
    std::ostringstream text;
    text << std::left << std::setw(10) << "param" << std::setw(10) << "truth" << std::setw(12) << "mean"
         << "95% interval\n";
    std::size_t inside = 0;
    for (const auto& e : est) {
        out << e.name << ',' << num(e.truth) << ',' << num(e.mean) << ',' << num(e.interval.lo) << ','
            << num(e.interval.hi) << ',' << (e.contains_truth() ? 1 : 0) << '\n';
        text << std::setw(10) << e.name << std::setw(10) << num(e.truth) << std::setw(12)
             << num(std::round(e.mean * 1e3) / 1e3) << '(' << num(std::round(e.interval.lo * 1e3) / 1e3) << ", "
             << num(std::round(e.interval.hi * 1e3) / 1e3) << ")\n";
        if (e.contains_truth()) ++inside;
    }
    text << inside << " of " << est.size() << " true values inside their intervals\n";
    w.output().summary = text.str();
}

inline void run_mixture_repeat(const RunConfig& cfg, RunWriter& w) {
    std::ostringstream rows, text;
    rows << "k,n,parameter,truth,mean_estimate,iqr,rmse,normalized,coverage,failed\n";
    text << std::left << std::setw(4) << "k" << std::setw(6) << "n" << std::setw(10) << "param" << "IQR of posterior means\n";
    for (long long k : cfg.integers("k")) {
        if (k < 3 || k > 5) throw ConfigError("key 'k': repeated-sampling designs exist for k = 3, 4, 5");
        for (long long n : cfg.integers("n")) {
            if (n < 2) throw ConfigError("key 'n': sample sizes must be at least 2");
            ReplicationPlan plan = mixture_study_plan(static_cast<std::size_t>(k), static_cast<std::size_t>(n),
                                                      positive_count(cfg, "M"), ordering_of(cfg), cfg.real("a"),
                                                      mcmc_config(cfg, 0), cfg.seed());
            plan.threads = static_cast<unsigned>(std::max(0LL, cfg.integer("threads")));
            const auto report = run_replication(plan);
            {
                auto out = w.open("replicates_k" + std::to_string(k) + "_n" + std::to_string(n) + ".csv");
                write_replicates_csv(out, report);
            }
            for (const auto& agg : report.aggregates) {
                rows << k << ',' << n << ',' << agg.name << ',' << num(agg.truth) << ',' << num(agg.mean_estimate)
                     << ',' << num(agg.iqr_estimate) << ',' << num(agg.rmse.value) << ','
                     << (agg.rmse.normalized ? 1 : 0) << ',' << num(agg.coverage) << ',' << report.failed << '\n';
                if (agg.name.rfind("mu", 0) == 0) {
                    text << std::setw(4) << k << std::setw(6) << n << std::setw(10) << agg.name
                         << num(std::round(agg.iqr_estimate * 1e4) / 1e4) << '\n';
                }
            }
        }
    }
    auto out = w.open("summary.csv");
    out << rows.str();
    w.output().summary = text.str();
}

inline GalaxyData require_galaxy(const std::string& path) {
    if (!fs::exists(path)) {
        throw MissingInputError(
            "galaxy data file '" + path +
            "' not found.\nProvide the 82 galaxy velocities (in 1000 km/s, one per line) and pass "
            "--galaxy <path>; the repository ships them as data/galaxies.txt.");
    }
    return load_galaxy(path);
}

inline void run_galaxy_dic(const RunConfig& cfg, RunWriter& w) {
    const std::string path = cfg.text("galaxy");
    const GalaxyData data = require_galaxy(path);
    std::ostringstream hex;
    hex << std::hex << std::setw(16) << std::setfill('0') << data.checksum;
    w.output().dataset = {{"path", path}, {"fnv1a64", hex.str()}, {"rows", data.velocities.size()}};

    auto out = w.open("dic.csv");
    out << "k,dic,mean_deviance,p_d,deviance_at_mean\n";
    std::ostringstream text;
    text << std::left << std::setw(4) << "k" << "DIC\n";
    double best = HUGE_VAL;
    long long best_k = 0;
    for (long long k : cfg.integers("k")) {
        if (k < 1) throw ConfigError("key 'k': component counts must be positive");
        const Chain chain = galaxy_fit(data.velocities, static_cast<std::size_t>(k), mixture_priors(cfg),
                                       mcmc_config(cfg, 0), cfg.seed());
        const DicResult d = mixture_dic(chain, data.velocities);
        out << k << ',' << num(d.dic) << ',' << num(d.mean_deviance) << ',' << num(d.p_d) << ','
            << num(d.deviance_at_mean) << '\n';
        text << std::setw(4) << k << num(std::round(d.dic * 100) / 100) << '\n';
        if (d.dic < best) {
            best = d.dic;
            best_k = k;
        }
        const Chain ordered = relabel_by_weight(chain);
        auto est = w.open("estimates_k" + std::to_string(k) + ".csv");
        est << "parameter,mean,lo95,hi95\n";
        for (std::size_t c = 0; c < ordered.cols(); ++c) {
            const auto draws = ordered.column(c);
            const auto ci = equal_tailed_interval(draws);
            est << ordered.names()[c] << ','
                << num(std::accumulate(draws.begin(), draws.end(), 0.0) / static_cast<double>(draws.size())) << ','
                << num(ci.lo) << ',' << num(ci.hi) << '\n';
        }
    }
    text << "smallest DIC at k = " << best_k << '\n';
    w.output().summary = text.str();
}

inline void run_schools(const RunConfig& cfg, RunWriter& w) {
    const auto data = EightSchoolsData::standard();
    struct Arm {
        std::string name;
        VariancePrior prior;
        std::uint64_t stream;
    };
    std::vector<Arm> arms;
    const std::string which = cfg.text("prior");
    if (which == "all" || which == "ig") {
        arms.push_back({"ig", ComparatorPrior::inverse_gamma(cfg.real("ig_shape"), cfg.real("ig_rate")), 1});
    }
    if (which == "all" || which == "score") arms.push_back({"score", ScorePriorPositive(cfg.real("a")), 2});

    std::ostringstream rows, text;
    rows << "prior,mean,sd,median,lo95,hi95\n";
    text << std::left << std::setw(8) << "prior" << std::setw(10) << "mean" << std::setw(10) << "median"
         << "95% interval for sigma_alpha^2\n";
    for (const auto& arm : arms) {
        const Chain chain = hierarchical_sampler(data, arm.prior, mcmc_config(cfg, derive_seed(cfg.seed(), arm.stream)));
        write_chain(w, "chain_" + arm.name, chain);
        const auto v = chain.column("sigma_alpha2");
        const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
        double ss = 0.0;
        for (double x : v) ss += (x - mean) * (x - mean);
        const double sd = std::sqrt(ss / static_cast<double>(v.size() > 1 ? v.size() - 1 : 1));
        const double median = sample_quantile(v, 0.5);
        const auto ci = equal_tailed_interval(v);
        rows << arm.name << ',' << num(mean) << ',' << num(sd) << ',' << num(median) << ',' << num(ci.lo) << ','
             << num(ci.hi) << '\n';
        const auto r2 = [](double x) { return num(std::round(x * 100) / 100); };
        text << std::setw(8) << arm.name << std::setw(10) << r2(mean) << std::setw(10) << r2(median) << '('
             << r2(ci.lo) << ", " << r2(ci.hi) << ")\n";
    }
    auto out = w.open("summary.csv");
    out << rows.str();
    w.output().summary = text.str();
}

inline std::string hex64(std::uint64_t v) {
    std::ostringstream s;
    s << std::hex << std::setw(16) << std::setfill('0') << v;
    return s.str();
}

inline std::string file_checksum(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return hex64(fnv1a64(bytes));
}

// Runs the experiment into `dir`, writes summary.txt and manifest.json, and
// returns the manifest.
inline nlohmann::json run_experiment(const RunConfig& cfg, const fs::path& dir) {
    const auto start = std::chrono::steady_clock::now();
    RunWriter w(dir);
    const std::string& e = cfg.experiment;
    if (e == "score-check") run_score_check(cfg, w);
    else if (e == "prior-table") run_prior_table(cfg, w);
    else if (e == "sim-scale") run_scalar_study(cfg, w, {Family::normal_scale, "sigma", {PriorChoice::score, PriorChoice::jeffreys}});
    else if (e == "sim-location") run_scalar_study(cfg, w, {Family::lognormal_location, "mu", {PriorChoice::score, PriorChoice::flat}});
    else if (e == "mixture-single") run_mixture_single(cfg, w);
    else if (e == "mixture-repeat") run_mixture_repeat(cfg, w);
    else if (e == "galaxy-dic") run_galaxy_dic(cfg, w);
    else if (e == "schools") run_schools(cfg, w);
    else throw ConfigError("unknown experiment '" + e + "'");

    {
        auto out = w.open("summary.txt");
        out << w.output().summary;
    }
    nlohmann::json outputs = nlohmann::json::object();
    for (const auto& f : w.output().files) outputs[f] = file_checksum(dir / f);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    nlohmann::json manifest = {{"experiment", e},
                               {"seed", cfg.seed()},
                               {"config", cfg.to_json()},
                               {"dataset", w.output().dataset},
                               {"outputs", outputs},
                               {"wall_seconds", wall}};
    std::ofstream(dir / "manifest.json", std::ios::trunc) << manifest.dump(2) << '\n';
    return manifest;
}

}  // namespace objprior::cli
