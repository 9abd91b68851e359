#pragma once

#include <cmath>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "objprior/errors.hpp"
#include "objprior/mcmc/chain.hpp"
#include "objprior/models.hpp"
#include "objprior/priors.hpp"
#include "objprior/random.hpp"

namespace objprior {

// Prior on the between-group variance: inverse gamma (conjugate) or the score prior.
using VariancePrior = std::variant<ComparatorPrior, ScorePriorPositive>;

inline std::vector<std::string> hierarchical_parameter_names(std::size_t groups) {
    std::vector<std::string> names{"mu"};
    for (std::size_t j = 0; j < groups; ++j) names.push_back("alpha" + std::to_string(j + 1));
    names.push_back("sigma_alpha2");
    return names;
}

struct GaussianConditional {
    double mean = 0.0;
    double var = 0.0;
};

// mu | alpha, y under a flat prior on mu.
inline GaussianConditional mu_conditional(const EightSchoolsData& data, std::span<const double> alpha) {
    double prec = 0.0, weighted = 0.0;
    for (std::size_t j = 0; j < data.size(); ++j) {
        const double w = 1.0 / (data.s[j] * data.s[j]);
        prec += w;
        weighted += w * (data.y[j] - alpha[j]);
    }
    return {weighted / prec, 1.0 / prec};
}

// alpha_j | mu, sigma_alpha2, y_j.
inline GaussianConditional alpha_conditional(const EightSchoolsData& data, std::size_t j, double mu,
                                             double sigma_alpha2) {
    const double w = 1.0 / (data.s[j] * data.s[j]);
    const double p = w + 1.0 / sigma_alpha2;
    return {w * (data.y[j] - mu) / p, 1.0 / p};
}

inline double draw(Rng& rng, const GaussianConditional& c) { return c.mean + std::sqrt(c.var) * std_normal(rng); }

// Blocked Gibbs for y_j ~ N(mu + alpha_j, s_j^2), alpha_j ~ N(0, sigma_alpha2),
// flat prior on mu. mu and each alpha_j come from their Gaussian full
// conditionals; sigma_alpha2 from its inverse-gamma full conditional under the
// conjugate prior, otherwise by random-walk Metropolis on log sigma_alpha2.
inline Chain hierarchical_sampler(const EightSchoolsData& data, const VariancePrior& prior,
                                  const McmcConfig& cfg) {
    cfg.validate();
    const std::size_t J = data.size();
    if (J == 0 || data.s.size() != J) throw ContractError("hierarchical data needs matching y and s");
    if (const auto* c = std::get_if<ComparatorPrior>(&prior)) {
        if (c->kind() != ComparatorPrior::Kind::inverse_gamma) {
            throw ContractError("variance prior must be inverse gamma or the score prior");
        }
    }

    HierarchicalState st;
    st.alpha.assign(J, 0.0);
    double ybar = 0.0;
    for (double y : data.y) ybar += y;
    ybar /= static_cast<double>(J);
    double vy = 0.0;
    for (double y : data.y) vy += (y - ybar) * (y - ybar);
    st.mu = ybar;
    st.sigma_alpha2 = J > 1 && vy > 0.0 ? vy / static_cast<double>(J - 1) : 1.0;

    Rng rng(cfg.seed);
    ProposalScale step(cfg.proposal_for("sigma_alpha2"), cfg);
    Chain chain(hierarchical_parameter_names(J), cfg);
    std::vector<double> row(J + 2);

    const auto alpha_loglik = [&](double v) {
        double ss = 0.0;
        for (double a : st.alpha) ss += a * a;
        return -0.5 * static_cast<double>(J) * std::log(v) - 0.5 * ss / v;
    };

    for (std::size_t it = 0; it < cfg.n_iter; ++it) {
        st.mu = draw(rng, mu_conditional(data, st.alpha));
        for (std::size_t j = 0; j < J; ++j) st.alpha[j] = draw(rng, alpha_conditional(data, j, st.mu, st.sigma_alpha2));

        if (const auto* ig = std::get_if<ComparatorPrior>(&prior)) {
            double ss = 0.0;
            for (double a : st.alpha) ss += a * a;
            const double shape = ig->shape() + 0.5 * static_cast<double>(J);
            const double rate = ig->rate() + 0.5 * ss;
            st.sigma_alpha2 = 1.0 / gamma_draw(rng, shape, rate);
        } else {
            const auto& score = std::get<ScorePriorPositive>(prior);
            const double z = std::log(st.sigma_alpha2);
            const double z_new = z + step.sd() * std_normal(rng);
            const double v_new = std::exp(z_new);
            bool accept = false;
            if (v_new > 0.0 && std::isfinite(v_new)) {
                const double log_ratio = alpha_loglik(v_new) + score.log_pdf(v_new) + z_new -
                                         alpha_loglik(st.sigma_alpha2) - score.log_pdf(st.sigma_alpha2) - z;
                accept = std::log(uniform_open(rng)) < log_ratio;
                if (accept) st.sigma_alpha2 = v_new;
            }
            step.record(accept, it);
        }

        if (cfg.keeps(it)) {
            row[0] = st.mu;
            for (std::size_t j = 0; j < J; ++j) row[j + 1] = st.alpha[j];
            row[J + 1] = st.sigma_alpha2;
            chain.append(row);
        }
    }
    if (std::holds_alternative<ScorePriorPositive>(prior)) {
        chain.acceptance()["sigma_alpha2"] = step.acceptance_rate();
    }
    return chain;
}

}  // namespace objprior
