#pragma once

#include <cmath>
#include <functional>
#include <string>

#include "objprior/errors.hpp"
#include "objprior/mcmc/chain.hpp"
#include "objprior/random.hpp"

namespace objprior {

enum class Support { real, positive };

// Gaussian random-walk Metropolis for one scalar. Positive parameters are moved
// on log scale, with the Jacobian log(theta) added to the target.
inline Chain rw_metropolis(const std::function<double(double)>& log_post, double init,
                           const McmcConfig& cfg, Support support = Support::real,
                           const std::string& name = "theta") {
    cfg.validate();
    if (support == Support::positive && !(init > 0.0)) {
        throw InitializationError("positive parameter initialised at " + std::to_string(init));
    }
    const auto to_param = [support](double z) { return support == Support::positive ? std::exp(z) : z; };
    const auto target = [&](double z) {
        const double theta = to_param(z);
        if (support == Support::positive && !(theta > 0.0)) return -HUGE_VAL;
        const double lp = log_post(theta);
        return support == Support::positive ? lp + z : lp;
    };

    double z = support == Support::positive ? std::log(init) : init;
    double current = target(z);
    if (!std::isfinite(current)) {
        throw InitializationError("log posterior is not finite at the initial value " + std::to_string(init));
    }

    Rng rng(cfg.seed);
    ProposalScale scale(cfg.proposal_for(name), cfg);
    Chain chain({name}, cfg);
    for (std::size_t it = 0; it < cfg.n_iter; ++it) {
        const double z_new = z + scale.sd() * std_normal(rng);
        const double proposed = target(z_new);
        const bool accept = std::isfinite(proposed) && std::log(uniform_open(rng)) < proposed - current;
        if (accept) {
            z = z_new;
            current = proposed;
        }
        scale.record(accept, it);
        if (cfg.keeps(it)) {
            const double theta = to_param(z);
            chain.append({&theta, 1});
        }
    }
    chain.acceptance()[name] = scale.acceptance_rate();
    return chain;
}

}  // namespace objprior
