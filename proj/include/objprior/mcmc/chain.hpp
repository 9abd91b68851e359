#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <iomanip>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "objprior/errors.hpp"

namespace objprior {

struct McmcConfig {
    std::size_t n_iter = 6000;
    std::size_t burn_in = 1000;
    std::size_t thin = 10;
    std::uint64_t seed = 1;
    double default_proposal_sd = 0.5;
    std::map<std::string, double> proposal_sd;  // per-block overrides
    // Robbins-Monro tuning of proposal scales during burn-in only.
    bool adapt = true;
    double target_acceptance = 0.35;

    void validate() const {
        if (!(burn_in < n_iter)) throw ConfigError("burn_in must be smaller than n_iter");
        if (thin < 1) throw ConfigError("thin must be at least 1");
        if (!(default_proposal_sd > 0.0)) throw ConfigError("proposal sd must be positive");
        for (const auto& [block, sd] : proposal_sd) {
            if (!(sd > 0.0)) throw ConfigError("proposal sd for block '" + block + "' must be positive");
        }
    }

    std::size_t kept() const noexcept { return (n_iter - burn_in) / thin; }

    // Iteration `it` (0-based) is retained when it falls on the thinning lattice after burn-in.
    bool keeps(std::size_t it) const noexcept {
        return it >= burn_in && (it - burn_in + 1) % thin == 0;
    }

    double proposal_for(const std::string& block) const {
        const auto it = proposal_sd.find(block);
        return it == proposal_sd.end() ? default_proposal_sd : it->second;
    }

    nlohmann::json to_json() const {
        return {{"n_iter", n_iter},   {"burn_in", burn_in},
                {"thin", thin},       {"seed", seed},
                {"default_proposal_sd", default_proposal_sd},
                {"proposal_sd", proposal_sd},
                {"adapt", adapt},     {"target_acceptance", target_acceptance}};
    }
};

// Retained draws, row-major (kept samples x parameters).
class Chain {
public:
    Chain() = default;
    Chain(std::vector<std::string> names, McmcConfig config)
        : names_(std::move(names)), config_(std::move(config)) {
        draws_.reserve(config_.kept() * names_.size());
    }

    const std::vector<std::string>& names() const noexcept { return names_; }
    const McmcConfig& config() const noexcept { return config_; }
    std::size_t rows() const noexcept { return names_.empty() ? 0 : draws_.size() / names_.size(); }
    std::size_t cols() const noexcept { return names_.size(); }
    bool empty() const noexcept { return draws_.empty(); }

    double at(std::size_t r, std::size_t c) const { return draws_.at(r * cols() + c); }
    double& at(std::size_t r, std::size_t c) { return draws_.at(r * cols() + c); }

    std::span<const double> row(std::size_t r) const {
        return std::span<const double>(draws_).subspan(r * cols(), cols());
    }
    std::span<double> row(std::size_t r) { return std::span<double>(draws_).subspan(r * cols(), cols()); }

    std::size_t index_of(const std::string& name) const {
        const auto it = std::find(names_.begin(), names_.end(), name);
        if (it == names_.end()) throw ContractError("chain has no parameter '" + name + "'");
        return static_cast<std::size_t>(it - names_.begin());
    }

    std::vector<double> column(std::size_t c) const {
        std::vector<double> out(rows());
        for (std::size_t r = 0; r < out.size(); ++r) out[r] = at(r, c);
        return out;
    }
    std::vector<double> column(const std::string& name) const { return column(index_of(name)); }

    std::vector<double> column_means() const {
        std::vector<double> m(cols(), 0.0);
        for (std::size_t r = 0; r < rows(); ++r) {
            for (std::size_t c = 0; c < cols(); ++c) m[c] += at(r, c);
        }
        for (double& v : m) v /= static_cast<double>(std::max<std::size_t>(rows(), 1));
        return m;
    }

    void append(std::span<const double> values) {
        if (values.size() != cols()) throw ContractError("draw width does not match chain");
        draws_.insert(draws_.end(), values.begin(), values.end());
    }

    std::map<std::string, double>& acceptance() noexcept { return acceptance_; }
    const std::map<std::string, double>& acceptance() const noexcept { return acceptance_; }

    // Header row of parameter names, then one row per kept draw.
    void write_csv(std::ostream& out) const {
        for (std::size_t c = 0; c < cols(); ++c) out << (c ? "," : "") << names_[c];
        out << '\n';
        out << std::setprecision(12);
        for (std::size_t r = 0; r < rows(); ++r) {
            for (std::size_t c = 0; c < cols(); ++c) out << (c ? "," : "") << at(r, c);
            out << '\n';
        }
    }

    // Blocks whose retained-phase acceptance rate falls outside [0.1, 0.6].
    std::vector<std::string> acceptance_excursions() const {
        std::vector<std::string> out;
        for (const auto& [block, rate] : acceptance_) {
            if (rate < 0.1 || rate > 0.6) out.push_back(block);
        }
        return out;
    }

    // Sidecar: config echo, acceptance rates and shape.
    nlohmann::json sidecar() const {
        return {{"config", config_.to_json()},
                {"parameters", names_},
                {"kept_draws", rows()},
                {"acceptance", acceptance_},
                {"acceptance_outside_0.1_0.6", acceptance_excursions()}};
    }

private:
    std::vector<std::string> names_;
    std::vector<double> draws_;
    std::map<std::string, double> acceptance_;
    McmcConfig config_;
};

// Random-walk proposal scale for one block, tuned during burn-in.
class ProposalScale {
public:
    ProposalScale(double sd, const McmcConfig& cfg) : log_sd_(std::log(sd)), cfg_(&cfg) {}

    double sd() const noexcept { return std::exp(log_sd_); }

    void record(bool accepted, std::size_t it) {
        if (it < cfg_->burn_in) {
            if (cfg_->adapt) {
                const double gain = 1.0 / std::pow(static_cast<double>(it) + 10.0, 0.6);
                log_sd_ += gain * ((accepted ? 1.0 : 0.0) - cfg_->target_acceptance);
            }
        } else {
            ++proposed_;
            if (accepted) ++accepted_;
        }
    }

    // Acceptance over the retained phase.
    double acceptance_rate() const noexcept {
        return proposed_ == 0 ? 0.0 : static_cast<double>(accepted_) / static_cast<double>(proposed_);
    }

private:
    double log_sd_;
    const McmcConfig* cfg_;
    std::size_t proposed_ = 0;
    std::size_t accepted_ = 0;
};

}  // namespace objprior
