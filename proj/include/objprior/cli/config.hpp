#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>
#include <yaml-cpp/yaml.h>

#include "objprior/errors.hpp"

namespace objprior::cli {

enum class ValueType { integer, real, text, real_list, integer_list };

inline const char* type_name(ValueType t) {
    switch (t) {
        case ValueType::integer: return "integer";
        case ValueType::real: return "real";
        case ValueType::text: return "string";
        case ValueType::real_list: return "list of reals";
        case ValueType::integer_list: return "list of integers";
    }
    return "?";
}

using Value = std::variant<long long, double, std::string, std::vector<double>, std::vector<long long>>;

struct KeySpec {
    std::string name;
    ValueType type;
    Value fallback;
    std::string help;
    std::vector<std::string> choices = {};  // text keys only; empty means free-form
};

inline const std::vector<std::string>& experiment_names() {
    static const std::vector<std::string> names{"score-check",    "prior-table",    "sim-scale",
                                                "sim-location",   "mixture-single", "mixture-repeat",
                                                "galaxy-dic",     "schools"};
    return names;
}

#ifndef OBJPRIOR_DEFAULT_GALAXY
#define OBJPRIOR_DEFAULT_GALAXY "data/galaxies.txt"
#endif

// Keys accepted by an experiment, with their defaults.
inline std::vector<KeySpec> schema(const std::string& experiment) {
    using L = long long;
    const auto schedule = [](L n_iter, L burn, L thin) {
        return std::vector<KeySpec>{
            {"n_iter", ValueType::integer, n_iter, "MCMC iterations"},
            {"burn_in", ValueType::integer, burn, "burn-in iterations"},
            {"thin", ValueType::integer, thin, "thinning interval"},
            {"proposal_sd", ValueType::real, 0.5, "initial random-walk proposal sd"},
        };
    };
    std::vector<KeySpec> keys{{"seed", ValueType::integer, L{7}, "base random seed"}};
    const auto add = [&](std::vector<KeySpec> more) { keys.insert(keys.end(), more.begin(), more.end()); };

    if (experiment == "score-check") {
        add({{"a", ValueType::real, 1.0, "prior scale"},
             {"step", ValueType::real, 0.01, "grid step"},
             {"x_max", ValueType::real, 20.0, "right end of the ODE grid"}});
    } else if (experiment == "prior-table") {
        add({{"a", ValueType::real, 1.0, "prior scale"},
             {"x_min", ValueType::real, 0.01, "smallest grid point"},
             {"x_max", ValueType::real, 100.0, "largest grid point"},
             {"points", ValueType::integer, L{1000}, "number of geometric grid points"}});
    } else if (experiment == "sim-scale") {
        add({{"sigma", ValueType::real_list, std::vector<double>{0.25, 0.5, 1, 2, 5, 10, 20}, "true sds"},
             {"prior", ValueType::text, std::string("all"), "prior", {"all", "score", "jeffreys"}},
             {"a", ValueType::real, 1.0, "score prior scale"},
             {"M", ValueType::integer, L{250}, "replicates"},
             {"n", ValueType::integer, L{100}, "sample size"},
             {"threads", ValueType::integer, L{0}, "worker threads (0: all cores)"}});
        add(schedule(6000, 1000, 10));
    } else if (experiment == "sim-location") {
        add({{"mu", ValueType::real_list, std::vector<double>{0, 1, 5, 10, 50, 100}, "true locations"},
             {"prior", ValueType::text, std::string("all"), "prior", {"all", "score", "flat"}},
             {"a", ValueType::real, 1.0, "score prior scale"},
             {"M", ValueType::integer, L{250}, "replicates"},
             {"n", ValueType::integer, L{100}, "sample size"},
             {"threads", ValueType::integer, L{0}, "worker threads (0: all cores)"}});
        add(schedule(6000, 1000, 10));
    } else if (experiment == "mixture-single") {
        add({{"n", ValueType::integer, L{200}, "sample size"},
             {"a", ValueType::real, 1.0, "score prior scale"},
             {"ordering", ValueType::text, std::string("weight"), "label ordering", {"weight", "mean"}}});
        add(schedule(60000, 10000, 100));
    } else if (experiment == "mixture-repeat") {
        add({{"n", ValueType::integer_list, std::vector<L>{50, 100, 200}, "sample sizes"},
             {"k", ValueType::integer_list, std::vector<L>{3, 4, 5}, "component counts"},
             {"a", ValueType::real, 1.0, "score prior scale"},
             {"M", ValueType::integer, L{20}, "replicates per cell"},
             {"ordering", ValueType::text, std::string("mean"), "label ordering", {"weight", "mean"}},
             {"threads", ValueType::integer, L{0}, "worker threads (0: all cores)"}});
        add(schedule(60000, 10000, 100));
    } else if (experiment == "galaxy-dic") {
        add({{"galaxy", ValueType::text, std::string(OBJPRIOR_DEFAULT_GALAXY), "galaxy velocity file"},
             {"k", ValueType::integer_list, std::vector<L>{2, 3, 4, 5, 6, 7, 8}, "component counts"},
             {"a", ValueType::real, 1.0, "score prior scale"}});
        add(schedule(60000, 10000, 100));
    } else if (experiment == "schools") {
        add({{"prior", ValueType::text, std::string("all"), "variance prior", {"all", "score", "ig"}},
             {"a", ValueType::real, 1.0, "score prior scale"},
             {"ig_shape", ValueType::real, 1.0, "inverse-gamma shape"},
             {"ig_rate", ValueType::real, 1.0, "inverse-gamma rate"}});
        add(schedule(60000, 10000, 10));
    } else {
        std::string all;
        for (const auto& e : experiment_names()) all += (all.empty() ? "" : ", ") + e;
        throw ConfigError("unknown experiment '" + experiment + "' (expected one of: " + all + ")");
    }
    return keys;
}

namespace detail {

inline std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_list(const std::string& raw) {
    std::string s = trim(raw);
    if (s.size() >= 2 && s.front() == '[' && s.back() == ']') s = s.substr(1, s.size() - 2);
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

inline bool parse_integer(const std::string& s, long long& out) {
    std::size_t pos = 0;
    try {
        out = std::stoll(s, &pos);
    } catch (const std::exception&) {
        return false;
    }
    return pos == s.size();
}

inline bool parse_real(const std::string& s, double& out) {
    std::size_t pos = 0;
    try {
        out = std::stod(s, &pos);
    } catch (const std::exception&) {
        return false;
    }
    return pos == s.size();
}

}  // namespace detail

inline Value parse_value(const KeySpec& spec, const std::string& raw) {
    const auto fail = [&](const std::string& got) -> ConfigError {
        return ConfigError("key '" + spec.name + "': expected " + type_name(spec.type) + ", got '" + got + "'");
    };
    const std::string s = detail::trim(raw);
    switch (spec.type) {
        case ValueType::integer: {
            long long v = 0;
            if (!detail::parse_integer(s, v)) throw fail(s);
            return v;
        }
        case ValueType::real: {
            double v = 0;
            if (!detail::parse_real(s, v)) throw fail(s);
            return v;
        }
        case ValueType::text: {
            if (!spec.choices.empty() &&
                std::find(spec.choices.begin(), spec.choices.end(), s) == spec.choices.end()) {
                std::string all;
                for (const auto& c : spec.choices) all += (all.empty() ? "" : ", ") + c;
                throw ConfigError("key '" + spec.name + "': '" + s + "' is not one of " + all);
            }
            return s;
        }
        case ValueType::real_list: {
            std::vector<double> out;
            for (const auto& item : detail::split_list(s)) {
                double v = 0;
                if (!detail::parse_real(item, v)) throw fail(item);
                out.push_back(v);
            }
            if (out.empty()) throw fail(s);
            return out;
        }
        case ValueType::integer_list: {
            std::vector<long long> out;
            for (const auto& item : detail::split_list(s)) {
                long long v = 0;
                if (!detail::parse_integer(item, v)) throw fail(item);
                out.push_back(v);
            }
            if (out.empty()) throw fail(s);
            return out;
        }
    }
    throw fail(s);
}

// Raw key -> text pairs, before type checking.
using RawSettings = std::map<std::string, std::string>;

struct RunConfig {
    std::string experiment;
    std::map<std::string, Value> values;

    const Value& get(const std::string& key) const {
        const auto it = values.find(key);
        if (it == values.end()) throw ContractError("config has no key '" + key + "'");
        return it->second;
    }
    long long integer(const std::string& key) const { return std::get<long long>(get(key)); }
    double real(const std::string& key) const { return std::get<double>(get(key)); }
    const std::string& text(const std::string& key) const { return std::get<std::string>(get(key)); }
    const std::vector<double>& reals(const std::string& key) const { return std::get<std::vector<double>>(get(key)); }
    const std::vector<long long>& integers(const std::string& key) const {
        return std::get<std::vector<long long>>(get(key));
    }
    std::uint64_t seed() const { return static_cast<std::uint64_t>(integer("seed")); }

    nlohmann::json to_json() const {
        nlohmann::json j = nlohmann::json::object();
        j["experiment"] = experiment;
        for (const auto& [k, v] : values) {
            std::visit([&](const auto& x) { j[k] = x; }, v);
        }
        return j;
    }

    bool operator==(const RunConfig&) const = default;
};

// Defaults for the experiment, then file settings, then flag settings.
inline RunConfig resolve(const std::string& experiment, const RawSettings& file, const RawSettings& flags) {
    const auto keys = schema(experiment);
    std::vector<std::string> unknown;
    for (const RawSettings* src : {&file, &flags}) {
        for (const auto& [k, v] : *src) {
            if (k == "experiment") continue;
            const bool known = std::any_of(keys.begin(), keys.end(), [&](const KeySpec& s) { return s.name == k; });
            if (!known) unknown.push_back(k);
        }
    }
    if (!unknown.empty()) {
        std::string list;
        for (const auto& k : unknown) list += (list.empty() ? "" : ", ") + k;
        throw ConfigError("unknown config key(s) for " + experiment + ": " + list);
    }
    RunConfig cfg;
    cfg.experiment = experiment;
    for (const auto& spec : keys) {
        cfg.values[spec.name] = spec.fallback;
        for (const RawSettings* src : {&file, &flags}) {
            const auto it = src->find(spec.name);
            if (it != src->end()) cfg.values[spec.name] = parse_value(spec, it->second);
        }
    }
    if (cfg.integer("seed") < 0) throw ConfigError("key 'seed': must be non-negative");
    return cfg;
}

// Reads `key: value` pairs; sequences become comma lists. An empty file is valid.
inline RawSettings read_settings(const std::string& path) {
    YAML::Node root;
    try {
        root = YAML::LoadFile(path);
    } catch (const YAML::BadFile&) {
        throw ConfigError("cannot read config file '" + path + "'");
    } catch (const YAML::Exception& e) {
        throw ConfigError("config file '" + path + "': " + e.what());
    }
    RawSettings out;
    if (root.IsNull()) return out;
    if (!root.IsMap()) throw ConfigError("config file '" + path + "' must be a key: value mapping");
    for (const auto& kv : root) {
        const auto key = kv.first.as<std::string>();
        const auto& val = kv.second;
        if (val.IsScalar()) {
            out[key] = val.as<std::string>();
        } else if (val.IsSequence()) {
            std::string joined;
            for (const auto& item : val) {
                if (!item.IsScalar()) throw ConfigError("key '" + key + "': nested values are not supported");
                joined += (joined.empty() ? "" : ",") + item.as<std::string>();
            }
            out[key] = joined;
        } else {
            throw ConfigError("key '" + key + "': expected a scalar or a list");
        }
    }
    return out;
}

// Parse a config file for `experiment` (or the file's own `experiment` key when
// none is given); flag settings take precedence over the file.
inline RunConfig config_load(const std::string& path, std::string experiment = "", const RawSettings& flags = {}) {
    const RawSettings file = path.empty() ? RawSettings{} : read_settings(path);
    if (const auto it = file.find("experiment"); it != file.end()) {
        if (!experiment.empty() && experiment != it->second) {
            throw ConfigError("config file is for '" + it->second + "', not '" + experiment + "'");
        }
        experiment = it->second;
    }
    if (experiment.empty()) throw ConfigError("no experiment named in '" + path + "'");
    return resolve(experiment, file, flags);
}

// Rebuild a config from the `config` block of a run manifest.
inline RunConfig config_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("experiment")) throw ConfigError("manifest has no experiment");
    RawSettings raw;
    for (const auto& [k, v] : j.items()) {
        if (k == "experiment") continue;
        if (v.is_array()) {
            std::string joined;
            for (const auto& item : v) joined += (joined.empty() ? "" : ",") + item.dump();
            raw[k] = joined;
        } else if (v.is_string()) {
            raw[k] = v.get<std::string>();
        } else {
            raw[k] = v.dump();
        }
    }
    return resolve(j["experiment"].get<std::string>(), raw, {});
}

}  // namespace objprior::cli
