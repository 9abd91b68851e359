// objprior: run the experiments and write CSVs plus a manifest per run directory.
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "objprior/cli/config.hpp"
#include "objprior/cli/experiments.hpp"

namespace fs = std::filesystem;
using namespace objprior;
using namespace objprior::cli;

namespace {

constexpr int kExitConfig = 1;
constexpr int kExitMissingInput = 2;
constexpr int kExitRuntime = 3;

fs::path run_directory(const std::string& flag, const std::string& experiment) {
    if (!flag.empty()) return flag;
    const char* env = std::getenv("OBJPRIOR_OUT");
    return fs::path(env && *env ? env : "runs") / experiment;
}

struct Subcommand {
    CLI::App* app = nullptr;
    std::string config_path;
    std::string out;
    std::map<std::string, std::string> flags;
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Score-based objective prior experiments"};
    app.require_subcommand(1);

    std::map<std::string, Subcommand> subs;
    for (const auto& name : experiment_names()) {
        auto& sub = subs[name];
        sub.app = app.add_subcommand(name, "run the " + name + " experiment");
        sub.app->add_option("--config", sub.config_path, "key: value config file");
        sub.app->add_option("--out", sub.out, "run directory (default: $OBJPRIOR_OUT/<experiment>, else runs/<experiment>)");
        for (const auto& key : schema(name)) {
            sub.app->add_option_function<std::string>(
                "--" + key.name, [&sub, k = key.name](const std::string& v) { sub.flags[k] = v; },
                key.help + " [" + type_name(key.type) + "]");
        }
    }

    std::string manifest_path, rerun_out;
    auto* rerun = app.add_subcommand("rerun", "repeat a run from its manifest.json");
    rerun->add_option("manifest", manifest_path, "manifest.json of an earlier run")->required();
    rerun->add_option("--out", rerun_out, "run directory for the repeat")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        RunConfig cfg;
        fs::path dir;
        if (rerun->parsed()) {
            std::ifstream in(manifest_path);
            if (!in) throw MissingInputError("cannot open manifest '" + manifest_path + "'");
            nlohmann::json manifest;
            try {
                manifest = nlohmann::json::parse(in);
            } catch (const nlohmann::json::exception& e) {
                throw ConfigError(std::string("manifest is not valid JSON: ") + e.what());
            }
            cfg = config_from_json(manifest.at("config"));
            dir = rerun_out;
            const auto manifest_ds = manifest.value("dataset", nlohmann::json::object());
            const auto result = run_experiment(cfg, dir);
            if (manifest_ds.contains("fnv1a64") && result["dataset"].value("fnv1a64", "") != manifest_ds["fnv1a64"]) {
                std::cerr << "warning: dataset checksum differs from the manifest\n";
            }
            std::ifstream summary(dir / "summary.txt");
            std::cout << summary.rdbuf();
        } else {
            for (auto& [name, sub] : subs) {
                if (!sub.app->parsed()) continue;
                cfg = config_load(sub.config_path, name, sub.flags);
                dir = run_directory(sub.out, name);
            }
            run_experiment(cfg, dir);
            std::ifstream summary(dir / "summary.txt");
            std::cout << summary.rdbuf();
        }
        std::cout << "outputs in " << dir.string() << '\n';
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const MissingInputError& e) {
        std::cerr << "missing input: " << e.what() << '\n';
        return kExitMissingInput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
}
