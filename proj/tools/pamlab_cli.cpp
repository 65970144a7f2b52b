// Batch front-end: reads an experiment config (JSON), dispatches through the
// pamlab C API, writes results.csv / results.json / manifest.json.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "pamlab.h"

namespace {

int status_to_exit(pam_status st) {
    switch (st) {
        case PAM_OK:
            return 0;
        case PAM_ERR_CONFIG:
        case PAM_ERR_NULL:
            return 2;
        default:
            return 1;
    }
}

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot read config file: " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"pamlab — lattice Anderson model laboratory"};
    app.require_subcommand(1);

    std::string config_path, output_dir, param, values_csv;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int threads = -1;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("-c,--config", config_path, "experiment config (JSON file)")->required();
        cmd->add_option("-o,--output-dir", output_dir, "output directory (overrides config)");
        cmd->add_option("--seed", seed, "RNG seed (overrides config)")->each([&](const std::string&) {
            seed_set = true;
        });
        cmd->add_option("--threads", threads, "worker pool size (0 = auto)");
    };

    CLI::App* run = app.add_subcommand("run", "run one experiment");
    add_common(run);

    CLI::App* sweep = app.add_subcommand("sweep", "run an experiment across parameter values");
    add_common(sweep);
    sweep->add_option("-p,--param", param, "dotted config key to sweep, e.g. model.sigma")
        ->required();
    sweep->add_option("-v,--values", values_csv, "comma-separated values")->required();

    CLI::App* version = app.add_subcommand("version", "print the library version");

    CLI11_PARSE(app, argc, argv);

    if (version->parsed()) {
        std::cout << pam_version() << "\n";
        return 0;
    }

    nlohmann::json cfg;
    try {
        cfg = nlohmann::json::parse(read_file(config_path));
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    if (seed_set) cfg["seed"] = seed;
    if (threads >= 0) cfg["numerics"]["threads"] = threads;
    std::string dir = output_dir;
    if (dir.empty() && cfg.contains("output_dir")) dir = cfg["output_dir"].get<std::string>();
    if (dir.empty()) dir = "out";
    const std::string cfg_text = cfg.dump();

    pam_status st = PAM_OK;
    char* summary = nullptr;
    if (run->parsed()) {
        st = pam_run_experiment(cfg_text.c_str(), dir.c_str(), &summary);
    } else {
        nlohmann::json values = nlohmann::json::array();
        std::stringstream ss(values_csv);
        std::string item;
        while (std::getline(ss, item, ','))
            if (!item.empty()) values.push_back(item);
        const std::string values_text = values.dump();
        st = pam_run_sweep(cfg_text.c_str(), param.c_str(), values_text.c_str(), dir.c_str(),
                           &summary);
    }

    if (st != PAM_OK) {
        std::cerr << "error: " << pam_last_error() << "\n";
        return status_to_exit(st);
    }
    if (summary) {
        std::cout << summary << "\n";
        pam_string_free(summary);
    }
    std::cout << "wrote " << dir << "/\n";
    return 0;
}
