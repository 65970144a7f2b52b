#pragma once

#include <string>
#include <vector>

namespace pam {

struct RunOutput {
    int exit_code = 0;        // 0 ok, 1 numeric failure, 2 config error
    std::string message;      // failure diagnostic when exit_code != 0
    std::string summary;      // human-readable result line(s)
    std::vector<std::string> files;  // files written under output_dir
};

// Validates the config (unknown keys rejected), dispatches to the selected
// experiment, writes results.csv / results.json plus manifest.json under
// output_dir. Identical config and seed produce byte-identical results.csv.
RunOutput run_experiment(const std::string& config_json, const std::string& output_dir);

// Runs the experiment once per value of the dotted config key `parameter`
// (e.g. "model.sigma"), concatenating each run's results.csv into
// output_dir/combined.csv keyed by the swept value. Per-value failures are
// recorded as rows and the sweep continues.
RunOutput run_sweep(const std::string& config_json, const std::string& parameter,
                    const std::vector<std::string>& values, const std::string& output_dir);

}  // namespace pam
