#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "gwperc/simulator.hpp"

namespace gwperc::cli {

/// Everything a command needs, loadable from a JSON config file; command-line
/// flags override file values.
struct ExperimentConfig {
    std::string dist = "det:2";
    double p = 0.3;
    double q = 0.5;
    std::string radius = "inf";  // "inf" or a nonnegative integer
    int source_depth = 0;
    std::uint64_t vertex_cap = 1'000'000;

    std::uint64_t replicates = 100'000;
    std::uint64_t seed = 12345;
    int workers = 1;

    std::string output;  // JSON report path; empty = stdout
    std::string csv;     // CSV table path; empty = none

    int n_min = -1;        // tail-study grid (decay command)
    int n_max = -1;
    int profile_len = -1;

    std::string tree;       // oracle fixture, e.g. "det:2:2"
    std::string tree_file;  // or an edge-list file
    int source = -1;        // explicit source vertex; -1 = use source_depth

    std::string input;  // compare command: ExperimentResult JSON to load
};

nlohmann::json to_json(const ExperimentConfig& config);
ExperimentConfig config_from_json(const nlohmann::json& j);

/// Builds and validates the Scenario described by a config; throws on bad
/// descriptors or ranges.
Scenario make_scenario(const ExperimentConfig& config);

/// Entry point behind main(). `args` excludes the program name. Returns the
/// process exit code: 0 success, 1 statistical failure in compare mode,
/// 2 invalid input or unsupported regime.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gwperc::cli
