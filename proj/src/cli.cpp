#include "gwperc/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "gwperc/analytics.hpp"
#include "gwperc/errors.hpp"
#include "gwperc/montecarlo.hpp"
#include "gwperc/oracle.hpp"

namespace gwperc::cli {

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCompareFailed = 1;
constexpr int kExitInvalid = 2;

void set_if_present(const nlohmann::json& j, const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::remove_reference_t<decltype(field)>>();
}

}  // namespace

nlohmann::json to_json(const ExperimentConfig& c) {
    nlohmann::json j{{"dist", c.dist},
                     {"p", c.p},
                     {"q", c.q},
                     {"source_depth", c.source_depth},
                     {"vertex_cap", c.vertex_cap},
                     {"replicates", c.replicates},
                     {"seed", c.seed},
                     {"workers", c.workers},
                     {"output", c.output},
                     {"csv", c.csv},
                     {"n_min", c.n_min},
                     {"n_max", c.n_max},
                     {"profile_len", c.profile_len},
                     {"tree", c.tree},
                     {"tree_file", c.tree_file},
                     {"source", c.source},
                     {"input", c.input}};
    if (c.radius == "inf")
        j["radius"] = "inf";
    else
        j["radius"] = std::stoi(c.radius);
    return j;
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
    ExperimentConfig c;
    set_if_present(j, "dist", c.dist);
    set_if_present(j, "p", c.p);
    set_if_present(j, "q", c.q);
    if (j.contains("radius")) {
        const auto& radius = j.at("radius");
        c.radius = radius.is_string() ? radius.get<std::string>() : std::to_string(radius.get<int>());
    }
    set_if_present(j, "source_depth", c.source_depth);
    set_if_present(j, "vertex_cap", c.vertex_cap);
    set_if_present(j, "replicates", c.replicates);
    set_if_present(j, "seed", c.seed);
    set_if_present(j, "workers", c.workers);
    set_if_present(j, "output", c.output);
    set_if_present(j, "csv", c.csv);
    set_if_present(j, "n_min", c.n_min);
    set_if_present(j, "n_max", c.n_max);
    set_if_present(j, "profile_len", c.profile_len);
    set_if_present(j, "tree", c.tree);
    set_if_present(j, "tree_file", c.tree_file);
    set_if_present(j, "source", c.source);
    set_if_present(j, "input", c.input);
    return c;
}

Scenario make_scenario(const ExperimentConfig& config) {
    Scenario scenario;
    scenario.dist = parse_distribution(config.dist);
    scenario.p = config.p;
    scenario.q = config.q;
    if (config.radius == "inf") {
        scenario.radius.reset();
    } else {
        std::size_t pos = 0;
        int radius = 0;
        try {
            radius = std::stoi(config.radius, &pos);
        } catch (const std::exception&) {
            throw InvalidScenario("radius must be \"inf\" or a nonnegative integer");
        }
        if (pos != config.radius.size())
            throw InvalidScenario("radius must be \"inf\" or a nonnegative integer");
        scenario.radius = radius;
    }
    scenario.source_depth = config.source_depth;
    scenario.vertex_cap = config.vertex_cap;
    scenario.validate();
    return scenario;
}

namespace {

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidParameter("cannot open output file '" + path + "'");
    out << content;
    if (!out) throw InvalidParameter("failed writing output file '" + path + "'");
}

void emit(const std::string& content, const std::string& path, std::ostream& fallback) {
    if (path.empty())
        fallback << content;
    else
        write_file(path, content);
}

int cmd_exact(const ExperimentConfig& config, std::ostream& out) {
    const Scenario scenario = make_scenario(config);
    const ExactReport report = exact_report(scenario);
    emit(to_json(report).dump(2) + "\n", config.output, out);
    return kExitOk;
}

int cmd_simulate(const ExperimentConfig& config, std::ostream& out) {
    const Scenario scenario = make_scenario(config);
    ExperimentOptions options;
    options.profile_len = config.profile_len;
    options.diam_tail_n_max = config.n_max;
    const ExperimentResult result =
        run_experiment(scenario, config.replicates, config.seed, config.workers, options);

    nlohmann::json document{{"experiment", to_json(result)}};
    std::string csv;
    try {
        const ExactReport exact = exact_report(scenario);
        const ComparisonReport comparison = compare(exact, result);
        document["exact"] = to_json(exact);
        document["comparison"] = to_json(comparison);
        csv = write_comparison_csv(comparison);
    } catch (const SupercriticalInfinite&) {
        document["exact"] = nullptr;
        document["comparison"] = nullptr;
    } catch (const NearCritical&) {
        document["exact"] = nullptr;
        document["comparison"] = nullptr;
    }

    if (!config.csv.empty()) {
        if (csv.empty())
            throw InvalidScenario("no exact report available for this scenario; cannot write CSV table");
        write_file(config.csv, csv);
    }
    emit(document.dump(2) + "\n", config.output, out);
    return kExitOk;
}

int cmd_oracle(const ExperimentConfig& config, std::ostream& out) {
    ExplicitTree tree;
    if (!config.tree.empty() && !config.tree_file.empty())
        throw InvalidParameter("give either --tree or --tree-file, not both");
    if (!config.tree.empty()) {
        // Fixture grammar det:<k>:<R>.
        unsigned k = 0, radius = 0;
        char sep1 = 0, sep2 = 0;
        std::istringstream spec(config.tree);
        std::string head;
        std::getline(spec, head, ':');
        if (head != "det")
            throw InvalidParameter("unknown tree fixture '" + config.tree + "' (expected det:<k>:<R>)");
        char rest[64] = {0};
        spec.getline(rest, sizeof(rest));
        if (std::sscanf(rest, "%u%c%u%c", &k, &sep1, &radius, &sep2) != 3 || sep1 != ':')
            throw InvalidParameter("bad tree fixture '" + config.tree + "' (expected det:<k>:<R>)");
        tree = build_deterministic_tree(static_cast<int>(k), static_cast<int>(radius));
    } else if (!config.tree_file.empty()) {
        tree = load_edge_list_file(config.tree_file);
    } else {
        throw InvalidParameter("oracle needs --tree det:<k>:<R> or --tree-file <path>");
    }

    int source = config.source;
    if (source < 0) {
        // Leftmost vertex at the requested depth.
        for (int v = 0; v < tree.vertex_count(); ++v)
            if (tree.depth[v] == config.source_depth) {
                source = v;
                break;
            }
        if (source < 0)
            throw InvalidParameter("tree has no vertex at depth " + std::to_string(config.source_depth));
    }
    if (source >= tree.vertex_count()) throw InvalidParameter("source vertex out of range");

    const EnumerationResult result = enumerate_exact(tree, config.p, config.q, source);
    const nlohmann::json document{{"tree", {{"vertices", tree.vertex_count()},
                                            {"edges", tree.edge_count()},
                                            {"source", source},
                                            {"source_depth", tree.depth[source]}}},
                                  {"p", config.p},
                                  {"q", config.q},
                                  {"mean_size", result.mean_size},
                                  {"second_moment_size", result.second_moment_size},
                                  {"size_pmf", result.size_pmf},
                                  {"diameter_pmf", result.diameter_pmf},
                                  {"d_mean", result.d_mean},
                                  {"d_pmf", result.d_pmf},
                                  {"total_probability", result.total_probability}};
    emit(document.dump(2) + "\n", config.output, out);
    return kExitOk;
}

int cmd_decay(const ExperimentConfig& config, std::ostream& out) {
    const Scenario scenario = make_scenario(config);
    const int r = scenario.source_depth;
    const int n_min = std::max(config.n_min < 0 ? r + 1 : config.n_min, r + 1);
    const int n_max = config.n_max < 0 ? 10 : config.n_max;
    if (n_max < n_min) throw InvalidRange("empty n grid: n_max < n_min");

    // Bounds first: an unsupported regime must fail before the long run.
    const double first = first_moment(scenario);
    const double second = second_moment_infinite(scenario);
    (void)second;

    ExperimentOptions options;
    options.profile_len = config.profile_len;
    options.diam_tail_n_max = n_max;
    const ExperimentResult result =
        run_experiment(scenario, config.replicates, config.seed, config.workers, options);

    std::string csv = "n,p_diam_ge_2n,theorem_bound,chebyshev_bound\n";
    for (int n = n_min; n <= n_max; ++n) {
        csv += std::to_string(n);
        csv += ',';
        csv += format_double(result.diam_tail_frequency(n));
        csv += ',';
        csv += format_double(diameter_tail_bound(scenario, n));
        csv += ',';
        if (static_cast<double>(n) > first) csv += format_double(chebyshev_tail_bound(scenario, n));
        csv += '\n';
    }
    emit(csv, config.output, out);
    return kExitOk;
}

int cmd_compare(const ExperimentConfig& config, std::ostream& out) {
    if (config.input.empty()) throw InvalidParameter("compare needs --input <result.json>");
    std::ifstream in(config.input);
    if (!in) throw InvalidParameter("cannot open input file '" + config.input + "'");
    nlohmann::json document = nlohmann::json::parse(in, nullptr, true);
    const nlohmann::json& experiment =
        document.contains("experiment") ? document.at("experiment") : document;
    const ExperimentResult result = experiment_result_from_json(experiment);

    const ExactReport exact = exact_report(result.scenario);
    const ComparisonReport comparison = compare(exact, result);
    if (!config.csv.empty()) write_file(config.csv, write_comparison_csv(comparison));
    emit(to_json(comparison).dump(2) + "\n", config.output, out);
    return comparison.passed() ? kExitOk : kExitCompareFailed;
}

void add_scenario_options(CLI::App* cmd, ExperimentConfig& config) {
    cmd->add_option("--dist", config.dist,
                    "offspring distribution: det:<k>, geom:<a>, pois1:<lambda>, table:<path>");
    cmd->add_option("--p", config.p, "downward (parent -> offspring) opening probability");
    cmd->add_option("--q", config.q, "upward (offspring -> parent) opening probability");
    cmd->add_option("--radius", config.radius, "tree radius R, or 'inf'");
    cmd->add_option("--r", config.source_depth, "source depth r (distance from the root)");
    cmd->add_option("--vertex-cap", config.vertex_cap, "censoring cap on explored wet vertices");
}

void add_run_options(CLI::App* cmd, ExperimentConfig& config) {
    cmd->add_option("--replicates", config.replicates, "number of independent replicates");
    cmd->add_option("--seed", config.seed, "experiment seed (default: GWPERC_SEED env or 12345)");
    cmd->add_option("--workers", config.workers, "worker threads (never changes the results)");
    cmd->add_option("--profile-len", config.profile_len, "tracked front-profile length");
}

void add_output_options(CLI::App* cmd, ExperimentConfig& config) {
    cmd->add_option("--output,-o", config.output, "write the JSON/CSV report here instead of stdout");
    cmd->add_option("--csv", config.csv, "also write the comparison CSV table here");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    ExperimentConfig config;

    // Environment default, overridden by config file, overridden by flags.
    if (const char* env_seed = std::getenv("GWPERC_SEED")) {
        try {
            config.seed = std::stoull(env_seed);
        } catch (const std::exception&) {
            err << "error: GWPERC_SEED is not an unsigned integer\n";
            return kExitInvalid;
        }
    }

    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" || args[i] == "-c") {
            if (i + 1 >= args.size()) {
                err << "error: --config needs a file path\n";
                return kExitInvalid;
            }
            std::ifstream in(args[i + 1]);
            if (!in) {
                err << "error: cannot open config file '" << args[i + 1] << "'\n";
                return kExitInvalid;
            }
            try {
                nlohmann::json j = nlohmann::json::parse(in);
                const std::uint64_t env_seed = config.seed;
                config = config_from_json(j);
                if (!j.contains("seed")) config.seed = env_seed;
            } catch (const std::exception& e) {
                err << "error: bad config file: " << e.what() << "\n";
                return kExitInvalid;
            }
        }
    }

    CLI::App app{"Bidirectional bond percolation on Galton-Watson trees: simulation, "
                 "closed-form analytics, and exhaustive small-tree enumeration",
                 "gwperc"};
    app.require_subcommand(1);
    std::string config_path;
    app.add_option("--config,-c", config_path, "JSON config file; flags override its values");
    std::string save_config;
    app.add_option("--save-config", save_config, "write the effective config as JSON and continue");

    auto* exact_cmd = app.add_subcommand("exact", "evaluate every closed-form quantity");
    add_scenario_options(exact_cmd, config);
    add_output_options(exact_cmd, config);

    auto* simulate_cmd = app.add_subcommand("simulate", "run replicated cluster sampling");
    add_scenario_options(simulate_cmd, config);
    add_run_options(simulate_cmd, config);
    add_output_options(simulate_cmd, config);

    auto* oracle_cmd =
        app.add_subcommand("oracle", "exhaustive enumeration on a small explicit tree");
    oracle_cmd->add_option("--tree", config.tree, "fixture tree det:<k>:<R>");
    oracle_cmd->add_option("--tree-file", config.tree_file, "edge-list file: lines 'child parent'");
    oracle_cmd->add_option("--p", config.p, "downward opening probability");
    oracle_cmd->add_option("--q", config.q, "upward opening probability");
    oracle_cmd->add_option("--source-depth", config.source_depth,
                           "source = leftmost vertex at this depth");
    oracle_cmd->add_option("--source", config.source, "explicit source vertex index");
    add_output_options(oracle_cmd, config);

    auto* decay_cmd = app.add_subcommand(
        "decay", "tail study: empirical diameter tail vs. the exponential and Chebyshev bounds");
    add_scenario_options(decay_cmd, config);
    add_run_options(decay_cmd, config);
    add_output_options(decay_cmd, config);
    decay_cmd->add_option("--n-min", config.n_min, "first n of the tail grid (default r+1)");
    decay_cmd->add_option("--n-max", config.n_max, "last n of the tail grid (default 10)");

    auto* compare_cmd =
        app.add_subcommand("compare", "recompute exact values for a saved run and report z-scores");
    compare_cmd->add_option("--input", config.input, "ExperimentResult JSON produced by simulate");
    add_output_options(compare_cmd, config);

    std::vector<const char*> argv;
    argv.reserve(args.size() + 1);
    argv.push_back("gwperc");
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return kExitInvalid;
    }

    try {
        if (!save_config.empty()) write_file(save_config, to_json(config).dump(2) + "\n");
        if (exact_cmd->parsed()) return cmd_exact(config, out);
        if (simulate_cmd->parsed()) return cmd_simulate(config, out);
        if (oracle_cmd->parsed()) return cmd_oracle(config, out);
        if (decay_cmd->parsed()) return cmd_decay(config, out);
        if (compare_cmd->parsed()) return cmd_compare(config, out);
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kExitInvalid;
    } catch (const nlohmann::json::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitInvalid;
    }
    return kExitInvalid;
}

}  // namespace gwperc::cli
