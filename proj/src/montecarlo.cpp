#include "gwperc/montecarlo.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <mutex>
#include <thread>

#include "gwperc/errors.hpp"
#include "gwperc/rng.hpp"

namespace gwperc {

void MomentEstimate::add(double x) {
    ++count_;
    const double delta = x - mean_;
    mean_ += delta / static_cast<double>(count_);
    m2_ += delta * (x - mean_);
}

void MomentEstimate::merge(const MomentEstimate& other) {
    if (other.count_ == 0) return;
    if (count_ == 0) {
        *this = other;
        return;
    }
    const double na = static_cast<double>(count_);
    const double nb = static_cast<double>(other.count_);
    const double n = na + nb;
    const double delta = other.mean_ - mean_;
    mean_ += delta * nb / n;
    m2_ += other.m2_ + delta * delta * na * nb / n;
    count_ += other.count_;
}

double MomentEstimate::variance() const {
    if (count_ < 2) return 0.0;
    return m2_ / static_cast<double>(count_ - 1);
}

double MomentEstimate::std_error() const {
    if (count_ == 0) return 0.0;
    return std::sqrt(variance() / static_cast<double>(count_));
}

double MomentEstimate::ci_halfwidth() const { return kZ99 * std_error(); }

MomentEstimate MomentEstimate::restore(std::uint64_t count, double mean, double m2) {
    MomentEstimate est;
    est.count_ = count;
    est.mean_ = mean;
    est.m2_ = m2;
    return est;
}

MomentEstimate merge(const MomentEstimate& a, const MomentEstimate& b) {
    MomentEstimate out = a;
    out.merge(b);
    return out;
}

double ExperimentResult::size_tail_frequency(std::uint64_t n) const {
    if (kept() == 0) return 0.0;
    std::uint64_t count = 0;
    for (std::size_t s = n + 1; s < size_counts.size(); ++s) count += size_counts[s];
    return static_cast<double>(count) / static_cast<double>(kept());
}

double ExperimentResult::diam_tail_frequency(int n) const {
    if (kept() == 0) return 0.0;
    std::uint64_t count = 0;
    for (std::size_t d = static_cast<std::size_t>(std::max(0, 2 * n)); d < diam_counts.size(); ++d)
        count += diam_counts[d];
    return static_cast<double>(count) / static_cast<double>(kept());
}

namespace {

// (estimate, standard error) of E(f(D)) from the reach histogram.
std::pair<double, double> histogram_moment(const std::vector<std::uint64_t>& counts,
                                           std::uint64_t n, double (*f)(int)) {
    if (n == 0) return {0.0, 0.0};
    double mean = 0.0;
    double mean_sq = 0.0;
    for (std::size_t k = 0; k < counts.size(); ++k) {
        const double v = f(static_cast<int>(k));
        const double w = static_cast<double>(counts[k]) / static_cast<double>(n);
        mean += v * w;
        mean_sq += v * v * w;
    }
    if (n < 2) return {mean, 0.0};
    const double nd = static_cast<double>(n);
    const double sample_var = std::max(0.0, (mean_sq - mean * mean) * nd / (nd - 1.0));
    return {mean, std::sqrt(sample_var / nd)};
}

}  // namespace

std::pair<double, double> ExperimentResult::d_mean_estimate() const {
    return histogram_moment(d_counts, kept(), [](int k) { return static_cast<double>(k); });
}

std::pair<double, double> ExperimentResult::d_factorial2_estimate() const {
    return histogram_moment(d_counts, kept(),
                            [](int k) { return static_cast<double>(k) * (k - 1.0); });
}

namespace {

constexpr std::uint64_t kBlockSize = 8192;

struct BlockAccumulator {
    MomentEstimate s, s2;
    std::vector<MomentEstimate> profile;
    std::vector<std::uint64_t> d_counts;
    std::vector<std::uint64_t> size_counts;
    std::vector<std::uint64_t> diam_counts;
    std::uint64_t censored = 0;
};

void bump(std::vector<std::uint64_t>& counts, std::uint64_t index) {
    if (index >= counts.size()) counts.resize(index + 1, 0);
    counts[index] += 1;
}

void accumulate_counts(std::vector<std::uint64_t>& into, const std::vector<std::uint64_t>& from) {
    if (from.size() > into.size()) into.resize(from.size(), 0);
    for (std::size_t i = 0; i < from.size(); ++i) into[i] += from[i];
}

void run_block(const Scenario& scenario, std::uint64_t seed, std::uint64_t begin, std::uint64_t end,
               int profile_len, BlockAccumulator& acc) {
    acc.profile.assign(profile_len, MomentEstimate{});
    acc.d_counts.assign(static_cast<std::size_t>(scenario.source_depth) + 1, 0);
    for (std::uint64_t i = begin; i < end; ++i) {
        RngStream stream(derive_stream_seed(seed, i));
        const ClusterObservation obs = sample_cluster(scenario, stream);
        if (obs.censored) {
            acc.censored += 1;
            continue;
        }
        const double size = static_cast<double>(obs.size);
        acc.s.add(size);
        acc.s2.add(size * size);
        acc.d_counts[obs.upward_reach] += 1;
        bump(acc.size_counts, obs.size);
        bump(acc.diam_counts, static_cast<std::uint64_t>(obs.diameter));
        for (int n = 0; n < profile_len; ++n) {
            const double x = static_cast<std::size_t>(n) < obs.profile.size()
                                 ? static_cast<double>(obs.profile[n])
                                 : 0.0;
            acc.profile[n].add(x);
        }
    }
}

}  // namespace

ExperimentResult run_experiment(const Scenario& scenario, std::uint64_t replicates,
                                std::uint64_t seed, int workers, const ExperimentOptions& options) {
    scenario.validate();
    if (replicates == 0) throw InvalidScenario("replicate count must be >= 1");
    if (workers < 1) throw InvalidScenario("worker count must be >= 1");

    const int profile_len =
        options.profile_len >= 0 ? options.profile_len : scenario.source_depth + 9;
    const int diam_tail_n_max = options.diam_tail_n_max >= 0 ? options.diam_tail_n_max : 12;

    const std::uint64_t blocks = (replicates + kBlockSize - 1) / kBlockSize;
    std::vector<BlockAccumulator> accumulators(blocks);

    auto process = [&](std::uint64_t b) {
        const std::uint64_t begin = b * kBlockSize;
        const std::uint64_t end = std::min(replicates, begin + kBlockSize);
        run_block(scenario, seed, begin, end, profile_len, accumulators[b]);
    };

    const int active = static_cast<int>(std::min<std::uint64_t>(workers, blocks));
    if (active <= 1) {
        for (std::uint64_t b = 0; b < blocks; ++b) process(b);
    } else {
        std::atomic<std::uint64_t> next{0};
        std::exception_ptr failure;
        std::mutex failure_mutex;
        std::vector<std::thread> pool;
        pool.reserve(active);
        for (int w = 0; w < active; ++w) {
            pool.emplace_back([&] {
                try {
                    for (std::uint64_t b = next.fetch_add(1); b < blocks; b = next.fetch_add(1))
                        process(b);
                } catch (...) {
                    const std::lock_guard<std::mutex> lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            });
        }
        for (auto& t : pool) t.join();
        if (failure) std::rethrow_exception(failure);
    }

    // Deterministic merge in block-index order: the result is a function of
    // (scenario, replicates, seed) only, independent of the worker count.
    ExperimentResult result;
    result.scenario = scenario;
    result.replicates = replicates;
    result.seed = seed;
    result.mix_function_id = kMixFunctionId;
    result.d_counts.assign(static_cast<std::size_t>(scenario.source_depth) + 1, 0);
    result.profile_means.assign(profile_len, MomentEstimate{});
    for (const auto& acc : accumulators) {
        result.censored += acc.censored;
        result.s_mean.merge(acc.s);
        result.s2_mean.merge(acc.s2);
        accumulate_counts(result.d_counts, acc.d_counts);
        accumulate_counts(result.size_counts, acc.size_counts);
        accumulate_counts(result.diam_counts, acc.diam_counts);
        for (int n = 0; n < profile_len; ++n) result.profile_means[n].merge(acc.profile[n]);
    }

    result.censor_rate = static_cast<double>(result.censored) / static_cast<double>(replicates);
    result.d_pmf.assign(result.d_counts.size(), 0.0);
    if (result.kept() > 0)
        for (std::size_t k = 0; k < result.d_counts.size(); ++k)
            result.d_pmf[k] =
                static_cast<double>(result.d_counts[k]) / static_cast<double>(result.kept());
    for (int n = 1; n <= diam_tail_n_max; ++n) result.diam_tail[n] = result.diam_tail_frequency(n);
    return result;
}

namespace {

double z_score(double estimate, double std_error, double exact) {
    const double diff = estimate - exact;
    if (std_error > 0.0) return diff / std_error;
    if (diff == 0.0) return 0.0;
    return diff > 0.0 ? std::numeric_limits<double>::infinity()
                      : -std::numeric_limits<double>::infinity();
}

}  // namespace

double ComparisonReport::max_abs_z() const {
    double worst = 0.0;
    for (const auto& row : quantities) worst = std::max(worst, std::abs(row.z));
    return worst;
}

bool ComparisonReport::passed(double z_limit) const {
    if (max_abs_z() > z_limit) return false;
    if (theorem_diam_bound_ok && !*theorem_diam_bound_ok) return false;
    if (chebyshev_bound_ok && !*chebyshev_bound_ok) return false;
    return true;
}

ComparisonReport compare(const ExactReport& exact, const ExperimentResult& result) {
    if (!(exact.scenario == result.scenario))
        throw ScenarioMismatch("exact report and experiment result describe different scenarios");

    ComparisonReport report;
    auto add_row = [&](std::string name, double estimate, double std_error, double target) {
        report.quantities.push_back(
            {std::move(name), estimate, std_error, target, z_score(estimate, std_error, target)});
    };

    add_row("E_S", result.s_mean.mean(), result.s_mean.std_error(), exact.first_moment);
    if (exact.second_moment)
        add_row("E_S2", result.s2_mean.mean(), result.s2_mean.std_error(), *exact.second_moment);
    const auto [d_mean, d_mean_se] = result.d_mean_estimate();
    add_row("E_D", d_mean, d_mean_se, exact.d_mean);
    const auto [d_f2, d_f2_se] = result.d_factorial2_estimate();
    add_row("E_D_fact2", d_f2, d_f2_se, exact.d_factorial2);

    if (!result.profile_means.empty()) {
        const auto expected = expected_front_profile(
            result.scenario, static_cast<int>(result.profile_means.size()) - 1);
        for (std::size_t n = 0; n < result.profile_means.size(); ++n)
            add_row("X_" + std::to_string(n), result.profile_means[n].mean(),
                    result.profile_means[n].std_error(), expected[n]);
    }

    // Diameter tail domination, subcritical phase only.
    if (result.scenario.nu_plus() < 1.0 && !result.diam_tail.empty()) {
        bool any = false;
        bool ok = true;
        for (const auto& [n, freq] : result.diam_tail) {
            if (n <= result.scenario.source_depth) continue;
            any = true;
            const double bound = diameter_tail_bound(result.scenario, n);
            const double se = result.kept() > 0
                                  ? std::sqrt(freq * (1.0 - freq) / static_cast<double>(result.kept()))
                                  : 0.0;
            if (freq > bound + 3.0 * se) ok = false;
        }
        if (any) report.theorem_diam_bound_ok = ok;
    }

    // Chebyshev domination of the empirical size tail.
    if (exact.second_moment) {
        bool ok = true;
        const auto start = static_cast<std::int64_t>(std::ceil(exact.first_moment)) + 1;
        for (std::int64_t n = start; n <= 50; ++n) {
            const double bound = chebyshev_tail_bound(result.scenario, n);
            if (result.size_tail_frequency(static_cast<std::uint64_t>(n)) > bound) ok = false;
        }
        report.chebyshev_bound_ok = ok;
    }

    // Chi-square of the reach histogram against its exact pmf.
    const auto pmf = upward_reach_pmf(result.scenario.q, result.scenario.source_depth);
    const double kept = static_cast<double>(result.kept());
    double chi2 = 0.0;
    for (std::size_t k = 0; k < pmf.size(); ++k) {
        const double expected_count = kept * pmf[k];
        if (expected_count > 0.0) {
            const double diff = static_cast<double>(result.d_counts[k]) - expected_count;
            chi2 += diff * diff / expected_count;
        }
    }
    report.d_chi2 = chi2;
    report.d_chi2_dof = result.scenario.source_depth;
    return report;
}

// --- serialization ---

std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

nlohmann::json scenario_to_json(const Scenario& scenario) {
    nlohmann::json j{{"dist", scenario.dist.descriptor()},
                     {"p", scenario.p},
                     {"q", scenario.q},
                     {"source_depth", scenario.source_depth},
                     {"vertex_cap", scenario.vertex_cap}};
    if (scenario.radius)
        j["radius"] = *scenario.radius;
    else
        j["radius"] = "inf";
    if (scenario.dist.kind() == OffspringDistribution::Kind::Table) {
        nlohmann::json atoms = nlohmann::json::array();
        for (const auto& [k, w] : scenario.dist.table_atoms()) atoms.push_back({k, w});
        j["pmf"] = atoms;
    }
    return j;
}

Scenario scenario_from_json(const nlohmann::json& j) {
    Scenario scenario;
    const std::string descriptor = j.at("dist").get<std::string>();
    if (j.contains("pmf")) {
        std::vector<std::pair<int, double>> atoms;
        for (const auto& atom : j.at("pmf"))
            atoms.emplace_back(atom.at(0).get<int>(), atom.at(1).get<double>());
        scenario.dist = OffspringDistribution::table(std::move(atoms));
    } else {
        scenario.dist = parse_distribution(descriptor);
    }
    scenario.p = j.at("p").get<double>();
    scenario.q = j.at("q").get<double>();
    const auto& radius = j.at("radius");
    if (radius.is_string()) {
        if (radius.get<std::string>() != "inf")
            throw InvalidScenario("radius must be \"inf\" or a nonnegative integer");
        scenario.radius.reset();
    } else {
        scenario.radius = radius.get<int>();
    }
    scenario.source_depth = j.at("source_depth").get<int>();
    scenario.vertex_cap = j.at("vertex_cap").get<std::uint64_t>();
    return scenario;
}

nlohmann::json to_json(const MomentEstimate& est) {
    return {{"count", est.count()},
            {"mean", est.mean()},
            {"m2", est.m2()},
            {"std_error", est.std_error()},
            {"ci_halfwidth", est.ci_halfwidth()}};
}

namespace {

MomentEstimate moment_estimate_from_json(const nlohmann::json& j) {
    return MomentEstimate::restore(j.at("count").get<std::uint64_t>(), j.at("mean").get<double>(),
                                   j.at("m2").get<double>());
}

}  // namespace

nlohmann::json to_json(const ExperimentResult& result) {
    nlohmann::json profile = nlohmann::json::array();
    for (const auto& est : result.profile_means) profile.push_back(to_json(est));
    nlohmann::json tail = nlohmann::json::array();
    for (const auto& [n, freq] : result.diam_tail) tail.push_back({n, freq});
    return {{"scenario", scenario_to_json(result.scenario)},
            {"replicates", result.replicates},
            {"censored", result.censored},
            {"censor_rate", result.censor_rate},
            {"seed", result.seed},
            {"mix_function_id", result.mix_function_id},
            {"s_mean", to_json(result.s_mean)},
            {"s2_mean", to_json(result.s2_mean)},
            {"d_counts", result.d_counts},
            {"d_pmf", result.d_pmf},
            {"size_counts", result.size_counts},
            {"diam_counts", result.diam_counts},
            {"diam_tail", tail},
            {"profile_means", profile}};
}

ExperimentResult experiment_result_from_json(const nlohmann::json& j) {
    ExperimentResult result;
    result.scenario = scenario_from_json(j.at("scenario"));
    result.replicates = j.at("replicates").get<std::uint64_t>();
    result.censored = j.at("censored").get<std::uint64_t>();
    result.censor_rate = j.at("censor_rate").get<double>();
    result.seed = j.at("seed").get<std::uint64_t>();
    result.mix_function_id = j.at("mix_function_id").get<std::string>();
    result.s_mean = moment_estimate_from_json(j.at("s_mean"));
    result.s2_mean = moment_estimate_from_json(j.at("s2_mean"));
    result.d_counts = j.at("d_counts").get<std::vector<std::uint64_t>>();
    result.d_pmf = j.at("d_pmf").get<std::vector<double>>();
    result.size_counts = j.at("size_counts").get<std::vector<std::uint64_t>>();
    result.diam_counts = j.at("diam_counts").get<std::vector<std::uint64_t>>();
    for (const auto& entry : j.at("diam_tail"))
        result.diam_tail[entry.at(0).get<int>()] = entry.at(1).get<double>();
    for (const auto& est : j.at("profile_means"))
        result.profile_means.push_back(moment_estimate_from_json(est));
    return result;
}

nlohmann::json to_json(const ExactReport& report) {
    nlohmann::json j{{"scenario", scenario_to_json(report.scenario)},
                     {"first_moment", report.first_moment},
                     {"nu_plus", report.nu_plus},
                     {"nu_minus", report.nu_minus},
                     {"sigma2_plus", report.sigma2_plus},
                     {"sigma2_minus", report.sigma2_minus},
                     {"d_mean", report.d_mean},
                     {"d_factorial2", report.d_factorial2}};
    j["second_moment"] = report.second_moment ? nlohmann::json(*report.second_moment)
                                              : nlohmann::json(nullptr);
    j["variance"] = report.variance ? nlohmann::json(*report.variance) : nlohmann::json(nullptr);
    return j;
}

nlohmann::json to_json(const ComparisonReport& report) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : report.quantities)
        rows.push_back({{"name", row.name},
                        {"estimate", row.estimate},
                        {"std_error", row.std_error},
                        {"exact", row.exact},
                        {"z", row.z}});
    nlohmann::json j{{"quantities", rows},
                     {"d_chi2", report.d_chi2},
                     {"d_chi2_dof", report.d_chi2_dof},
                     {"max_abs_z", report.max_abs_z()},
                     {"passed", report.passed()}};
    j["theorem_diam_bound_ok"] = report.theorem_diam_bound_ok
                                     ? nlohmann::json(*report.theorem_diam_bound_ok)
                                     : nlohmann::json(nullptr);
    j["chebyshev_bound_ok"] =
        report.chebyshev_bound_ok ? nlohmann::json(*report.chebyshev_bound_ok) : nlohmann::json(nullptr);
    return j;
}

std::string write_comparison_csv(const ComparisonReport& report) {
    std::string csv = "name,estimate,stderr,exact,z\n";
    for (const auto& row : report.quantities) {
        csv += row.name;
        csv += ',';
        csv += format_double(row.estimate);
        csv += ',';
        csv += format_double(row.std_error);
        csv += ',';
        csv += format_double(row.exact);
        csv += ',';
        csv += format_double(row.z);
        csv += '\n';
    }
    return csv;
}

}  // namespace gwperc
