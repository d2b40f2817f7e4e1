#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gwperc/analytics.hpp"
#include "gwperc/simulator.hpp"

namespace gwperc {

/// Streaming mean/variance accumulator (Welford update, Chan merge).
class MomentEstimate {
public:
    void add(double x);
    void merge(const MomentEstimate& other);

    std::uint64_t count() const { return count_; }
    double mean() const { return mean_; }
    double m2() const { return m2_; }

    /// Unbiased sample variance; 0 with fewer than two observations.
    double variance() const;
    double std_error() const;
    /// Half-width of the 99% normal confidence interval.
    double ci_halfwidth() const;

    static MomentEstimate restore(std::uint64_t count, double mean, double m2);

private:
    std::uint64_t count_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

MomentEstimate merge(const MomentEstimate& a, const MomentEstimate& b);

/// z quantile for the reported 99% confidence intervals.
inline constexpr double kZ99 = 2.5758293035489004;

/// Aggregated output of a replicated simulation run. Censored replicates are
/// counted and excluded from every accumulator.
struct ExperimentResult {
    Scenario scenario;
    std::uint64_t replicates = 0;
    std::uint64_t censored = 0;
    double censor_rate = 0.0;

    MomentEstimate s_mean;   // estimates E(S)
    MomentEstimate s2_mean;  // estimates E(S^2)

    std::vector<std::uint64_t> d_counts;  // upward reach histogram, length r+1
    std::vector<double> d_pmf;            // d_counts / kept

    std::vector<std::uint64_t> size_counts;  // index S, entry 0 unused
    std::vector<std::uint64_t> diam_counts;  // index diameter

    std::map<int, double> diam_tail;  // n -> empirical P(diam >= 2n)

    std::vector<MomentEstimate> profile_means;  // X_n for n = 0..len-1

    std::uint64_t seed = 0;
    std::string mix_function_id;

    std::uint64_t kept() const { return replicates - censored; }

    /// Empirical P(S > n).
    double size_tail_frequency(std::uint64_t n) const;
    /// Empirical P(diam >= 2n) recomputed from the histogram.
    double diam_tail_frequency(int n) const;

    /// (estimate, standard error) of E(D) and of E(D(D-1)), derived from the
    /// reach histogram.
    std::pair<double, double> d_mean_estimate() const;
    std::pair<double, double> d_factorial2_estimate() const;
};

struct ExperimentOptions {
    int profile_len = -1;      // -1: source_depth + 9
    int diam_tail_n_max = -1;  // -1: 12
};

/// Runs `replicates` independent cluster draws. Replicate i uses the private
/// stream seeded by derive_stream_seed(seed, i); accumulation happens in
/// fixed-size blocks merged in index order, so every output byte is
/// determined by (scenario, replicates, seed) alone, whatever `workers` is.
ExperimentResult run_experiment(const Scenario& scenario, std::uint64_t replicates,
                                std::uint64_t seed, int workers,
                                const ExperimentOptions& options = {});

struct QuantityComparison {
    std::string name;
    double estimate = 0.0;
    double std_error = 0.0;
    double exact = 0.0;
    double z = 0.0;
};

struct ComparisonReport {
    std::vector<QuantityComparison> quantities;
    std::optional<bool> theorem_diam_bound_ok;  // empirical diam tail under its bound
    std::optional<bool> chebyshev_bound_ok;     // empirical size tail under Chebyshev
    double d_chi2 = 0.0;
    int d_chi2_dof = 0;

    double max_abs_z() const;
    /// True when every |z| <= z_limit and no satisfied-flag is false.
    bool passed(double z_limit = 4.0) const;
};

/// Exact-vs-estimate comparison. Throws ScenarioMismatch when the report and
/// the result were produced for different scenarios.
ComparisonReport compare(const ExactReport& exact, const ExperimentResult& result);

// --- serialization (JSON schema documented in README) ---

nlohmann::json scenario_to_json(const Scenario& scenario);
Scenario scenario_from_json(const nlohmann::json& j);

nlohmann::json to_json(const MomentEstimate& est);
nlohmann::json to_json(const ExperimentResult& result);
ExperimentResult experiment_result_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ExactReport& report);
nlohmann::json to_json(const ComparisonReport& report);

/// CSV table, one row per compared quantity: name,estimate,stderr,exact,z.
/// `.` decimal separator, `,` delimiter, LF line endings, header row.
std::string write_comparison_csv(const ComparisonReport& report);

/// Doubles formatted with enough digits to round-trip ("%.17g").
std::string format_double(double x);

}  // namespace gwperc
