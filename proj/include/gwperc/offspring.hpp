#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "gwperc/rng.hpp"

namespace gwperc {

/// Offspring law (p_k) on {1, 2, ...}. Every supported kind puts zero mass
/// on k = 0, so the tree never dies out. Immutable after construction and
/// safe to share across threads; all randomness comes from the caller's
/// stream.
class OffspringDistribution {
public:
    enum class Kind { Deterministic, ShiftedGeometric, ShiftedPoisson, Table };

    /// Point mass at k >= 1.
    static OffspringDistribution deterministic(int k);
    /// P(Y = k) = a (1-a)^{k-1} on {1, 2, ...}; mean 1/a.
    static OffspringDistribution shifted_geometric(double a);
    /// Y = 1 + Poisson(lambda).
    static OffspringDistribution shifted_poisson(double lambda);
    /// Explicit finite pmf given as (k, probability) atoms, any order.
    static OffspringDistribution table(std::vector<std::pair<int, double>> atoms);

    /// Defaults to the point mass at 1 (the line graph).
    OffspringDistribution() : OffspringDistribution(deterministic(1)) {}

    Kind kind() const { return kind_; }
    double mu() const { return mu_; }
    double sigma2() const { return sigma2_; }

    /// One draw of Y, always >= 1.
    int sample(RngStream& rng) const;

    /// P(Y = k) as actually sampled (for shifted_poisson this includes the
    /// residual tail mass folded into the cutoff atom).
    double pmf(int k) const;

    /// Descriptor string in the CLI grammar, or "table:-" for tables built
    /// in memory.
    const std::string& descriptor() const { return descriptor_; }

    /// Kind and parameters equal (table kinds compare atoms, not paths).
    bool operator==(const OffspringDistribution& other) const;

    /// Table atoms after validation and normalization; empty for the
    /// parametric kinds.
    const std::vector<std::pair<int, double>>& table_atoms() const { return atoms_; }

private:
    static OffspringDistribution table_with_descriptor(std::vector<std::pair<int, double>> atoms,
                                                       std::string descriptor);
    friend OffspringDistribution parse_distribution(const std::string&);
    friend OffspringDistribution load_table_csv(const std::string&);

    Kind kind_ = Kind::Deterministic;
    int det_k_ = 1;
    double geom_a_ = 0.0;
    double pois_lambda_ = 0.0;
    std::vector<std::pair<int, double>> atoms_;  // table + pois1 sampling atoms
    std::vector<double> cum_;                    // cumulative probabilities, back() == 1
    double mu_ = 1.0;
    double sigma2_ = 0.0;
    std::string descriptor_ = "det:1";
};

/// Parses the descriptor grammar used by the CLI and config files:
/// `det:<k>`, `geom:<a>`, `pois1:<lambda>`, `table:<path>`.
OffspringDistribution parse_distribution(const std::string& descriptor);

/// Loads a table distribution from a CSV file with header `k,prob`.
OffspringDistribution load_table_csv(const std::string& path);

}  // namespace gwperc
