#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "gwperc/offspring.hpp"
#include "gwperc/rng.hpp"

namespace gwperc {

/// Full description of one experiment: offspring law, the two opening
/// probabilities, tree radius (nullopt = infinite tree), depth of the
/// information source, and the censoring cap on explored wet vertices.
struct Scenario {
    OffspringDistribution dist;
    double p = 0.5;                        // parent -> offspring opening probability
    double q = 0.5;                        // offspring -> parent opening probability
    std::optional<int> radius;             // nullopt = infinite tree
    int source_depth = 0;                  // r, distance from root to the source
    std::uint64_t vertex_cap = 1'000'000;  // censoring threshold, simulation only

    bool infinite_radius() const { return !radius.has_value(); }
    double nu_plus() const { return dist.mu() * p; }

    /// Throws InvalidScenario on violated invariants (p,q outside (0,1),
    /// r > R, nonpositive cap, negative r).
    void validate() const;

    bool operator==(const Scenario& other) const;
};

/// One sampled percolation cluster.
struct ClusterObservation {
    std::uint64_t size = 0;  // S, number of wet vertices
    int upward_reach = 0;    // D, distance from source to the highest wet vertex
    int diameter = 0;        // max graph distance between two wet vertices
    /// profile[n] = number of wet vertices at distance n from the highest
    /// wet vertex; trimmed after the last nonzero entry.
    std::vector<std::uint64_t> profile;
    bool censored = false;
    /// Sizes of the disjoint subtrees the cluster decomposes into:
    /// [0] is the subtree below the source, [i] (1 <= i <= D) the subtree of
    /// the i-th ancestor excluding its on-path child. Their sum equals size
    /// on every non-censored draw.
    std::vector<std::uint64_t> subtree_sizes;
};

/// Draws one cluster. The tree is generated lazily and fused with the
/// percolation: an unopened edge's subtree is never materialized. A draw
/// that hits vertex_cap comes back with censored = true (not an error).
ClusterObservation sample_cluster(const Scenario& scenario, RngStream& rng);

/// Diameter of a nonempty connected tree given adjacency lists, by two
/// farthest-vertex BFS sweeps. Throws EmptyCluster on empty input.
int tree_diameter(const std::vector<std::vector<std::int32_t>>& adjacency);

}  // namespace gwperc
