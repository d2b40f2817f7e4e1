#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace gwperc {

/// Small explicit rooted tree used as ground-truth fixture. Vertex 0 is the
/// root; every other vertex stores its parent. The edge budget caps the
/// exhaustive enumeration at 2^(2m) <= 2^26 configurations.
struct ExplicitTree {
    std::vector<int> parent;  // parent[0] == -1
    std::vector<int> depth;   // depth[0] == 0

    int vertex_count() const { return static_cast<int>(parent.size()); }
    int edge_count() const { return vertex_count() - 1; }

    static constexpr int kMaxEdges = 13;

    /// Children lists in vertex order.
    std::vector<std::vector<int>> children() const;

    /// Checks parent/depth consistency and the edge budget; throws
    /// InvalidParameter or BudgetExceeded.
    void validate() const;
};

/// Complete k-ary tree of depth R, vertices in breadth-first order.
ExplicitTree build_deterministic_tree(int k, int R);

/// Reads an edge list: one `child parent` pair per line, vertex 0 the
/// implicit root. Blank lines and lines starting with '#' are skipped.
ExplicitTree load_edge_list(std::istream& in);
ExplicitTree load_edge_list_file(const std::string& path);

/// Exact statistics from total-probability summation over all arrow
/// configurations.
struct EnumerationResult {
    double mean_size = 0.0;         // E(S)
    double second_moment_size = 0.0;  // E(S^2)
    std::vector<double> size_pmf;   // index s = P(S = s); entry 0 always 0
    std::vector<double> diameter_pmf;
    double d_mean = 0.0;            // E(D)
    std::vector<double> d_pmf;      // index k = P(D = k), length source_depth + 1
    double total_probability = 0.0;  // sums to 1 up to roundoff
};

/// Enumerates all 2^(2m) arrow configurations: bit e (e < m) is the
/// down-arrow of edge e (open w.p. p), bit m+e its up-arrow (open w.p. q).
/// Edge e connects vertex e+1 to its parent.
EnumerationResult enumerate_exact(const ExplicitTree& tree, double p, double q, int source);

/// Wet set (bitmask over vertices) reachable from source through open
/// arrows; iterative frontier expansion.
std::uint32_t wet_set_frontier(const ExplicitTree& tree, std::uint32_t down_mask,
                               std::uint32_t up_mask, int source);

/// Same computation by recursive descent; kept as an independent
/// implementation for cross-checking.
std::uint32_t wet_set_recursive(const ExplicitTree& tree, std::uint32_t down_mask,
                                std::uint32_t up_mask, int source);

}  // namespace gwperc
