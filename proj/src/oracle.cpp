#include "gwperc/oracle.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <sstream>

#include "gwperc/errors.hpp"
#include "gwperc/simulator.hpp"

namespace gwperc {

std::vector<std::vector<int>> ExplicitTree::children() const {
    std::vector<std::vector<int>> out(parent.size());
    for (std::size_t v = 1; v < parent.size(); ++v) out[parent[v]].push_back(static_cast<int>(v));
    return out;
}

void ExplicitTree::validate() const {
    if (parent.empty()) throw InvalidParameter("tree has no vertices");
    if (parent[0] != -1) throw InvalidParameter("vertex 0 must be the root");
    if (depth.size() != parent.size()) throw InvalidParameter("depth/parent size mismatch");
    if (depth[0] != 0) throw InvalidParameter("root depth must be 0");
    for (std::size_t v = 1; v < parent.size(); ++v) {
        const int pv = parent[v];
        if (pv < 0 || static_cast<std::size_t>(pv) >= parent.size() || pv == static_cast<int>(v))
            throw InvalidParameter("vertex " + std::to_string(v) + " has an invalid parent");
        if (depth[v] != depth[pv] + 1)
            throw InvalidParameter("vertex " + std::to_string(v) + " breaks depth consistency");
    }
    if (edge_count() > kMaxEdges)
        throw BudgetExceeded("tree has " + std::to_string(edge_count()) + " edges; enumeration budget is " +
                             std::to_string(kMaxEdges));
}

ExplicitTree build_deterministic_tree(int k, int R) {
    if (k < 1) throw InvalidParameter("branching factor must be >= 1");
    if (R < 0) throw InvalidParameter("radius must be >= 0");
    ExplicitTree tree;
    tree.parent.push_back(-1);
    tree.depth.push_back(0);
    std::size_t level_start = 0;
    std::size_t level_end = 1;
    for (int d = 0; d < R; ++d) {
        for (std::size_t v = level_start; v < level_end; ++v) {
            for (int c = 0; c < k; ++c) {
                tree.parent.push_back(static_cast<int>(v));
                tree.depth.push_back(d + 1);
                if (tree.edge_count() > ExplicitTree::kMaxEdges)
                    throw BudgetExceeded("complete " + std::to_string(k) + "-ary tree of depth " +
                                         std::to_string(R) + " exceeds the 13-edge enumeration budget");
            }
        }
        level_start = level_end;
        level_end = tree.parent.size();
    }
    tree.validate();
    return tree;
}

ExplicitTree load_edge_list(std::istream& in) {
    std::vector<std::pair<int, int>> edges;
    std::string line;
    int max_vertex = 0;
    while (std::getline(in, line)) {
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        std::istringstream row(line);
        int child = -1, parent = -1;
        if (!(row >> child >> parent))
            throw InvalidParameter("edge list line is not 'child parent': '" + line + "'");
        if (child < 1 || parent < 0)
            throw InvalidParameter("edge list vertices must be nonnegative with child >= 1");
        edges.emplace_back(child, parent);
        max_vertex = std::max({max_vertex, child, parent});
    }
    if (static_cast<int>(edges.size()) != max_vertex)
        throw InvalidParameter("edge list must define every vertex 1..n-1 exactly once");

    ExplicitTree tree;
    tree.parent.assign(max_vertex + 1, -2);
    tree.parent[0] = -1;
    for (const auto& [child, parent] : edges) {
        if (tree.parent[child] != -2)
            throw InvalidParameter("vertex " + std::to_string(child) + " has two parents");
        tree.parent[child] = parent;
    }
    tree.depth.assign(tree.parent.size(), -1);
    tree.depth[0] = 0;
    for (std::size_t v = 1; v < tree.parent.size(); ++v) {
        // Follow parents to a resolved depth; the walk is bounded by n.
        int cursor = static_cast<int>(v);
        std::vector<int> chain;
        while (cursor != 0 && tree.depth[cursor] < 0) {
            chain.push_back(cursor);
            cursor = tree.parent[cursor];
            if (chain.size() > tree.parent.size())
                throw InvalidParameter("edge list contains a cycle");
        }
        int d = tree.depth[cursor];
        for (auto it = chain.rbegin(); it != chain.rend(); ++it) tree.depth[*it] = ++d;
    }
    tree.validate();
    return tree;
}

ExplicitTree load_edge_list_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidParameter("cannot open tree file '" + path + "'");
    return load_edge_list(in);
}

std::uint32_t wet_set_frontier(const ExplicitTree& tree, std::uint32_t down_mask,
                               std::uint32_t up_mask, int source) {
    const auto children = tree.children();
    std::uint32_t wet = 1u << source;
    std::vector<int> queue{source};
    for (std::size_t head = 0; head < queue.size(); ++head) {
        const int v = queue[head];
        for (const int c : children[v]) {
            if ((down_mask >> (c - 1)) & 1u) {
                if (!((wet >> c) & 1u)) {
                    wet |= 1u << c;
                    queue.push_back(c);
                }
            }
        }
        if (v != 0 && ((up_mask >> (v - 1)) & 1u)) {
            const int pv = tree.parent[v];
            if (!((wet >> pv) & 1u)) {
                wet |= 1u << pv;
                queue.push_back(pv);
            }
        }
    }
    return wet;
}

namespace {

void descend(const ExplicitTree& tree, const std::vector<std::vector<int>>& children,
             std::uint32_t down_mask, std::uint32_t up_mask, int v, std::uint32_t& wet) {
    wet |= 1u << v;
    for (const int c : children[v])
        if (((down_mask >> (c - 1)) & 1u) && !((wet >> c) & 1u))
            descend(tree, children, down_mask, up_mask, c, wet);
    if (v != 0 && ((up_mask >> (v - 1)) & 1u)) {
        const int pv = tree.parent[v];
        if (!((wet >> pv) & 1u)) descend(tree, children, down_mask, up_mask, pv, wet);
    }
}

}  // namespace

std::uint32_t wet_set_recursive(const ExplicitTree& tree, std::uint32_t down_mask,
                                std::uint32_t up_mask, int source) {
    const auto children = tree.children();
    std::uint32_t wet = 0;
    descend(tree, children, down_mask, up_mask, source, wet);
    return wet;
}

EnumerationResult enumerate_exact(const ExplicitTree& tree, double p, double q, int source) {
    tree.validate();
    if (!(p > 0.0 && p < 1.0) || !(q > 0.0 && q < 1.0))
        throw InvalidParameter("p and q must lie strictly inside (0,1)");
    if (source < 0 || source >= tree.vertex_count())
        throw InvalidParameter("source vertex out of range");

    const int n = tree.vertex_count();
    const int m = tree.edge_count();
    const int r = tree.depth[source];
    const int max_depth = *std::max_element(tree.depth.begin(), tree.depth.end());
    const auto children = tree.children();

    // Probability factors indexed by the number of open arrows.
    std::vector<double> pow_p(m + 1), pow_1p(m + 1), pow_q(m + 1), pow_1q(m + 1);
    pow_p[0] = pow_1p[0] = pow_q[0] = pow_1q[0] = 1.0;
    for (int i = 1; i <= m; ++i) {
        pow_p[i] = pow_p[i - 1] * p;
        pow_1p[i] = pow_1p[i - 1] * (1.0 - p);
        pow_q[i] = pow_q[i - 1] * q;
        pow_1q[i] = pow_1q[i - 1] * (1.0 - q);
    }

    EnumerationResult result;
    result.size_pmf.assign(n + 1, 0.0);
    result.diameter_pmf.assign(2 * max_depth + 1, 0.0);
    result.d_pmf.assign(r + 1, 0.0);

    // Ancestors of the source, closest first, for the upward reach.
    std::vector<int> ancestors;
    for (int v = source; v != 0; v = tree.parent[v]) ancestors.push_back(tree.parent[v]);

    std::vector<std::vector<std::int32_t>> wet_adjacency;
    std::vector<int> wet_index(n, -1);

    const std::uint64_t configs = 1ULL << (2 * m);
    const std::uint32_t edge_mask = (1u << m) - 1u;
    for (std::uint64_t config = 0; config < configs; ++config) {
        const auto down_mask = static_cast<std::uint32_t>(config & edge_mask);
        const auto up_mask = static_cast<std::uint32_t>(config >> m);
        const double prob = pow_p[std::popcount(down_mask)] * pow_1p[m - std::popcount(down_mask)] *
                            pow_q[std::popcount(up_mask)] * pow_1q[m - std::popcount(up_mask)];

        const std::uint32_t wet = wet_set_frontier(tree, down_mask, up_mask, source);
        const int size = std::popcount(wet);

        int reach = 0;
        for (std::size_t i = 0; i < ancestors.size(); ++i)
            if ((wet >> ancestors[i]) & 1u) reach = static_cast<int>(i) + 1;

        // Diameter through the shared two-sweep routine on the wet subtree.
        wet_adjacency.clear();
        int next_index = 0;
        for (int v = 0; v < n; ++v)
            if ((wet >> v) & 1u) {
                wet_index[v] = next_index++;
                wet_adjacency.emplace_back();
            }
        for (int v = 1; v < n; ++v) {
            if (((wet >> v) & 1u) && ((wet >> tree.parent[v]) & 1u)) {
                const int a = wet_index[v];
                const int b = wet_index[tree.parent[v]];
                wet_adjacency[a].push_back(b);
                wet_adjacency[b].push_back(a);
            }
        }
        const int diameter = tree_diameter(wet_adjacency);

        result.mean_size += prob * size;
        result.second_moment_size += prob * size * static_cast<double>(size);
        result.size_pmf[size] += prob;
        result.diameter_pmf[diameter] += prob;
        result.d_mean += prob * reach;
        result.d_pmf[reach] += prob;
        result.total_probability += prob;
    }
    return result;
}

}  // namespace gwperc
