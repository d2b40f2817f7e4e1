#include "gwperc/simulator.hpp"

#include <algorithm>
#include <stdexcept>

#include "gwperc/errors.hpp"

namespace gwperc {

void Scenario::validate() const {
    if (!(p > 0.0 && p < 1.0)) throw InvalidScenario("p must lie strictly inside (0,1)");
    if (!(q > 0.0 && q < 1.0)) throw InvalidScenario("q must lie strictly inside (0,1)");
    if (source_depth < 0) throw InvalidScenario("source depth must be >= 0");
    if (radius) {
        if (*radius < 0) throw InvalidScenario("radius must be >= 0");
        if (source_depth > *radius) throw InvalidScenario("source depth exceeds radius");
    }
    if (vertex_cap == 0) throw InvalidScenario("vertex cap must be positive");
    if (vertex_cap > 2'000'000'000ULL) throw InvalidScenario("vertex cap too large (max 2e9)");
}

bool Scenario::operator==(const Scenario& other) const {
    return dist == other.dist && p == other.p && q == other.q && radius == other.radius &&
           source_depth == other.source_depth && vertex_cap == other.vertex_cap;
}

namespace {

struct WetVertex {
    std::int32_t parent;     // index within the cluster, -1 for the top vertex
    std::int32_t depth_off;  // distance from the highest wet vertex
    std::int32_t bucket;     // which decomposition summand this vertex counts into
};

}  // namespace

ClusterObservation sample_cluster(const Scenario& scenario, RngStream& rng) {
    scenario.validate();

    const int r = scenario.source_depth;
    const double p = scenario.p;
    const double q = scenario.q;
    const bool finite = scenario.radius.has_value();
    const int radius = finite ? *scenario.radius : 0;

    ClusterObservation obs;

    // Upward reach: consecutive Bernoulli(q) trials along the r ancestor
    // edges, stopped at the first closed arrow or at the root.
    int reach = 0;
    while (reach < r && rng.bernoulli(q)) ++reach;
    obs.upward_reach = reach;

    // Vertices 0..reach are the on-path vertices from the highest wet vertex
    // down to the source. Bucket 0 collects the source subtree, bucket i the
    // i-th ancestor's subtree excluding its on-path child.
    std::vector<WetVertex> nodes;
    nodes.reserve(16);
    std::vector<std::uint64_t> buckets(static_cast<std::size_t>(reach) + 1, 0);
    std::vector<std::uint64_t> profile;
    profile.reserve(16);

    bool censored = false;
    auto try_add = [&](std::int32_t parent, std::int32_t depth_off, std::int32_t bucket) {
        if (nodes.size() >= scenario.vertex_cap) {
            censored = true;
            return false;
        }
        nodes.push_back({parent, depth_off, bucket});
        buckets[bucket] += 1;
        if (static_cast<std::size_t>(depth_off) >= profile.size())
            profile.resize(depth_off + 1, 0);
        profile[depth_off] += 1;
        return true;
    };

    for (int j = 0; j <= reach && !censored; ++j)
        try_add(j == 0 ? -1 : j - 1, j, reach - j);

    // Downward growth queue: the source first, then off-path wet children of
    // the ancestors in creation order, then breadth-first from there.
    std::vector<std::int32_t> queue;
    queue.reserve(16);
    if (!censored) queue.push_back(reach);

    // Each wet ancestor draws its offspring count; one child is the on-path
    // vertex that already exists, and each of the remaining edges opens
    // downward independently.
    for (int i = 1; i <= reach && !censored; ++i) {
        const std::int32_t v = reach - i;
        const int y = scenario.dist.sample(rng);
        for (int t = 1; t < y && !censored; ++t) {
            if (rng.bernoulli(p)) {
                if (try_add(v, nodes[v].depth_off + 1, nodes[v].bucket))
                    queue.push_back(static_cast<std::int32_t>(nodes.size()) - 1);
            }
        }
    }

    for (std::size_t head = 0; head < queue.size() && !censored; ++head) {
        const std::int32_t v = queue[head];
        // Absolute depth of v in the tree; vertices at the radius have no
        // outgoing edges.
        if (finite && (r - reach) + nodes[v].depth_off == radius) continue;
        const int y = scenario.dist.sample(rng);
        for (int t = 0; t < y && !censored; ++t) {
            if (rng.bernoulli(p)) {
                if (try_add(v, nodes[v].depth_off + 1, nodes[v].bucket))
                    queue.push_back(static_cast<std::int32_t>(nodes.size()) - 1);
            }
        }
    }

    obs.size = nodes.size();
    obs.censored = censored;
    obs.profile = std::move(profile);
    obs.subtree_sizes = std::move(buckets);

    if (!censored) {
        std::uint64_t total = 0;
        for (const auto s : obs.subtree_sizes) total += s;
        if (total != obs.size)
            throw std::logic_error("cluster decomposition does not sum to the cluster size");
    }

    // Diameter via the shared two-sweep routine on the wet subtree.
    std::vector<std::vector<std::int32_t>> adjacency(nodes.size());
    for (std::size_t v = 1; v < nodes.size(); ++v) {
        adjacency[nodes[v].parent].push_back(static_cast<std::int32_t>(v));
        adjacency[v].push_back(nodes[v].parent);
    }
    obs.diameter = tree_diameter(adjacency);

    return obs;
}

namespace {

// BFS from start; returns (farthest vertex, its distance).
std::pair<std::int32_t, int> farthest_vertex(const std::vector<std::vector<std::int32_t>>& adjacency,
                                             std::int32_t start, std::vector<std::int32_t>& dist,
                                             std::vector<std::int32_t>& queue) {
    dist.assign(adjacency.size(), -1);
    queue.clear();
    queue.push_back(start);
    dist[start] = 0;
    std::int32_t best = start;
    for (std::size_t head = 0; head < queue.size(); ++head) {
        const std::int32_t v = queue[head];
        if (dist[v] > dist[best]) best = v;
        for (const std::int32_t w : adjacency[v]) {
            if (dist[w] < 0) {
                dist[w] = dist[v] + 1;
                queue.push_back(w);
            }
        }
    }
    return {best, dist[best]};
}

}  // namespace

int tree_diameter(const std::vector<std::vector<std::int32_t>>& adjacency) {
    if (adjacency.empty()) throw EmptyCluster("tree_diameter on an empty vertex set");
    std::vector<std::int32_t> dist;
    std::vector<std::int32_t> queue;
    const auto [far_end, ignored] = farthest_vertex(adjacency, 0, dist, queue);
    const auto [other_end, diameter] = farthest_vertex(adjacency, far_end, dist, queue);
    (void)other_end;
    return diameter;
}

}  // namespace gwperc
