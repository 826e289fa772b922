#pragma once

// Metric tree networks of strings and beams: construction, incidence,
// vertex classes and the structural stability classification.

#include <algorithm>
#include <cstddef>
#include <map>
#include <numeric>
#include <optional>
#include <queue>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace netvib {

enum class EdgeKind { String, Beam };

inline std::string_view to_string(EdgeKind kind) {
    return kind == EdgeKind::String ? "string" : "beam";
}

/// One edge of the tree. The arclength parameter runs from `tail` (x = 0)
/// to `head` (x = length).
struct Edge {
    std::string id;
    EdgeKind kind = EdgeKind::String;
    std::string tail;
    std::string head;
    double length = 1.0;

    bool operator==(const Edge&) const = default;
};

enum class TopologyErrorKind {
    CycleDetected,
    Disconnected,
    BadVertexCount,
    RootNotEndpoint,
    NonpositiveLength,
    UnknownVertex,
    DuplicateId,
    SelfLoop,
};

inline std::string_view to_string(TopologyErrorKind kind) {
    switch (kind) {
        case TopologyErrorKind::CycleDetected: return "CycleDetected";
        case TopologyErrorKind::Disconnected: return "Disconnected";
        case TopologyErrorKind::BadVertexCount: return "BadVertexCount";
        case TopologyErrorKind::RootNotEndpoint: return "RootNotEndpoint";
        case TopologyErrorKind::NonpositiveLength: return "NonpositiveLength";
        case TopologyErrorKind::UnknownVertex: return "UnknownVertex";
        case TopologyErrorKind::DuplicateId: return "DuplicateId";
        case TopologyErrorKind::SelfLoop: return "SelfLoop";
    }
    return "?";
}

class TopologyError : public std::runtime_error {
public:
    TopologyError(TopologyErrorKind kind, const std::string& message,
                  std::optional<std::size_t> edge_index = std::nullopt)
        : std::runtime_error(message), kind_(kind), edge_index_(edge_index) {}

    TopologyErrorKind kind() const noexcept { return kind_; }
    /// Position (in the input edge list) of the offending edge, if any.
    std::optional<std::size_t> edge_index() const noexcept { return edge_index_; }

private:
    TopologyErrorKind kind_;
    std::optional<std::size_t> edge_index_;
};

class TreeNetwork;
TreeNetwork build_tree(std::vector<std::string> vertex_ids, std::vector<Edge> edges,
                       const std::string& root_id);

/// Immutable validated tree. Only `build_tree` creates instances.
class TreeNetwork {
public:
    const std::vector<std::string>& vertices() const noexcept { return vertices_; }
    const std::vector<Edge>& edges() const noexcept { return edges_; }
    const std::string& root() const noexcept { return vertices_[root_]; }
    std::size_t root_index() const noexcept { return root_; }

    std::size_t num_vertices() const noexcept { return vertices_.size(); }
    std::size_t num_edges() const noexcept { return edges_.size(); }

    std::size_t vertex_index(std::string_view id) const {
        auto it = vertex_lookup_.find(std::string(id));
        if (it == vertex_lookup_.end()) throw std::out_of_range("unknown vertex '" + std::string(id) + "'");
        return it->second;
    }
    std::optional<std::size_t> find_edge(std::string_view id) const {
        for (std::size_t j = 0; j < edges_.size(); ++j)
            if (edges_[j].id == id) return j;
        return std::nullopt;
    }

    std::size_t tail_index(std::size_t edge) const noexcept { return tail_[edge]; }
    std::size_t head_index(std::size_t edge) const noexcept { return head_[edge]; }
    std::size_t other_end(std::size_t edge, std::size_t vertex) const noexcept {
        return tail_[edge] == vertex ? head_[edge] : tail_[edge];
    }

    /// Edge indices incident to a vertex, in edge order.
    const std::vector<std::size_t>& incident(std::size_t vertex) const noexcept { return incident_[vertex]; }
    std::size_t degree(std::size_t vertex) const noexcept { return incident_[vertex].size(); }
    bool is_leaf(std::size_t vertex) const noexcept { return degree(vertex) == 1; }

    /// d_kj: +1 if the edge ends at the vertex, -1 if it starts there, 0 otherwise.
    int incidence(std::size_t vertex, std::size_t edge) const noexcept {
        if (head_[edge] == vertex) return 1;
        if (tail_[edge] == vertex) return -1;
        return 0;
    }

    /// Equal roots, equal edge lists and equal vertex sets.
    friend bool operator==(const TreeNetwork& a, const TreeNetwork& b) {
        if (a.root() != b.root() || a.edges_ != b.edges_) return false;
        std::set<std::string> va(a.vertices_.begin(), a.vertices_.end());
        std::set<std::string> vb(b.vertices_.begin(), b.vertices_.end());
        return va == vb;
    }

private:
    friend TreeNetwork build_tree(std::vector<std::string>, std::vector<Edge>, const std::string&);
    TreeNetwork() = default;

    std::vector<std::string> vertices_;
    std::vector<Edge> edges_;
    std::size_t root_ = 0;
    std::map<std::string, std::size_t> vertex_lookup_;
    std::vector<std::size_t> tail_, head_;
    std::vector<std::vector<std::size_t>> incident_;
};

inline TreeNetwork build_tree(std::vector<std::string> vertex_ids, std::vector<Edge> edges,
                              const std::string& root_id) {
    TreeNetwork t;
    for (std::size_t i = 0; i < vertex_ids.size(); ++i) {
        if (!t.vertex_lookup_.emplace(vertex_ids[i], i).second)
            throw TopologyError(TopologyErrorKind::DuplicateId, "duplicate vertex id '" + vertex_ids[i] + "'");
    }
    auto root_it = t.vertex_lookup_.find(root_id);
    if (root_it == t.vertex_lookup_.end())
        throw TopologyError(TopologyErrorKind::UnknownVertex, "root '" + root_id + "' is not a declared vertex");
    if (edges.empty())
        throw TopologyError(TopologyErrorKind::RootNotEndpoint, "network has no edges");

    const std::size_t p = vertex_ids.size();
    t.tail_.resize(edges.size());
    t.head_.resize(edges.size());
    t.incident_.assign(p, {});
    std::set<std::string> edge_ids;

    // union-find for cycle detection
    std::vector<std::size_t> parent(p);
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    auto find = [&](std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };

    for (std::size_t j = 0; j < edges.size(); ++j) {
        const Edge& e = edges[j];
        if (!edge_ids.insert(e.id).second)
            throw TopologyError(TopologyErrorKind::DuplicateId, "duplicate edge id '" + e.id + "'", j);
        if (!(e.length > 0.0))
            throw TopologyError(TopologyErrorKind::NonpositiveLength,
                                "edge '" + e.id + "' has nonpositive length", j);
        auto ti = t.vertex_lookup_.find(e.tail);
        auto hi = t.vertex_lookup_.find(e.head);
        if (ti == t.vertex_lookup_.end() || hi == t.vertex_lookup_.end())
            throw TopologyError(TopologyErrorKind::UnknownVertex,
                                "edge '" + e.id + "' references an undeclared vertex", j);
        if (ti->second == hi->second)
            throw TopologyError(TopologyErrorKind::SelfLoop, "edge '" + e.id + "' is a self-loop", j);
        t.tail_[j] = ti->second;
        t.head_[j] = hi->second;
        t.incident_[ti->second].push_back(j);
        t.incident_[hi->second].push_back(j);
        std::size_t a = find(ti->second), b = find(hi->second);
        if (a == b)
            throw TopologyError(TopologyErrorKind::CycleDetected, "edge '" + e.id + "' closes a cycle", j);
        parent[a] = b;
    }

    const std::size_t root = root_it->second;
    for (std::size_t i = 0; i < p; ++i) {
        if (find(i) != find(root)) {
            std::optional<std::size_t> culprit;
            if (!t.incident_[i].empty()) culprit = t.incident_[i].front();
            throw TopologyError(TopologyErrorKind::Disconnected,
                                "vertex '" + vertex_ids[i] + "' is not connected to the root", culprit);
        }
    }
    if (p != edges.size() + 1)
        throw TopologyError(TopologyErrorKind::BadVertexCount,
                            "a tree with " + std::to_string(edges.size()) + " edges needs " +
                                std::to_string(edges.size() + 1) + " vertices, got " + std::to_string(p));
    if (t.tail_[0] != root && t.head_[0] != root)
        throw TopologyError(TopologyErrorKind::RootNotEndpoint,
                            "root '" + root_id + "' is not an endpoint of the first edge '" + edges[0].id + "'", 0);

    t.vertices_ = std::move(vertex_ids);
    t.edges_ = std::move(edges);
    t.root_ = root;
    return t;
}

/// Incidence matrix D (p x N).
inline Eigen::MatrixXi incidence_matrix(const TreeNetwork& tree) {
    Eigen::MatrixXi d = Eigen::MatrixXi::Zero(static_cast<Eigen::Index>(tree.num_vertices()),
                                              static_cast<Eigen::Index>(tree.num_edges()));
    for (std::size_t j = 0; j < tree.num_edges(); ++j) {
        d(static_cast<Eigen::Index>(tree.head_index(j)), static_cast<Eigen::Index>(j)) = 1;
        d(static_cast<Eigen::Index>(tree.tail_index(j)), static_cast<Eigen::Index>(j)) = -1;
    }
    return d;
}

struct VertexClassification {
    std::set<std::string> interior;
    std::set<std::string> exterior;
    std::set<std::string> exterior_string;  // leaves other than the root, on a string
    std::set<std::string> exterior_beam;    // leaves other than the root, on a beam
    std::map<std::string, std::set<std::string>> incident;
    std::map<std::string, std::set<std::string>> incident_string;
    std::map<std::string, std::set<std::string>> incident_beam;
};

inline VertexClassification classify_vertices(const TreeNetwork& tree) {
    VertexClassification c;
    for (std::size_t k = 0; k < tree.num_vertices(); ++k) {
        const std::string& id = tree.vertices()[k];
        auto& inc = c.incident[id];
        auto& inc_s = c.incident_string[id];
        auto& inc_b = c.incident_beam[id];
        for (std::size_t j : tree.incident(k)) {
            const Edge& e = tree.edges()[j];
            inc.insert(e.id);
            (e.kind == EdgeKind::String ? inc_s : inc_b).insert(e.id);
        }
        if (tree.is_leaf(k)) {
            c.exterior.insert(id);
            if (k == tree.root_index()) continue;
            const Edge& e = tree.edges()[tree.incident(k).front()];
            (e.kind == EdgeKind::String ? c.exterior_string : c.exterior_beam).insert(id);
        } else {
            c.interior.insert(id);
        }
    }
    return c;
}

/// Root-based orientation: for each edge, the endpoint nearer to the root.
struct RootedOrder {
    std::vector<std::size_t> edge_order;      // breadth-first from the root
    std::vector<std::size_t> upper_vertex;    // per edge
    std::vector<std::size_t> lower_vertex;    // per edge
    std::vector<std::optional<std::size_t>> parent_edge;  // per vertex
};

inline RootedOrder rooted_order(const TreeNetwork& tree) {
    RootedOrder r;
    r.upper_vertex.resize(tree.num_edges());
    r.lower_vertex.resize(tree.num_edges());
    r.parent_edge.assign(tree.num_vertices(), std::nullopt);
    std::vector<bool> seen(tree.num_vertices(), false);
    std::queue<std::size_t> q;
    q.push(tree.root_index());
    seen[tree.root_index()] = true;
    while (!q.empty()) {
        std::size_t v = q.front();
        q.pop();
        for (std::size_t j : tree.incident(v)) {
            std::size_t w = tree.other_end(j, v);
            if (seen[w]) continue;
            seen[w] = true;
            r.edge_order.push_back(j);
            r.upper_vertex[j] = v;
            r.lower_vertex[j] = w;
            r.parent_edge[w] = j;
            q.push(w);
        }
    }
    return r;
}

enum class StabilityTag { Exponential, PolynomialSingle, PolynomialMulti };

struct StabilityClass {
    StabilityTag tag = StabilityTag::Exponential;
    std::string predicted_rate;  // "e^{-wt}", "t^-1" or "t^-2/3"
    /// Groups of beams that follow a string (edge ids), one entry per maximal
    /// connected beam subgraph.
    std::vector<std::vector<std::string>> following_beam_groups;
};

inline std::string_view to_string(StabilityTag tag) {
    switch (tag) {
        case StabilityTag::Exponential: return "Exponential";
        case StabilityTag::PolynomialSingle: return "PolynomialSingle";
        case StabilityTag::PolynomialMulti: return "PolynomialMulti";
    }
    return "?";
}

/// Exponential when no beam lies below a string on any root-to-leaf path;
/// otherwise polynomial, with rate t^-1 if every group of following beams is
/// a single beam and t^-2/3 if some group holds two or more.
inline StabilityClass stability_class(const TreeNetwork& tree) {
    const RootedOrder order = rooted_order(tree);
    const auto& edges = tree.edges();

    // string_above[j]: some string lies strictly between the root and edge j
    std::vector<bool> string_above(tree.num_edges(), false);
    for (std::size_t j : order.edge_order) {
        auto pe = order.parent_edge[order.upper_vertex[j]];
        if (pe) string_above[j] = string_above[*pe] || edges[*pe].kind == EdgeKind::String;
    }

    std::vector<std::size_t> following;
    for (std::size_t j = 0; j < tree.num_edges(); ++j)
        if (edges[j].kind == EdgeKind::Beam && string_above[j]) following.push_back(j);

    StabilityClass result;
    if (following.empty()) {
        result.tag = StabilityTag::Exponential;
        result.predicted_rate = "e^{-wt}";
        return result;
    }

    // connected components of the following beams, joined through shared vertices
    std::vector<int> group(tree.num_edges(), -1);
    std::set<std::size_t> in_set(following.begin(), following.end());
    int groups = 0;
    for (std::size_t start : following) {
        if (group[start] >= 0) continue;
        std::vector<std::size_t> stack{start};
        group[start] = groups;
        std::vector<std::string> members;
        while (!stack.empty()) {
            std::size_t j = stack.back();
            stack.pop_back();
            members.push_back(edges[j].id);
            for (std::size_t v : {tree.tail_index(j), tree.head_index(j)}) {
                for (std::size_t k : tree.incident(v)) {
                    if (group[k] < 0 && in_set.count(k)) {
                        group[k] = groups;
                        stack.push_back(k);
                    }
                }
            }
        }
        std::sort(members.begin(), members.end());
        result.following_beam_groups.push_back(std::move(members));
        ++groups;
    }

    bool all_single = std::all_of(result.following_beam_groups.begin(), result.following_beam_groups.end(),
                                  [](const auto& g) { return g.size() == 1; });
    result.tag = all_single ? StabilityTag::PolynomialSingle : StabilityTag::PolynomialMulti;
    result.predicted_rate = all_single ? "t^-1" : "t^-2/3";
    return result;
}

}  // namespace netvib
