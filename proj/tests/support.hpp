#pragma once

#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>

#include "netvib/netvib.hpp"

namespace testing_support {

inline std::string network_path(const std::string& name) { return std::string(NETVIB_NETWORK_DIR) + "/" + name; }

inline netvib::TreeNetwork load_network(const std::string& name) {
    std::ifstream in(network_path(name));
    if (!in) throw std::runtime_error("missing network file " + name);
    std::ostringstream ss;
    ss << in.rdbuf();
    auto r = netvib::parse(ss.str());
    if (!r.ok()) throw std::runtime_error(r.diagnostics.front().format(name));
    return *r.tree;
}

/// Random tree with `edges` edges: each new vertex hangs off a random earlier
/// one, orientation and kind are random, lengths carry full 17-digit values.
inline netvib::TreeNetwork random_tree(std::mt19937_64& gen, int edges) {
    std::uniform_real_distribution<double> len(0.05, 5.0);
    std::bernoulli_distribution coin(0.5);
    std::vector<std::string> vertices{"v0"};
    std::vector<netvib::Edge> list;
    for (int j = 0; j < edges; ++j) {
        std::uniform_int_distribution<std::size_t> pick(0, vertices.size() - 1);
        const std::string parent = j == 0 ? "v0" : vertices[pick(gen)];
        const std::string child = "v" + std::to_string(vertices.size());
        vertices.push_back(child);
        netvib::Edge e;
        e.id = "e" + std::to_string(j + 1);
        e.kind = coin(gen) ? netvib::EdgeKind::String : netvib::EdgeKind::Beam;
        if (coin(gen)) {
            e.tail = parent;
            e.head = child;
        } else {
            e.tail = child;
            e.head = parent;
        }
        e.length = len(gen);
        list.push_back(e);
    }
    return netvib::build_tree(vertices, list, "v0");
}

}  // namespace testing_support
