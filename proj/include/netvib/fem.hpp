#pragma once

// Conforming finite elements on a tree network: piecewise-linear elements on
// strings, cubic Hermite elements on beams. Essential conditions (root
// displacement, beam-leaf rotation, rotation balance at interior vertices)
// are eliminated through an explicit null-space basis; everything else comes
// out of the weak form.

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include "netvib/quadrature.hpp"
#include "netvib/topology.hpp"

namespace netvib {

using Index = Eigen::Index;
using SparseMatrix = Eigen::SparseMatrix<double>;
using Vector = Eigen::VectorXd;
using Complex = std::complex<double>;
using ComplexVector = Eigen::VectorXcd;

struct MeshParams {
    int elements_per_unit_length = 32;
    std::map<std::string, int> per_edge;  // edge id -> element count
};

class MeshError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

inline int elements_on(const Edge& edge, const MeshParams& mesh) {
    int n = 0;
    if (auto it = mesh.per_edge.find(edge.id); it != mesh.per_edge.end()) {
        n = it->second;
    } else {
        if (mesh.elements_per_unit_length <= 0) throw MeshError("elements per unit length must be positive");
        n = static_cast<int>(std::ceil(edge.length * mesh.elements_per_unit_length - 1e-9));
    }
    if (n < 2) throw MeshError("edge '" + edge.id + "' needs at least 2 elements, got " + std::to_string(n));
    return n;
}

struct EdgeDofs {
    EdgeKind kind = EdgeKind::String;
    int elements = 0;
    double h = 0.0;
    std::vector<Index> value;  // full dof of the nodal value, node 0 at the tail
    std::vector<Index> slope;  // beams only: full dof of the nodal slope d/dx
};

struct Constraint {
    std::vector<std::pair<Index, double>> terms;  // sum c_i x_i = 0
    std::string origin;
};

struct DofMap {
    Index full_size = 0;
    std::vector<Index> vertex_dof;
    std::vector<EdgeDofs> edges;
    std::vector<Constraint> constraints;
    SparseMatrix reduction;            // full = reduction * reduced
    std::vector<Index> reduced_index;  // per full dof, -1 if eliminated

    Index reduced_size() const { return reduction.cols(); }
};

/// Mass, stiffness and boundary damping on the reduced coordinates.
struct DiscreteSystem {
    TreeNetwork tree;
    MeshParams mesh;
    DofMap dofs;
    SparseMatrix M, K, B;
    std::vector<Index> damped_dofs;  // reduced index of each damped leaf displacement

    Index size() const { return M.rows(); }
};

struct State {
    Vector u, v;
    double time = 0.0;
};

namespace detail {

struct StringShape {
    double n[2], dn[2];
};
inline StringShape string_shape(double xi, double h) {
    return {{1.0 - xi, xi}, {-1.0 / h, 1.0 / h}};
}

struct BeamShape {
    double n[4], dn[4], ddn[4];
};
inline BeamShape beam_shape(double xi, double h) {
    const double xi2 = xi * xi, xi3 = xi2 * xi;
    BeamShape s{};
    s.n[0] = 1.0 - 3.0 * xi2 + 2.0 * xi3;
    s.n[1] = h * (xi - 2.0 * xi2 + xi3);
    s.n[2] = 3.0 * xi2 - 2.0 * xi3;
    s.n[3] = h * (-xi2 + xi3);
    s.dn[0] = (-6.0 * xi + 6.0 * xi2) / h;
    s.dn[1] = 1.0 - 4.0 * xi + 3.0 * xi2;
    s.dn[2] = (6.0 * xi - 6.0 * xi2) / h;
    s.dn[3] = -2.0 * xi + 3.0 * xi2;
    s.ddn[0] = (-6.0 + 12.0 * xi) / (h * h);
    s.ddn[1] = (-4.0 + 6.0 * xi) / h;
    s.ddn[2] = (6.0 - 12.0 * xi) / (h * h);
    s.ddn[3] = (-2.0 + 6.0 * xi) / h;
    return s;
}

/// Element-local dofs and their element index/local coordinate for point x.
inline std::pair<int, double> locate(const EdgeDofs& ed, double x) {
    int e = static_cast<int>(std::floor(x / ed.h));
    e = std::clamp(e, 0, ed.elements - 1);
    return {e, x / ed.h - e};
}

/// Gaussian elimination of the constraint rows into a null-space basis.
inline void build_reduction(DofMap& map) {
    using Terms = std::vector<std::pair<Index, double>>;
    std::map<Index, Terms> eliminated;

    auto expand = [&](const Terms& in) {
        std::map<Index, double> acc;
        for (auto [dof, c] : in) {
            auto it = eliminated.find(dof);
            if (it == eliminated.end()) {
                acc[dof] += c;
            } else {
                for (auto [d2, c2] : it->second) acc[d2] += c * c2;
            }
        }
        Terms out;
        for (auto [d, c] : acc)
            if (c != 0.0) out.emplace_back(d, c);
        return out;
    };

    for (const Constraint& con : map.constraints) {
        Terms row = expand(con.terms);
        if (row.empty()) continue;  // redundant
        // pivot: largest coefficient, first in the original ordering on ties
        std::size_t pivot_pos = 0;
        double best = -1.0;
        for (const auto& [dof, c] : con.terms) {
            for (std::size_t i = 0; i < row.size(); ++i) {
                if (row[i].first == dof && std::abs(row[i].second) > best * (1.0 + 1e-12)) {
                    best = std::abs(row[i].second);
                    pivot_pos = i;
                }
            }
        }
        const Index pivot = row[pivot_pos].first;
        const double cp = row[pivot_pos].second;
        Terms expr;
        for (std::size_t i = 0; i < row.size(); ++i)
            if (i != pivot_pos) expr.emplace_back(row[i].first, -row[i].second / cp);
        for (auto& [dof, e] : eliminated) {
            bool uses = std::any_of(e.begin(), e.end(), [&](const auto& t) { return t.first == pivot; });
            if (!uses) continue;
            std::map<Index, double> acc;
            for (auto [d, c] : e) {
                if (d == pivot) {
                    for (auto [d2, c2] : expr) acc[d2] += c * c2;
                } else {
                    acc[d] += c;
                }
            }
            e.clear();
            for (auto [d, c] : acc)
                if (c != 0.0) e.emplace_back(d, c);
        }
        eliminated.emplace(pivot, std::move(expr));
    }

    map.reduced_index.assign(static_cast<std::size_t>(map.full_size), -1);
    Index r = 0;
    for (Index i = 0; i < map.full_size; ++i)
        if (!eliminated.count(i)) map.reduced_index[static_cast<std::size_t>(i)] = r++;

    std::vector<Eigen::Triplet<double>> trip;
    for (Index i = 0; i < map.full_size; ++i) {
        Index ri = map.reduced_index[static_cast<std::size_t>(i)];
        if (ri >= 0) {
            trip.emplace_back(i, ri, 1.0);
        } else {
            for (auto [d, c] : eliminated.at(i)) trip.emplace_back(i, map.reduced_index[static_cast<std::size_t>(d)], c);
        }
    }
    map.reduction.resize(map.full_size, r);
    map.reduction.setFromTriplets(trip.begin(), trip.end());
}

}  // namespace detail

/// Dof numbering follows a breadth-first sweep from the root so that paths
/// produce banded matrices.
inline DofMap make_dof_map(const TreeNetwork& tree, const MeshParams& mesh) {
    DofMap map;
    const std::size_t p = tree.num_vertices();
    map.vertex_dof.assign(p, -1);
    map.edges.resize(tree.num_edges());
    Index next = 0;

    const RootedOrder order = rooted_order(tree);
    map.vertex_dof[tree.root_index()] = next++;
    for (std::size_t j : order.edge_order) {
        const Edge& e = tree.edges()[j];
        EdgeDofs& ed = map.edges[j];
        ed.kind = e.kind;
        ed.elements = elements_on(e, mesh);
        ed.h = e.length / ed.elements;
        const auto n = static_cast<std::size_t>(ed.elements);
        ed.value.assign(n + 1, -1);
        if (e.kind == EdgeKind::Beam) ed.slope.assign(n + 1, -1);

        const bool upper_is_tail = order.upper_vertex[j] == tree.tail_index(j);
        const std::size_t upper_node = upper_is_tail ? 0 : n;
        const std::size_t lower_node = upper_is_tail ? n : 0;
        ed.value[upper_node] = map.vertex_dof[order.upper_vertex[j]];
        if (e.kind == EdgeKind::Beam) ed.slope[upper_node] = next++;
        for (std::size_t s = 1; s < n; ++s) {
            std::size_t node = upper_is_tail ? s : n - s;
            ed.value[node] = next++;
            if (e.kind == EdgeKind::Beam) ed.slope[node] = next++;
        }
        map.vertex_dof[order.lower_vertex[j]] = next++;
        ed.value[lower_node] = map.vertex_dof[order.lower_vertex[j]];
        if (e.kind == EdgeKind::Beam) ed.slope[lower_node] = next++;
    }
    map.full_size = next;

    // essential conditions
    map.constraints.push_back({{{map.vertex_dof[tree.root_index()], 1.0}}, "root displacement"});
    for (std::size_t k = 0; k < p; ++k) {
        if (k == tree.root_index() && tree.is_leaf(k)) continue;  // root end of e1: rotation free
        Constraint c;
        for (std::size_t j : tree.incident(k)) {
            if (tree.edges()[j].kind != EdgeKind::Beam) continue;
            const EdgeDofs& ed = map.edges[j];
            const std::size_t node = tree.tail_index(j) == k ? 0 : static_cast<std::size_t>(ed.elements);
            c.terms.emplace_back(ed.slope[node], static_cast<double>(tree.incidence(k, j)));
        }
        if (c.terms.empty()) continue;
        c.origin = tree.is_leaf(k) ? "beam leaf rotation at " + tree.vertices()[k]
                                   : "rotation balance at " + tree.vertices()[k];
        map.constraints.push_back(std::move(c));
    }
    detail::build_reduction(map);
    return map;
}

inline DiscreteSystem assemble(const TreeNetwork& tree, const MeshParams& mesh = {}) {
    DofMap map = make_dof_map(tree, mesh);
    std::vector<Eigen::Triplet<double>> mt, kt;
    const GaussRule& g4 = gauss_rule(4);

    for (std::size_t j = 0; j < tree.num_edges(); ++j) {
        const EdgeDofs& ed = map.edges[j];
        const double h = ed.h;
        for (int e = 0; e < ed.elements; ++e) {
            const auto a = static_cast<std::size_t>(e), b = a + 1;
            if (ed.kind == EdgeKind::String) {
                const Index dofs[2] = {ed.value[a], ed.value[b]};
                double me[2][2] = {}, ke[2][2] = {};
                for (std::size_t q = 0; q < g4.nodes.size(); ++q) {
                    auto s = detail::string_shape(g4.nodes[q], h);
                    const double w = g4.weights[q] * h;
                    for (int r = 0; r < 2; ++r)
                        for (int c = 0; c < 2; ++c) {
                            me[r][c] += w * s.n[r] * s.n[c];
                            ke[r][c] += w * s.dn[r] * s.dn[c];
                        }
                }
                for (int r = 0; r < 2; ++r)
                    for (int c = 0; c < 2; ++c) {
                        mt.emplace_back(dofs[r], dofs[c], me[r][c]);
                        kt.emplace_back(dofs[r], dofs[c], ke[r][c]);
                    }
            } else {
                const Index dofs[4] = {ed.value[a], ed.slope[a], ed.value[b], ed.slope[b]};
                double me[4][4] = {}, ke[4][4] = {};
                for (std::size_t q = 0; q < g4.nodes.size(); ++q) {
                    auto s = detail::beam_shape(g4.nodes[q], h);
                    const double w = g4.weights[q] * h;
                    for (int r = 0; r < 4; ++r)
                        for (int c = 0; c < 4; ++c) {
                            me[r][c] += w * s.n[r] * s.n[c];
                            ke[r][c] += w * s.ddn[r] * s.ddn[c];
                        }
                }
                for (int r = 0; r < 4; ++r)
                    for (int c = 0; c < 4; ++c) {
                        mt.emplace_back(dofs[r], dofs[c], me[r][c]);
                        kt.emplace_back(dofs[r], dofs[c], ke[r][c]);
                    }
            }
        }
    }

    SparseMatrix Mf(map.full_size, map.full_size), Kf(map.full_size, map.full_size);
    Mf.setFromTriplets(mt.begin(), mt.end());
    Kf.setFromTriplets(kt.begin(), kt.end());
    const SparseMatrix& Z = map.reduction;
    SparseMatrix Zt = Z.transpose();

    DiscreteSystem sys{tree, mesh, std::move(map), {}, {}, {}, {}};
    sys.M = Zt * Mf * Z;
    sys.K = Zt * Kf * Z;
    // symmetrize away the last-bit asymmetry of the triple product
    SparseMatrix Mt = sys.M.transpose(), Kt2 = sys.K.transpose();
    sys.M = 0.5 * (sys.M + Mt);
    sys.K = 0.5 * (sys.K + Kt2);
    sys.M.prune(0.0);
    sys.K.prune(0.0);

    const Index n = sys.M.rows();
    std::vector<Eigen::Triplet<double>> bt;
    for (std::size_t k = 0; k < tree.num_vertices(); ++k) {
        if (k == tree.root_index() || !tree.is_leaf(k)) continue;
        const Index r = sys.dofs.reduced_index[static_cast<std::size_t>(sys.dofs.vertex_dof[k])];
        if (r < 0) throw std::logic_error("damped leaf displacement was eliminated");
        sys.damped_dofs.push_back(r);
        bt.emplace_back(r, r, 1.0);
    }
    sys.B.resize(n, n);
    sys.B.setFromTriplets(bt.begin(), bt.end());
    return sys;
}

/// Copy of the system with the boundary feedback switched off (test hook).
inline DiscreteSystem without_damping(DiscreteSystem sys) {
    sys.B.setZero();
    sys.B.data().squeeze();
    sys.damped_dofs.clear();
    return sys;
}

inline double energy(const DiscreteSystem& sys, const State& s) {
    return 0.5 * (s.u.dot(sys.K * s.u) + s.v.dot(sys.M * s.v));
}

/// Full (unreduced) coefficient vector.
template <class Derived>
auto expand(const DiscreteSystem& sys, const Eigen::MatrixBase<Derived>& reduced) {
    using Scalar = typename Derived::Scalar;
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> out = sys.dofs.reduction.template cast<Scalar>() * reduced;
    return out;
}

/// Value (derivative order 0, 1 or 2) of the field on edge j at arclength x,
/// from a full coefficient vector.
template <class Scalar>
Scalar evaluate_full(const DiscreteSystem& sys, const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& full,
                     std::size_t edge, double x, int derivative = 0) {
    const EdgeDofs& ed = sys.dofs.edges[edge];
    auto [e, xi] = detail::locate(ed, x);
    const auto a = static_cast<std::size_t>(e), b = a + 1;
    if (ed.kind == EdgeKind::String) {
        if (derivative > 1) return Scalar(0);
        auto s = detail::string_shape(xi, ed.h);
        const double* w = derivative == 0 ? s.n : s.dn;
        return w[0] * full[ed.value[a]] + w[1] * full[ed.value[b]];
    }
    auto s = detail::beam_shape(xi, ed.h);
    const double* w = derivative == 0 ? s.n : (derivative == 1 ? s.dn : s.ddn);
    return w[0] * full[ed.value[a]] + w[1] * full[ed.slope[a]] + w[2] * full[ed.value[b]] + w[3] * full[ed.slope[b]];
}

using EdgeFunction = std::function<double(double)>;

/// Load vector b_i = sum_j int_edge g_j phi_i (8-point Gauss per element),
/// on reduced coordinates. Missing functions count as zero.
inline Vector load_vector(const DiscreteSystem& sys, const std::vector<EdgeFunction>& g) {
    Vector full = Vector::Zero(sys.dofs.full_size);
    const GaussRule& g8 = gauss_rule(8);
    for (std::size_t j = 0; j < sys.dofs.edges.size() && j < g.size(); ++j) {
        if (!g[j]) continue;
        const EdgeDofs& ed = sys.dofs.edges[j];
        for (int e = 0; e < ed.elements; ++e) {
            const auto a = static_cast<std::size_t>(e), b = a + 1;
            for (std::size_t q = 0; q < g8.nodes.size(); ++q) {
                const double x = (e + g8.nodes[q]) * ed.h;
                const double w = g8.weights[q] * ed.h * g[j](x);
                if (ed.kind == EdgeKind::String) {
                    auto s = detail::string_shape(g8.nodes[q], ed.h);
                    full[ed.value[a]] += w * s.n[0];
                    full[ed.value[b]] += w * s.n[1];
                } else {
                    auto s = detail::beam_shape(g8.nodes[q], ed.h);
                    full[ed.value[a]] += w * s.n[0];
                    full[ed.slope[a]] += w * s.n[1];
                    full[ed.value[b]] += w * s.n[2];
                    full[ed.slope[b]] += w * s.n[3];
                }
            }
        }
    }
    return sys.dofs.reduction.transpose() * full;
}

/// sqrt(sum_j int_edge |u_h - f_j|^2) with 8-point Gauss per element.
inline double l2_distance(const DiscreteSystem& sys, const Vector& reduced, const std::vector<EdgeFunction>& f) {
    const Vector full = expand(sys, reduced);
    const GaussRule& g8 = gauss_rule(8);
    double sum = 0.0;
    for (std::size_t j = 0; j < sys.dofs.edges.size(); ++j) {
        const EdgeDofs& ed = sys.dofs.edges[j];
        for (int e = 0; e < ed.elements; ++e) {
            for (std::size_t q = 0; q < g8.nodes.size(); ++q) {
                const double x = (e + g8.nodes[q]) * ed.h;
                const double uh = evaluate_full<double>(sys, full, j, x);
                const double ref = (j < f.size() && f[j]) ? f[j](x) : 0.0;
                sum += g8.weights[q] * ed.h * (uh - ref) * (uh - ref);
            }
        }
    }
    return std::sqrt(sum);
}

struct EdgeInitialData {
    EdgeFunction u0, u1;
    EdgeFunction du0, du1;  // slopes, used on beams; differenced numerically when absent
};

struct ProjectedState {
    State state;
    double correction_norm = 0.0;
};

class ProjectionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Nodal interpolation of per-edge initial data followed by the orthogonal
/// correction onto the constraint set. With `strict`, a correction above
/// `tolerance` (relative to the data scale) is an error.
inline ProjectedState project_initial_data(const DiscreteSystem& sys, const std::vector<EdgeInitialData>& data,
                                           bool strict = true, double tolerance = 1e-8) {
    const DofMap& map = sys.dofs;
    const auto full_n = static_cast<std::size_t>(map.full_size);

    auto slope_of = [](const EdgeFunction& f, const EdgeFunction& df, double x, double len) {
        if (df) return df(x);
        if (!f) return 0.0;
        const double step = 1e-4 * len;
        return (-f(x + 2 * step) + 8 * f(x + step) - 8 * f(x - step) + f(x - 2 * step)) / (12 * step);
    };

    double continuity_defect = 0.0;
    auto interpolate = [&](bool velocity) {
        Vector full = Vector::Zero(map.full_size);
        std::vector<double> vsum(full_n, 0.0), vsq(full_n, 0.0);
        std::vector<int> vcount(full_n, 0);
        for (std::size_t j = 0; j < map.edges.size(); ++j) {
            const EdgeDofs& ed = map.edges[j];
            const double len = sys.tree.edges()[j].length;
            const EdgeFunction* f = nullptr;
            const EdgeFunction* df = nullptr;
            if (j < data.size()) {
                f = velocity ? &data[j].u1 : &data[j].u0;
                df = velocity ? &data[j].du1 : &data[j].du0;
            }
            for (std::size_t node = 0; node <= static_cast<std::size_t>(ed.elements); ++node) {
                const double x = std::min(node * ed.h, len);
                const double val = (f && *f) ? (*f)(x) : 0.0;
                const auto dof = static_cast<std::size_t>(ed.value[node]);
                vsum[dof] += val;
                vsq[dof] += val * val;
                ++vcount[dof];
                if (ed.kind == EdgeKind::Beam)
                    full[ed.slope[node]] = (f && *f) ? slope_of(*f, *df, x, len) : 0.0;
            }
        }
        for (std::size_t i = 0; i < full_n; ++i) {
            if (vcount[i] == 0) continue;
            const double mean = vsum[i] / vcount[i];
            full[static_cast<Index>(i)] = mean;
            continuity_defect += std::max(0.0, vsq[i] - vcount[i] * mean * mean);
        }
        return full;
    };

    const SparseMatrix& Z = map.reduction;
    SparseMatrix ZtZ = Z.transpose() * Z;
    Eigen::SimplicialLDLT<SparseMatrix> normal(ZtZ);
    if (normal.info() != Eigen::Success) throw std::runtime_error("constraint basis is rank deficient");

    ProjectedState out;
    double sq = 0.0, scale = 1.0;
    for (bool velocity : {false, true}) {
        const Vector full = interpolate(velocity);
        Vector reduced = normal.solve(Vector(Z.transpose() * full));
        sq += (Z * reduced - full).squaredNorm();
        scale = std::max(scale, full.lpNorm<Eigen::Infinity>());
        (velocity ? out.state.v : out.state.u) = std::move(reduced);
    }
    out.correction_norm = std::sqrt(sq + continuity_defect);
    if (strict && out.correction_norm > tolerance * scale)
        throw ProjectionError("initial data violate the essential conditions (correction " +
                              std::to_string(out.correction_norm) + ")");
    return out;
}

}  // namespace netvib
