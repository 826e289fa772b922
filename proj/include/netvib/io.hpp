#pragma once

// JSON and CSV writers for analysis results.

#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "netvib/evolve.hpp"
#include "netvib/oracle.hpp"
#include "netvib/spectral.hpp"
#include "netvib/topology.hpp"

namespace netvib::io {

using json = nlohmann::ordered_json;

inline json to_json(const StabilityClass& c) {
    return json{{"class", std::string(to_string(c.tag))}, {"rate", c.predicted_rate}};
}

inline json to_json(const SpectrumReport& r) {
    json eig = json::array();
    for (std::size_t i = 0; i < r.eigenvalues.size(); ++i)
        eig.push_back({{"re", r.eigenvalues[i].real()}, {"im", r.eigenvalues[i].imag()}, {"residual", r.residuals[i]}});
    json out{{"eigenvalues", eig}};
    out["abscissa"] = r.eigenvalues.empty() ? json(nullptr) : json(spectral_abscissa(r));
    return out;
}

namespace detail {
template <class Mat>
json matrix_json(const Mat& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(row);
    }
    return rows;
}
}  // namespace detail

inline json to_json(const JCertificate& c, const TreeNetwork& tree) {
    json kept = json::array();
    for (std::size_t k : c.kept) kept.push_back(tree.vertices()[k]);
    return json{{"beta", c.beta},
                {"vertices", tree.vertices()},
                {"adjacency", detail::matrix_json(c.adjacency)},
                {"starred_adjacency", detail::matrix_json(c.starred_adjacency)},
                {"length_matrix", detail::matrix_json(c.length_matrix)},
                {"J", detail::matrix_json(c.J)},
                {"kept", kept},
                {"reduced", detail::matrix_json(c.reduced)},
                {"dominant", c.dominant},
                {"margin", c.margin}};
}

/// Header "beta,norm".
inline void write_csv(std::ostream& os, const ResolventCurve& c) {
    os << "beta,norm\n";
    for (std::size_t i = 0; i < c.betas.size(); ++i) os << format_g17(c.betas[i]) << ',' << format_g17(c.norms[i]) << '\n';
}

/// Header "n,beta,norm,ratio".
inline void write_csv(std::ostream& os, const std::vector<oracle::BlowupRow>& rows) {
    os << "n,beta,norm,ratio\n";
    for (const auto& r : rows)
        os << r.n << ',' << format_g17(r.beta_n) << ',' << format_g17(r.norm) << ',' << format_g17(r.ratio) << '\n';
}

}  // namespace netvib::io
