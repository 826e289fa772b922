#pragma once

// Line-oriented text format for tree networks (".tree").
//
//   # comment
//   root a1
//   edge e1 string a1 -> a2 length=3.141592653589793
//
// Vertices are introduced by their first mention. "a -> b" places x = 0 at a.

#include <cctype>
#include <charconv>
#include <cstdio>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "netvib/topology.hpp"

namespace netvib {

struct ParseDiagnostic {
    std::size_t line = 1;    // 1-based
    std::size_t column = 1;  // 1-based
    std::string message;

    std::string format(std::string_view source_name = "<input>") const {
        return std::string(source_name) + ":" + std::to_string(line) + ":" + std::to_string(column) +
               ": error: " + message;
    }
};

struct ParseResult {
    std::optional<TreeNetwork> tree;
    std::vector<ParseDiagnostic> diagnostics;

    bool ok() const noexcept { return tree.has_value(); }
};

namespace detail {

struct Token {
    std::string_view text;
    std::size_t column;  // 1-based
};

inline std::vector<Token> split_tokens(std::string_view line) {
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
        if (i >= line.size()) break;
        std::size_t start = i;
        while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
        out.push_back({line.substr(start, i - start), start + 1});
    }
    return out;
}

inline bool is_ident(std::string_view s) {
    if (s.empty()) return false;
    auto c0 = static_cast<unsigned char>(s[0]);
    if (!(std::isalpha(c0) || s[0] == '_')) return false;
    for (char ch : s) {
        auto c = static_cast<unsigned char>(ch);
        if (!(std::isalnum(c) || ch == '_')) return false;
    }
    return true;
}

/// Decimal literal with optional sign, fraction and exponent. No hex, inf or nan.
inline std::optional<double> parse_number(std::string_view s) {
    std::size_t i = 0;
    if (i < s.size() && (s[i] == '+' || s[i] == '-')) ++i;
    std::size_t digits = 0;
    while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i, ++digits;
    if (i < s.size() && s[i] == '.') {
        ++i;
        while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i, ++digits;
    }
    if (digits == 0) return std::nullopt;
    if (i < s.size() && (s[i] == 'e' || s[i] == 'E')) {
        ++i;
        if (i < s.size() && (s[i] == '+' || s[i] == '-')) ++i;
        std::size_t exp_digits = 0;
        while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i, ++exp_digits;
        if (exp_digits == 0) return std::nullopt;
    }
    if (i != s.size()) return std::nullopt;
    std::string_view body = s;
    if (!body.empty() && body[0] == '+') body.remove_prefix(1);
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(body.data(), body.data() + body.size(), value);
    if (ec != std::errc() || ptr != body.data() + body.size()) return std::nullopt;
    return value;
}

}  // namespace detail

inline ParseResult parse(std::string_view source) {
    ParseResult result;
    auto error = [&](std::size_t line, std::size_t col, std::string msg) {
        result.diagnostics.push_back({line, col, std::move(msg)});
    };

    std::optional<std::string> root;
    std::size_t root_line = 0;
    std::vector<std::string> vertices;
    std::set<std::string> known_vertices;
    std::vector<Edge> edges;
    std::vector<std::size_t> edge_lines;
    std::set<std::string> edge_ids;

    auto mention = [&](std::string_view v) {
        std::string s(v);
        if (known_vertices.insert(s).second) vertices.push_back(s);
    };

    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= source.size()) {
        std::size_t nl = source.find('\n', pos);
        std::size_t end = nl == std::string_view::npos ? source.size() : nl;
        std::string_view line = source.substr(pos, end - pos);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        ++line_no;
        pos = end + 1;
        const bool last = nl == std::string_view::npos;

        auto toks = detail::split_tokens(line);
        if (toks.empty() || toks[0].text.front() == '#') {
            if (last) break;
            continue;
        }

        const std::string_view head = toks[0].text;
        if (head == "root") {
            if (toks.size() != 2) {
                error(line_no, toks.size() < 2 ? line.size() + 1 : toks[2].column,
                      "root directive expects exactly one vertex identifier");
            } else if (!detail::is_ident(toks[1].text)) {
                error(line_no, toks[1].column, "invalid identifier '" + std::string(toks[1].text) + "'");
            } else if (root) {
                error(line_no, 1, "duplicate root directive (first at line " + std::to_string(root_line) + ")");
            } else {
                root = std::string(toks[1].text);
                root_line = line_no;
                mention(toks[1].text);
            }
        } else if (head == "edge") {
            // edge IDENT kind IDENT -> IDENT length=NUMBER
            auto expect_at = [&](std::size_t i) {
                return i < toks.size() ? toks[i].column : line.size() + 1;
            };
            bool ok = true;
            auto need = [&](std::size_t i, std::string_view what) {
                if (i >= toks.size()) {
                    error(line_no, expect_at(i), "expected " + std::string(what));
                    ok = false;
                }
                return ok;
            };
            Edge e;
            if (need(1, "edge identifier")) {
                if (!detail::is_ident(toks[1].text)) {
                    error(line_no, toks[1].column, "invalid identifier '" + std::string(toks[1].text) + "'");
                    ok = false;
                } else {
                    e.id = std::string(toks[1].text);
                }
            }
            if (ok && need(2, "edge kind")) {
                if (toks[2].text == "string") e.kind = EdgeKind::String;
                else if (toks[2].text == "beam") e.kind = EdgeKind::Beam;
                else {
                    error(line_no, toks[2].column, "unknown edge kind '" + std::string(toks[2].text) + "'");
                    ok = false;
                }
            }
            if (ok && need(3, "tail vertex")) {
                if (!detail::is_ident(toks[3].text)) {
                    error(line_no, toks[3].column, "invalid identifier '" + std::string(toks[3].text) + "'");
                    ok = false;
                } else {
                    e.tail = std::string(toks[3].text);
                }
            }
            if (ok && need(4, "'->'")) {
                if (toks[4].text != "->") {
                    error(line_no, toks[4].column, "expected '->', found '" + std::string(toks[4].text) + "'");
                    ok = false;
                }
            }
            if (ok && need(5, "head vertex")) {
                if (!detail::is_ident(toks[5].text)) {
                    error(line_no, toks[5].column, "invalid identifier '" + std::string(toks[5].text) + "'");
                    ok = false;
                } else {
                    e.head = std::string(toks[5].text);
                }
            }
            if (ok && need(6, "'length=NUMBER'")) {
                constexpr std::string_view prefix = "length=";
                std::string_view t = toks[6].text;
                if (t.substr(0, prefix.size()) != prefix) {
                    error(line_no, toks[6].column, "expected 'length=NUMBER', found '" + std::string(t) + "'");
                    ok = false;
                } else if (auto value = detail::parse_number(t.substr(prefix.size()))) {
                    e.length = *value;
                } else {
                    error(line_no, toks[6].column + prefix.size(),
                          "malformed number '" + std::string(t.substr(prefix.size())) + "'");
                    ok = false;
                }
            }
            if (ok && toks.size() > 7) {
                error(line_no, toks[7].column, "unexpected token '" + std::string(toks[7].text) + "'");
                ok = false;
            }
            if (ok && !edge_ids.insert(e.id).second) {
                error(line_no, toks[1].column, "duplicate edge id '" + e.id + "'");
                ok = false;
            }
            if (ok && !(e.length > 0.0)) {
                error(line_no, toks[6].column + 7, "edge length must be positive");
                ok = false;
            }
            if (ok) {
                mention(e.tail);
                mention(e.head);
                edges.push_back(std::move(e));
                edge_lines.push_back(line_no);
            }
        } else {
            error(line_no, toks[0].column, "unknown directive '" + std::string(head) + "'");
        }
        if (last) break;
    }

    if (!root && result.diagnostics.empty()) error(1, 1, "missing root directive");
    if (!result.diagnostics.empty()) return result;

    try {
        result.tree = build_tree(std::move(vertices), std::move(edges), *root);
    } catch (const TopologyError& err) {
        std::size_t line = root_line;
        if (err.edge_index() && *err.edge_index() < edge_lines.size()) line = edge_lines[*err.edge_index()];
        error(line, 1, err.what());
    }
    return result;
}

inline std::string format_length(double value) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

inline std::string serialize(const TreeNetwork& tree) {
    std::string out = "root " + tree.root() + "\n";
    for (const Edge& e : tree.edges()) {
        out += "edge " + e.id + " " + std::string(to_string(e.kind)) + " " + e.tail + " -> " + e.head +
               " length=" + format_length(e.length) + "\n";
    }
    return out;
}

}  // namespace netvib
