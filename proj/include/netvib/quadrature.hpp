#pragma once

#include <cmath>
#include <numbers>
#include <vector>

namespace netvib {

/// Gauss-Legendre rule mapped to [0, 1].
struct GaussRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

inline GaussRule make_gauss_rule(int n) {
    GaussRule rule;
    rule.nodes.resize(static_cast<std::size_t>(n));
    rule.weights.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        // Newton on P_n starting from the Chebyshev-like guess
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = pk;
            }
            double pn = n == 0 ? 1.0 : p1;
            double pn1 = n == 0 ? 0.0 : p0;
            dp = n * (x * pn - pn1) / (x * x - 1.0);
            double dx = pn / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        rule.nodes[static_cast<std::size_t>(i)] = 0.5 * (1.0 - x);
        rule.weights[static_cast<std::size_t>(i)] = 1.0 / ((1.0 - x * x) * dp * dp);
    }
    return rule;
}

inline const GaussRule& gauss_rule(int n) {
    static const GaussRule g4 = make_gauss_rule(4);
    static const GaussRule g8 = make_gauss_rule(8);
    if (n == 4) return g4;
    if (n == 8) return g8;
    thread_local GaussRule other;
    other = make_gauss_rule(n);
    return other;
}

/// Composite Gauss quadrature of f over [a, b].
template <class F>
auto integrate(F&& f, double a, double b, int panels, int points = 8) {
    const GaussRule& rule = gauss_rule(points);
    const double h = (b - a) / panels;
    decltype(f(a)) sum{};
    for (int p = 0; p < panels; ++p) {
        const double x0 = a + p * h;
        for (std::size_t q = 0; q < rule.nodes.size(); ++q) sum += rule.weights[q] * h * f(x0 + rule.nodes[q] * h);
    }
    return sum;
}

}  // namespace netvib
