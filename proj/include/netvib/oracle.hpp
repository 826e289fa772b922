#pragma once

// Reference solutions that do not go through the finite element path.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "netvib/quadrature.hpp"

namespace netvib::oracle {

using Complex = std::complex<double>;
using std::numbers::pi;

class OracleError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// String-beam counterexample: a string and a beam of length pi joined at
// x = 0, the string fixed at x = pi, the beam tip damped at x = pi. The
// resolvent equation (A - i beta) y = f with f = (0, 0, -sin(beta x), 0) gives
//
//   u1 = c1 sin(beta x) + (c2 - x / (2 beta)) cos(beta x)
//   u2 = d1 sin(k x) + d2 cos(k x) + d3 sinh(k x) + d4 cosh(k x),  k = sqrt(beta)
//
// with the six boundary/transmission relations assembled in s0_relations.

struct S0Solution {
    double beta = 0.0;
    Complex c1, c2, d1, d2, d3, d4;
    /// d3 sinh(kx) + d4 cosh(kx) = p exp(k (x - pi)) + q exp(-k x)
    Complex p, q;
    double energy_norm = 0.0;
    double relation_residual = 0.0;
    int panels = 0;

    Complex u1(double x) const;
    Complex du1(double x) const;
    Complex u2(double x) const;
    Complex ddu2(double x) const;
};

struct S0Relations {
    Eigen::Matrix<Complex, 6, 6> matrix;
    Eigen::Matrix<Complex, 6, 1> rhs;
};

/// Rows in order: junction continuity, junction rotation, junction force
/// balance, fixed string end, clamped beam tip rotation, damped beam tip.
/// Unknowns (c1, c2, d1, d2, d3, d4).
inline S0Relations s0_relations(double beta) {
    const double k = std::sqrt(beta);
    const double k3 = beta * k;
    const double sb = std::sin(beta * pi), cb = std::cos(beta * pi);
    const double sk = std::sin(k * pi), ck = std::cos(k * pi);
    const double shk = std::sinh(k * pi), chk = std::cosh(k * pi);
    const Complex ib(0.0, beta);
    S0Relations r;
    r.matrix.setZero();
    r.rhs.setZero();
    // d2 + d4 = c2
    r.matrix(0, 1) = -1.0;
    r.matrix(0, 3) = 1.0;
    r.matrix(0, 5) = 1.0;
    // k (d1 + d3) = 0
    r.matrix(1, 2) = k;
    r.matrix(1, 4) = k;
    // k^3 (-d1 + d3) = -1/(2 beta) + beta c1
    r.matrix(2, 0) = -beta;
    r.matrix(2, 2) = -k3;
    r.matrix(2, 4) = k3;
    r.rhs(2) = -1.0 / (2.0 * beta);
    // c1 sin(beta pi) + (c2 - pi/(2 beta)) cos(beta pi) = 0
    r.matrix(3, 0) = sb;
    r.matrix(3, 1) = cb;
    r.rhs(3) = pi / (2.0 * beta) * cb;
    // d1 cos - d2 sin + d3 cosh + d4 sinh = 0  (at k pi)
    r.matrix(4, 2) = ck;
    r.matrix(4, 3) = -sk;
    r.matrix(4, 4) = chk;
    r.matrix(4, 5) = shk;
    // k^3 (-d1 cos + d2 sin + d3 cosh + d4 sinh) = i beta (d1 sin + d2 cos + d3 sinh + d4 cosh)
    r.matrix(5, 2) = -k3 * ck - ib * sk;
    r.matrix(5, 3) = k3 * sk - ib * ck;
    r.matrix(5, 4) = k3 * chk - ib * shk;
    r.matrix(5, 5) = k3 * shk - ib * chk;
    return r;
}

/// Componentwise relative residual max_i |(Ax - b)_i| / (sum_j |a_ij x_j| + |b_i|).
inline double s0_relation_residual(const S0Relations& r, const Eigen::Matrix<Complex, 6, 1>& x) {
    double worst = 0.0;
    for (int i = 0; i < 6; ++i) {
        Complex s = -r.rhs(i);
        double scale = std::abs(r.rhs(i));
        for (int j = 0; j < 6; ++j) {
            s += r.matrix(i, j) * x(j);
            scale += std::abs(r.matrix(i, j) * x(j));
        }
        if (scale > 0.0) worst = std::max(worst, std::abs(s) / scale);
    }
    return worst;
}

inline Complex S0Solution::u1(double x) const {
    return c1 * std::sin(beta * x) + (c2 - x / (2.0 * beta)) * std::cos(beta * x);
}
inline Complex S0Solution::du1(double x) const {
    return c1 * beta * std::cos(beta * x) - std::cos(beta * x) / (2.0 * beta) -
           (c2 - x / (2.0 * beta)) * beta * std::sin(beta * x);
}
inline Complex S0Solution::u2(double x) const {
    const double k = std::sqrt(beta);
    return d1 * std::sin(k * x) + d2 * std::cos(k * x) + p * std::exp(k * (x - pi)) + q * std::exp(-k * x);
}
inline Complex S0Solution::ddu2(double x) const {
    const double k = std::sqrt(beta);
    return beta * (-d1 * std::sin(k * x) - d2 * std::cos(k * x) + p * std::exp(k * (x - pi)) + q * std::exp(-k * x));
}

struct S0Quadrature {
    int min_panels = 64;
    int panels_per_wavelength = 8;
    int panel_multiplier = 1;  // doubling this checks quadrature convergence
};

/// Solves the six relations and evaluates ||y||_H by composite Gauss
/// quadrature. The hyperbolic pair is solved in the scaled basis
/// exp(k(x - pi)), exp(-k x) so that large beta does not overflow or cancel.
inline S0Solution s0_solve(double beta, const S0Quadrature& quad = {}) {
    if (!(beta > 0.0)) throw OracleError("beta must be positive");
    const double k = std::sqrt(beta);
    const double k3 = beta * k;
    const double sb = std::sin(beta * pi), cb = std::cos(beta * pi);
    const double sk = std::sin(k * pi), ck = std::cos(k * pi);
    const double e = std::exp(-k * pi);
    const Complex ib(0.0, beta);

    // unknowns (c1, c2, d1, d2, p, q); d3 = p e - q, d4 = p e + q
    Eigen::Matrix<Complex, 6, 6> a = Eigen::Matrix<Complex, 6, 6>::Zero();
    Eigen::Matrix<Complex, 6, 1> b = Eigen::Matrix<Complex, 6, 1>::Zero();
    a(0, 1) = -1.0; a(0, 3) = 1.0; a(0, 4) = e; a(0, 5) = 1.0;
    a(1, 2) = 1.0;  a(1, 4) = e;   a(1, 5) = -1.0;
    a(2, 0) = -beta; a(2, 2) = -k3; a(2, 4) = k3 * e; a(2, 5) = -k3;
    b(2) = -1.0 / (2.0 * beta);
    a(3, 0) = sb; a(3, 1) = cb;
    b(3) = pi / (2.0 * beta) * cb;
    // at x = pi: d3 cosh + d4 sinh = p - q e,  d3 sinh + d4 cosh = p + q e
    a(4, 2) = ck; a(4, 3) = -sk; a(4, 4) = 1.0; a(4, 5) = -e;
    a(5, 2) = -k3 * ck - ib * sk;
    a(5, 3) = k3 * sk - ib * ck;
    a(5, 4) = k3 - ib;
    a(5, 5) = -k3 * e - ib * e;

    // row equilibration before pivoting
    for (int i = 0; i < 6; ++i) {
        const double s = a.row(i).cwiseAbs().maxCoeff();
        a.row(i) /= s;
        b(i) /= s;
    }
    Eigen::FullPivLU<Eigen::Matrix<Complex, 6, 6>> lu(a);
    if (!lu.isInvertible()) throw OracleError("singular relation system: i*beta is an eigenvalue");
    const Eigen::Matrix<Complex, 6, 1> x = lu.solve(b);
    if (!x.allFinite()) throw OracleError("singular relation system: i*beta is an eigenvalue");

    S0Solution s;
    s.beta = beta;
    s.c1 = x(0);
    s.c2 = x(1);
    s.d1 = x(2);
    s.d2 = x(3);
    s.p = x(4);
    s.q = x(5);
    s.d3 = s.p * e - s.q;
    s.d4 = s.p * e + s.q;

    Eigen::Matrix<Complex, 6, 1> literal;
    literal << s.c1, s.c2, s.d1, s.d2, s.d3, s.d4;
    s.relation_residual = s0_relation_residual(s0_relations(beta), literal);

    const double wavelengths = std::max(beta, k) / 2.0;  // over [0, pi]
    long long panels = std::max<long long>(quad.min_panels,
                                           static_cast<long long>(std::ceil(quad.panels_per_wavelength * wavelengths)));
    panels *= quad.panel_multiplier;
    if (panels > 50'000'000) throw OracleError("quadrature panel count overflow");
    s.panels = static_cast<int>(panels);

    const double b2 = beta * beta;
    auto integrand = [&](double xx) {
        return std::norm(s.du1(xx)) + b2 * std::norm(s.u1(xx)) + std::norm(s.ddu2(xx)) + b2 * std::norm(s.u2(xx));
    };
    s.energy_norm = std::sqrt(integrate(integrand, 0.0, pi, s.panels));
    return s;
}

struct BlowupRow {
    long long n = 0;
    double beta_n = 0.0;
    double norm = 0.0;
    double ratio = 0.0;  // Re(2 beta^{3/2} d1) / (pi^2 sqrt(n))
};

inline double blowup_beta(long long n) {
    const double nn = static_cast<double>(n);
    return nn * nn + 2.0 * std::sqrt(nn) + 1.0 / nn;
}

inline std::vector<BlowupRow> s0_blowup(std::vector<long long> ns) {
    std::sort(ns.begin(), ns.end());
    std::vector<BlowupRow> rows;
    for (long long n : ns) {
        if (n <= 0) throw OracleError("n must be positive");
        const auto r = static_cast<long long>(std::llround(std::sqrt(static_cast<double>(n))));
        if (r * r != n || r % 2 != 0)
            throw OracleError("n = " + std::to_string(n) + " must be a perfect square with an even root");
        BlowupRow row;
        row.n = n;
        row.beta_n = blowup_beta(n);
        const S0Solution s = s0_solve(row.beta_n);
        row.norm = s.energy_norm;
        row.ratio = (2.0 * std::pow(row.beta_n, 1.5) * s.d1).real() / (pi * pi * static_cast<double>(r));
        rows.push_back(row);
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Single damped string on [0, L]: u(0) = 0, u_x(L) = -u_t(L). Solution
// u = F(x - t) + G(x + t); the Dirichlet end reflects with a sign change and
// the damped end absorbs everything, so the string is at rest for t >= 2L.

class DAlembertString {
public:
    using Fn = std::function<double(double)>;

    /// u1 may be empty (zero velocity). du0 is differenced numerically when empty.
    DAlembertString(double length, Fn u0, Fn u1 = {}, Fn du0 = {})
        : length_(length), u0_(std::move(u0)), u1_(std::move(u1)), du0_(std::move(du0)) {
        if (!(length > 0.0)) throw OracleError("length must be positive");
    }

    double displacement(double x, double t) const { return F(x - t) + G(x + t); }
    double velocity(double x, double t) const { return -dF(x - t) + dG(x + t); }
    double slope(double x, double t) const { return dF(x - t) + dG(x + t); }

    /// 1/2 int (u_t^2 + u_x^2) by composite Gauss.
    double energy(double t, int panels = 512) const {
        return 0.5 * integrate([&](double x) {
                   const double a = velocity(x, t), b = slope(x, t);
                   return a * a + b * b;
               }, 0.0, length_, panels);
    }

    double length() const noexcept { return length_; }

private:
    double W(double s) const {
        if (!u1_ || s <= 0.0) return 0.0;
        const int panels = std::max(1, static_cast<int>(std::ceil(64.0 * s / length_)));
        return integrate(u1_, 0.0, s, panels);
    }
    double u0d(double s) const {
        if (du0_) return du0_(s);
        const double h = 1e-5 * length_;
        const double a = std::max(0.0, s - h), b = std::min(length_, s + h);
        return (u0_(b) - u0_(a)) / (b - a);
    }
    double G(double s) const {
        s = std::min(s, length_);
        return 0.5 * (u0_(s) + W(s));
    }
    double dG(double s) const {
        if (s > length_) return 0.0;
        return 0.5 * (u0d(s) + (u1_ ? u1_(s) : 0.0));
    }
    double F(double s) const {
        if (s < 0.0) return -G(-s);
        return 0.5 * (u0_(s) - W(s));
    }
    double dF(double s) const {
        if (s < 0.0) return dG(-s);
        return 0.5 * (u0d(s) - (u1_ ? u1_(s) : 0.0));
    }

    double length_;
    Fn u0_, u1_, du0_;
};

inline DAlembertString dalembert_string(double length, DAlembertString::Fn u0, DAlembertString::Fn u1 = {},
                                        DAlembertString::Fn du0 = {}) {
    return DAlembertString(length, std::move(u0), std::move(u1), std::move(du0));
}

// ---------------------------------------------------------------------------
// Single beam on [0, L], root at x = 0. Eigenvalues l solve u'''' = -l^2 u
// with boundary conditions; the boundary matrix is built from the Krylov
// functions S, T, U, V of u'''' = mu u (mu = -l^2), which are entire in l.

enum class BeamConfig {
    PinnedDamped,   // u = u'' = 0 at root; u' = 0, u''' = l u at the tip
    ClampedDamped,  // u = u' = 0 at root; damped tip
    PinnedClamped,  // undamped: u = u'' = 0 at root; u = u' = 0 at the tip
    PinnedGuided,   // undamped: u = u'' = 0 at root; u' = u''' = 0 at the tip
};

struct SearchRectangle {
    double re_min, re_max, im_min, im_max;
};

namespace detail {

struct Krylov {
    Complex S, T, U, V;
};

inline Krylov krylov(Complex mu, double x) {
    const Complex k = std::sqrt(std::sqrt(mu));
    if (std::abs(k) * x < 0.5) {
        // power series in mu x^4
        Krylov r{0.0, 0.0, 0.0, 0.0};
        Complex term = 1.0;  // mu^n x^{4n}
        double f0 = 1.0, f1 = 1.0, f2 = 2.0, f3 = 6.0;  // (4n)!, (4n+1)!, ...
        for (int nn = 0; nn < 12; ++nn) {
            r.S += term / f0;
            r.T += term * x / f1;
            r.U += term * x * x / f2;
            r.V += term * x * x * x / f3;
            term *= mu * x * x * x * x;
            const double b = 4.0 * nn;
            f0 = f3 * (b + 4);
            f1 = f0 * (b + 5);
            f2 = f1 * (b + 6);
            f3 = f2 * (b + 7);
        }
        return r;
    }
    const Complex kx = k * x;
    const Complex ch = std::cosh(kx), c = std::cos(kx), sh = std::sinh(kx), s = std::sin(kx);
    return {(ch + c) / 2.0, (sh + s) / (2.0 * k), (ch - c) / (2.0 * k * k), (sh - s) / (2.0 * k * k * k)};
}

}  // namespace detail

/// Boundary matrix acting on (u(0), u'(0), u''(0), u'''(0)).
inline Eigen::Matrix4cd beam_boundary_matrix(BeamConfig config, double length, Complex lambda) {
    const Complex mu = -lambda * lambda;
    const auto [S, T, U, V] = detail::krylov(mu, length);
    Eigen::Matrix4cd m = Eigen::Matrix4cd::Zero();
    m(0, 0) = 1.0;  // u(0) = 0 in every configuration
    if (config == BeamConfig::ClampedDamped) m(1, 1) = 1.0;
    else m(1, 2) = 1.0;
    const Eigen::RowVector4cd u{S, T, U, V};
    const Eigen::RowVector4cd du{mu * V, S, T, U};
    const Eigen::RowVector4cd d3u{mu * T, mu * U, mu * V, S};
    switch (config) {
        case BeamConfig::PinnedDamped:
        case BeamConfig::ClampedDamped:
            m.row(2) = du;
            m.row(3) = d3u - lambda * u;
            break;
        case BeamConfig::PinnedClamped:
            m.row(2) = u;
            m.row(3) = du;
            break;
        case BeamConfig::PinnedGuided:
            m.row(2) = du;
            m.row(3) = d3u;
            break;
    }
    return m;
}

inline Complex beam_determinant(BeamConfig config, double length, Complex lambda) {
    return beam_boundary_matrix(config, length, lambda).determinant();
}

/// Smallest singular value of the row-normalized boundary matrix.
inline double beam_root_residual(BeamConfig config, double length, Complex lambda) {
    Eigen::Matrix4cd m = beam_boundary_matrix(config, length, lambda);
    for (int i = 0; i < 4; ++i) m.row(i) /= m.row(i).norm();
    Eigen::JacobiSVD<Eigen::Matrix4cd> svd(m);
    return svd.singularValues()(3);
}

namespace detail {

/// Total change of arg f along the segment, bisecting until each step turns
/// by less than 0.5 rad.
template <class F>
double arg_change(const F& f, Complex a, Complex b, Complex fa, Complex fb, int depth) {
    const double d = std::arg(fb / fa);
    if (std::abs(d) < 0.5 || depth > 30) return d;
    const Complex m = 0.5 * (a + b);
    const Complex fm = f(m);
    return arg_change(f, a, m, fa, fm, depth + 1) + arg_change(f, m, b, fm, fb, depth + 1);
}

template <class F>
int count_zeros(const F& f, const SearchRectangle& r) {
    const std::array<Complex, 4> corners{Complex(r.re_min, r.im_min), Complex(r.re_max, r.im_min),
                                         Complex(r.re_max, r.im_max), Complex(r.re_min, r.im_max)};
    double total = 0.0;
    for (int s = 0; s < 4; ++s) {
        const Complex a = corners[static_cast<std::size_t>(s)], b = corners[static_cast<std::size_t>((s + 1) % 4)];
        const int pieces = 32;
        Complex prev = a, fprev = f(a);
        for (int i = 1; i <= pieces; ++i) {
            const Complex z = a + (b - a) * (static_cast<double>(i) / pieces);
            const Complex fz = f(z);
            if (fz == 0.0 || fprev == 0.0) throw OracleError("root on the search contour");
            total += arg_change(f, prev, z, fprev, fz, 0);
            prev = z;
            fprev = fz;
        }
    }
    return static_cast<int>(std::lround(total / (2.0 * pi)));
}

}  // namespace detail

/// Roots inside the rectangle, located by argument-principle counting and
/// Newton polishing.
inline std::vector<Complex> beam_characteristic_roots(BeamConfig config, double length, const SearchRectangle& rect,
                                                      double residual_tol = 1e-10) {
    if (!(length > 0.0)) throw OracleError("length must be positive");
    auto f = [&](Complex z) { return beam_determinant(config, length, z); };
    std::vector<Complex> roots;

    auto newton = [&](Complex z) -> std::optional<Complex> {
        for (int it = 0; it < 60; ++it) {
            const double h = 1e-7 * std::max(1.0, std::abs(z));
            const Complex fz = f(z);
            const Complex df = (f(z + h) - f(z - h)) / (2.0 * h);
            if (df == 0.0) return std::nullopt;
            const Complex dz = fz / df;
            z -= dz;
            if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return std::nullopt;
            if (std::abs(dz) <= 1e-14 * std::max(1.0, std::abs(z))) return z;
        }
        return z;
    };
    auto inside = [](const SearchRectangle& r, Complex z) {
        return z.real() >= r.re_min && z.real() <= r.re_max && z.imag() >= r.im_min && z.imag() <= r.im_max;
    };

    std::function<void(const SearchRectangle&, int, int)> locate = [&](const SearchRectangle& r, int count, int depth) {
        if (count == 0) return;
        if (count < 0) throw OracleError("negative root count");
        if (depth > 60) throw OracleError("root count mismatch between counting and polishing");
        const double w = r.re_max - r.re_min, h = r.im_max - r.im_min;
        if (count == 1) {
            auto z = newton(Complex(r.re_min + 0.5 * w, r.im_min + 0.5 * h));
            if (z && inside(r, *z) && beam_root_residual(config, length, *z) <= residual_tol) {
                roots.push_back(*z);
                return;
            }
        }
        for (double frac : {0.5123, 0.4671, 0.5437}) {
            SearchRectangle a = r, b = r;
            if (w >= h) {
                a.re_max = b.re_min = r.re_min + frac * w;
            } else {
                a.im_max = b.im_min = r.im_min + frac * h;
            }
            int ca = 0, cb = 0;
            try {
                ca = detail::count_zeros(f, a);
                cb = detail::count_zeros(f, b);
            } catch (const OracleError&) {
                continue;
            }
            if (ca + cb != count) continue;
            locate(a, ca, depth + 1);
            locate(b, cb, depth + 1);
            return;
        }
        throw OracleError("root count mismatch between counting and polishing");
    };

    const int total = detail::count_zeros(f, rect);
    locate(rect, total, 0);
    if (static_cast<int>(roots.size()) != total) throw OracleError("root count mismatch between counting and polishing");
    std::sort(roots.begin(), roots.end(), [](Complex a, Complex b) {
        return a.imag() != b.imag() ? a.imag() < b.imag() : a.real() < b.real();
    });
    return roots;
}

}  // namespace netvib::oracle
