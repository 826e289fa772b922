#pragma once

// Spectral analysis of the discrete generator
//
//     A = [ 0        I      ]      acting on y = (u, v),
//         [ -M^-1 K  -M^-1 B ]
//
// whose eigenvalues solve the quadratic problem (l^2 M + l B + K) x = 0, and
// whose resolvent is measured in the energy norm G = blockdiag(K, M).

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdlib>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include "netvib/evolve.hpp"
#include "netvib/fem.hpp"
#include "netvib/topology.hpp"

namespace netvib {

using ComplexSparse = Eigen::SparseMatrix<Complex>;
using ComplexMatrix = Eigen::MatrixXcd;

class SpectralError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Worker count: NETVIB_THREADS if set, otherwise the machine parallelism.
inline int default_threads() {
    if (const char* env = std::getenv("NETVIB_THREADS")) {
        int n = std::atoi(env);
        if (n > 0) return n;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

namespace detail {

inline double norm1(const SparseMatrix& a) {
    double best = 0.0;
    for (Index c = 0; c < a.outerSize(); ++c) {
        double s = 0.0;
        for (SparseMatrix::InnerIterator it(a, c); it; ++it) s += std::abs(it.value());
        best = std::max(best, s);
    }
    return best;
}

inline ComplexSparse to_complex(const SparseMatrix& a) { return a.cast<Complex>(); }

inline Eigen::VectorXcd random_complex(Index n, unsigned seed) {
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Eigen::VectorXcd v(n);
    for (Index i = 0; i < n; ++i) v[i] = Complex(dist(gen), dist(gen));
    return v;
}

/// Root of (x'Mx) l^2 + (x'Bx) l + x'Kx = 0 nearest `guess`.
inline Complex quadratic_rayleigh(const DiscreteSystem& sys, const Eigen::VectorXcd& x, Complex guess) {
    const auto form = [&](const SparseMatrix& a) { return x.dot(a.cast<Complex>() * x).real(); };
    const double m = form(sys.M), b = form(sys.B), k = form(sys.K);
    const double disc = b * b - 4.0 * m * k;
    Complex r1, r2;
    if (disc < 0.0) {
        r1 = Complex(-b, std::sqrt(-disc)) / (2.0 * m);
        r2 = std::conj(r1);
    } else {
        const double q = -0.5 * (b + std::sqrt(disc));
        r1 = q / m;
        r2 = q != 0.0 ? k / q : 0.0;
    }
    return std::abs(r1 - guess) <= std::abs(r2 - guess) ? r1 : r2;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Undamped modes

struct UndampedModes {
    Vector omega_squared;  // ascending
    Eigen::MatrixXd modes; // columns, M-orthonormal
};

/// Lowest `count` eigenpairs of K x = w^2 M x by block inverse iteration with
/// Rayleigh-Ritz.
inline UndampedModes undamped_modes(const DiscreteSystem& sys, int count, double tol = 1e-10) {
    const Index n = sys.size();
    if (count <= 0 || count > n) throw SpectralError("mode count must lie in [1, dimension]");
    const Index p = std::min<Index>(n, count + 8);

    auto ritz = [&](const Eigen::MatrixXd& y) {
        Eigen::MatrixXd kr = y.transpose() * (sys.K * y);
        Eigen::MatrixXd mr = y.transpose() * (sys.M * y);
        kr = 0.5 * (kr + kr.transpose()).eval();
        mr = 0.5 * (mr + mr.transpose()).eval();
        Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(kr, mr);
        if (es.info() != Eigen::Success) throw SpectralError("Rayleigh-Ritz step failed");
        return std::make_pair(Vector(es.eigenvalues()), Eigen::MatrixXd(y * es.eigenvectors()));
    };

    if (p == n) {
        auto [vals, vecs] = ritz(Eigen::MatrixXd::Identity(n, n));
        return {vals.head(count), vecs.leftCols(count)};
    }

    Eigen::SimplicialLDLT<SparseMatrix> kfac(sys.K);
    if (kfac.info() != Eigen::Success) throw SpectralError("stiffness factorization failed");
    std::mt19937_64 gen(12345);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Eigen::MatrixXd x(n, p);
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < p; ++j) x(i, j) = dist(gen);

    Vector previous = Vector::Constant(p, std::numeric_limits<double>::infinity());
    for (int it = 0; it < 2000; ++it) {
        Eigen::MatrixXd y = kfac.solve(Eigen::MatrixXd(sys.M * x));
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(y);
        y = qr.householderQ() * Eigen::MatrixXd::Identity(n, p);
        auto [vals, vecs] = ritz(y);
        x = vecs;
        double change = 0.0;
        for (int k = 0; k < count; ++k) change = std::max(change, std::abs(vals[k] - previous[k]) / std::abs(vals[k]));
        previous = vals;
        if (change < tol) return {vals.head(count), x.leftCols(count)};
    }
    throw SpectralError("undamped mode iteration did not converge");
}

// ---------------------------------------------------------------------------
// Quadratic eigenvalue problem

struct EigenOptions {
    double residual_tol = 1e-8;
    double pair_tol = 1e-8;
    int max_subspace = 0;  // 0: automatic
    unsigned seed = 7;
};

struct SpectrumReport {
    std::vector<Complex> eigenvalues;
    std::vector<double> residuals;  // normwise backward error of each pair
    ComplexMatrix vectors;          // columns; displacement part x
    int requested = 0;
    Complex shift{};
    int subspace_dim = 0;
};

inline double qep_backward_error(const DiscreteSystem& sys, Complex lambda, const Eigen::VectorXcd& x) {
    const Eigen::VectorXcd r = lambda * lambda * (sys.M.cast<Complex>() * x) + lambda * (sys.B.cast<Complex>() * x) +
                               sys.K.cast<Complex>() * x;
    const double scale = std::norm(lambda) * detail::norm1(sys.M) + std::abs(lambda) * detail::norm1(sys.B) +
                         detail::norm1(sys.K);
    return r.norm() / (scale * x.norm());
}

/// The `count` eigenvalues nearest `shift`, by shift-invert Arnoldi on the
/// first companion linearization. Non-real eigenvalues whose conjugate was not
/// among the nearest are completed with it, so the report is closed under
/// conjugation.
inline SpectrumReport quadratic_eigenvalues(const DiscreteSystem& sys, int count, Complex shift = {-0.05, 1.0},
                                            const EigenOptions& opt = {}) {
    const Index n = sys.size();
    const Index N = 2 * n;
    if (count <= 0) throw SpectralError("eigenvalue count must be positive");
    if (count > N) throw SpectralError("eigenvalue count exceeds the problem dimension");

    const ComplexSparse Mc = detail::to_complex(sys.M);
    const ComplexSparse Bc = detail::to_complex(sys.B);
    const ComplexSparse Kc = detail::to_complex(sys.K);
    ComplexSparse P = Kc + shift * Bc + (shift * shift) * Mc;
    P.makeCompressed();
    Eigen::SparseLU<ComplexSparse, Eigen::COLAMDOrdering<int>> lu;
    lu.compute(P);
    if (lu.info() != Eigen::Success) throw SpectralError("shift is (numerically) an eigenvalue");
    const ComplexSparse BsM = Bc + shift * Mc;

    auto apply = [&](const Eigen::VectorXcd& z) {
        Eigen::VectorXcd out(N);
        const Eigen::VectorXcd z1 = z.head(n);
        const Eigen::VectorXcd rhs = -(Mc * z.tail(n)) - BsM * z1;
        const Eigen::VectorXcd x1 = lu.solve(rhs);
        out.head(n) = x1;
        out.tail(n) = z1 + shift * x1;
        return out;
    };

    Index m_max = opt.max_subspace > 0 ? opt.max_subspace : std::max<Index>(6 * count + 60, 300);
    m_max = std::min(m_max, N);

    ComplexMatrix V(N, m_max + 1);
    ComplexMatrix H = ComplexMatrix::Zero(m_max + 1, m_max);
    Eigen::VectorXcd v0 = detail::random_complex(N, opt.seed);
    V.col(0) = v0 / v0.norm();

    SpectrumReport report;
    report.requested = count;
    report.shift = shift;
    double hnorm = 0.0;

    auto try_extract = [&](Index m, bool final) -> bool {
        Eigen::ComplexEigenSolver<ComplexMatrix> es(H.topLeftCorner(m, m));
        if (es.info() != Eigen::Success) return false;
        std::vector<Index> idx(static_cast<std::size_t>(m));
        std::iota(idx.begin(), idx.end(), Index{0});
        const auto& theta = es.eigenvalues();
        std::stable_sort(idx.begin(), idx.end(), [&](Index a, Index b) { return std::abs(theta[a]) > std::abs(theta[b]); });
        if (static_cast<Index>(idx.size()) < count) return false;

        std::vector<Complex> vals;
        std::vector<double> res;
        ComplexMatrix vecs(n, count);
        bool all_ok = true;
        for (int k = 0; k < count; ++k) {
            const Index i = idx[static_cast<std::size_t>(k)];
            const Complex th = theta[i];
            if (std::abs(th) == 0.0) return false;
            Complex lambda = shift + 1.0 / th;
            Eigen::VectorXcd x = V.leftCols(m) * es.eigenvectors().col(i);
            Eigen::VectorXcd xd = x.head(n);
            if (xd.norm() == 0.0) xd = x.tail(n);
            xd /= xd.norm();
            double be = qep_backward_error(sys, lambda, xd);
            // quadratic Rayleigh quotient; Re = -x'Bx / (2 x'Mx) on complex pairs
            const Complex rq = detail::quadratic_rayleigh(sys, xd, lambda);
            if (const double be_rq = qep_backward_error(sys, rq, xd); be_rq <= std::max(be, opt.residual_tol)) {
                lambda = rq;
                be = be_rq;
            }
            if (!(be <= opt.residual_tol)) all_ok = false;
            vals.push_back(lambda);
            res.push_back(be);
            vecs.col(k) = xd;
        }
        if (!all_ok && !final) return false;
        if (!all_ok) {
            double worst = *std::max_element(res.begin(), res.end());
            throw SpectralError("eigensolver did not converge: worst residual " + std::to_string(worst));
        }
        report.eigenvalues = std::move(vals);
        report.residuals = std::move(res);
        report.vectors = std::move(vecs);
        report.subspace_dim = static_cast<int>(m);
        return true;
    };

    bool done = false;
    for (Index j = 0; j < m_max && !done; ++j) {
        Eigen::VectorXcd w = apply(V.col(j));
        // classical Gram-Schmidt, repeated once
        for (int pass = 0; pass < 2; ++pass) {
            Eigen::VectorXcd h = V.leftCols(j + 1).adjoint() * w;
            w -= V.leftCols(j + 1) * h;
            H.col(j).head(j + 1) += h;
        }
        const double beta = w.norm();
        H(j + 1, j) = beta;
        hnorm = std::max(hnorm, H.col(j).head(j + 2).norm());
        const Index m = j + 1;
        const bool breakdown = beta <= 1e-13 * hnorm;
        if (breakdown) {
            done = try_extract(m, true);
            break;
        }
        V.col(j + 1) = w / beta;
        const bool last = m == m_max;
        if (m >= count && (m % 10 == 0 || last)) done = try_extract(m, last);
    }
    if (!done) throw SpectralError("eigensolver did not converge");

    // conjugate completion
    const std::size_t found = report.eigenvalues.size();
    for (std::size_t k = 0; k < found; ++k) {
        const Complex lam = report.eigenvalues[k];
        const double tol = opt.pair_tol * std::max(1.0, std::abs(lam));
        if (std::abs(lam.imag()) <= tol) continue;
        const Complex c = std::conj(lam);
        bool present = std::any_of(report.eigenvalues.begin(), report.eigenvalues.end(),
                                   [&](Complex mu) { return std::abs(mu - c) <= tol; });
        if (present) continue;
        report.eigenvalues.push_back(c);
        report.residuals.push_back(report.residuals[k]);
        report.vectors.conservativeResize(Eigen::NoChange, report.vectors.cols() + 1);
        report.vectors.col(report.vectors.cols() - 1) = report.vectors.col(static_cast<Index>(k)).conjugate();
    }
    return report;
}

inline double spectral_abscissa(const SpectrumReport& report) {
    if (report.eigenvalues.empty()) throw SpectralError("empty spectrum report");
    double a = -std::numeric_limits<double>::infinity();
    for (Complex l : report.eigenvalues) a = std::max(a, l.real());
    return a;
}

// ---------------------------------------------------------------------------
// Resolvent in the energy norm

/// Holds the K and M factorizations shared by every frequency.
class ResolventEvaluator {
public:
    explicit ResolventEvaluator(const DiscreteSystem& sys) : sys_(&sys) {
        kfac_.compute(sys.K);
        mfac_.compute(sys.M);
        if (kfac_.info() != Eigen::Success || mfac_.info() != Eigen::Success)
            throw SpectralError("energy Gram factorization failed");
        Mc_ = detail::to_complex(sys.M);
        Bc_ = detail::to_complex(sys.B);
        Kc_ = detail::to_complex(sys.K);
    }

    /// Factorization of K + i beta B - beta^2 M.
    class Shifted {
    public:
        Shifted(const ResolventEvaluator& ev, double beta) : ev_(&ev), beta_(beta) {
            const Complex ib(0.0, beta);
            ComplexSparse P = ev.Kc_ + ib * ev.Bc_ - (beta * beta) * ev.Mc_;
            P.makeCompressed();
            lu_.compute(P);
            if (lu_.info() != Eigen::Success)
                throw SpectralError("i*beta is numerically an eigenvalue (beta = " + std::to_string(beta) + ")");
        }

        /// (i beta - A)^{-1} (f, g) where `load` = M g.
        std::pair<Eigen::VectorXcd, Eigen::VectorXcd> solve(const Eigen::VectorXcd& f, const Eigen::VectorXcd& load) const {
            const Complex ib(0.0, beta_);
            Eigen::VectorXcd rhs = load + ib * (ev_->Mc_ * f) + ev_->Bc_ * f;
            Eigen::VectorXcd u = lu_.solve(rhs);
            Eigen::VectorXcd v = ib * u - f;
            return {std::move(u), std::move(v)};
        }

        /// G-adjoint of the resolvent composed with it: G^-1 R^H G R.
        Eigen::VectorXcd normal_apply(const Eigen::VectorXcd& y) const {
            const Index n = ev_->sys_->size();
            const Complex ib(0.0, beta_);
            const Eigen::VectorXcd f = y.head(n);
            const Eigen::VectorXcd load = ev_->Mc_ * y.tail(n);
            auto [u, v] = solve(f, load);
            // G R y
            const Eigen::VectorXcd a = ev_->Kc_ * u;
            const Eigen::VectorXcd b = ev_->Mc_ * v;
            // R^H (a, b) = ((B - i beta M) z - b, M z),  z = P^{-H} (a - i beta b)
            const Eigen::VectorXcd w = a - ib * b;
            const Eigen::VectorXcd z = lu_.solve(Eigen::VectorXcd(w.conjugate())).conjugate();
            const Eigen::VectorXcd first = ev_->Bc_ * z - ib * (ev_->Mc_ * z) - b;
            const Eigen::VectorXcd second = ev_->Mc_ * z;
            Eigen::VectorXcd out(2 * n);
            out.head(n) = ev_->ksolve(first);
            out.tail(n) = ev_->msolve(second);
            return out;
        }

    private:
        const ResolventEvaluator* ev_;
        double beta_;
        Eigen::SparseLU<ComplexSparse, Eigen::COLAMDOrdering<int>> lu_;
    };

    Shifted at(double beta) const { return Shifted(*this, beta); }

    /// G inner product of states y = (u, v).
    Complex inner(const Eigen::VectorXcd& x, const Eigen::VectorXcd& y) const {
        const Index n = sys_->size();
        return x.head(n).dot(Kc_ * y.head(n)) + x.tail(n).dot(Mc_ * y.tail(n));
    }

    /// ||(i beta - A)^{-1}|| in the energy norm: square root of the top
    /// eigenvalue of G^-1 R^H G R, by Lanczos in the G inner product.
    double norm(double beta, unsigned seed = 11) const {
        const Shifted shifted(*this, beta);
        const Index N = 2 * sys_->size();
        const int max_it = static_cast<int>(std::min<Index>(N, 200));

        std::vector<Eigen::VectorXcd> q;
        std::vector<double> alpha, off;
        Eigen::VectorXcd x = detail::random_complex(N, seed);
        x /= std::sqrt(inner(x, x).real());
        q.push_back(x);
        double previous = 0.0;
        for (int j = 0; j < max_it; ++j) {
            Eigen::VectorXcd w = shifted.normal_apply(q.back());
            alpha.push_back(inner(q.back(), w).real());
            for (int pass = 0; pass < 2; ++pass)
                for (const auto& qi : q) w -= inner(qi, w) * qi;
            const double b = std::sqrt(std::max(0.0, inner(w, w).real()));

            const auto m = static_cast<Index>(alpha.size());
            Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m, m);
            for (Index i = 0; i < m; ++i) {
                T(i, i) = alpha[static_cast<std::size_t>(i)];
                if (i + 1 < m) T(i, i + 1) = T(i + 1, i) = off[static_cast<std::size_t>(i)];
            }
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
            const double top = es.eigenvalues()[m - 1];
            const double bound = b * std::abs(es.eigenvectors()(m - 1, m - 1));
            if (b <= 1e-14 * std::max(top, 1e-300) || (j >= 2 && bound <= 1e-11 * top &&
                                                       std::abs(top - previous) <= 1e-12 * top))
                return std::sqrt(top);
            previous = top;
            off.push_back(b);
            q.push_back(w / b);
        }
        return std::sqrt(previous);
    }

    const DiscreteSystem& system() const noexcept { return *sys_; }

private:
    Eigen::VectorXcd ksolve(const Eigen::VectorXcd& r) const {
        Eigen::VectorXcd out(r.size());
        out.real() = kfac_.solve(Vector(r.real()));
        out.imag() = kfac_.solve(Vector(r.imag()));
        return out;
    }
    Eigen::VectorXcd msolve(const Eigen::VectorXcd& r) const {
        Eigen::VectorXcd out(r.size());
        out.real() = mfac_.solve(Vector(r.real()));
        out.imag() = mfac_.solve(Vector(r.imag()));
        return out;
    }

    const DiscreteSystem* sys_;
    Eigen::SimplicialLDLT<SparseMatrix> kfac_, mfac_;
    ComplexSparse Mc_, Bc_, Kc_;
};

inline double resolvent_norm(const DiscreteSystem& sys, double beta) {
    return ResolventEvaluator(sys).norm(beta);
}

struct ResolventCurve {
    std::vector<double> betas;
    std::vector<double> norms;
};

/// Pointwise resolvent norms over a sorted grid, split across worker threads.
inline ResolventCurve resolvent_sweep(const DiscreteSystem& sys, const std::vector<double>& betas, int threads = 0) {
    if (!std::is_sorted(betas.begin(), betas.end())) throw SpectralError("beta grid must be sorted");
    ResolventCurve curve{betas, std::vector<double>(betas.size(), 0.0)};
    const ResolventEvaluator ev(sys);
    if (threads <= 0) threads = default_threads();
    threads = std::max(1, std::min<int>(threads, static_cast<int>(betas.size())));

    std::vector<std::string> errors(static_cast<std::size_t>(threads));
    auto work = [&](int t) {
        try {
            for (std::size_t i = static_cast<std::size_t>(t); i < betas.size(); i += static_cast<std::size_t>(threads))
                curve.norms[i] = ev.norm(betas[i]);
        } catch (const std::exception& e) {
            errors[static_cast<std::size_t>(t)] = e.what();
        }
    };
    if (threads == 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) pool.emplace_back(work, t);
        for (auto& th : pool) th.join();
    }
    for (const auto& e : errors)
        if (!e.empty()) throw SpectralError(e);
    return curve;
}

// ---------------------------------------------------------------------------
// Decay fits

enum class DecayModel { Exponential, Polynomial };

inline std::string_view to_string(DecayModel m) { return m == DecayModel::Exponential ? "Exponential" : "Polynomial"; }

struct DecayFit {
    DecayModel model = DecayModel::Exponential;
    double rate = 0.0;          // w for e^{-wt}, s for t^{-s}
    double fit_residual = 0.0;  // RMS of the selected regression
    double t_lo = 0.0, t_hi = 0.0;
    double exponential_rate = 0.0, exponential_residual = 0.0;
    double polynomial_rate = 0.0, polynomial_residual = 0.0;
};

class FitError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {
struct LineFit {
    double slope = 0.0, intercept = 0.0, rms = 0.0;
};
inline LineFit least_squares_line(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    LineFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double ss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - (f.intercept + f.slope * x[i]);
        ss += r * r;
    }
    f.rms = std::sqrt(ss / n);
    return f;
}
}  // namespace detail

/// Fits log E against t and against log t over the window (default: the last
/// 60% of the trace) and keeps the model with the smaller RMS residual.
inline DecayFit fit_decay(const EnergyTrace& trace, std::optional<std::pair<double, double>> window = std::nullopt) {
    if (trace.size() < 2) throw FitError("trace too short");
    const double t0 = trace.times.front(), t1 = trace.times.back();
    const auto [lo, hi] = window ? *window : std::make_pair(t0 + 0.4 * (t1 - t0), t1);
    if (!(lo > 0.0) || !(hi > lo)) throw FitError("fit window must satisfy 0 < t_lo < t_hi");

    std::vector<double> t, logt, loge;
    double e_last = 0.0;
    for (std::size_t i = 0; i < trace.size(); ++i) {
        const double ti = trace.times[i];
        if (ti < lo - 1e-12 || ti > hi + 1e-12) continue;
        const double e = trace.energies[i];
        if (!(e > 0.0)) throw FitError("energy underflow in fit window");
        t.push_back(ti);
        logt.push_back(std::log(ti));
        loge.push_back(std::log(e));
        e_last = e;
    }
    if (t.size() < 20) throw FitError("fit window holds fewer than 20 samples");
    if (!(e_last > 1e3 * std::numeric_limits<double>::epsilon() * trace.energies.front()))
        throw FitError("energy underflow in fit window");

    const auto ex = detail::least_squares_line(t, loge);
    const auto po = detail::least_squares_line(logt, loge);
    DecayFit fit;
    fit.t_lo = lo;
    fit.t_hi = hi;
    fit.exponential_rate = -ex.slope;
    fit.exponential_residual = ex.rms;
    fit.polynomial_rate = -po.slope;
    fit.polynomial_residual = po.rms;
    if (ex.rms <= po.rms) {
        fit.model = DecayModel::Exponential;
        fit.rate = fit.exponential_rate;
        fit.fit_residual = ex.rms;
    } else {
        fit.model = DecayModel::Polynomial;
        fit.rate = fit.polynomial_rate;
        fit.fit_residual = po.rms;
    }
    if (!(fit.rate > 0.0)) throw FitError("no decay in fit window");
    return fit;
}

struct AsymptoteOptions {
    /// Fit only the least-damped eigenvalue of each octave of |Im l|, which
    /// tracks how fast the spectrum approaches the imaginary axis.
    bool near_axis_branch = true;
    double min_imag = 1e-8;
};

/// Regression slope of log(-Re l) against log|Im l| over eigenvalues in the
/// upper half plane.
inline double fit_spectral_asymptote(const SpectrumReport& report, const AsymptoteOptions& opt = {}) {
    std::vector<std::pair<double, double>> pts;  // (Im, -Re)
    for (Complex l : report.eigenvalues)
        if (l.imag() > opt.min_imag && l.real() < 0.0) pts.emplace_back(l.imag(), -l.real());
    std::sort(pts.begin(), pts.end());
    if (pts.size() < 10) throw FitError("need at least 10 eigenvalues for an asymptote fit");
    if (pts.back().first < 10.0 * pts.front().first)
        throw FitError("imaginary parts must spread over at least one decade");
    if (opt.near_axis_branch) {
        std::map<long, std::pair<double, double>> best;
        for (auto pt : pts) {
            const long bin = std::lround(std::floor(std::log2(pt.first / pts.front().first)));
            auto it = best.find(bin);
            if (it == best.end() || pt.second < it->second.second) best[bin] = pt;
        }
        pts.clear();
        for (const auto& kv : best) pts.push_back(kv.second);
    }
    std::vector<double> x, y;
    for (auto [im, d] : pts) {
        x.push_back(std::log(im));
        y.push_back(std::log(d));
    }
    return detail::least_squares_line(x, y).slope;
}

// ---------------------------------------------------------------------------
// Diagonal-dominance certificate on all-beam trees

struct JCertificate {
    Eigen::MatrixXi adjacency;          // E
    Eigen::MatrixXi starred_adjacency;  // E*, root row annulled
    Eigen::MatrixXd length_matrix;      // L
    double beta = 0.0;
    Eigen::MatrixXd J;                  // p x p
    Eigen::MatrixXd reduced;            // J masked by E*, zero rows/columns removed
    std::vector<std::size_t> kept;      // vertex indices of the reduced rows/columns
    bool dominant = false;
    double margin = 0.0;                // min over rows of |diag| - sum |off-diagonal|
};

inline JCertificate j_certificate(const TreeNetwork& tree, double beta) {
    if (!(beta > 0.0)) throw SpectralError("beta must be positive");
    for (const Edge& e : tree.edges())
        if (e.kind != EdgeKind::Beam) throw SpectralError("certificate requires a tree of beams only ('" + e.id + "' is a string)");

    const auto p = static_cast<Index>(tree.num_vertices());
    const auto root = static_cast<Index>(tree.root_index());
    JCertificate c;
    c.beta = beta;
    c.adjacency = Eigen::MatrixXi::Zero(p, p);
    c.length_matrix = Eigen::MatrixXd::Zero(p, p);
    for (std::size_t j = 0; j < tree.num_edges(); ++j) {
        const auto a = static_cast<Index>(tree.tail_index(j)), b = static_cast<Index>(tree.head_index(j));
        c.adjacency(a, b) = c.adjacency(b, a) = 1;
        c.length_matrix(a, b) = c.length_matrix(b, a) = tree.edges()[j].length;
    }
    c.starred_adjacency = c.adjacency;
    c.starred_adjacency.row(root).setZero();

    // J = csch(sqrt(b) L) * E*  -  diag[(csch(sqrt(b) L) * cosh(sqrt(b) L) * E*) e]
    const double s = std::sqrt(beta);
    c.J = Eigen::MatrixXd::Zero(p, p);
    for (Index i = 0; i < p; ++i) {
        double diag = 0.0;
        for (Index k = 0; k < p; ++k) {
            if (c.starred_adjacency(i, k) == 0) continue;
            const double arg = s * c.length_matrix(i, k);
            c.J(i, k) = 1.0 / std::sinh(arg);
            diag += 1.0 / std::tanh(arg);
        }
        c.J(i, i) -= diag;
    }

    // mask: rows and columns of vertices whose E* row is nonzero
    for (Index i = 0; i < p; ++i)
        if (c.starred_adjacency.row(i).any()) c.kept.push_back(static_cast<std::size_t>(i));
    const auto r = static_cast<Index>(c.kept.size());
    c.reduced.resize(r, r);
    for (Index a = 0; a < r; ++a)
        for (Index b = 0; b < r; ++b)
            c.reduced(a, b) = c.J(static_cast<Index>(c.kept[static_cast<std::size_t>(a)]),
                                  static_cast<Index>(c.kept[static_cast<std::size_t>(b)]));

    c.margin = std::numeric_limits<double>::infinity();
    for (Index a = 0; a < r; ++a) {
        double off = 0.0;
        for (Index b = 0; b < r; ++b)
            if (b != a) off += std::abs(c.reduced(a, b));
        c.margin = std::min(c.margin, std::abs(c.reduced(a, a)) - off);
    }
    c.dominant = r > 0 && c.margin > 0.0;
    return c;
}

}  // namespace netvib
