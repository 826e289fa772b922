#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "support.hpp"

using namespace netvib;
using testing_support::load_network;

namespace {

constexpr double pi = std::numbers::pi;

DiscreteSystem mesh(const std::string& name, int per_unit) {
    MeshParams p;
    p.elements_per_unit_length = per_unit;
    return assemble(load_network(name), p);
}

/// Dense first-order generator on (u, v).
Eigen::MatrixXd generator(const DiscreteSystem& sys) {
    const Index n = sys.size();
    const Eigen::MatrixXd M(sys.M), K(sys.K), B(sys.B);
    const Eigen::LLT<Eigen::MatrixXd> m(M);
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(2 * n, 2 * n);
    A.topRightCorner(n, n).setIdentity();
    A.bottomLeftCorner(n, n) = -m.solve(K);
    A.bottomRightCorner(n, n) = -m.solve(B);
    return A;
}

/// Energy-norm resolvent norm from a dense SVD: || L^T (i b - A)^{-1} L^{-T} ||_2 with G = L L^T.
double dense_resolvent_norm(const DiscreteSystem& sys, double beta) {
    const Index n = sys.size();
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(2 * n, 2 * n);
    G.topLeftCorner(n, n) = Eigen::MatrixXd(sys.K);
    G.bottomRightCorner(n, n) = Eigen::MatrixXd(sys.M);
    const Eigen::MatrixXd L = Eigen::LLT<Eigen::MatrixXd>(G).matrixL();
    const Eigen::MatrixXcd shifted =
        Complex(0.0, beta) * Eigen::MatrixXcd::Identity(2 * n, 2 * n) - generator(sys).cast<Complex>();
    const Eigen::MatrixXcd R = shifted.inverse();
    const Eigen::MatrixXcd Lc = L.cast<Complex>();
    const Eigen::MatrixXcd X = Lc.transpose() * R * Lc.transpose().inverse();
    return Eigen::JacobiSVD<Eigen::MatrixXcd>(X).singularValues()(0);
}

std::vector<Complex> dense_spectrum(const DiscreteSystem& sys) {
    Eigen::EigenSolver<Eigen::MatrixXd> es(generator(sys));
    std::vector<Complex> out(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
    return out;
}

SpectrumReport report_of(std::vector<Complex> eig) {
    SpectrumReport r;
    r.eigenvalues = std::move(eig);
    r.residuals.assign(r.eigenvalues.size(), 0.0);
    return r;
}

EnergyTrace synthetic_trace(const std::function<double(double)>& e, double t1, int samples, double t0 = 0.0) {
    EnergyTrace t;
    for (int i = 0; i <= samples; ++i) {
        const double ti = t0 + (t1 - t0) * i / samples;
        t.times.push_back(ti);
        t.energies.push_back(e(ti));
        t.boundary_dissipation.push_back(0.0);
    }
    return t;
}

}  // namespace

TEST(Quadratic, UndampedStringHasQuarterWaveFrequencies) {
    const DiscreteSystem sys = without_damping(mesh("single_string.tree", 128));
    const SpectrumReport r = quadratic_eigenvalues(sys, 10, {0.0, 6.0});
    for (int k = 0; k <= 3; ++k) {
        const double w = pi / 2 + k * pi;
        for (double sign : {1.0, -1.0}) {
            const auto hit = std::find_if(r.eigenvalues.begin(), r.eigenvalues.end(),
                                          [&](Complex l) { return std::abs(l - Complex(0.0, sign * w)) < 1e-3 * w; });
            EXPECT_NE(hit, r.eigenvalues.end()) << "k=" << k << " sign=" << sign;
        }
    }
}

TEST(Quadratic, DampedStringIsStronglyDamped) {
    const SpectrumReport r = quadratic_eigenvalues(mesh("single_string.tree", 64), 20);
    for (Complex l : r.eigenvalues) EXPECT_LE(l.real(), -0.5) << l;
}

TEST(Quadratic, S0SpectrumIsStableConjugateClosedAndAccurate) {
    const DiscreteSystem sys = mesh("s0.tree", 16);
    const SpectrumReport r = quadratic_eigenvalues(sys, 24);
    ASSERT_GE(r.eigenvalues.size(), 24u);
    for (std::size_t i = 0; i < r.eigenvalues.size(); ++i) {
        const Complex l = r.eigenvalues[i];
        EXPECT_LT(l.real(), 0.0);
        EXPECT_LE(r.residuals[i], 1e-8);
        EXPECT_NEAR(qep_backward_error(sys, l, r.vectors.col(static_cast<Index>(i))), r.residuals[i], 1e-12);
        const auto conj = std::find_if(r.eigenvalues.begin(), r.eigenvalues.end(), [&](Complex m) {
            return std::abs(m - std::conj(l)) <= 1e-8 * std::max(1.0, std::abs(l));
        });
        EXPECT_NE(conj, r.eigenvalues.end()) << l;
    }
}

TEST(Quadratic, MatchesDenseCompanionEigenvalues) {
    const DiscreteSystem sys = mesh("s0.tree", 4);
    const Complex shift(-0.05, 1.0);
    std::vector<Complex> all = dense_spectrum(sys);
    std::sort(all.begin(), all.end(), [&](Complex a, Complex b) { return std::abs(a - shift) < std::abs(b - shift); });
    const SpectrumReport r = quadratic_eigenvalues(sys, 12, shift);
    for (int k = 0; k < 12; ++k) {
        double best = std::numeric_limits<double>::infinity();
        for (Complex l : r.eigenvalues) best = std::min(best, std::abs(l - all[static_cast<std::size_t>(k)]));
        EXPECT_LT(best, 1e-8 * std::max(1.0, std::abs(all[static_cast<std::size_t>(k)]))) << all[k];
    }
}

TEST(Quadratic, RejectsInvalidCounts) {
    const DiscreteSystem sys = mesh("single_string.tree", 8);
    EXPECT_THROW(quadratic_eigenvalues(sys, 0), SpectralError);
}

TEST(Abscissa, IsTheLargestRealPart) {
    EXPECT_DOUBLE_EQ(spectral_abscissa(report_of({{-1.0, 2.0}, {-0.25, -3.0}, {-4.0, 0.0}})), -0.25);
    EXPECT_THROW(spectral_abscissa(SpectrumReport{}), SpectralError);
}

TEST(Resolvent, MatchesDenseSvd) {
    for (const char* name : {"single_string.tree", "s0.tree", "beam_string.tree"}) {
        const DiscreteSystem sys = mesh(name, 4);
        const ResolventEvaluator ev(sys);
        for (double beta : {0.0, 0.7, 3.0, 11.0}) {
            const double exact = dense_resolvent_norm(sys, beta);
            EXPECT_NEAR(ev.norm(beta), exact, 1e-8 * exact) << name << " beta=" << beta;
        }
    }
}

TEST(Resolvent, BoundedBelowByInverseSpectralDistance) {
    const DiscreteSystem sys = mesh("s0.tree", 4);
    const auto spectrum = dense_spectrum(sys);
    const ResolventEvaluator ev(sys);
    for (double beta : {0.5, 2.0, 5.0, 9.0}) {
        double dist = std::numeric_limits<double>::infinity();
        for (Complex l : spectrum) dist = std::min(dist, std::abs(Complex(0.0, beta) - l));
        EXPECT_GE(ev.norm(beta), (1.0 - 1e-10) / dist);
    }
}

TEST(Resolvent, ApproachesInverseDistanceFarFromTheSpectrum) {
    // A is dissipative in the energy norm, so the norm tends to 1/|beta| for large |beta| relative to the spectrum
    const DiscreteSystem sys = mesh("single_string.tree", 4);
    const double beta = 1e4;
    EXPECT_NEAR(resolvent_norm(sys, beta) * beta, 1.0, 0.1);
}

TEST(Resolvent, IsInvariantUnderEdgeReversal) {
    const DiscreteSystem a = mesh("s0.tree", 8);
    const DiscreteSystem b =
        assemble(*parse("root a1\nedge e1 string a2 -> a1 length=3.141592653589793\n"
                        "edge e2 beam a3 -> a2 length=3.141592653589793\n")
                      .tree,
                 a.mesh);
    for (double beta : {0.5, 4.0}) EXPECT_NEAR(resolvent_norm(a, beta), resolvent_norm(b, beta), 1e-9 * resolvent_norm(a, beta));
}

TEST(Resolvent, SweepIsThreadIndependent) {
    const DiscreteSystem sys = mesh("exponential_tree.tree", 8);
    std::vector<double> betas;
    for (int i = 0; i <= 12; ++i) betas.push_back(0.5 * i);
    const auto one = resolvent_sweep(sys, betas, 1);
    const auto two = resolvent_sweep(sys, betas, 3);
    EXPECT_EQ(one.norms, two.norms);
    for (double v : one.norms) EXPECT_TRUE(std::isfinite(v) && v > 0.0);
    EXPECT_THROW(resolvent_sweep(sys, {1.0, 0.5}, 1), SpectralError);
}

TEST(FitDecay, RecognisesSyntheticModels) {
    const auto ex = fit_decay(synthetic_trace([](double t) { return std::exp(-1.5 * t); }, 10.0, 200));
    EXPECT_EQ(ex.model, DecayModel::Exponential);
    EXPECT_NEAR(ex.rate, 1.5, 1e-10);
    const auto po = fit_decay(synthetic_trace([](double t) { return 5.0 / (t * t); }, 100.0, 400, 1.0), std::make_pair(40.0, 100.0));
    EXPECT_EQ(po.model, DecayModel::Polynomial);
    EXPECT_NEAR(po.rate, 2.0, 1e-10);
    EXPECT_NEAR(po.t_lo, 40.0, 0.0);
}

TEST(FitDecay, ReportsInvalidInput) {
    const auto e = [](double t) { return std::exp(-t); };
    EXPECT_THROW(fit_decay(EnergyTrace{}), FitError);
    EXPECT_THROW(fit_decay(synthetic_trace(e, 10.0, 200), std::make_pair(5.0, 2.0)), FitError);
    EXPECT_THROW(fit_decay(synthetic_trace(e, 10.0, 200), std::make_pair(0.0, 2.0)), FitError);
    EXPECT_THROW(fit_decay(synthetic_trace(e, 10.0, 10)), FitError);  // too few samples
    EXPECT_THROW(fit_decay(synthetic_trace([](double t) { return std::exp(-10.0 * t); }, 10.0, 200)), FitError);
    EXPECT_THROW(fit_decay(synthetic_trace([](double) { return 1.0; }, 10.0, 200)), FitError);
}

TEST(Asymptote, SyntheticSlope) {
    std::vector<Complex> eig;
    for (int k = 1; k <= 64; ++k) {
        eig.emplace_back(-std::pow(k, -0.5), k);
        eig.emplace_back(-std::pow(k, -0.5), -k);
    }
    EXPECT_NEAR(fit_spectral_asymptote(report_of(eig)), -0.5, 1e-12);
    EXPECT_NEAR(fit_spectral_asymptote(report_of(eig), {false, 1e-8}), -0.5, 1e-12);
    // a strongly damped second branch does not move the near-axis fit
    for (int k = 1; k <= 64; ++k) eig.emplace_back(-5.0, k + 0.5);
    EXPECT_NEAR(fit_spectral_asymptote(report_of(eig)), -0.5, 1e-12);
}

TEST(Asymptote, ReportsInsufficientData) {
    std::vector<Complex> few;
    for (int k = 1; k <= 9; ++k) few.emplace_back(-1.0 / k, 10.0 * k);
    EXPECT_THROW(fit_spectral_asymptote(report_of(few)), FitError);
    std::vector<Complex> narrow;
    for (int k = 0; k < 20; ++k) narrow.emplace_back(-1.0, 10.0 + k);
    EXPECT_THROW(fit_spectral_asymptote(report_of(narrow)), FitError);
}

TEST(Certificate, UnitBeamStarMargin) {
    const TreeNetwork star = load_network("beam_star.tree");
    for (double beta : {0.5, 1.0, 10.0, 100.0}) {
        const JCertificate c = j_certificate(star, beta);
        EXPECT_TRUE(c.dominant);
        EXPECT_NEAR(c.margin, std::tanh(std::sqrt(beta) / 2), 1e-12);
        EXPECT_EQ(c.kept.size(), 3u);
        EXPECT_EQ(c.starred_adjacency.row(static_cast<Index>(star.root_index())).sum(), 0);
    }
}

TEST(Certificate, SingleBeam) {
    const JCertificate c = j_certificate(load_network("single_beam.tree"), 4.0);
    ASSERT_EQ(c.reduced.rows(), 1);
    EXPECT_NEAR(c.reduced(0, 0), -1.0 / std::tanh(2.0), 1e-14);
    EXPECT_NEAR(c.margin, 1.0 / std::tanh(2.0), 1e-14);
}

TEST(Certificate, RejectsStringsAndNonpositiveBeta) {
    EXPECT_THROW(j_certificate(load_network("s0.tree"), 1.0), SpectralError);
    EXPECT_THROW(j_certificate(load_network("beam_star.tree"), 0.0), SpectralError);
}
