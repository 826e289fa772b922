// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "support.hpp"

using namespace netvib;
using testing_support::load_network;

namespace {

constexpr double pi = std::numbers::pi;

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

DiscreteSystem mesh(const TreeNetwork& t, int per_unit) {
    MeshParams p;
    p.elements_per_unit_length = per_unit;
    return assemble(t, p);
}

/// Lowest undamped mode as displacement, second mode as velocity.
State two_mode_state(const DiscreteSystem& sys) {
    const UndampedModes modes = undamped_modes(sys, 2);
    State s;
    s.u = modes.modes.col(0);
    s.v = std::sqrt(modes.omega_squared[0]) * modes.modes.col(1);
    return s;
}

const std::vector<std::string> kDissipationNetworks = {"single_string.tree", "single_beam.tree", "s0.tree",
                                                       "exponential_tree.tree", "polynomial_tree.tree"};

Outcome criterion1() {
    Outcome o{true, ""};
    for (const auto& name : kDissipationNetworks) {
        const DiscreteSystem sys = mesh(load_network(name), 32);
        SimulationOptions opt;
        opt.T = 1.0;
        opt.dt = 1e-3;
        opt.keep_states = true;
        const auto run = simulate(sys, two_mode_state(sys), opt);
        const double worst = check_dissipation(sys, run.trace, run.snapshots);
        const bool ok = run.trace.size() == 1001 && worst <= 1e-10;
        o.pass = o.pass && ok;
        o.detail += fmt("%s %.2e; ", name.c_str(), worst);
    }
    return o;
}

Outcome criterion2() {
    Outcome o{true, ""};
    for (const auto& name : kDissipationNetworks) {
        const DiscreteSystem sys = without_damping(mesh(load_network(name), 32));
        SimulationOptions opt;
        opt.T = 1.0;
        opt.dt = 1e-3;
        opt.keep_states = true;
        const auto run = simulate(sys, two_mode_state(sys), opt);
        const auto& st = run.snapshots;
        double worst = 0.0;
        for (std::size_t n = 0; n + 1 < st.size(); ++n)
            worst = std::max(worst, std::abs(energy_increment(sys, st[n], st[n + 1])) / run.trace.energies.front());
        o.pass = o.pass && st.size() == 1001 && worst <= 1e-12;
        o.detail += fmt("%s %.2e; ", name.c_str(), worst);
    }
    return o;
}

Outcome criterion3() {
    const TreeNetwork tree = *parse("root a1\nedge e1 string a1 -> a2 length=1\n").tree;
    auto bump = [](double x) {
        if (x <= 0.25 || x >= 0.75) return 0.0;
        const double c = std::cos(2.0 * pi * (x - 0.5));
        return c * c;
    };
    const auto exact = oracle::dalembert_string(1.0, bump);
    const EdgeFunction at_half = [&](double x) { return exact.displacement(x, 0.5); };

    Outcome o{true, ""};
    double previous_ratio = 1.0;
    for (int elements : {128, 256, 512}) {
        const DiscreteSystem sys = mesh(tree, elements);
        EdgeInitialData d;
        d.u0 = bump;
        SimulationOptions opt;
        opt.T = 2.5;
        opt.dt = 5e-4;
        opt.sample_stride = 1000;
        opt.keep_states = true;
        const auto run = simulate(sys, project_initial_data(sys, {d}).state, opt);
        const double ratio = run.trace.energies.back() / run.trace.energies.front();
        const bool decreasing = ratio < previous_ratio;
        previous_ratio = ratio;
        o.pass = o.pass && decreasing;
        o.detail += fmt("%d el: E(2.5)/E(0)=%.2e", elements, ratio);
        if (elements == 512) {
            const double err = l2_distance(sys, run.snapshots[1].u, {at_half}) /
                               l2_distance(sys, Vector::Zero(sys.size()), {at_half});
            o.pass = o.pass && std::abs(run.trace.times[1] - 0.5) < 1e-12 && err <= 0.01 && ratio <= 1e-3;
            o.detail += fmt(", L2 rel err(t=0.5)=%.3e", err);
        }
        o.detail += "; ";
    }
    return o;
}

Outcome criterion4() {
    const auto cls = [](const char* text) { return stability_class(*parse(text).tree); };
    const auto a = cls("root r\nedge e1 beam r -> x length=1\nedge e2 string x -> y length=1\n");
    const auto b = cls("root r\nedge e1 string r -> x length=1\nedge e2 beam x -> y length=1\n");
    const auto c = cls(
        "root r\nedge e1 string r -> x length=1\nedge e2 beam x -> y length=1\nedge e3 beam y -> z length=1\n");
    Outcome o;
    o.pass = a.tag == StabilityTag::Exponential && a.predicted_rate == "e^{-wt}" &&
             b.tag == StabilityTag::PolynomialSingle && b.predicted_rate == "t^-1" &&
             c.tag == StabilityTag::PolynomialMulti && c.predicted_rate == "t^-2/3";
    o.detail = fmt("beam-string %s, string-beam %s, string-beam-beam %s", std::string(to_string(a.tag)).c_str(),
                   std::string(to_string(b.tag)).c_str(), std::string(to_string(c.tag)).c_str());
    return o;
}

const std::vector<std::string> kAllNetworks = {"single_string.tree",    "single_beam.tree",     "s0.tree",
                                               "beam_string.tree",      "string_beam_beam.tree", "exponential_tree.tree",
                                               "polynomial_tree.tree",  "beam_star.tree",       "string_star.tree"};

Outcome criterion5() {
    Outcome o{true, ""};
    for (const auto& name : kAllNetworks) {
        const DiscreteSystem sys = mesh(load_network(name), 64);
        const SpectrumReport r = quadratic_eigenvalues(sys, 40);
        const double worst_residual = *std::max_element(r.residuals.begin(), r.residuals.end());
        const double a = spectral_abscissa(r);
        o.pass = o.pass && r.eigenvalues.size() >= 40 && a < -1e-8 && worst_residual <= 1e-8;
        o.detail += fmt("%s max Re=%.3e; ", name.c_str(), a);
    }
    return o;
}

Outcome criterion6() {
    const TreeNetwork bs = load_network("beam_string.tree");
    std::vector<double> abscissa;
    for (int m : {16, 32, 64}) abscissa.push_back(spectral_abscissa(quadratic_eigenvalues(mesh(bs, m), 10)));
    const double lo = *std::min_element(abscissa.begin(), abscissa.end());
    const double hi = *std::max_element(abscissa.begin(), abscissa.end());
    const bool agree = (hi - lo) <= 0.2 * std::abs(hi) && hi <= -0.01;

    const double s0_slope = fit_spectral_asymptote(quadratic_eigenvalues(mesh(load_network("s0.tree"), 64), 40));
    const double bs_slope = fit_spectral_asymptote(quadratic_eigenvalues(mesh(bs, 64), 40));
    const bool s0_ok = s0_slope >= -1.6 && s0_slope <= -0.6;
    return {agree && s0_ok,
            fmt("beam-string abscissa %.4f/%.4f/%.4f at 16/32/64; S0 asymptote slope %.3f (beam-string %.3f)",
                abscissa[0], abscissa[1], abscissa[2], s0_slope, bs_slope)};
}

Outcome criterion7() {
    const auto rows = oracle::s0_blowup({4, 16, 36, 64});
    bool ok = std::abs(rows[0].beta_n - 20.25) < 1e-12 && std::abs(rows[1].beta_n - 264.0625) < 1e-12;
    std::string detail;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (i > 0 && !(rows[i].norm > rows[i - 1].norm)) ok = false;
        if (rows[i].n >= 36 && !(rows[i].ratio >= 0.8 && rows[i].ratio <= 1.2)) ok = false;
        detail += fmt("n=%lld norm=%.4f ratio=%.3f; ", rows[i].n, rows[i].norm, rows[i].ratio);
    }
    return {ok, detail};
}

Outcome criterion8() {
    const double beta = oracle::blowup_beta(4);
    const TreeNetwork tree = load_network("s0.tree");
    MeshParams p;
    for (const Edge& e : tree.edges()) p.per_edge[e.id] = 2048;
    const DiscreteSystem sys = assemble(tree, p);
    const ResolventEvaluator ev(sys);
    const Vector load = load_vector(sys, {[beta](double x) { return -std::sin(beta * (pi - x)); }, {}});
    const auto [u, v] = ev.at(beta).solve(Eigen::VectorXcd::Zero(sys.size()), load.cast<Complex>());
    Eigen::VectorXcd y(2 * sys.size());
    y << u, v;
    const double fem = std::sqrt(ev.inner(y, y).real());
    const double exact = oracle::s0_solve(beta).energy_norm;
    const double rel = std::abs(fem - exact) / exact;
    return {rel <= 0.10, fmt("FEM %.5f, oracle %.5f, relative difference %.2e", fem, exact, rel)};
}

Outcome criterion9() {
    auto run = [](const TreeNetwork& tree) {
        const DiscreteSystem sys = mesh(tree, 32);
        State s;
        s.u = undamped_modes(sys, 1).modes.col(0);
        s.v = Vector::Zero(sys.size());
        SimulationOptions opt;
        opt.T = 200.0;
        opt.dt = 1e-3;
        opt.sample_stride = 10;
        return simulate(sys, s, opt).trace;
    };
    Outcome o{true, ""};
    const EnergyTrace s0 = run(load_network("s0.tree"));
    const DecayFit f = fit_decay(s0, std::make_pair(80.0, 200.0));
    o.pass = f.model == DecayModel::Polynomial && f.rate >= 1.3 && f.rate <= 2.7;
    o.detail = fmt("S0: %s preferred, s=%.3f (rms poly %.3f, exp %.3f); ", std::string(to_string(f.model)).c_str(),
                   f.polynomial_rate, f.polynomial_residual, f.exponential_residual);

    const EnergyTrace bs = run(load_network("beam_string.tree"));
    try {
        const DecayFit g = fit_decay(bs, std::make_pair(80.0, 200.0));
        o.pass = o.pass && g.model == DecayModel::Exponential;
        o.detail += fmt("beam-string: %s preferred, w=%.3f", std::string(to_string(g.model)).c_str(), g.rate);
    } catch (const FitError& e) {
        o.pass = false;
        o.detail += fmt("beam-string: fit on [80,200] failed (%s)", e.what());
        // for information: the same fit while the energy is still far above the discretization floor
        double t_hi = 0.0;
        for (std::size_t i = 0; i < bs.size() && bs.energies[i] > 1e-6 * bs.energies.front(); ++i) t_hi = bs.times[i];
        try {
            const DecayFit g = fit_decay(bs, std::make_pair(0.4 * t_hi, t_hi));
            o.detail += fmt("; on [%.1f,%.1f]: %s preferred, w=%.3f", 0.4 * t_hi, t_hi,
                            std::string(to_string(g.model)).c_str(), g.rate);
        } catch (const FitError& inner) {
            o.detail += fmt("; short-window fit failed too (%s)", inner.what());
        }
    }
    return o;
}

Outcome criterion10() {
    const TreeNetwork star = load_network("beam_star.tree");
    Outcome o{true, ""};
    double previous = -std::numeric_limits<double>::infinity();
    for (double beta : {1.0, 10.0, 100.0}) {
        const JCertificate c = j_certificate(star, beta);
        o.pass = o.pass && c.dominant && c.margin > previous;
        previous = c.margin;
        o.detail += fmt("beta=%g margin=%.6f; ", beta, c.margin);
    }
    return o;
}

Outcome criterion11() {
    std::mt19937_64 gen(20240611);
    int exact = 0;
    for (int i = 0; i < 20; ++i) {
        const TreeNetwork t = testing_support::random_tree(gen, 1 + i % 12);
        const std::string text = serialize(t);
        const auto back = parse(text);
        if (back.ok() && *back.tree == t && serialize(*back.tree) == text) ++exact;
    }
    const std::vector<std::string> malformed = {
        "edge e1 string a -> b length=1\n",
        "root a\nedge e1 rope a -> b length=1\n",
        "root a\nedge e1 string a b length=1\n",
        "root a\nedge e1 string a -> b length=-2\n",
        "root a\nedge e1 string a -> b length=1\nedge e1 beam b -> c length=1\n",
    };
    int positioned = 0;
    for (const auto& text : malformed) {
        const auto r = parse(text);
        if (!r.ok() && r.diagnostics.size() == 1 && r.diagnostics[0].line >= 1 && r.diagnostics[0].column >= 1)
            ++positioned;
    }
    return {exact == 20 && positioned == 5,
            fmt("%d/20 random trees round-trip exactly; %d/5 malformed inputs give one positioned diagnostic", exact,
                positioned)};
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
        {"dissipation identity", criterion1},      {"conservative limit", criterion2},
        {"string absorption oracle", criterion3},  {"classification truth table", criterion4},
        {"no imaginary spectrum", criterion5},     {"spectral signature", criterion6},
        {"counterexample blow-up", criterion7},    {"FEM-oracle resolvent cross-check", criterion8},
        {"decay-exponent fit", criterion9},        {"J certificate", criterion10},
        {"parser round trip and diagnostics", criterion11},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (!o.pass) ++failures;
        std::printf("criterion %2zu %s: %s [%s] (%.1fs)\n", i + 1, o.pass ? "PASS" : "FAIL", criteria[i].first,
                    o.detail.c_str(), secs);
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria failed\n", failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
