// Command-line front end: classify | simulate | spectrum | resolvent | s0-blowup | certify

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "netvib/netvib.hpp"

namespace {

using namespace netvib;

constexpr int kInputError = 2;
constexpr int kNumericalError = 3;

struct InputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Positioned parser diagnostics, printed verbatim.
struct ParseFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

TreeNetwork load_tree(const std::string& path) {
    ParseResult r = parse(read_file(path));
    if (!r.ok()) {
        std::string msg;
        for (const auto& d : r.diagnostics) msg += d.format(path) + "\n";
        if (!msg.empty()) msg.pop_back();
        throw ParseFailure(msg);
    }
    return *r.tree;
}

/// Writes to the file at `path`, or stdout when empty.
template <class F>
void emit(const std::string& path, F&& write) {
    if (path.empty()) {
        write(std::cout);
        std::cout.flush();
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write '" + path + "'");
    write(out);
}

MeshParams mesh_of(int density) {
    if (density <= 0) throw InputError("--mesh must be positive");
    MeshParams m;
    m.elements_per_unit_length = density;
    return m;
}

/// Smooth bump cos^2 supported on the middle half of the edge.
EdgeInitialData bump(double length) {
    const double a = 0.25 * length, b = 0.75 * length;
    EdgeInitialData d;
    d.u0 = [a, b](double x) {
        if (x <= a || x >= b) return 0.0;
        const double c = std::cos(std::numbers::pi * (x - 0.5 * (a + b)) / (b - a));
        return c * c;
    };
    d.du0 = [a, b](double x) {
        if (x <= a || x >= b) return 0.0;
        const double s = std::numbers::pi * (x - 0.5 * (a + b)) / (b - a);
        return -std::numbers::pi / (b - a) * std::sin(2.0 * s);
    };
    return d;
}

/// CSV rows "edge,x,u0,u1", linearly interpolated along each edge.
std::vector<EdgeInitialData> data_from_file(const TreeNetwork& tree, const std::string& path) {
    std::istringstream in(read_file(path));
    std::map<std::string, std::vector<std::array<double, 3>>> samples;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#' || (lineno == 1 && line.rfind("edge", 0) == 0)) continue;
        std::stringstream ls(line);
        std::string edge, f[3];
        std::getline(ls, edge, ',');
        for (auto& s : f) std::getline(ls, s, ',');
        try {
            samples[edge].push_back({std::stod(f[0]), std::stod(f[1]), std::stod(f[2])});
        } catch (const std::exception&) {
            throw InputError(path + ":" + std::to_string(lineno) + ": expected 'edge,x,u0,u1'");
        }
        if (!tree.find_edge(edge)) throw InputError(path + ":" + std::to_string(lineno) + ": unknown edge '" + edge + "'");
    }
    std::vector<EdgeInitialData> data(tree.num_edges());
    for (auto& [edge, pts] : samples) {
        std::sort(pts.begin(), pts.end());
        auto interp = [pts](int column) {
            return [pts, column](double x) {
                if (x <= pts.front()[0]) return pts.front()[static_cast<std::size_t>(column)];
                if (x >= pts.back()[0]) return pts.back()[static_cast<std::size_t>(column)];
                auto it = std::upper_bound(pts.begin(), pts.end(), x, [](double v, const auto& p) { return v < p[0]; });
                const auto& hi = *it;
                const auto& lo = *(it - 1);
                const double w = (x - lo[0]) / (hi[0] - lo[0]);
                return (1 - w) * lo[static_cast<std::size_t>(column)] + w * hi[static_cast<std::size_t>(column)];
            };
        };
        auto& d = data[*tree.find_edge(edge)];
        d.u0 = interp(1);
        d.u1 = interp(2);
    }
    return data;
}

State initial_state(const DiscreteSystem& sys, const std::string& init) {
    if (init == "lowest-mode") {
        const UndampedModes modes = undamped_modes(sys, 1);
        State s;
        s.u = modes.modes.col(0);
        s.v = Vector::Zero(sys.size());
        return s;
    }
    std::vector<EdgeInitialData> data;
    if (init.rfind("bump:", 0) == 0) {
        const std::string id = init.substr(5);
        const auto j = sys.tree.find_edge(id);
        if (!j) throw InputError("--init: unknown edge '" + id + "'");
        data.resize(sys.tree.num_edges());
        data[*j] = bump(sys.tree.edges()[*j].length);
    } else if (init.rfind("file:", 0) == 0) {
        data = data_from_file(sys.tree, init.substr(5));
    } else {
        throw InputError("--init must be lowest-mode, bump:EDGE or file:PATH");
    }
    try {
        return project_initial_data(sys, data).state;
    } catch (const ProjectionError& e) {
        throw InputError(e.what());
    }
}

std::vector<double> linspace(double lo, double hi, int points) {
    if (points <= 0) throw InputError("--points must be positive");
    if (hi < lo) throw InputError("--beta-max must not be below --beta-min");
    std::vector<double> out;
    for (int i = 0; i < points; ++i)
        out.push_back(points == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / (points - 1));
    return out;
}

Complex parse_shift(const std::string& s) {
    const auto comma = s.find(',');
    try {
        if (comma == std::string::npos) return {std::stod(s), 0.0};
        return {std::stod(s.substr(0, comma)), std::stod(s.substr(comma + 1))};
    } catch (const std::exception&) {
        throw InputError("--shift expects RE,IM");
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Vibration and stability analysis of string-beam tree networks"};
    app.require_subcommand(1);
    int threads = 0;
    app.add_option("--threads", threads, "Worker threads for sweeps (NETVIB_THREADS overrides)");

    std::string file, out;
    int mesh = 32;

    auto* classify = app.add_subcommand("classify", "Print the predicted stability class as JSON");
    classify->add_option("file", file, "Network (.tree)")->required();

    double T = 1.0, dt = 1e-3;
    int stride = 1;
    std::string init = "lowest-mode";
    auto* simulate_cmd = app.add_subcommand("simulate", "Midpoint time integration; writes t,E,dissipation_step");
    simulate_cmd->add_option("file", file, "Network (.tree)")->required();
    simulate_cmd->add_option("--T", T, "Final time")->capture_default_str();
    simulate_cmd->add_option("--dt", dt, "Time step")->capture_default_str();
    simulate_cmd->add_option("--mesh", mesh, "Elements per unit length")->capture_default_str();
    simulate_cmd->add_option("--init", init, "lowest-mode | bump:EDGE | file:PATH")->capture_default_str();
    simulate_cmd->add_option("--stride", stride, "Sample every N steps")->capture_default_str();
    simulate_cmd->add_option("--out", out, "Output CSV (default stdout)");

    int count = 40;
    std::string shift = "-0.05,1";
    auto* spectrum = app.add_subcommand("spectrum", "Eigenvalues nearest a shift as JSON");
    spectrum->add_option("file", file, "Network (.tree)")->required();
    spectrum->add_option("--count", count, "Number of eigenvalues")->capture_default_str();
    spectrum->add_option("--shift", shift, "Shift RE,IM")->capture_default_str();
    spectrum->add_option("--mesh", mesh, "Elements per unit length")->capture_default_str();
    spectrum->add_option("--out", out, "Output JSON (default stdout)");

    double beta_min = 0.0, beta_max = 50.0;
    int points = 51;
    auto* resolvent = app.add_subcommand("resolvent", "Energy-norm resolvent along the imaginary axis; writes beta,norm");
    resolvent->add_option("file", file, "Network (.tree)")->required();
    resolvent->add_option("--beta-min", beta_min)->capture_default_str();
    resolvent->add_option("--beta-max", beta_max)->capture_default_str();
    resolvent->add_option("--points", points)->capture_default_str();
    resolvent->add_option("--mesh", mesh, "Elements per unit length")->capture_default_str();
    resolvent->add_option("--out", out, "Output CSV (default stdout)");

    std::vector<long long> ns{4, 16, 36, 64};
    auto* blowup = app.add_subcommand("s0-blowup", "Closed-form resolvent norms of the string-beam counterexample");
    blowup->add_option("--n", ns, "Values of n (perfect squares with even root)")->delimiter(',')->capture_default_str();
    blowup->add_option("--out", out, "Output CSV (default stdout)");

    std::vector<double> betas{1.0, 10.0, 100.0};
    auto* certify = app.add_subcommand("certify", "Diagonal-dominance certificate for all-beam trees as JSON");
    certify->add_option("file", file, "Network (.tree)")->required();
    certify->add_option("--beta", betas, "Frequencies")->delimiter(',')->capture_default_str();
    certify->add_option("--out", out, "Output JSON (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kInputError;
    }
    if (const char* env = std::getenv("NETVIB_THREADS"); env && std::atoi(env) > 0) threads = std::atoi(env);

    try {
        if (*classify) {
            const TreeNetwork tree = load_tree(file);
            std::cout << io::to_json(stability_class(tree)).dump() << '\n';
        } else if (*simulate_cmd) {
            if (!(T >= 0.0)) throw InputError("--T must be nonnegative");
            if (!(dt > 0.0)) throw InputError("--dt must be positive");
            if (stride < 1) throw InputError("--stride must be at least 1");
            const DiscreteSystem sys = assemble(load_tree(file), mesh_of(mesh));
            const State s0 = initial_state(sys, init);
            SimulationOptions opt;
            opt.T = T;
            opt.dt = dt;
            opt.sample_stride = stride;
            const SimulationResult res = simulate(sys, s0, opt);
            emit(out, [&](std::ostream& os) { write_csv(os, res.trace); });
        } else if (*spectrum) {
            if (count <= 0) throw InputError("--count must be positive");
            const DiscreteSystem sys = assemble(load_tree(file), mesh_of(mesh));
            if (count > 2 * sys.size()) throw InputError("--count exceeds the problem dimension");
            const SpectrumReport rep = quadratic_eigenvalues(sys, count, parse_shift(shift));
            emit(out, [&](std::ostream& os) { os << io::to_json(rep).dump(2) << '\n'; });
        } else if (*resolvent) {
            const DiscreteSystem sys = assemble(load_tree(file), mesh_of(mesh));
            const ResolventCurve curve = resolvent_sweep(sys, linspace(beta_min, beta_max, points), threads);
            emit(out, [&](std::ostream& os) { io::write_csv(os, curve); });
        } else if (*blowup) {
            for (long long n : ns) {
                const auto r = static_cast<long long>(std::llround(std::sqrt(static_cast<double>(n))));
                if (n <= 0 || r * r != n || r % 2 != 0)
                    throw InputError("--n: " + std::to_string(n) + " is not a perfect square with an even root");
            }
            const auto rows = oracle::s0_blowup(ns);
            emit(out, [&](std::ostream& os) { io::write_csv(os, rows); });
        } else if (*certify) {
            const TreeNetwork tree = load_tree(file);
            for (const Edge& e : tree.edges())
                if (e.kind != EdgeKind::Beam) throw InputError("certify needs an all-beam tree; '" + e.id + "' is a string");
            io::json arr = io::json::array();
            for (double b : betas) {
                if (!(b > 0.0)) throw InputError("--beta values must be positive");
                arr.push_back(io::to_json(j_certificate(tree, b), tree));
            }
            emit(out, [&](std::ostream& os) { os << arr.dump(2) << '\n'; });
        }
    } catch (const ParseFailure& e) {
        std::cerr << e.what() << '\n';
        return kInputError;
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kInputError;
    } catch (const TopologyError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kInputError;
    } catch (const MeshError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kInputError;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kNumericalError;
    }
    return 0;
}
