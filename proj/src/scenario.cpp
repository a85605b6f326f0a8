#include "topoflock/scenario.hpp"

#include <fstream>
#include <sstream>

namespace topoflock {

ScalarField random_band_limited(const TorusGrid& g, int max_mode, SplitMix64& rng) {
    ScalarField f(g);
    for (int k1 = (g.dim == 1 ? 1 : -max_mode); k1 <= max_mode; ++k1) {
        for (int k2 = (g.dim == 2 ? 0 : 0); k2 <= (g.dim == 2 ? max_mode : 0); ++k2) {
            if (g.dim == 2 && k2 == 0 && k1 <= 0) continue; // one rep per conjugate pair
            if (g.dim == 1 && k1 < 1) continue;
            double a = rng.symmetric(), b = rng.symmetric();
            for (long x = 0; x < g.node_count(); ++x) {
                auto xy = g.coords(x);
                double ph = k1 * xy[0] + k2 * xy[1];
                f[x] += a * std::cos(ph) + b * std::sin(ph);
            }
        }
    }
    return f;
}

void ScenarioConfig::validate() const {
    TorusGrid g(dim, n); // checks dim and n
    kernel.validate(g.side);
    solver.validate();
    if (scenario != "general_1d" && scenario != "shear_2d" && scenario != "nearly_aligned" &&
        scenario != "metric_check")
        throw ConfigError("scenario must be one of general_1d, shear_2d, nearly_aligned, metric_check");
    if (scenario == "shear_2d" && dim != 2) throw ConfigError("shear_2d requires dim = 2");
    if (scenario != "shear_2d" && dim != 1)
        throw ConfigError(scenario + " is a 1D scenario in this harness");
    if (scenario == "nearly_aligned" && epsilon > 1e-2)
        throw ConfigError("nearly_aligned requires epsilon <= 1e-2");
    if (vol_refine < 1 || bdry_refine < 1) throw ConfigError("refinement counts must be >= 1");
    if (amp_rho < 0.0 || amp_rho > 0.9)
        throw ConfigError("amp_rho must be in [0, 0.9] to keep rho >= 0.1");
}

namespace {

ScenarioConfig apply_kv(const std::map<std::string, std::string>& kv, const std::string& origin) {
    ScenarioConfig cfg;
    auto geti = [&](const char* k, int d) {
        auto it = kv.find(k);
        return it == kv.end() ? d : std::stoi(it->second);
    };
    auto getd = [&](const char* k, double d) {
        auto it = kv.find(k);
        return it == kv.end() ? d : std::stod(it->second);
    };
    auto gets = [&](const char* k, std::string d) {
        auto it = kv.find(k);
        return it == kv.end() ? d : it->second;
    };
    auto getb = [&](const char* k, bool d) {
        auto it = kv.find(k);
        if (it == kv.end()) return d;
        return it->second == "true" || it->second == "1" || it->second == "on";
    };
    cfg.dim = geti("dim", 1);
    cfg.n = geti("n", 256);
    cfg.kernel.alpha = getd("alpha", 1.0);
    cfg.kernel.tau = getd("tau", double(cfg.dim));
    cfg.kernel.r0 = getd("r0", 0.5);
    cfg.kernel.Lambda = getd("lambda", 1.0);
    cfg.kernel.kappa = getd("kappa", 0.5);
    cfg.scenario = gets("scenario", "general_1d");
    cfg.amp_rho = getd("amp_rho", 0.5);
    cfg.amp_u = getd("amp_u", 0.5);
    cfg.u_mean = getd("u_mean", 0.3);
    cfg.epsilon = getd("epsilon", 1e-3);
    cfg.max_mode = geti("max_mode", 2);
    cfg.seed = uint64_t(std::stoull(gets("seed", "42")));
    cfg.solver.cfl = getd("cfl", 0.4);
    cfg.solver.t_end = getd("t_end", 1.0);
    cfg.solver.max_steps = geti("max_steps", 2000000);
    cfg.solver.dealias = getb("dealias", true);
    cfg.solver.diag_every = geti("diag_every", 10);
    cfg.solver.vacuum_eps = getd("vacuum_eps", 1e-8);
    cfg.monitor.sobolev_m = geti("sobolev_m", 3);
    cfg.monitor.checkpoint_dt = getd("checkpoint_dt", 1.0);
    cfg.monitor.amplitude_stride = geti("amplitude_stride", 0);
    cfg.monitor.e_eq_diag = getb("e_eq_diag", true);
    cfg.vol_refine = geti("vol_refine", 16);
    cfg.bdry_refine = geti("bdry_refine", 16);
    cfg.output = gets("output", "run");

    static const char* known[] = {
        "dim", "n", "alpha", "tau", "r0", "lambda", "kappa", "scenario", "amp_rho", "amp_u",
        "u_mean", "epsilon", "max_mode", "seed", "cfl", "t_end", "max_steps", "dealias",
        "diag_every", "vacuum_eps", "sobolev_m", "checkpoint_dt", "amplitude_stride",
        "e_eq_diag", "vol_refine", "bdry_refine", "output"};
    for (const auto& [k, v] : kv) {
        bool ok = false;
        for (const char* name : known) ok = ok || k == name;
        if (!ok) throw ConfigError(origin + ": unknown key '" + k + "'");
    }
    cfg.validate();
    return cfg;
}

std::map<std::string, std::string> read_kv(std::istream& in, const std::string& origin) {
    std::map<std::string, std::string> kv;
    std::string line;
    int lineno = 0;
    auto trim = [](std::string s) {
        size_t a = s.find_first_not_of(" \t\r");
        size_t b = s.find_last_not_of(" \t\r");
        return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    while (std::getline(in, line)) {
        ++lineno;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        size_t pos = t.find('=');
        if (pos == std::string::npos)
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key = value");
        std::string key = trim(t.substr(0, pos)), val = trim(t.substr(pos + 1));
        if (key.empty() || val.empty())
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key or value");
        kv[key] = val;
    }
    return kv;
}

} // namespace

ScenarioConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    try {
        return apply_kv(read_kv(in, path), path);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(path + ": bad numeric value (" + e.what() + ")");
    }
}

ScenarioConfig parse_config_text(const std::string& text, const std::string& origin) {
    std::istringstream in(text);
    try {
        return apply_kv(read_kv(in, origin), origin);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(origin + ": bad numeric value (" + e.what() + ")");
    }
}

State preset_nearly_aligned(const TorusGrid& g, double r_scale, double epsilon, int max_mode,
                            uint64_t seed) {
    State s;
    s.t = 0.0;
    s.rho = ScalarField(g);
    s.u = VectorField(g);
    for (long x = 0; x < g.node_count(); ++x) {
        auto xy = g.coords(x);
        double mix = 0.5 * std::cos(xy[0]) + 0.3 * std::sin(2.0 * xy[0]) +
                     0.2 * std::cos(3.0 * xy[0] + 1.0);
        if (g.dim == 2) mix = 0.5 * (mix + 0.5 * std::cos(xy[1]) + 0.3 * std::sin(xy[0] + xy[1]));
        s.rho[x] = 1.0 + r_scale * mix;
    }
    SplitMix64 rng(seed);
    for (int c = 0; c < g.dim; ++c) {
        // low modes dominate (1/k^2 weights) so the decay is single-rate
        ScalarField f(g);
        for (int k = 1; k <= max_mode; ++k) {
            double a = rng.symmetric(), b = rng.symmetric();
            for (long x = 0; x < g.node_count(); ++x) {
                auto xy = g.coords(x);
                double ph = k * xy[c == 0 ? 0 : 1];
                f[x] += (a * std::cos(ph) + b * std::sin(ph)) / double(k * k);
            }
        }
        s.u[c] = f;
    }
    double scale = epsilon / std::max(s.u.max_abs(), 1e-300);
    for (int c = 0; c < g.dim; ++c)
        for (long x = 0; x < g.node_count(); ++x) s.u[c][x] *= scale;
    return galilean_normalize(s).first;
}

State build_initial_state(const ScenarioConfig& cfg) {
    TorusGrid g(cfg.dim, cfg.n);
    State s;
    s.t = 0.0;
    s.rho = ScalarField(g, 1.0);
    s.u = VectorField(g);

    if (cfg.scenario == "general_1d") {
        for (int i = 0; i < g.n; ++i) {
            double x = i * g.dx;
            s.rho[i] = 1.0 + cfg.amp_rho * (0.6 * std::cos(x) + 0.3 * std::sin(2.0 * x));
            s.u[0][i] = cfg.u_mean + cfg.amp_u * (0.8 * std::sin(x) + 0.4 * std::cos(2.0 * x));
        }
    } else if (cfg.scenario == "metric_check") {
        for (int i = 0; i < g.n; ++i) {
            double x = i * g.dx;
            s.u[0][i] = cfg.amp_u * (0.6 * std::sin(x) - 0.3 * std::cos(2.0 * x));
        }
    } else if (cfg.scenario == "nearly_aligned") {
        return preset_nearly_aligned(g, std::min(cfg.amp_rho + 0.3, 0.8), cfg.epsilon,
                                     cfg.max_mode, cfg.seed);
    } else { // shear_2d
        for (int i = 0; i < g.n; ++i)
            for (int j = 0; j < g.n; ++j) {
                double x2 = j * g.dx;
                s.rho[g.flat(i, j)] = 1.0 + cfg.amp_rho * 0.6 * std::cos(x2);
                s.u[0][g.flat(i, j)] =
                    cfg.amp_u * (std::sin(x2) + 0.25 * std::cos(2.0 * x2));
            }
    }
    return s;
}

std::string preset_listing() {
    return "general_1d      smooth non-vacuous 1D data with a mean drift (amp_rho, amp_u, u_mean)\n"
           "shear_2d        parallel shear flock: u = (U(x2), 0), stationary rho0(x2)\n"
           "nearly_aligned  large density profile, u = epsilon * low-mode field (epsilon, seed)\n"
           "metric_check    tau = 0 path: uniform density, smooth velocity\n";
}

void summary_emit(const std::map<std::string, std::string>& kv, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("summary_emit: cannot open " + path);
    for (const auto& [k, v] : kv) out << k << " = " << v << "\n";
    if (!out) throw std::runtime_error("summary_emit: write failed for " + path);
}

} // namespace topoflock
