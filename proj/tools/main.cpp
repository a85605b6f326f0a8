#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <iostream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "topoflock/scenario.hpp"
#include "topoflock/verify.hpp"

using namespace topoflock;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvariant = 1;
constexpr int kExitInstability = 2;
constexpr int kExitConfig = 3;

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void cap_threads_from_env() {
#ifdef _OPENMP
    if (const char* env = std::getenv("TOPOFLOCK_THREADS")) {
        int n = std::atoi(env);
        if (n > 0) omp_set_num_threads(n);
    }
#endif
}

struct RunOutcome {
    int exit_code = kExitOk;
    std::map<std::string, std::string> summary;
};

RunOutcome execute_run(const ScenarioConfig& cfg) {
    RunOutcome out;
    auto& kv = out.summary;
    kv["scenario"] = cfg.scenario;
    kv["dim"] = std::to_string(cfg.dim);
    kv["n"] = std::to_string(cfg.n);
    kv["alpha"] = fmt(cfg.kernel.alpha);
    kv["tau"] = fmt(cfg.kernel.tau);
    kv["seed"] = std::to_string(cfg.seed);
    kv["verify_suite"] = verification_suite_version();

    TorusGrid g(cfg.dim, cfg.n);
    OperatorWorkspace ws(g, cfg.kernel, cfg.vol_refine, cfg.bdry_refine);
    State initial = build_initial_state(cfg);
    RunMonitor monitor(ws, cfg.monitor);

    std::string failure;
    try {
        run(initial, ws, cfg.solver, std::ref(monitor));
    } catch (const VacuumError& e) {
        failure = e.what();
        out.exit_code = kExitInvariant;
        kv["failure"] = std::string("vacuum: ") + e.what();
    } catch (const InstabilityError& e) {
        failure = e.what();
        out.exit_code = kExitInstability;
        kv["failure"] = std::string("instability: ") + e.what();
    }

    auto& recs = monitor.finalize();
    csv_emit(recs, cfg.dim, cfg.output + ".csv");
    kv["csv"] = cfg.output + ".csv";
    kv["records"] = std::to_string(recs.size());
    kv["amplitude_stride"] = std::to_string(monitor.amplitude_stride_used());
    if (recs.empty()) return out;

    const auto& first = recs.front();
    const auto& last = recs.back();
    kv["t_final"] = fmt(last.t);
    kv["mass_final"] = fmt(last.mass);
    kv["energy_final"] = fmt(last.energy);
    kv["amplitude_final"] = fmt(last.amplitude);
    kv["rho_min_final"] = fmt(last.rho_min);
    kv["rho_max_final"] = fmt(last.rho_max);
    kv["y_m_final"] = fmt(last.y_m);

    double mass_drift = std::abs(last.mass / first.mass - 1.0);
    double mom_scale = std::max({std::abs(first.momentum[0]), std::abs(first.momentum[1]),
                                 first.mass * (first.amplitude + 1e-30)});
    double mom_drift = 0.0;
    double amp_overshoot = 0.0, energy_overshoot = 0.0;
    double max_eres = 0.0, max_eeq = 0.0, max_dissipation = 0.0;
    bool density_bound_ok = true;
    for (size_t i = 0; i < recs.size(); ++i) {
        const auto& r = recs[i];
        for (int c = 0; c < cfg.dim; ++c)
            mom_drift = std::max(
                mom_drift, std::abs(r.momentum[size_t(c)] - first.momentum[size_t(c)]) / mom_scale);
        amp_overshoot = std::max(amp_overshoot, r.amplitude - first.amplitude * (1.0 + 1e-10));
        max_dissipation = std::max(max_dissipation, r.dissipation);
        max_eeq = std::max(max_eeq, r.e_eq_residual);
        if (i > 0) {
            energy_overshoot = std::max(
                energy_overshoot, r.energy - recs[i - 1].energy - 1e-10 * first.energy);
            // d/dt log rho_max <= |div u|_inf (+ slack for the discrete argmax)
            double dt = r.t - recs[i - 1].t;
            double gu = cfg.dim * std::max(r.grad_u_inf, recs[i - 1].grad_u_inf);
            double slack = 0.05 * (1.0 + gu) * dt + 1e-8;
            if (std::log(r.rho_max / recs[i - 1].rho_max) > gu * dt + slack ||
                std::log(recs[i - 1].rho_min / r.rho_min) > gu * dt + slack)
                density_bound_ok = false;
        }
        if (i > 0 && i + 1 < recs.size() && max_dissipation > 0.0)
            max_eres = std::max(max_eres, std::abs(r.energy_residual));
    }
    kv["mass_drift_rel"] = fmt(mass_drift);
    kv["momentum_drift_rel"] = fmt(mom_drift);
    kv["amplitude_monotone"] = amp_overshoot <= 0.0 ? "yes" : "no";
    kv["energy_monotone"] = energy_overshoot <= 0.0 ? "yes" : "no";
    kv["density_bound_growth_ok"] = density_bound_ok ? "yes" : "no";
    kv["max_energy_residual"] = fmt(max_eres);
    kv["max_energy_residual_rel"] =
        fmt(max_dissipation > 0.0 ? max_eres / max_dissipation : 0.0);
    kv["max_e_eq_residual"] = fmt(max_eeq);
    kv["flocking_residual_final"] = fmt(last.flocking_residual);

    if (out.exit_code == kExitOk) {
        bool violated = amp_overshoot > 0.0 || energy_overshoot > 0.0 ||
                        mass_drift > 1e-10 * std::max(1.0, last.t) || !density_bound_ok;
        if (violated) out.exit_code = kExitInvariant;
    }
    kv["exit_code"] = std::to_string(out.exit_code);
    return out;
}

int cmd_run(const std::string& config_path) {
    ScenarioConfig cfg = parse_config_file(config_path);
    RunOutcome out = execute_run(cfg);
    summary_emit(out.summary, cfg.output + ".summary");
    std::cout << "run: " << cfg.scenario << " -> " << cfg.output << ".csv, " << cfg.output
              << ".summary (exit " << out.exit_code << ")\n";
    if (out.summary.count("failure")) std::cerr << out.summary["failure"] << "\n";
    return out.exit_code;
}

int cmd_verify() {
    auto results = run_verification();
    size_t width = 0;
    for (const auto& r : results) width = std::max(width, r.name.size());
    bool all_pass = true;
    const CheckResult* first_fail = nullptr;
    for (const auto& r : results) {
        std::printf("%-*s  %s  metric %.3e  threshold %.3e\n", int(width), r.name.c_str(),
                    r.pass ? "PASS" : "FAIL", r.metric, r.threshold);
        if (!r.pass && !first_fail) first_fail = &r;
        all_pass = all_pass && r.pass;
    }
    std::printf("suite version %s: %s\n", verification_suite_version().c_str(),
                all_pass ? "all checks passed" : "FAILURES present");
    if (first_fail)
        std::printf("first failure: %s (measured %.6e, allowed %.6e) %s\n",
                    first_fail->name.c_str(), first_fail->metric, first_fail->threshold,
                    first_fail->detail.c_str());
    return all_pass ? kExitOk : kExitInvariant;
}

int cmd_convergence(const std::string& config_path, int levels) {
    if (levels < 3) throw ConfigError("convergence: need levels >= 3");
    ScenarioConfig base = parse_config_file(config_path);
    struct Level {
        int n;
        State final_state;
        double eres = 0.0, eeq = 0.0;
    };
    std::vector<Level> lv;
    for (int L = 0; L < levels; ++L) {
        ScenarioConfig cfg = base;
        cfg.n = base.n << L;
        // quadrature tables refine with the grid so both error sources shrink
        cfg.vol_refine = base.vol_refine << L;
        cfg.bdry_refine = base.bdry_refine << L;
        cfg.solver.diag_every = base.solver.diag_every << L;
        TorusGrid g(cfg.dim, cfg.n);
        OperatorWorkspace ws(g, cfg.kernel, cfg.vol_refine, cfg.bdry_refine);
        RunMonitor monitor(ws, cfg.monitor);
        State fin = run(build_initial_state(cfg), ws, cfg.solver, std::ref(monitor));
        auto& recs = monitor.finalize();
        Level out{cfg.n, fin, 0.0, 0.0};
        double dmax = 0.0;
        for (const auto& r : recs) dmax = std::max(dmax, r.dissipation);
        for (size_t i = 1; i + 1 < recs.size(); ++i)
            out.eres = std::max(out.eres, std::abs(recs[i].energy_residual) / (dmax + 1e-30));
        out.eeq = recs.back().e_eq_residual;
        lv.push_back(std::move(out));
        std::printf("level %d: n = %d, energy-law residual %.3e, e-equation residual %.3e\n", L,
                    lv.back().n, lv.back().eres, lv.back().eeq);
    }

    // self-convergence of the final fields, fine level restricted to coarse nodes
    auto restrict_err = [&](const Level& coarse, const Level& fine) {
        int ratio = fine.n / coarse.n;
        double acc = 0.0;
        long cnt = coarse.final_state.rho.size();
        for (long x = 0; x < cnt; ++x) {
            const TorusGrid& cg = coarse.final_state.rho.grid;
            long fx;
            if (cg.dim == 1) {
                fx = x * ratio;
            } else {
                long i = x / cg.n, j = x % cg.n;
                fx = (i * ratio) * fine.n + j * ratio;
            }
            double d = coarse.final_state.rho[x] - fine.final_state.rho[fx];
            acc += d * d;
            for (int c = 0; c < coarse.final_state.u.dim(); ++c) {
                double du = coarse.final_state.u[c][x] - fine.final_state.u[c][fx];
                acc += du * du;
            }
        }
        return std::sqrt(acc / double(cnt));
    };

    std::vector<double> errs;
    for (size_t L = 0; L + 1 < lv.size(); ++L) errs.push_back(restrict_err(lv[L], lv[L + 1]));
    bool monotone = true;
    for (size_t i = 0; i + 1 < errs.size(); ++i) monotone = monotone && errs[i + 1] < errs[i];
    for (size_t i = 0; i < errs.size(); ++i) {
        if (errs[i] < 1e-13) {
            std::printf("fields %d -> %d: error %.3e (exact)\n", lv[i].n, lv[i + 1].n, errs[i]);
        } else if (i + 1 < errs.size()) {
            std::printf("fields %d -> %d: error %.3e, observed order %.2f\n", lv[i].n,
                        lv[i + 1].n, errs[i], std::log2(errs[i] / errs[i + 1]));
        } else {
            std::printf("fields %d -> %d: error %.3e\n", lv[i].n, lv[i + 1].n, errs[i]);
        }
    }
    if (!monotone && errs.back() > 1e-13)
        std::printf("warning: error sequence is not monotone\n");
    for (size_t i = 0; i + 1 < lv.size(); ++i) {
        if (lv[i].eres > 1e-14 && lv[i + 1].eres > 1e-14)
            std::printf("energy-law residual order %.2f\n",
                        std::log2(lv[i].eres / lv[i + 1].eres));
        if (lv[i].eeq > 1e-14 && lv[i + 1].eeq > 1e-14)
            std::printf("e-equation residual order %.2f\n", std::log2(lv[i].eeq / lv[i + 1].eeq));
    }
    return monotone || errs.back() < 1e-13 ? kExitOk : kExitInvariant;
}

} // namespace

int main(int argc, char** argv) {
    cap_threads_from_env();
    CLI::App app{"topological alignment hydrodynamics on the periodic torus"};
    app.require_subcommand(1);

    std::string config_path;
    int levels = 3;
    auto* run_cmd = app.add_subcommand("run", "execute a scenario from a config file");
    run_cmd->add_option("config", config_path, "flat key = value config file")->required();
    auto* verify_cmd = app.add_subcommand("verify", "run the operator identity suite");
    auto* conv_cmd = app.add_subcommand("convergence", "self-convergence study over N, 2N, 4N, ...");
    conv_cmd->add_option("config", config_path, "base config file")->required();
    conv_cmd->add_option("--levels", levels, "number of resolutions (>= 3)");
    auto* preset_cmd = app.add_subcommand("preset", "preset utilities");
    std::string preset_action = "list";
    preset_cmd->add_option("action", preset_action, "list");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run_cmd->parsed()) return cmd_run(config_path);
        if (verify_cmd->parsed()) return cmd_verify();
        if (conv_cmd->parsed()) return cmd_convergence(config_path, levels);
        if (preset_cmd->parsed()) {
            if (preset_action != "list") throw ConfigError("preset: unknown action " + preset_action);
            std::cout << preset_listing();
            return kExitOk;
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const VacuumError& e) {
        std::cerr << "vacuum: " << e.what() << "\n";
        return kExitInvariant;
    } catch (const InstabilityError& e) {
        std::cerr << "instability: " << e.what() << "\n";
        return kExitInstability;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInstability;
    }
    return kExitOk;
}
