#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "topoflock/scenario.hpp"
#include "topoflock/verify.hpp"

using namespace topoflock;

TEST_CASE("config parsing") {
    ScenarioConfig cfg = parse_config_text(
        "# comment\n"
        "dim = 1\n"
        "n = 128\n"
        "alpha = 0.75\n"
        "tau = 1\n"
        "scenario = general_1d\n"
        "t_end = 2.5\n"
        "cfl = 0.3\n"
        "seed = 99\n"
        "output = out/test\n");
    CHECK(cfg.n == 128);
    CHECK(cfg.kernel.alpha == 0.75);
    CHECK(cfg.solver.t_end == 2.5);
    CHECK(cfg.solver.cfl == 0.3);
    CHECK(cfg.seed == 99);
    CHECK(cfg.output == "out/test");

    // defaults: tau follows the dimension, r0 = 0.5
    ScenarioConfig d = parse_config_text("scenario = general_1d\n");
    CHECK(d.kernel.tau == 1.0);
    CHECK(d.kernel.r0 == 0.5);

    CHECK_THROWS_WITH_AS(parse_config_text("n = twelve\n"), doctest::Contains("bad numeric"),
                         ConfigError);
    CHECK_THROWS_WITH_AS(parse_config_text("frobnicate = 1\n"), doctest::Contains("frobnicate"),
                         ConfigError);
    CHECK_THROWS_WITH_AS(parse_config_text("dim 2\n"), doctest::Contains(":1:"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("scenario = shear_2d\ndim = 1\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("scenario = nearly_aligned\nepsilon = 0.5\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("amp_rho = 0.95\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_file("no_such_file.cfg"), ConfigError);
}

TEST_CASE("presets keep the data non-vacuous") {
    for (const char* name : {"general_1d", "nearly_aligned", "metric_check"}) {
        ScenarioConfig cfg = parse_config_text(std::string("scenario = ") + name + "\nn = 64\n" +
                                               (std::string(name) == "metric_check" ? "tau = 0\n" : ""));
        State s = build_initial_state(cfg);
        CHECK(s.rho.min() >= 0.1);
        CHECK(s.rho.all_finite());
        CHECK(s.u.all_finite());
    }
    ScenarioConfig cfg2 = parse_config_text("scenario = shear_2d\ndim = 2\nn = 32\n");
    State s2 = build_initial_state(cfg2);
    CHECK(s2.rho.min() >= 0.1);
    CHECK(linf_norm(s2.u[1]) == 0.0);
}

TEST_CASE("nearly aligned preset") {
    TorusGrid g(1, 128);
    State s = preset_nearly_aligned(g, 0.8, 1e-3, 2, 7);
    CHECK(s.rho.min() >= 0.1);
    double amp = amplitude(s.u);
    CHECK(amp <= 2.2e-3);
    CHECK(amp >= 2e-4);
    // momentum was normalized away
    ScalarField mom(g);
    for (long x = 0; x < g.node_count(); ++x) mom[x] = s.rho[x] * s.u[0][x];
    CHECK(std::abs(integral(mom)) < 1e-15);

    // deterministic in the seed
    State t = preset_nearly_aligned(g, 0.8, 1e-3, 2, 7);
    for (long x = 0; x < g.node_count(); ++x) CHECK(s.u[0][x] == t.u[0][x]);
    State other = preset_nearly_aligned(g, 0.8, 1e-3, 2, 8);
    double diff = 0.0;
    for (long x = 0; x < g.node_count(); ++x)
        diff = std::max(diff, std::abs(s.u[0][x] - other.u[0][x]));
    CHECK(diff > 1e-6);
}

TEST_CASE("runs are reproducible byte for byte") {
    ScenarioConfig cfg = parse_config_text(
        "scenario = general_1d\nn = 64\nt_end = 0.2\ndiag_every = 4\nalpha = 1\ntau = 1\n");
    auto run_once = [&](const std::string& path) {
        TorusGrid g(cfg.dim, cfg.n);
        OperatorWorkspace ws(g, cfg.kernel, cfg.vol_refine, cfg.bdry_refine);
        RunMonitor monitor(ws, cfg.monitor);
        run(build_initial_state(cfg), ws, cfg.solver, std::ref(monitor));
        csv_emit(monitor.finalize(), cfg.dim, path);
    };
    run_once("repro_a.csv");
    run_once("repro_b.csv");
    std::ifstream a("repro_a.csv"), b("repro_b.csv");
    std::string sa((std::istreambuf_iterator<char>(a)), std::istreambuf_iterator<char>());
    std::string sb((std::istreambuf_iterator<char>(b)), std::istreambuf_iterator<char>());
    CHECK(sa == sb);
    CHECK(sa.size() > 100);
    std::remove("repro_a.csv");
    std::remove("repro_b.csv");
}

TEST_CASE("summary emission is deterministic and wall-clock free") {
    std::map<std::string, std::string> kv = {
        {"scenario", "general_1d"}, {"mass_drift_rel", "1e-14"}, {"verify_suite",
        verification_suite_version()}};
    summary_emit(kv, "test_summary_a.txt");
    summary_emit(kv, "test_summary_b.txt");
    std::ifstream a("test_summary_a.txt"), b("test_summary_b.txt");
    std::string sa((std::istreambuf_iterator<char>(a)), std::istreambuf_iterator<char>());
    std::string sb((std::istreambuf_iterator<char>(b)), std::istreambuf_iterator<char>());
    CHECK(sa == sb);
    CHECK(sa.find("verify_suite") != std::string::npos);
    std::remove("test_summary_a.txt");
    std::remove("test_summary_b.txt");
}

TEST_CASE("preset listing names every scenario") {
    std::string listing = preset_listing();
    for (const char* name : {"general_1d", "shear_2d", "nearly_aligned", "metric_check"})
        CHECK(listing.find(name) != std::string::npos);
}

TEST_CASE("verification suite is green") {
    auto results = run_verification();
    CHECK(results.size() >= 15);
    for (const auto& r : results) {
        INFO(r.name, ": metric ", r.metric, " threshold ", r.threshold);
        CHECK(r.pass);
    }
    CHECK(verification_suite_version().size() >= 8);
}
