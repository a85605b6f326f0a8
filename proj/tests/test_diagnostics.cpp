#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "oracles.hpp"
#include "topoflock/diagnostics.hpp"
#include "topoflock/scenario.hpp"

using namespace topoflock;

TEST_CASE("amplitude") {
    TorusGrid g(1, 64);
    VectorField u(g);
    for (int i = 0; i < g.n; ++i) u[0][i] = 2.5;
    CHECK(amplitude(u) == 0.0);

    for (int i = 0; i < g.n; ++i) u[0][i] = std::sin(i * g.dx);
    // n is a multiple of 4 so +-1 are attained exactly on the lattice
    CHECK(amplitude(u) == doctest::Approx(2.0).epsilon(1e-13));

    // invariant under a Galilean shift
    State s;
    s.rho = ScalarField(g, 1.0);
    s.u = u;
    for (int i = 0; i < g.n; ++i) s.u[0][i] += 0.8;
    auto [norm, ubar] = galilean_normalize(s);
    CHECK(amplitude(norm.u) == doctest::Approx(amplitude(s.u)).epsilon(1e-13));

    // dense pair-scan oracle on a random 2D field
    TorusGrid g2(2, 16);
    SplitMix64 rng(3);
    VectorField w(g2);
    w[0] = random_band_limited(g2, 3, rng);
    w[1] = random_band_limited(g2, 3, rng);
    double best = 0.0;
    for (long a = 0; a < g2.node_count(); ++a)
        for (long b = 0; b < g2.node_count(); ++b) {
            double d0 = w[0][a] - w[0][b], d1 = w[1][a] - w[1][b];
            best = std::max(best, std::hypot(d0, d1));
        }
    CHECK(amplitude(w) == doctest::Approx(best).epsilon(1e-13));

    // subsampled amplitude obeys the Lipschitz bound
    TorusGrid gf(1, 256);
    VectorField uf(gf);
    for (int i = 0; i < gf.n; ++i) uf[0][i] = std::sin(i * gf.dx) + 0.3 * std::cos(3.0 * i * gf.dx);
    double exact = amplitude(uf, 1);
    double coarse = amplitude(uf, 4);
    double grad_inf = linf_norm(derivative(uf[0], 0, 1));
    CHECK(coarse <= exact);
    CHECK(exact - coarse <= 2.0 * grad_inf * 4.0 * gf.dx);
}

TEST_CASE("energy and dissipation") {
    TorusGrid g(1, 128);
    KernelParams p{0.75, 1.0, 0.5, 1.0, 0.5};
    OperatorWorkspace ws(g, p);

    State s;
    s.rho = ScalarField(g, 1.4);
    s.u = VectorField(g);
    KernelTable kt = ws.eval_kernel(s.rho);
    auto [e0, d0] = energy_and_dissipation(s, ws, kt);
    CHECK(e0 == 0.0);
    CHECK(d0 == 0.0);

    for (int i = 0; i < g.n; ++i) s.u[0][i] = 0.6;
    auto [e1, d1] = energy_and_dissipation(s, ws, kt);
    CHECK(e1 == doctest::Approx(0.5 * integral(s.rho) * 0.36).epsilon(1e-13));
    CHECK(d1 < 1e-15);
}

TEST_CASE("e-equation residual") {
    TorusGrid g(1, 128);
    KernelParams p{0.5, 1.0, 0.5, 1.0, 0.5};
    OperatorWorkspace ws(g, p);

    // steady uniform state: every term vanishes
    State steady;
    steady.rho = ScalarField(g, 1.0);
    steady.u = VectorField(g);
    for (int i = 0; i < g.n; ++i) steady.u[0][i] = 0.4;
    KernelTable kt = ws.eval_kernel(steady.rho);
    Rhs f = rhs(steady, ws, kt);
    CHECK(e_equation_residual(steady, f, ws, kt) < 1e-12);

    // constant velocity, generic smooth density: analytically zero and, with
    // band-limited data, exact to spectral accuracy
    {
        State s;
        s.rho = ScalarField(g);
        s.u = VectorField(g);
        for (int i = 0; i < g.n; ++i) {
            s.rho[i] = 1.0 + 0.3 * std::cos(i * g.dx);
            s.u[0][i] = 0.4;
        }
        KernelTable ktc = ws.eval_kernel(s.rho);
        Rhs fc = rhs(s, ws, ktc);
        CHECK(e_equation_residual(s, fc, ws, ktc) < 5e-3);
    }

    // self-convergence on a state of limited smoothness (|sin|^{5/2} components
    // carry an algebraic spectral tail, so the truncation error is visible)
    auto residual_at = [&](int n, int refine) {
        TorusGrid gn(1, n);
        OperatorWorkspace wsn(gn, p, refine, refine);
        State s;
        s.rho = ScalarField(gn);
        s.u = VectorField(gn);
        for (int i = 0; i < gn.n; ++i) {
            double x = i * gn.dx;
            s.rho[i] = 1.0 + 0.3 * std::cos(x) + 0.1 * std::pow(std::abs(std::sin(x)), 2.5);
            s.u[0][i] = 0.4 * std::sin(x) + 0.1 * std::pow(std::abs(std::sin(x + 0.7)), 2.5);
        }
        KernelTable ktn = wsn.eval_kernel(s.rho);
        Rhs fn = rhs(s, wsn, ktn);
        return e_equation_residual(s, fn, wsn, ktn);
    };
    double r128 = residual_at(128, 16);
    double r256 = residual_at(256, 32);
    double r512 = residual_at(512, 64);
    CHECK(r128 < 5e-2);
    CHECK(r256 < r128);
    CHECK(r512 < r256);
}

TEST_CASE("flocking residual") {
    TorusGrid g(1, 128);
    ScalarField rho(g);
    for (int i = 0; i < g.n; ++i) rho[i] = 1.0 + 0.5 * std::cos(i * g.dx);

    // exact traveling wave: rho(t) = profile shifted by -t ubar
    std::array<double, 2> ubar = {0.7, 0.0};
    double t = 2.3;
    ScalarField moved = shift_field(rho, {-t * ubar[0], 0.0});
    CHECK(flocking_residual(moved, t, ubar, rho, 0.0) < 1e-12);

    // stationary density with zero mean velocity
    CHECK(flocking_residual(rho, 5.0, {0.0, 0.0}, rho, 0.0) == 0.0);

    // a genuinely different profile is detected
    ScalarField other = rho;
    for (int i = 0; i < g.n; ++i) other[i] += 0.1 * std::sin(2.0 * i * g.dx);
    CHECK(flocking_residual(other, t, ubar, rho, t) > 0.05);
}

TEST_CASE("exponential decay fit") {
    std::vector<std::pair<double, double>> clean;
    for (int i = 0; i < 40; ++i) {
        double t = 0.25 * i;
        clean.push_back({t, std::exp(-3.0 * t)});
    }
    ExpFit fit = fit_exponential_decay(clean);
    CHECK(fit.rate == doctest::Approx(3.0).epsilon(1e-6));
    CHECK(fit.r2 > 0.999999);

    // power-law data is recognized as a poor exponential
    std::vector<std::pair<double, double>> power;
    for (int i = 0; i < 60; ++i) {
        double t = 0.5 * i;
        power.push_back({t, 1.0 / (1.0 + 30.0 * t)});
    }
    CHECK(fit_exponential_decay(power).r2 < 0.9);

    std::vector<std::pair<double, double>> tiny = {{0.0, 1.0}, {1.0, 0.5}};
    CHECK_THROWS_AS(fit_exponential_decay(tiny), std::invalid_argument);
    std::vector<std::pair<double, double>> dead(20, {1.0, 0.0});
    CHECK_THROWS_AS(fit_exponential_decay(dead), std::invalid_argument);
}

TEST_CASE("csv schema and round trip") {
    std::string path = "test_diag.csv";
    csv_emit({}, 1, path);
    {
        std::ifstream in(path);
        std::string header;
        std::getline(in, header);
        int commas = 0;
        for (char c : header) commas += c == ',';
        CHECK(commas + 1 == 15); // 14 fixed columns + momentum_1
        std::string extra;
        CHECK(!std::getline(in, extra)); // header only
    }

    DiagRecord r;
    r.dim = 2;
    r.t = 0.125;
    r.mass = 6.28318530717958647;
    r.momentum = {0.1234567890123456789, -2e-15};
    r.energy = 1e-3;
    r.dissipation = 3.3333333333333333e-1;
    r.energy_residual = -1e-12;
    r.amplitude = 1.999999999999999;
    r.rho_min = 0.1;
    r.rho_max = 1.9;
    r.grad_u_inf = 0.5;
    r.grad_rho_inf = 0.25;
    r.e_inf = 0.75;
    r.y_m = 12.0;
    r.e_eq_residual = 1e-4;
    r.flocking_residual = 1e-5;
    csv_emit({r}, 2, path);
    std::ifstream in(path);
    std::string header, line;
    std::getline(in, header);
    std::getline(in, line);
    std::istringstream ss(line);
    std::vector<double> vals;
    std::string tok;
    while (std::getline(ss, tok, ',')) vals.push_back(std::stod(tok));
    REQUIRE(vals.size() == 16); // 14 + dim
    CHECK(vals[0] == r.t);
    CHECK(vals[1] == r.mass);
    CHECK(vals[2] == r.momentum[0]);
    CHECK(vals[3] == r.momentum[1]);
    CHECK(vals[4] == r.energy);
    CHECK(vals[5] == r.dissipation);
    CHECK(vals[6] == r.energy_residual);
    CHECK(vals[7] == r.amplitude);
    CHECK(vals[15] == r.flocking_residual);
    std::remove(path.c_str());

    CHECK_THROWS_WITH_AS(csv_emit({}, 1, "/nonexistent-dir/x.csv"),
                         doctest::Contains("/nonexistent-dir/x.csv"), std::runtime_error);
}

TEST_CASE("run monitor fills cadence columns") {
    TorusGrid g(1, 64);
    KernelParams p{1.0, 1.0, 0.5, 1.0, 0.5};
    OperatorWorkspace ws(g, p);
    SolverConfig cfg;
    cfg.t_end = 0.5;
    cfg.diag_every = 4;
    State s;
    s.rho = ScalarField(g);
    s.u = VectorField(g);
    for (int i = 0; i < g.n; ++i) {
        s.rho[i] = 1.0 + 0.3 * std::cos(i * g.dx);
        s.u[0][i] = 0.3 + 0.4 * std::sin(i * g.dx);
    }
    MonitorOptions opt;
    opt.checkpoint_dt = 0.2;
    RunMonitor monitor(ws, opt);
    run(s, ws, cfg, std::ref(monitor));
    auto& recs = monitor.finalize();
    REQUIRE(recs.size() >= 5);
    CHECK(recs.front().t == 0.0);
    CHECK(recs.back().t == doctest::Approx(0.5).epsilon(1e-12));
    // interior centered residuals are small relative to the dissipation scale
    double dmax = 0.0;
    for (const auto& r : recs) dmax = std::max(dmax, r.dissipation);
    for (size_t i = 1; i + 1 < recs.size(); ++i)
        CHECK(std::abs(recs[i].energy_residual) < 0.05 * dmax);
    // amplitude and energy never grow
    for (size_t i = 1; i < recs.size(); ++i) {
        CHECK(recs[i].amplitude <= recs.front().amplitude * (1.0 + 1e-10));
        CHECK(recs[i].energy <= recs[i - 1].energy + 1e-10 * recs.front().energy);
    }
    // record invariants and the density-bound growth inequalities
    for (size_t i = 0; i < recs.size(); ++i) {
        const auto& r = recs[i];
        CHECK(r.mass > 0.0);
        CHECK(r.energy >= 0.0);
        CHECK(r.dissipation >= 0.0);
        CHECK(r.rho_min <= r.rho_max);
        if (i == 0) continue;
        double dt = r.t - recs[i - 1].t;
        double rate = std::max(r.grad_u_inf, recs[i - 1].grad_u_inf); // = |div u|_inf in 1D
        double slack = 0.05 * (1.0 + rate) * dt + 1e-8;
        CHECK(std::log(r.rho_max / recs[i - 1].rho_max) <= rate * dt + slack);
        CHECK(std::log(recs[i - 1].rho_min / r.rho_min) <= rate * dt + slack);
    }
}
