#include "topoflock/dynamics.hpp"

#include <chrono>

namespace topoflock {

Rhs rhs(const State& s, const OperatorWorkspace& ws, const KernelTable& kt,
        bool dealias_products, RhsTerms terms) {
    const TorusGrid& g = s.rho.grid;
    const long m = g.node_count();
    Rhs out{ScalarField(g), VectorField(g)};

    if (terms != RhsTerms::AlignmentOnly) {
        // continuity: -div(rho u)
        VectorField ru(g);
        for (int c = 0; c < g.dim; ++c)
            for (long x = 0; x < m; ++x) ru[c][x] = s.rho[x] * s.u[c][x];
        if (dealias_products) ru = dealias(ru);
        ScalarField div_ru = divergence(ru);
        for (long x = 0; x < m; ++x) out.drho[x] = -div_ru[x];

        // advection: -(u.grad)u
        for (int c = 0; c < g.dim; ++c) {
            ScalarField adv(g);
            for (int a = 0; a < g.dim; ++a) {
                ScalarField dua = derivative(s.u[c], a, 1);
                for (long x = 0; x < m; ++x) adv[x] += s.u[a][x] * dua[x];
            }
            if (dealias_products) adv = dealias(adv);
            for (long x = 0; x < m; ++x) out.du[c][x] = -adv[x];
        }
    }
    if (terms != RhsTerms::TransportOnly) {
        VectorField force = ws.alignment_force(s.u, s.rho, kt);
        axpy(1.0, force, out.du);
    }
    return out;
}

Rhs rhs(const State& s, const OperatorWorkspace& ws, bool dealias_products, RhsTerms terms) {
    if (terms == RhsTerms::TransportOnly) {
        KernelTable empty;
        return rhs(s, ws, empty, dealias_products, terms);
    }
    KernelTable kt = ws.eval_kernel(s.rho);
    return rhs(s, ws, kt, dealias_products, terms);
}

double cfl_dt(const State& s, const OperatorWorkspace& ws, const SolverConfig& cfg) {
    const TorusGrid& g = s.rho.grid;
    double umax = s.u.max_abs();
    double dt_transport = g.dx / (umax + 1e-12);
    double envelope = ws.diffusion_envelope(s.rho.min(), s.rho.max());
    double dt_diffusion = 1.0 / std::max(envelope, 1e-300);
    double dt = cfg.cfl * std::min(dt_transport, dt_diffusion);
    if (dt < 1e-10)
        throw InstabilityError("cfl_dt: dt underflow (" + std::to_string(dt) + ")");
    return dt;
}

State step_ssprk3(const State& s, double dt, const OperatorWorkspace& ws,
                  const SolverConfig& cfg) {
    auto euler = [&](const State& in) {
        Rhs f = rhs(in, ws, cfg.dealias);
        State out{in.t + dt, in.rho, in.u};
        axpy(dt, f.drho, out.rho);
        axpy(dt, f.du, out.u);
        if (cfg.dealias) {
            out.rho = dealias(out.rho);
            out.u = dealias(out.u);
        }
        return out;
    };
    State s1 = euler(s);
    State s2 = euler(s1);
    // s2 <- 3/4 s + 1/4 s2
    for (long x = 0; x < s.rho.size(); ++x) {
        s2.rho[x] = 0.75 * s.rho[x] + 0.25 * s2.rho[x];
        for (int c = 0; c < s.u.dim(); ++c) s2.u[c][x] = 0.75 * s.u[c][x] + 0.25 * s2.u[c][x];
    }
    s2.t = s.t + 0.5 * dt;
    State s3 = euler(s2);
    for (long x = 0; x < s.rho.size(); ++x) {
        s3.rho[x] = s.rho[x] / 3.0 + 2.0 / 3.0 * s3.rho[x];
        for (int c = 0; c < s.u.dim(); ++c)
            s3.u[c][x] = s.u[c][x] / 3.0 + 2.0 / 3.0 * s3.u[c][x];
    }
    s3.t = s.t + dt;
    return s3;
}

State run(const State& initial, const OperatorWorkspace& ws, const SolverConfig& cfg,
          const DiagSink& sink) {
    cfg.validate();
    State s = initial;
    if (cfg.dealias) {
        s.rho = dealias(s.rho);
        s.u = dealias(s.u);
    }
    s.validate(cfg.vacuum_eps);
    long step = 0;
    auto t0 = std::chrono::steady_clock::now();
    auto elapsed = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };
    if (sink) sink(s, {0.0, 0, 0, elapsed(), cfg.dealias});
    auto where = [&] { return " (step " + std::to_string(step + 1) + ", t = " + std::to_string(s.t) + ")"; };
    while (s.t < cfg.t_end - 1e-13 && step < cfg.max_steps) {
        try {
            double dt = std::min(cfl_dt(s, ws, cfg), cfg.t_end - s.t);
            s = step_ssprk3(s, dt, ws, cfg);
            s.validate(cfg.vacuum_eps);
            ++step;
            if (sink && (step % cfg.diag_every == 0 || s.t >= cfg.t_end - 1e-13))
                sink(s, {dt, step, 3 * step, elapsed(), cfg.dealias});
        } catch (const VacuumError& err) {
            throw VacuumError(std::string(err.what()) + where());
        } catch (const InstabilityError& err) {
            throw InstabilityError(std::string(err.what()) + where());
        }
    }
    return s;
}

std::pair<State, std::array<double, 2>> galilean_normalize(const State& s) {
    double mass = integral(s.rho);
    std::array<double, 2> ubar = {0.0, 0.0};
    for (int c = 0; c < s.u.dim(); ++c) {
        ScalarField mom(s.rho.grid);
        for (long x = 0; x < s.rho.size(); ++x) mom[x] = s.rho[x] * s.u[c][x];
        ubar[size_t(c)] = integral(mom) / mass;
    }
    State out = s;
    for (int c = 0; c < s.u.dim(); ++c)
        for (long x = 0; x < s.rho.size(); ++x) out.u[c][x] -= ubar[size_t(c)];
    return {out, ubar};
}

ShearSolver::ShearSolver(const TorusGrid& grid2d, const KernelParams& p,
                         const std::vector<double>& rho0, int vol_refine, int bdry_refine)
    : n_(grid2d.n) {
    if (grid2d.dim != 2) throw ConfigError("ShearSolver: needs a 2D grid");
    if (int(rho0.size()) != n_) throw ConfigError("ShearSolver: rho0 size mismatch");
    OperatorWorkspace ws(grid2d, p, vol_refine, bdry_refine);
    ScalarField lift(grid2d);
    for (int i = 0; i < n_; ++i)
        for (int j = 0; j < n_; ++j) lift[grid2d.flat(i, j)] = rho0[size_t(j)];
    KernelTable kt = ws.eval_kernel(lift);

    // collapse phi(x, x+z) rho0(x2+z2) over z1 shifts; x1-independence makes a
    // single row (i = 0) representative
    const auto& off = ws.offsets().off;
    nshift_ = 0;
    for (const auto& o : off) nshift_ = std::max(nshift_, std::abs(o.dj[1]));
    weights_.assign(size_t(n_) * (2 * nshift_ + 1), 0.0);
    const int mask = grid2d.mask();
    const double dv = grid2d.cell_volume();
    for (size_t zi = 0; zi < off.size(); ++zi) {
        const auto& o = off[zi];
        for (int j = 0; j < n_; ++j) {
            double w = kt.phi[zi][size_t(grid2d.flat(0, j))] * rho0[size_t((j + o.dj[1]) & mask)];
            weights_[size_t(j) * (2 * nshift_ + 1) + size_t(o.dj[1] + nshift_)] += w * dv;
        }
    }
}

std::vector<double> ShearSolver::rhs(const std::vector<double>& U) const {
    std::vector<double> out(size_t(n_), 0.0);
    const int mask = n_ - 1;
    const int row = 2 * nshift_ + 1;
    for (int j = 0; j < n_; ++j) {
        double acc = 0.0;
        for (int s = -nshift_; s <= nshift_; ++s)
            acc += weights_[size_t(j) * row + size_t(s + nshift_)] *
                   (U[size_t((j + s) & mask)] - U[size_t(j)]);
        out[size_t(j)] = acc;
    }
    return out;
}

std::vector<double> ShearSolver::step_ssprk3(const std::vector<double>& U, double dt) const {
    auto euler = [&](const std::vector<double>& in) {
        std::vector<double> f = rhs(in), out = in;
        for (size_t i = 0; i < out.size(); ++i) out[i] += dt * f[i];
        return out;
    };
    std::vector<double> u1 = euler(U);
    std::vector<double> u2 = euler(u1);
    for (size_t i = 0; i < u2.size(); ++i) u2[i] = 0.75 * U[i] + 0.25 * u2[i];
    std::vector<double> u3 = euler(u2);
    for (size_t i = 0; i < u3.size(); ++i) u3[i] = U[i] / 3.0 + 2.0 / 3.0 * u3[i];
    return u3;
}

double ShearSolver::stable_dt(double cfl) const {
    // row sum of nonnegative weights bounds the diffusion rate
    double worst = 0.0;
    const int row = 2 * nshift_ + 1;
    for (int j = 0; j < n_; ++j) {
        double s = 0.0;
        for (int k = 0; k < row; ++k) s += weights_[size_t(j) * row + size_t(k)];
        worst = std::max(worst, s);
    }
    return cfl / worst;
}

std::vector<double> shear_rhs(const std::vector<double>& U, const std::vector<double>& rho0,
                              const TorusGrid& grid2d, const KernelParams& p) {
    return ShearSolver(grid2d, p, rho0).rhs(U);
}

} // namespace topoflock
