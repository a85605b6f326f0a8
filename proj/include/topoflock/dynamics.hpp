#pragma once

#include <functional>

#include "topoflock/nonlocal.hpp"

namespace topoflock {

struct State {
    double t = 0.0;
    ScalarField rho;
    VectorField u;

    void validate(double vacuum_eps) const {
        if (!rho.all_finite() || !u.all_finite())
            throw InstabilityError("state: non-finite field value at t = " + std::to_string(t));
        double rmin = rho.min();
        if (rmin <= vacuum_eps)
            throw VacuumError("state: rho_min = " + std::to_string(rmin) +
                              " at or below vacuum threshold at t = " + std::to_string(t));
    }
};

struct SolverConfig {
    double cfl = 0.4;           // in (0,1]
    double t_end = 1.0;
    long max_steps = 2000000;
    bool dealias = true;
    int diag_every = 10;        // steps between diagnostic callbacks
    double vacuum_eps = 1e-8;

    void validate() const {
        if (!(cfl > 0.0 && cfl <= 1.0)) throw ConfigError("SolverConfig: cfl must be in (0,1]");
        if (!(t_end > 0.0)) throw ConfigError("SolverConfig: t_end must be > 0");
        if (max_steps < 1) throw ConfigError("SolverConfig: max_steps must be >= 1");
        if (diag_every < 1) throw ConfigError("SolverConfig: diag_every must be >= 1");
    }
};

struct StepReport {
    double dt = 0.0;
    long step = 0;
    long rhs_evals = 0;
    double wall_seconds = 0.0;
    bool dealiased = false;
};

// which terms enter the RHS; the reduced options exist for operator-level tests
enum class RhsTerms { All, TransportOnly, AlignmentOnly };

struct Rhs {
    ScalarField drho;
    VectorField du;
};

// drho = -div(rho u) (spectral, dealiased product)
// du   = -(u.grad)u + C_phi(u, rho)
Rhs rhs(const State& s, const OperatorWorkspace& ws, bool dealias_products = true,
        RhsTerms terms = RhsTerms::All);
Rhs rhs(const State& s, const OperatorWorkspace& ws, const KernelTable& kt,
        bool dealias_products = true, RhsTerms terms = RhsTerms::All);

// dt = cfl * min( dx/(|u|_inf + eps), dx^alpha / Dhat ) with
// Dhat = Lambda rho_max (rho_min |Omega0|)^{-tau/n} c_geom and c_geom the
// precomputed lattice symbol bound normalized by Lambda dx^{-alpha}. Throws on
// underflow below 1e-10.
double cfl_dt(const State& s, const OperatorWorkspace& ws, const SolverConfig& cfg);

// three-stage strong-stability-preserving Runge-Kutta (Shu-Osher form),
// dealiasing applied per stage
State step_ssprk3(const State& s, double dt, const OperatorWorkspace& ws,
                  const SolverConfig& cfg);

using DiagSink = std::function<void(const State&, const StepReport&)>;

// advance to t_end, invoking the sink at t=0, every diag_every steps, and at
// the final time; deterministic for identical inputs
State run(const State& initial, const OperatorWorkspace& ws, const SolverConfig& cfg,
          const DiagSink& sink);

// subtract the momentum-weighted mean velocity P/M; returns the removed mean
std::pair<State, std::array<double, 2>> galilean_normalize(const State& s);

// Parallel-shear reduced solver (2D scenario): u = (U(x2), 0), rho = rho0(x2).
// The density is stationary, so the full kernel-weight matrix is precomputed
// once and each step is a dense weighted difference sum on the 1D profile.
class ShearSolver {
public:
    // grid2d is the full 2D grid; rho0 and U live on its x2-axis (n entries)
    ShearSolver(const TorusGrid& grid2d, const KernelParams& p, const std::vector<double>& rho0,
                int vol_refine = 16, int bdry_refine = 16);

    std::vector<double> rhs(const std::vector<double>& U) const;
    std::vector<double> step_ssprk3(const std::vector<double>& U, double dt) const;
    double stable_dt(double cfl) const;
    int size() const { return n_; }

private:
    int n_;
    int nshift_;                   // offsets along x2 run over [-nshift_, nshift_]
    std::vector<double> weights_;  // [x2][shift] collapsed over x1, includes dx^2
};

// spec-level wrapper: the reduced shear RHS for a 1D profile on the 2D torus
std::vector<double> shear_rhs(const std::vector<double>& U, const std::vector<double>& rho0,
                              const TorusGrid& grid2d, const KernelParams& p);

} // namespace topoflock
