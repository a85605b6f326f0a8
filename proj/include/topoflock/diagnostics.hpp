#pragma once

#include <optional>
#include <string>

#include "topoflock/dynamics.hpp"

namespace topoflock {

// One diagnostics row. CSV column order (bit-exact):
//   t, mass, momentum_1..dim, energy, dissipation, energy_residual, amplitude,
//   rho_min, rho_max, grad_u_inf, grad_rho_inf, e_inf, Y_m, e_eq_residual,
//   flocking_residual
struct DiagRecord {
    int dim = 1;
    double t = 0.0;
    double mass = 0.0;
    std::array<double, 2> momentum = {0.0, 0.0};
    double energy = 0.0;
    double dissipation = 0.0;
    double energy_residual = 0.0; // centered dE/dt + D over the diagnostic cadence
    double amplitude = 0.0;
    double rho_min = 0.0, rho_max = 0.0;
    double grad_u_inf = 0.0, grad_rho_inf = 0.0;
    double e_inf = 0.0;
    double y_m = 0.0;
    double e_eq_residual = 0.0;
    double flocking_residual = 0.0;
};

// A(t) = max over node pairs of |u(x) - u(y)|. stride > 1 subsamples the
// lattice (used for large 2D grids; the Lipschitz error bound is
// 2 |grad u|_inf * stride * dx per axis).
double amplitude(const VectorField& u, int stride = 1);

// E = 1/2 int rho |u|^2; D from the same symmetrized kernel sum as the force
std::pair<double, double> energy_and_dissipation(const State& s, const OperatorWorkspace& ws,
                                                 const KernelTable& kt);

// L2 mismatch of  e_t + div(u e) = (div u)^2 - Tr (grad u)^2 + T  with e_t
// assembled by the chain rule from (drho, du) and T from t_decomposed
double e_equation_residual(const State& s, const Rhs& f, const OperatorWorkspace& ws,
                           const KernelTable& kt);

// || rho(x + t ubar, t) - rho_ref ||_inf, the shift done spectrally
double flocking_residual(const ScalarField& rho, double t, const std::array<double, 2>& ubar,
                         const ScalarField& rho_ref, double t_ref);

struct ExpFit {
    double rate = 0.0; // magnitude of the log-slope
    double r2 = 0.0;
};
// least-squares line through (t, log A); samples with A <= 1e-14 are dropped,
// fewer than 10 usable samples is an error
ExpFit fit_exponential_decay(const std::vector<std::pair<double, double>>& history);

void csv_emit(const std::vector<DiagRecord>& records, int dim, const std::string& path);

struct MonitorOptions {
    int sobolev_m = 3;
    double checkpoint_dt = 1.0;    // cadence of the flocking reference profile
    int amplitude_stride = 0;      // 0 = automatic (exact up to 2D n=128)
    bool e_eq_diag = true;         // the e-equation residual costs a T evaluation
};

// Accumulates records along a run and finalizes the cadence-based columns.
class RunMonitor {
public:
    RunMonitor(const OperatorWorkspace& ws, const MonitorOptions& opt);

    void operator()(const State& s, const StepReport& rep);
    // fills energy_residual by centered differences; returns the table
    std::vector<DiagRecord>& finalize();
    const std::vector<DiagRecord>& records() const { return records_; }
    const std::vector<StepReport>& reports() const { return reports_; }
    int amplitude_stride_used() const { return stride_used_; }

private:
    const OperatorWorkspace& ws_;
    MonitorOptions opt_;
    std::vector<DiagRecord> records_;
    std::vector<StepReport> reports_;
    std::array<double, 2> ubar_ = {0.0, 0.0};
    std::optional<ScalarField> ref_profile_;
    double ref_t_ = 0.0;
    double last_flocking_ = 0.0;
    int stride_used_ = 1;
    bool finalized_ = false;
};

} // namespace topoflock
