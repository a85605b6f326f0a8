#pragma once

#include "topoflock/kernel.hpp"
#include "topoflock/spectral.hpp"

namespace topoflock {

// Kernel values for every (offset, node) pair at one density snapshot.
// mass is kept only in topological mode (tau > 0); phi[z][x] is always filled.
struct KernelTable {
    std::vector<std::vector<double>> phi;
    std::vector<std::vector<double>> mass;
    double rho_min = 0.0, rho_max = 0.0;
};

// All four boundary-decomposed pieces of the topological source; the combined
// field is T1 - T2 + T3 - T4, accumulated in one shared loop.
struct TDecomposition {
    ScalarField total, t1, t2, t3, t4;
};

// Shared tables + scratch for the nonlocal operators on one grid/kernel.
// Geometry tables are immutable after construction; every method is pure in
// its field arguments, so a workspace can be reused across calls and threads
// as long as each call owns its outputs.
class OperatorWorkspace {
public:
    OperatorWorkspace(const TorusGrid& g, const KernelParams& p,
                      int vol_refine = 16, int bdry_refine = 16);

    const TorusGrid& grid() const { return grid_; }
    const KernelParams& params() const { return par_; }
    const CommGeometry& geometry() const { return geo_; }
    const OffsetTable& offsets() const { return tab_; }

    // phi(x, x+z) for all pairs; throws VacuumError on nonpositive density.
    KernelTable eval_kernel(const ScalarField& rho) const;

    // L_phi f (x) = p.v. integral of phi(x,x+z) (f(x+z)-f(x)), symmetrized over +-z.
    ScalarField topo_diffusion(const ScalarField& f, const KernelTable& kt) const;

    // C_phi(u, rho)(x) = integral of phi(x,x+z) (u(x+z)-u(x)) rho(x+z); equals
    // L_phi(u rho) - u L_phi rho at the level of the shared quadrature sum.
    VectorField alignment_force(const VectorField& u, const ScalarField& rho,
                                const KernelTable& kt) const;

    // e = div u + L_phi rho
    ScalarField compute_e(const VectorField& u, const ScalarField& rho,
                          const KernelTable& kt) const;

    // volume form of the topological source in the e-equation
    ScalarField t_direct(const ScalarField& rho, const VectorField& u,
                         const KernelTable& kt) const;
    // boundary form, T1 - T2 + T3 - T4
    TDecomposition t_decomposed(const ScalarField& rho, const VectorField& u,
                                const KernelTable& kt) const;

    // d/dt of L_phi rho through the kernel only, with mdot = volume quadrature
    // of drho over the communication domains (chain rule for the e-residual).
    ScalarField lphi_kernel_rate(const ScalarField& rho, const ScalarField& drho,
                                 const KernelTable& kt) const;

    // volume quadrature of an arbitrary field over Omega(x, x+z) for all x
    std::vector<double> volume_quadrature(const ScalarField& f, int offset_index) const;

    // D = 1/2 integral of rho rho' |delta u|^2 phi over both variables; the
    // discrete energy identity dE/dt = -D holds against alignment_force by the
    // shared quadrature nodes.
    double dissipation(const VectorField& u, const ScalarField& rho,
                       const KernelTable& kt) const;

    // ||L_phi rho||_{H^m, hom} / ||rho||_{H^{m+alpha}, hom}
    double coercivity_ratio(const ScalarField& rho, int m) const;

    // stability envelope used by the CFL heuristic: rho_max (rho_min |Omega0|)^{-tau/n} S,
    // where S = dx^n sum_z h |z|^{-n-alpha} is the precomputed lattice symbol bound
    double diffusion_envelope(double rho_min, double rho_max) const;

private:
    TorusGrid grid_;
    KernelParams par_;
    CommGeometry geo_;
    OffsetTable tab_;
};

// Y_m = ||u||^2_{H^{m+1}, hom} + ||e||^2_{H^m, hom}
double grand_quantity(const VectorField& u, const ScalarField& rho, int m,
                      OperatorWorkspace& ws);

// one-shot wrappers (build the kernel table internally)
ScalarField topo_diffusion(const ScalarField& f, const ScalarField& rho, OperatorWorkspace& ws);
VectorField alignment_force(const VectorField& u, const ScalarField& rho, OperatorWorkspace& ws);
ScalarField compute_e(const VectorField& u, const ScalarField& rho, OperatorWorkspace& ws);
ScalarField t_direct(const ScalarField& rho, const VectorField& u, OperatorWorkspace& ws);
TDecomposition t_decomposed(const ScalarField& rho, const VectorField& u, OperatorWorkspace& ws);
double coercivity_ratio(const ScalarField& rho, int m, OperatorWorkspace& ws);

} // namespace topoflock
