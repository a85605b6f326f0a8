#pragma once

#include <array>
#include <vector>

#include "topoflock/grid.hpp"

namespace topoflock {

// Parameters of the communication kernel
//   phi(x,y) = h(|x-y|) / ( |x-y|^{n+alpha-tau} d^tau(x,y) ),
// d(x,y) = (mass of the communication domain)^{1/n}. tau = 0 is the purely
// metric (fractional-Laplacian) case.
struct KernelParams {
    double alpha = 1.0;   // singularity order, in (0,2)
    double tau = 0.0;     // topological gauge, >= 0
    double r0 = 0.5;      // communication range, in (0, side/2)
    double Lambda = 1.0;  // bump plateau height
    double kappa = 0.5;   // 2D domain half-width, in (0,1)

    void validate(double side) const {
        if (!(alpha > 0.0 && alpha < 2.0)) throw ConfigError("KernelParams: alpha must be in (0,2)");
        if (!(tau >= 0.0)) throw ConfigError("KernelParams: tau must be >= 0");
        if (!(r0 > 0.0 && r0 < side / 2)) throw ConfigError("KernelParams: r0 must be in (0, side/2)");
        if (!(Lambda > 0.0)) throw ConfigError("KernelParams: Lambda must be > 0");
        if (!(kappa > 0.0 && kappa < 1.0)) throw ConfigError("KernelParams: kappa must be in (0,1)");
    }
    bool metric() const { return tau == 0.0; }
};

// C^1 radial bump: Lambda on [0, r0/2], cosine taper on (r0/2, r0), 0 beyond.
double bump_eval(double r, const KernelParams& p);

// Orthogonal map sending e1 to z/|z| (1D: sign; 2D: rotation by the angle of z).
struct Rotation {
    int dim;
    double c, s; // 1D: c = sign(z), s unused

    std::array<double, 2> apply(const std::array<double, 2>& v) const {
        if (dim == 1) return {c * v[0], 0.0};
        return {c * v[0] - s * v[1], s * v[0] + c * v[1]};
    }
};
Rotation rotation_for(int dim, const std::array<double, 2>& z);

// Reference communication domain Omega0 between 0 and e1 with quadrature
// tables. 1D: the interval [0,1]. 2D: the rhombus (0,0),(1,0),(1/2,+-kappa/2).
// Volume nodes carry weights summing to |Omega0|; boundary nodes carry outward
// unit normals and surface weights whose normal-weighted sum vanishes.
struct CommGeometry {
    struct VolNode {
        std::array<double, 2> xi;
        double w;
    };
    struct BdryNode {
        std::array<double, 2> theta;
        std::array<double, 2> nu;
        double w;
    };

    int dim = 1;
    double kappa = 0.5;
    double volume = 1.0; // |Omega0|: 1 in 1D, kappa/2 in 2D
    std::vector<VolNode> vol;
    std::vector<BdryNode> bdry;

    // vol_refine: 1D panel count / 2D per-edge subdivision of each half-triangle
    // bdry_refine: panels per boundary edge (2D only)
    static CommGeometry make(int dim, double kappa, int vol_refine = 16, int bdry_refine = 16);
};

// Periodic multilinear interpolation (exact 2nd order, positivity preserving).
double interp(const ScalarField& f, const std::array<double, 2>& point);

// A merged interpolation stencil: sum_t coeff * f(node + shift).
struct Tap {
    int dj[2];
    double coeff;
};

// Everything precomputed for one lattice offset z (0 < |z| < r0):
// the rotated volume stencil (merged taps, coeffs summing to |Omega0|) and the
// rotated boundary nodes with their interpolation taps and rotated normals.
struct Offset {
    std::array<double, 2> z;
    int dj[2];       // lattice shift
    double r;        // |z|
    double h;        // bump value at |z|
    int pair;        // index of the opposite offset -z
    std::vector<Tap> vol_taps;
    struct BdryPoint {
        Tap taps[4];
        int ntaps;
        std::array<double, 2> nu; // U_z nu_theta
        double w;
    };
    std::vector<BdryPoint> bdry;
};

// Offset table over one grid + kernel + geometry. Offsets are stored with +-z
// adjacent (pair index) so operators can run the symmetrized p.v. sums.
struct OffsetTable {
    TorusGrid grid;
    KernelParams par;
    CommGeometry geo;
    std::vector<Offset> off;
    double lattice_symbol_sum = 0.0; // dx^n sum_z h(|z|)/|z|^{n+alpha}

    static OffsetTable build(const TorusGrid& g, const KernelParams& p, const CommGeometry& geo);
};

// Reference per-node evaluations (direct interpolation, no merged taps);
// the bulk operator path is cross-checked against these.
double comm_mass(const ScalarField& rho, long node, const std::array<double, 2>& z,
                 const CommGeometry& geo);
double topo_distance(const ScalarField& rho, long node, const std::array<double, 2>& z,
                     const CommGeometry& geo);
double kernel_eval(const ScalarField& rho, long node, const std::array<double, 2>& z,
                   const KernelParams& p, const CommGeometry& geo);

} // namespace topoflock
