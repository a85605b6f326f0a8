#pragma once

#include <array>
#include <complex>
#include <vector>

#include "topoflock/grid.hpp"

namespace topoflock {

// Fourier coefficients with the measure normalized so that ||1||_2 = 1:
//   c[k] = N^{-dim} sum_x f(x) e^{-i k.x},  f(x) = sum_k c[k] e^{i k.x}.
// Full-spectrum storage, same row-major layout as the field; the wavenumber
// along an axis for array index j is  j <= n/2 ? j : j-n.
struct Spectrum {
    TorusGrid grid;
    std::vector<std::complex<double>> c;

    Spectrum() = default;
    explicit Spectrum(const TorusGrid& g) : grid(g), c(size_t(g.node_count())) {}

    int wavenumber(int j) const { return j <= grid.n / 2 ? j : j - grid.n; }
    // |k|^2 for the flat index
    double ksq(long idx) const {
        if (grid.dim == 1) {
            double k = wavenumber(int(idx));
            return k * k;
        }
        double k1 = wavenumber(int(idx / grid.n));
        double k2 = wavenumber(int(idx % grid.n));
        return k1 * k1 + k2 * k2;
    }
};

Spectrum to_spectrum(const ScalarField& f);
ScalarField to_field(const Spectrum& s);

// Spectral partial derivative of given order along an axis (order <= 6;
// higher orders are not diagnostics we trust on noisy fields).
ScalarField derivative(const ScalarField& f, int axis, int order = 1);

ScalarField divergence(const VectorField& u);
VectorField gradient(const ScalarField& f);

// (sum_k w(k)^{2s} |c_k|^2)^{1/2} with w = |k| (homogeneous, k=0 dropped)
// or (1+|k|^2)^{1/2}. Capped at s <= 6: higher-order spectral norms of
// quadrature-produced fields are noise.
double sobolev_norm(const ScalarField& f, double s, bool homogeneous);

double l2_norm(const ScalarField& f); // normalized measure, == sobolev_norm(f,0,false)
double l2_norm_diff(const ScalarField& a, const ScalarField& b);
double linf_norm(const ScalarField& f);

// Sharp Littlewood-Paley shell: q=0 keeps only k=0, q>=1 keeps 2^{q-1} <= |k| < 2^q.
ScalarField lp_project(const ScalarField& f, int q);

// 2/3-rule: zero every mode with |k_axis| > n/3 on any axis.
ScalarField dealias(const ScalarField& f);
VectorField dealias(const VectorField& u);
bool is_dealias_kept(const TorusGrid& g, long idx);

// g(x) = f(x + shift), evaluated by phase multiplication (spectrally exact).
ScalarField shift_field(const ScalarField& f, const std::array<double, 2>& shift);

} // namespace topoflock
