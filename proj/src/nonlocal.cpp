#include "topoflock/nonlocal.hpp"

#include <sstream>

namespace topoflock {

namespace {

constexpr double kBlowupGuard = 1e12;

inline long wrap_flat(const TorusGrid& g, long x, int di, int dj) {
    const int mask = g.mask();
    if (g.dim == 1) return (int(x) + di) & mask;
    int i = (int(x / g.n) + di) & mask;
    int j = (int(x % g.n) + dj) & mask;
    return long(i) * g.n + j;
}

// the exponents tau/n and (tau+n)/n are 1 and 2 in the default regimes
inline double pow_spec(double base, double e) {
    if (e == 1.0) return base;
    if (e == 2.0) return base * base;
    if (e == 0.5) return std::sqrt(base);
    return std::pow(base, e);
}

} // namespace

OperatorWorkspace::OperatorWorkspace(const TorusGrid& g, const KernelParams& p,
                                     int vol_refine, int bdry_refine)
    : grid_(g), par_(p), geo_(CommGeometry::make(g.dim, p.kappa, vol_refine, bdry_refine)),
      tab_(OffsetTable::build(g, p, geo_)) {}

KernelTable OperatorWorkspace::eval_kernel(const ScalarField& rho) const {
    const long m = grid_.node_count();
    const size_t nz = tab_.off.size();
    KernelTable kt;
    kt.rho_min = rho.min();
    kt.rho_max = rho.max();
    if (kt.rho_min <= 0.0) {
        long at = 0;
        for (long i = 0; i < m; ++i)
            if (rho[i] == kt.rho_min) { at = i; break; }
        auto x = grid_.coords(at);
        std::ostringstream os;
        os << "vacuum: rho = " << kt.rho_min << " at x = (" << x[0] << ", " << x[1] << ")";
        throw VacuumError(os.str());
    }
    kt.phi.assign(nz, {});
    const bool topo = !par_.metric();
    if (topo) kt.mass.assign(nz, {});

    const double npa = grid_.dim + par_.alpha;
#pragma omp parallel for schedule(dynamic)
    for (long zi = 0; zi < long(nz); ++zi) {
        const Offset& o = tab_.off[size_t(zi)];
        auto& phi = kt.phi[size_t(zi)];
        phi.assign(size_t(m), 0.0);
        if (!topo) {
            double val = o.h / std::pow(o.r, npa);
            for (long x = 0; x < m; ++x) phi[size_t(x)] = val;
            continue;
        }
        auto& mass = kt.mass[size_t(zi)];
        mass.assign(size_t(m), 0.0);
        const double rn = std::pow(o.r, grid_.dim);
        for (const Tap& t : o.vol_taps) {
            const double c = t.coeff;
            for (long x = 0; x < m; ++x)
                mass[size_t(x)] += c * rho[wrap_flat(grid_, x, t.dj[0], t.dj[1])];
        }
        const double pre = o.h / std::pow(o.r, npa - par_.tau);
        const double texp = par_.tau / grid_.dim;
        for (long x = 0; x < m; ++x) {
            mass[size_t(x)] *= rn;
            phi[size_t(x)] = pre / pow_spec(mass[size_t(x)], texp);
        }
    }
    return kt;
}

ScalarField OperatorWorkspace::topo_diffusion(const ScalarField& f, const KernelTable& kt) const {
    const long m = grid_.node_count();
    ScalarField out(grid_);
    const auto& off = tab_.off;
#pragma omp parallel for schedule(static)
    for (long x = 0; x < m; ++x) {
        double acc = 0.0;
        const double fx = f[x];
        for (size_t zi = 0; zi < off.size(); ++zi) {
            const Offset& o = off[zi];
            if (int(zi) > o.pair) continue; // handle +-z together
            const Offset& q = off[size_t(o.pair)];
            double a = kt.phi[zi][size_t(x)] * (f[wrap_flat(grid_, x, o.dj[0], o.dj[1])] - fx);
            double b = kt.phi[size_t(o.pair)][size_t(x)] *
                       (f[wrap_flat(grid_, x, q.dj[0], q.dj[1])] - fx);
            acc += a + b;
        }
        out[x] = acc * grid_.cell_volume();
    }
    return out;
}

VectorField OperatorWorkspace::alignment_force(const VectorField& u, const ScalarField& rho,
                                               const KernelTable& kt) const {
    const long m = grid_.node_count();
    VectorField out(grid_);
    const auto& off = tab_.off;
    for (int c = 0; c < grid_.dim; ++c) {
        const ScalarField& uc = u[c];
        ScalarField& oc = out[c];
#pragma omp parallel for schedule(static)
        for (long x = 0; x < m; ++x) {
            double acc = 0.0;
            const double ux = uc[x];
            for (size_t zi = 0; zi < off.size(); ++zi) {
                const Offset& o = off[zi];
                if (int(zi) > o.pair) continue;
                const Offset& q = off[size_t(o.pair)];
                long xp = wrap_flat(grid_, x, o.dj[0], o.dj[1]);
                long xm = wrap_flat(grid_, x, q.dj[0], q.dj[1]);
                acc += kt.phi[zi][size_t(x)] * (uc[xp] - ux) * rho[xp] +
                       kt.phi[size_t(o.pair)][size_t(x)] * (uc[xm] - ux) * rho[xm];
            }
            oc[x] = acc * grid_.cell_volume();
        }
    }
    return out;
}

ScalarField OperatorWorkspace::compute_e(const VectorField& u, const ScalarField& rho,
                                         const KernelTable& kt) const {
    ScalarField e = divergence(u);
    axpy(1.0, topo_diffusion(rho, kt), e);
    return e;
}

std::vector<double> OperatorWorkspace::volume_quadrature(const ScalarField& f,
                                                         int offset_index) const {
    const long m = grid_.node_count();
    const Offset& o = tab_.off[size_t(offset_index)];
    std::vector<double> out(size_t(m), 0.0);
    for (const Tap& t : o.vol_taps) {
        const double c = t.coeff;
        for (long x = 0; x < m; ++x)
            out[size_t(x)] += c * f[wrap_flat(grid_, x, t.dj[0], t.dj[1])];
    }
    const double rn = std::pow(o.r, grid_.dim);
    for (auto& v : out) v *= rn;
    return out;
}

ScalarField OperatorWorkspace::t_direct(const ScalarField& rho, const VectorField& u,
                                        const KernelTable& kt) const {
    const long m = grid_.node_count();
    ScalarField out(grid_);
    if (par_.metric()) return out; // tau = 0: no topological source
    if (kt.mass.empty()) throw std::logic_error("t_direct: kernel table lacks masses");

    // rho u and its spectral divergence / density gradient, sampled on the lattice
    VectorField ru(grid_);
    for (int c = 0; c < grid_.dim; ++c)
        for (long x = 0; x < m; ++x) ru[c][x] = rho[x] * u[c][x];
    ScalarField div_ru = divergence(ru);
    VectorField grad_rho = gradient(rho);

    const double npa = grid_.dim + par_.alpha - par_.tau;
    const double dexp = (par_.tau + grid_.dim) / grid_.dim;
    const auto& off = tab_.off;
    std::vector<double> rw(off.size());
    for (size_t zi = 0; zi < off.size(); ++zi)
        rw[zi] = off[zi].h / std::pow(off[zi].r, npa);
    std::vector<std::vector<double>> vq_div(off.size()), vq_g0(off.size()), vq_g1(off.size());
#pragma omp parallel for schedule(dynamic)
    for (long zi = 0; zi < long(off.size()); ++zi) {
        vq_div[size_t(zi)] = volume_quadrature(div_ru, int(zi));
        vq_g0[size_t(zi)] = volume_quadrature(grad_rho[0], int(zi));
        if (grid_.dim == 2) vq_g1[size_t(zi)] = volume_quadrature(grad_rho[1], int(zi));
    }

    bool blowup = false;
#pragma omp parallel for schedule(static) reduction(||: blowup)
    for (long x = 0; x < m; ++x) {
        double acc = 0.0;
        for (size_t zi = 0; zi < off.size(); ++zi) {
            const Offset& o = off[zi];
            long xp = wrap_flat(grid_, x, o.dj[0], o.dj[1]);
            double w = rw[zi] / pow_spec(kt.mass[zi][size_t(x)], dexp);
            double dz_rho = rho[xp] - rho[x];
            double t0 = vq_div[zi][size_t(x)] * dz_rho;
            double t1 = vq_g0[zi][size_t(x)] * (ru[0][xp] - ru[0][x]);
            double t2 = grid_.dim == 2 ? vq_g1[zi][size_t(x)] * (ru[1][xp] - ru[1][x]) : 0.0;
            // guard the summands before they cancel against each other
            if (w * (std::abs(t0) + std::abs(t1) + std::abs(t2)) > kBlowupGuard) blowup = true;
            acc += w * (t0 - t1 - t2);
        }
        out[x] = acc * (par_.tau / grid_.dim) * grid_.cell_volume();
    }
    if (blowup) throw InstabilityError("t_direct: quadrature blow-up (summand > 1e12)");
    return out;
}

TDecomposition OperatorWorkspace::t_decomposed(const ScalarField& rho, const VectorField& u,
                                               const KernelTable& kt) const {
    const long m = grid_.node_count();
    TDecomposition td{ScalarField(grid_), ScalarField(grid_), ScalarField(grid_),
                      ScalarField(grid_), ScalarField(grid_)};
    if (par_.metric()) return td;
    if (kt.mass.empty()) throw std::logic_error("t_decomposed: kernel table lacks masses");

    const double pref = (par_.tau / grid_.dim) * grid_.cell_volume();
    const double npa = grid_.dim + par_.alpha - par_.tau;
    const double dexp = (par_.tau + grid_.dim) / grid_.dim;
    const auto& off = tab_.off;
    const int dim = grid_.dim;
    std::vector<double> rw(off.size());
    for (size_t zi = 0; zi < off.size(); ++zi)
        rw[zi] = off[zi].h * std::pow(off[zi].r, dim - 1) / std::pow(off[zi].r, npa);
    bool blowup = false;

#pragma omp parallel for schedule(static) reduction(||: blowup)
    for (long x = 0; x < m; ++x) {
        double a1 = 0.0, a2 = 0.0, a3 = 0.0, a4 = 0.0;
        const double rx = rho[x];
        const double ux0 = u[0][x];
        const double ux1 = dim == 2 ? u[1][x] : 0.0;
        for (size_t zi = 0; zi < off.size(); ++zi) {
            const Offset& o = off[zi];
            long xp = wrap_flat(grid_, x, o.dj[0], o.dj[1]);
            // surface weight: |z|^{n-1} times the singular kernel factor
            double w = rw[zi] / pow_spec(kt.mass[zi][size_t(x)], dexp);
            double dz_rho = rho[xp] - rx;
            double dz_u0 = u[0][xp] - ux0;
            double dz_u1 = dim == 2 ? u[1][xp] - ux1 : 0.0;
            double s1 = 0.0, s2 = 0.0, s3 = 0.0, s4 = 0.0;
            for (const auto& bp : o.bdry) {
                double xr = 0.0, xu0 = 0.0, xu1 = 0.0;
                for (int t = 0; t < bp.ntaps; ++t) {
                    long xt = wrap_flat(grid_, x, bp.taps[t].dj[0], bp.taps[t].dj[1]);
                    xr += bp.taps[t].coeff * rho[xt];
                    xu0 += bp.taps[t].coeff * u[0][xt];
                    if (dim == 2) xu1 += bp.taps[t].coeff * u[1][xt];
                }
                double dxi_rho = xr - rx;
                double dxi_un = (xu0 - ux0) * bp.nu[0];
                double dz_un = dz_u0 * bp.nu[0];
                if (dim == 2) {
                    dxi_un += (xu1 - ux1) * bp.nu[1];
                    dz_un += dz_u1 * bp.nu[1];
                }
                s1 += bp.w * dxi_rho * dz_rho * dxi_un;
                s2 += bp.w * dxi_rho * dz_rho * dz_un;
                s3 += bp.w * rx * dz_rho * dxi_un;
                s4 += bp.w * rx * dxi_rho * dz_un;
            }
            if (std::abs(w) * (std::abs(s1) + std::abs(s2) + std::abs(s3) + std::abs(s4)) >
                kBlowupGuard)
                blowup = true;
            a1 += w * s1;
            a2 += w * s2;
            a3 += w * s3;
            a4 += w * s4;
        }
        td.t1[x] = pref * a1;
        td.t2[x] = pref * a2;
        td.t3[x] = pref * a3;
        td.t4[x] = pref * a4;
        td.total[x] = pref * (a1 - a2 + a3 - a4);
    }
    if (blowup) throw InstabilityError("t_decomposed: quadrature blow-up (summand > 1e12)");
    return td;
}

ScalarField OperatorWorkspace::lphi_kernel_rate(const ScalarField& rho, const ScalarField& drho,
                                                const KernelTable& kt) const {
    const long m = grid_.node_count();
    ScalarField out(grid_);
    if (par_.metric()) return out; // metric kernel does not move with rho
    if (kt.mass.empty()) throw std::logic_error("lphi_kernel_rate: kernel table lacks masses");

    const double npa = grid_.dim + par_.alpha - par_.tau;
    const double dexp = (par_.tau + grid_.dim) / grid_.dim;
    const auto& off = tab_.off;
    std::vector<double> rw(off.size());
    for (size_t zi = 0; zi < off.size(); ++zi)
        rw[zi] = off[zi].h / std::pow(off[zi].r, npa);
    std::vector<std::vector<double>> mdot(off.size());
#pragma omp parallel for schedule(dynamic)
    for (long zi = 0; zi < long(off.size()); ++zi)
        mdot[size_t(zi)] = volume_quadrature(drho, int(zi));

#pragma omp parallel for schedule(static)
    for (long x = 0; x < m; ++x) {
        double acc = 0.0;
        for (size_t zi = 0; zi < off.size(); ++zi) {
            const Offset& o = off[zi];
            long xp = wrap_flat(grid_, x, o.dj[0], o.dj[1]);
            double w = rw[zi] / pow_spec(kt.mass[zi][size_t(x)], dexp);
            acc += (rho[xp] - rho[x]) * mdot[zi][size_t(x)] * w;
        }
        out[x] = -acc * (par_.tau / grid_.dim) * grid_.cell_volume();
    }
    return out;
}

double OperatorWorkspace::dissipation(const VectorField& u, const ScalarField& rho,
                                      const KernelTable& kt) const {
    const long m = grid_.node_count();
    const auto& off = tab_.off;
    double total = 0.0;
#pragma omp parallel for schedule(static) reduction(+ : total)
    for (long x = 0; x < m; ++x) {
        double acc = 0.0;
        for (size_t zi = 0; zi < off.size(); ++zi) {
            const Offset& o = off[zi];
            long xp = wrap_flat(grid_, x, o.dj[0], o.dj[1]);
            double du2 = 0.0;
            for (int c = 0; c < grid_.dim; ++c) {
                double d = u[c][xp] - u[c][x];
                du2 += d * d;
            }
            acc += rho[x] * rho[xp] * du2 * kt.phi[zi][size_t(x)];
        }
        total += acc;
    }
    double dv = grid_.cell_volume();
    return 0.5 * total * dv * dv;
}

double OperatorWorkspace::coercivity_ratio(const ScalarField& rho, int m) const {
    double denom = sobolev_norm(rho, m + par_.alpha, true);
    if (denom < 1e-14)
        throw std::invalid_argument("coercivity_ratio: rho is constant");
    KernelTable kt = eval_kernel(rho);
    ScalarField lr = topo_diffusion(rho, kt);
    return sobolev_norm(lr, double(m), true) / denom;
}

double OperatorWorkspace::diffusion_envelope(double rho_min, double rho_max) const {
    double weight = std::pow(rho_min * geo_.volume, -par_.tau / grid_.dim);
    return rho_max * weight * tab_.lattice_symbol_sum;
}

double grand_quantity(const VectorField& u, const ScalarField& rho, int m,
                      OperatorWorkspace& ws) {
    KernelTable kt = ws.eval_kernel(rho);
    ScalarField e = ws.compute_e(u, rho, kt);
    double un = 0.0;
    for (int c = 0; c < u.dim(); ++c) {
        double s = sobolev_norm(u[c], m + 1.0, true);
        un += s * s;
    }
    double en = sobolev_norm(e, double(m), true);
    return un + en * en;
}

ScalarField topo_diffusion(const ScalarField& f, const ScalarField& rho, OperatorWorkspace& ws) {
    return ws.topo_diffusion(f, ws.eval_kernel(rho));
}
VectorField alignment_force(const VectorField& u, const ScalarField& rho, OperatorWorkspace& ws) {
    return ws.alignment_force(u, rho, ws.eval_kernel(rho));
}
ScalarField compute_e(const VectorField& u, const ScalarField& rho, OperatorWorkspace& ws) {
    return ws.compute_e(u, rho, ws.eval_kernel(rho));
}
ScalarField t_direct(const ScalarField& rho, const VectorField& u, OperatorWorkspace& ws) {
    return ws.t_direct(rho, u, ws.eval_kernel(rho));
}
TDecomposition t_decomposed(const ScalarField& rho, const VectorField& u, OperatorWorkspace& ws) {
    return ws.t_decomposed(rho, u, ws.eval_kernel(rho));
}
double coercivity_ratio(const ScalarField& rho, int m, OperatorWorkspace& ws) {
    return ws.coercivity_ratio(rho, m);
}

} // namespace topoflock
