#include "topoflock/diagnostics.hpp"

#include <cstdio>
#include <fstream>

namespace topoflock {

double amplitude(const VectorField& u, int stride) {
    if (stride < 1) throw std::invalid_argument("amplitude: stride must be >= 1");
    const TorusGrid& g = u.grid;
    if (g.dim == 1) {
        // scalar velocity: the pair max is max - min, scan stays exact
        double best = 0.0;
        for (int i = 0; i < g.n; i += stride)
            for (int j = i + stride; j < g.n; j += stride)
                best = std::max(best, std::abs(u[0][i] - u[0][j]));
        return best;
    }
    std::vector<std::array<double, 2>> pts;
    for (int i = 0; i < g.n; i += stride)
        for (int j = 0; j < g.n; j += stride)
            pts.push_back({u[0][g.flat(i, j)], u[1][g.flat(i, j)]});
    double best = 0.0;
    const size_t np = pts.size();
#pragma omp parallel for schedule(dynamic, 64) reduction(max : best)
    for (long a = 0; a < long(np); ++a) {
        double local = 0.0;
        for (size_t b = size_t(a) + 1; b < np; ++b) {
            double d0 = pts[size_t(a)][0] - pts[b][0];
            double d1 = pts[size_t(a)][1] - pts[b][1];
            local = std::max(local, d0 * d0 + d1 * d1);
        }
        best = std::max(best, local);
    }
    return std::sqrt(best);
}

std::pair<double, double> energy_and_dissipation(const State& s, const OperatorWorkspace& ws,
                                                 const KernelTable& kt) {
    double e = 0.0;
    for (long x = 0; x < s.rho.size(); ++x) {
        double u2 = 0.0;
        for (int c = 0; c < s.u.dim(); ++c) u2 += s.u[c][x] * s.u[c][x];
        e += s.rho[x] * u2;
    }
    e *= 0.5 * s.rho.grid.cell_volume();
    return {e, ws.dissipation(s.u, s.rho, kt)};
}

double e_equation_residual(const State& s, const Rhs& f, const OperatorWorkspace& ws,
                           const KernelTable& kt) {
    const TorusGrid& g = s.rho.grid;
    const long m = g.node_count();

    // e_t by the chain rule: div(du) + L_phi(drho) + kernel motion through rho
    ScalarField et = divergence(f.du);
    axpy(1.0, ws.topo_diffusion(f.drho, kt), et);
    axpy(1.0, ws.lphi_kernel_rate(s.rho, f.drho, kt), et);

    ScalarField e = ws.compute_e(s.u, s.rho, kt);
    ScalarField ue_div(g);
    {
        VectorField ue(g);
        for (int c = 0; c < g.dim; ++c)
            for (long x = 0; x < m; ++x) ue[c][x] = s.u[c][x] * e[x];
        ue_div = divergence(ue);
    }

    // (div u)^2 - Tr (grad u)^2
    ScalarField quad(g);
    {
        ScalarField d = divergence(s.u);
        for (long x = 0; x < m; ++x) quad[x] = d[x] * d[x];
        for (int a = 0; a < g.dim; ++a)
            for (int b = 0; b < g.dim; ++b) {
                ScalarField dab = derivative(s.u[a], b, 1);
                ScalarField dba = derivative(s.u[b], a, 1);
                for (long x = 0; x < m; ++x) quad[x] -= dab[x] * dba[x];
            }
    }

    ScalarField tsrc = ws.t_decomposed(s.rho, s.u, kt).total;
    ScalarField res(g);
    for (long x = 0; x < m; ++x) res[x] = et[x] + ue_div[x] - quad[x] - tsrc[x];
    return l2_norm(res);
}

double flocking_residual(const ScalarField& rho, double t, const std::array<double, 2>& ubar,
                         const ScalarField& rho_ref, double t_ref) {
    ScalarField co = shift_field(rho, {t * ubar[0], t * ubar[1]});
    ScalarField co_ref = shift_field(rho_ref, {t_ref * ubar[0], t_ref * ubar[1]});
    double best = 0.0;
    for (long x = 0; x < rho.size(); ++x) best = std::max(best, std::abs(co[x] - co_ref[x]));
    return best;
}

ExpFit fit_exponential_decay(const std::vector<std::pair<double, double>>& history) {
    std::vector<std::pair<double, double>> pts;
    for (const auto& [t, a] : history)
        if (a > 1e-14) pts.push_back({t, std::log(a)});
    if (pts.size() < 10)
        throw std::invalid_argument("fit_exponential_decay: fewer than 10 usable samples");
    double st = 0, sy = 0, stt = 0, sty = 0;
    for (const auto& [t, y] : pts) {
        st += t;
        sy += y;
        stt += t * t;
        sty += t * y;
    }
    double n = double(pts.size());
    double denom = n * stt - st * st;
    if (denom <= 0.0) throw std::invalid_argument("fit_exponential_decay: degenerate times");
    double slope = (n * sty - st * sy) / denom;
    double mean = sy / n;
    double ss_res = 0, ss_tot = 0;
    double intercept = (sy - slope * st) / n;
    for (const auto& [t, y] : pts) {
        double p = intercept + slope * t;
        ss_res += (y - p) * (y - p);
        ss_tot += (y - mean) * (y - mean);
    }
    if (ss_tot <= 0.0) throw std::invalid_argument("fit_exponential_decay: constant amplitude");
    return {std::abs(slope), 1.0 - ss_res / ss_tot};
}

void csv_emit(const std::vector<DiagRecord>& records, int dim, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("csv_emit: cannot open " + path);
    out << "t,mass";
    for (int c = 1; c <= dim; ++c) out << ",momentum_" << c;
    out << ",energy,dissipation,energy_residual,amplitude,rho_min,rho_max,"
           "grad_u_inf,grad_rho_inf,e_inf,Y_m,e_eq_residual,flocking_residual\n";
    char buf[32];
    auto put = [&](double v, bool lead_comma = true) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        if (lead_comma) out << ',';
        out << buf;
    };
    for (const auto& r : records) {
        put(r.t, false);
        put(r.mass);
        for (int c = 0; c < dim; ++c) put(r.momentum[size_t(c)]);
        put(r.energy);
        put(r.dissipation);
        put(r.energy_residual);
        put(r.amplitude);
        put(r.rho_min);
        put(r.rho_max);
        put(r.grad_u_inf);
        put(r.grad_rho_inf);
        put(r.e_inf);
        put(r.y_m);
        put(r.e_eq_residual);
        put(r.flocking_residual);
        out << '\n';
    }
    if (!out) throw std::runtime_error("csv_emit: write failed for " + path);
}

RunMonitor::RunMonitor(const OperatorWorkspace& ws, const MonitorOptions& opt)
    : ws_(ws), opt_(opt) {}

void RunMonitor::operator()(const State& s, const StepReport& rep) {
    if (finalized_) throw std::logic_error("RunMonitor: already finalized");
    const TorusGrid& g = s.rho.grid;
    DiagRecord r;
    r.dim = g.dim;
    r.t = s.t;
    r.mass = integral(s.rho);
    for (int c = 0; c < g.dim; ++c) {
        ScalarField mom(g);
        for (long x = 0; x < g.node_count(); ++x) mom[x] = s.rho[x] * s.u[c][x];
        r.momentum[size_t(c)] = integral(mom);
    }

    KernelTable kt = ws_.eval_kernel(s.rho);
    auto [E, D] = energy_and_dissipation(s, ws_, kt);
    r.energy = E;
    r.dissipation = D;

    int stride = opt_.amplitude_stride;
    if (stride <= 0) stride = (g.dim == 2 && g.n > 128) ? g.n / 128 : 1;
    stride_used_ = stride;
    r.amplitude = amplitude(s.u, stride);

    r.rho_min = s.rho.min();
    r.rho_max = s.rho.max();
    for (int a = 0; a < g.dim; ++a) {
        for (int c = 0; c < g.dim; ++c)
            r.grad_u_inf = std::max(r.grad_u_inf, linf_norm(derivative(s.u[c], a, 1)));
        r.grad_rho_inf = std::max(r.grad_rho_inf, linf_norm(derivative(s.rho, a, 1)));
    }

    ScalarField e = ws_.compute_e(s.u, s.rho, kt);
    r.e_inf = linf_norm(e);
    {
        double un = 0.0;
        for (int c = 0; c < g.dim; ++c) {
            double v = sobolev_norm(s.u[c], opt_.sobolev_m + 1.0, true);
            un += v * v;
        }
        double en = sobolev_norm(e, double(opt_.sobolev_m), true);
        r.y_m = un + en * en;
    }

    if (opt_.e_eq_diag) {
        Rhs f = rhs(s, ws_, kt);
        r.e_eq_residual = e_equation_residual(s, f, ws_, kt);
    }

    if (records_.empty()) {
        // freeze the co-moving frame velocity and the first reference profile
        double mass = r.mass;
        for (int c = 0; c < g.dim; ++c) ubar_[size_t(c)] = r.momentum[size_t(c)] / mass;
        ref_profile_ = s.rho;
        ref_t_ = s.t;
        last_flocking_ = 0.0;
    } else if (s.t >= ref_t_ + opt_.checkpoint_dt - 1e-12) {
        last_flocking_ = flocking_residual(s.rho, s.t, ubar_, *ref_profile_, ref_t_);
        ref_profile_ = s.rho;
        ref_t_ = s.t;
    }
    r.flocking_residual = last_flocking_;

    records_.push_back(r);
    reports_.push_back(rep);
}

std::vector<DiagRecord>& RunMonitor::finalize() {
    if (!finalized_) {
        for (size_t i = 1; i + 1 < records_.size(); ++i) {
            // three-point derivative, second order also on the uneven spacing
            // left by the final clamped step
            double dm = records_[i].t - records_[i - 1].t;
            double dp = records_[i + 1].t - records_[i].t;
            if (dm <= 0.0 || dp <= 0.0) continue;
            double dEdt = records_[i + 1].energy * dm / (dp * (dp + dm)) +
                          records_[i].energy * (dp - dm) / (dp * dm) -
                          records_[i - 1].energy * dp / (dm * (dp + dm));
            records_[i].energy_residual = dEdt + records_[i].dissipation;
        }
        finalized_ = true;
    }
    return records_;
}

} // namespace topoflock
