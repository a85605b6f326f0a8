#include "topoflock/kernel.hpp"

#include <algorithm>
#include <map>

namespace topoflock {

double bump_eval(double r, const KernelParams& p) {
    r = std::abs(r);
    if (r <= p.r0 / 2) return p.Lambda;
    if (r >= p.r0) return 0.0;
    return p.Lambda * (1.0 + std::cos(M_PI * (2.0 * r / p.r0 - 1.0))) / 2.0;
}

Rotation rotation_for(int dim, const std::array<double, 2>& z) {
    if (dim == 1) return {1, z[0] >= 0.0 ? 1.0 : -1.0, 0.0};
    double r = std::hypot(z[0], z[1]);
    return {2, z[0] / r, z[1] / r};
}

namespace {

// uniform subdivision of a triangle into s^2 sub-triangles, centroid rule
void subdivide_triangle(const std::array<double, 2>& t0, const std::array<double, 2>& t1,
                        const std::array<double, 2>& t2, int s,
                        std::vector<CommGeometry::VolNode>& out) {
    std::array<double, 2> e1 = {(t1[0] - t0[0]) / s, (t1[1] - t0[1]) / s};
    std::array<double, 2> e2 = {(t2[0] - t0[0]) / s, (t2[1] - t0[1]) / s};
    double area = std::abs((t1[0] - t0[0]) * (t2[1] - t0[1]) - (t1[1] - t0[1]) * (t2[0] - t0[0])) /
                  (2.0 * s * s);
    for (int i = 0; i < s; ++i) {
        for (int j = 0; j < s - i; ++j) {
            std::array<double, 2> v = {t0[0] + i * e1[0] + j * e2[0], t0[1] + i * e1[1] + j * e2[1]};
            // upward sub-triangle centroid
            out.push_back({{v[0] + (e1[0] + e2[0]) / 3.0, v[1] + (e1[1] + e2[1]) / 3.0}, area});
            if (i + j < s - 1) {
                // downward sub-triangle centroid
                out.push_back({{v[0] + 2.0 * (e1[0] + e2[0]) / 3.0, v[1] + 2.0 * (e1[1] + e2[1]) / 3.0},
                               area});
            }
        }
    }
}

} // namespace

CommGeometry CommGeometry::make(int dim, double kappa, int vol_refine, int bdry_refine) {
    CommGeometry geo;
    geo.dim = dim;
    geo.kappa = kappa;
    if (vol_refine < 1 || bdry_refine < 1)
        throw ConfigError("CommGeometry: refinement counts must be >= 1");
    if (dim == 1) {
        geo.volume = 1.0;
        for (int i = 0; i < vol_refine; ++i)
            geo.vol.push_back({{(i + 0.5) / vol_refine, 0.0}, 1.0 / vol_refine});
        geo.bdry.push_back({{0.0, 0.0}, {-1.0, 0.0}, 1.0});
        geo.bdry.push_back({{1.0, 0.0}, {+1.0, 0.0}, 1.0});
        return geo;
    }
    geo.volume = kappa / 2.0;
    const std::array<double, 2> A = {0.0, 0.0}, B = {1.0, 0.0};
    const std::array<double, 2> C = {0.5, kappa / 2.0}, D = {0.5, -kappa / 2.0};
    subdivide_triangle(A, B, C, vol_refine, geo.vol);
    // mirror of the upper half keeps the table symmetric under xi -> e1 - xi
    size_t upper = geo.vol.size();
    for (size_t i = 0; i < upper; ++i)
        geo.vol.push_back({{geo.vol[i].xi[0], -geo.vol[i].xi[1]}, geo.vol[i].w});

    const std::array<std::pair<std::array<double, 2>, std::array<double, 2>>, 4> edges = {
        {{A, C}, {C, B}, {B, D}, {D, A}}};
    for (const auto& e : edges) {
        double tx = e.second[0] - e.first[0], ty = e.second[1] - e.first[1];
        double len = std::hypot(tx, ty);
        double nx = -ty / len, ny = tx / len;
        // flip toward the outside (away from the center (1/2, 0))
        double mx = (e.first[0] + e.second[0]) / 2 - 0.5, my = (e.first[1] + e.second[1]) / 2;
        if (nx * mx + ny * my < 0.0) {
            nx = -nx;
            ny = -ny;
        }
        for (int i = 0; i < bdry_refine; ++i) {
            double f = (i + 0.5) / bdry_refine;
            geo.bdry.push_back({{e.first[0] + f * tx, e.first[1] + f * ty}, {nx, ny},
                                len / bdry_refine});
        }
    }
    return geo;
}

double interp(const ScalarField& f, const std::array<double, 2>& point) {
    const TorusGrid& g = f.grid;
    const int mask = g.mask();
    double gx = point[0] / g.dx;
    int i0 = int(std::floor(gx));
    double fx = gx - i0;
    if (g.dim == 1) {
        int a = i0 & mask, b = (i0 + 1) & mask;
        return (1.0 - fx) * f[a] + fx * f[b];
    }
    double gy = point[1] / g.dx;
    int j0 = int(std::floor(gy));
    double fy = gy - j0;
    int ia = i0 & mask, ib = (i0 + 1) & mask;
    int ja = j0 & mask, jb = (j0 + 1) & mask;
    return (1.0 - fx) * (1.0 - fy) * f[g.flat(ia, ja)] + fx * (1.0 - fy) * f[g.flat(ib, ja)] +
           (1.0 - fx) * fy * f[g.flat(ia, jb)] + fx * fy * f[g.flat(ib, jb)];
}

namespace {

// bilinear stencil of a relative displacement, in lattice units
int stencil_for(const TorusGrid& g, const std::array<double, 2>& xi, Tap out[4]) {
    double gx = xi[0] / g.dx;
    int i0 = int(std::floor(gx));
    double fx = gx - i0;
    if (g.dim == 1) {
        out[0] = {{i0, 0}, 1.0 - fx};
        out[1] = {{i0 + 1, 0}, fx};
        return 2;
    }
    double gy = xi[1] / g.dx;
    int j0 = int(std::floor(gy));
    double fy = gy - j0;
    out[0] = {{i0, j0}, (1.0 - fx) * (1.0 - fy)};
    out[1] = {{i0 + 1, j0}, fx * (1.0 - fy)};
    out[2] = {{i0, j0 + 1}, (1.0 - fx) * fy};
    out[3] = {{i0 + 1, j0 + 1}, fx * fy};
    return 4;
}

} // namespace

OffsetTable OffsetTable::build(const TorusGrid& g, const KernelParams& p, const CommGeometry& geo) {
    p.validate(g.side);
    if (p.r0 < 2.0 * g.dx)
        throw ConfigError("offset_table: r0 < 2*dx, kernel support unresolved");
    OffsetTable tab{g, p, geo, {}, 0.0};

    const int jmax = int(std::floor(p.r0 / g.dx)) + 1;
    std::vector<std::pair<int, int>> shifts;
    if (g.dim == 1) {
        for (int j = 1; j <= jmax; ++j)
            if (j * g.dx < p.r0) {
                shifts.push_back({j, 0});
                shifts.push_back({-j, 0});
            }
    } else {
        for (int i = -jmax; i <= jmax; ++i)
            for (int j = -jmax; j <= jmax; ++j) {
                if (i == 0 && j == 0) continue;
                if (std::hypot(i, j) * g.dx < p.r0) shifts.push_back({i, j});
            }
        // opposite offsets adjacent in the table
        std::sort(shifts.begin(), shifts.end(), [](const auto& a, const auto& b) {
            auto key = [](const std::pair<int, int>& s) {
                return std::make_tuple(std::abs(s.first), std::abs(s.second),
                                       -(s.first > 0 || (s.first == 0 && s.second > 0)));
            };
            return key(a) < key(b);
        });
    }

    tab.off.resize(shifts.size());
    for (size_t oi = 0; oi < shifts.size(); ++oi) {
        Offset& o = tab.off[oi];
        o.dj[0] = shifts[oi].first;
        o.dj[1] = shifts[oi].second;
        o.z = {o.dj[0] * g.dx, o.dj[1] * g.dx};
        o.r = g.dim == 1 ? std::abs(o.z[0]) : std::hypot(o.z[0], o.z[1]);
        o.h = bump_eval(o.r, p);
        o.pair = -1;
        Rotation U = rotation_for(g.dim, o.z);

        std::map<std::pair<int, int>, double> merged;
        Tap st[4];
        for (const auto& vn : geo.vol) {
            std::array<double, 2> xi = U.apply({o.r * vn.xi[0], o.r * vn.xi[1]});
            int nt = stencil_for(g, xi, st);
            for (int t = 0; t < nt; ++t)
                if (st[t].coeff != 0.0) merged[{st[t].dj[0], st[t].dj[1]}] += vn.w * st[t].coeff;
        }
        o.vol_taps.reserve(merged.size());
        for (const auto& kv : merged)
            o.vol_taps.push_back({{kv.first.first, kv.first.second}, kv.second});

        o.bdry.reserve(geo.bdry.size());
        for (const auto& bn : geo.bdry) {
            Offset::BdryPoint bp;
            std::array<double, 2> xi = U.apply({o.r * bn.theta[0], o.r * bn.theta[1]});
            bp.ntaps = stencil_for(g, xi, bp.taps);
            bp.nu = U.apply(bn.nu);
            bp.w = bn.w;
            o.bdry.push_back(bp);
        }
        tab.lattice_symbol_sum += o.h / std::pow(o.r, g.dim + p.alpha);
    }
    tab.lattice_symbol_sum *= g.cell_volume();

    // match +-z pairs
    std::map<std::pair<int, int>, int> where;
    for (size_t oi = 0; oi < tab.off.size(); ++oi)
        where[{tab.off[oi].dj[0], tab.off[oi].dj[1]}] = int(oi);
    for (auto& o : tab.off) o.pair = where.at({-o.dj[0], -o.dj[1]});
    return tab;
}

double comm_mass(const ScalarField& rho, long node, const std::array<double, 2>& z,
                 const CommGeometry& geo) {
    const TorusGrid& g = rho.grid;
    double r = g.dim == 1 ? std::abs(z[0]) : std::hypot(z[0], z[1]);
    Rotation U = rotation_for(g.dim, z);
    auto x = g.coords(node);
    double acc = 0.0;
    for (const auto& vn : geo.vol) {
        std::array<double, 2> xi = U.apply({r * vn.xi[0], r * vn.xi[1]});
        double s = interp(rho, {x[0] + xi[0], x[1] + xi[1]});
        if (s <= 0.0) throw VacuumError("comm_mass: nonpositive density sample");
        acc += vn.w * s;
    }
    double m = std::pow(r, g.dim) * acc;
    if (m <= 0.0) throw VacuumError("comm_mass: nonpositive communication mass");
    return m;
}

double topo_distance(const ScalarField& rho, long node, const std::array<double, 2>& z,
                     const CommGeometry& geo) {
    return std::pow(comm_mass(rho, node, z, geo), 1.0 / rho.grid.dim);
}

double kernel_eval(const ScalarField& rho, long node, const std::array<double, 2>& z,
                   const KernelParams& p, const CommGeometry& geo) {
    const TorusGrid& g = rho.grid;
    double r = g.dim == 1 ? std::abs(z[0]) : std::hypot(z[0], z[1]);
    if (r <= 0.0) throw std::invalid_argument("kernel_eval: z must be nonzero");
    if (r >= p.r0) return 0.0;
    double h = bump_eval(r, p);
    if (p.metric()) return h / std::pow(r, g.dim + p.alpha);
    double d = topo_distance(rho, node, z, geo);
    return h / (std::pow(r, g.dim + p.alpha - p.tau) * std::pow(d, p.tau));
}

} // namespace topoflock
