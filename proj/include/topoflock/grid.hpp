#pragma once

#include <array>
#include <vector>

#include "topoflock/common.hpp"

namespace topoflock {

// Uniform periodic lattice on [0, side)^dim, dim = 1 or 2.
// points_per_axis must be a power of two so FFTs and index wrapping stay cheap.
struct TorusGrid {
    int dim = 1;
    int n = 0;            // points per axis
    double side = kTwoPi;
    double dx = 0.0;

    TorusGrid() = default;
    TorusGrid(int dim_, int n_, double side_ = kTwoPi) : dim(dim_), n(n_), side(side_) {
        if (dim < 1 || dim > 2)
            throw ConfigError("TorusGrid: dim must be 1 or 2");
        if (n < 8 || !is_power_of_two(n))
            throw ConfigError("TorusGrid: points_per_axis must be a power of two >= 8");
        if (side <= 0.0)
            throw ConfigError("TorusGrid: side_length must be positive");
        dx = side / n;
    }

    long node_count() const { return dim == 1 ? n : long(n) * n; }
    int mask() const { return n - 1; }
    double cell_volume() const { return dim == 1 ? dx : dx * dx; }

    // flat index <-> lattice coordinates (row-major: i along axis 0)
    long flat(int i, int j = 0) const { return dim == 1 ? i : long(i) * n + j; }
    std::array<double, 2> coords(long idx) const {
        if (dim == 1) return {dx * double(idx), 0.0};
        return {dx * double(idx / n), dx * double(idx % n)};
    }

    bool operator==(const TorusGrid& o) const {
        return dim == o.dim && n == o.n && side == o.side;
    }
};

struct ScalarField {
    TorusGrid grid;
    std::vector<double> v;

    ScalarField() = default;
    explicit ScalarField(const TorusGrid& g, double fill = 0.0)
        : grid(g), v(size_t(g.node_count()), fill) {}

    double& operator[](long i) { return v[size_t(i)]; }
    double operator[](long i) const { return v[size_t(i)]; }
    long size() const { return long(v.size()); }

    double min() const {
        double m = v[0];
        for (double x : v) m = x < m ? x : m;
        return m;
    }
    double max() const {
        double m = v[0];
        for (double x : v) m = x > m ? x : m;
        return m;
    }
    bool all_finite() const {
        for (double x : v)
            if (!std::isfinite(x)) return false;
        return true;
    }
};

struct VectorField {
    TorusGrid grid;
    std::vector<ScalarField> comp; // grid.dim components

    VectorField() = default;
    explicit VectorField(const TorusGrid& g) : grid(g) {
        comp.assign(size_t(g.dim), ScalarField(g));
    }

    ScalarField& operator[](int c) { return comp[size_t(c)]; }
    const ScalarField& operator[](int c) const { return comp[size_t(c)]; }
    int dim() const { return grid.dim; }

    bool all_finite() const {
        for (const auto& c : comp)
            if (!c.all_finite()) return false;
        return true;
    }
    double max_abs() const {
        double m = 0.0;
        for (const auto& c : comp)
            for (double x : c.v) m = std::max(m, std::abs(x));
        return m;
    }
};

// y += a*x, used all over the integrator
inline void axpy(double a, const ScalarField& x, ScalarField& y) {
    for (size_t i = 0; i < y.v.size(); ++i) y.v[i] += a * x.v[i];
}
inline void axpy(double a, const VectorField& x, VectorField& y) {
    for (int c = 0; c < y.dim(); ++c) axpy(a, x[c], y[c]);
}

// plain lattice integral  dx^dim * sum f
inline double integral(const ScalarField& f) {
    double s = 0.0;
    for (double x : f.v) s += x;
    return s * f.grid.cell_volume();
}

} // namespace topoflock
