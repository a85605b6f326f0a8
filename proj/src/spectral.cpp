#include "topoflock/spectral.hpp"

#include <fftw3.h>

#include <map>
#include <memory>
#include <mutex>

namespace topoflock {

namespace {

// One FFTW plan pair per (dim, n). Plan creation is not thread safe and
// fftw_execute on shared buffers is not either, so every transform holds the
// engine mutex; transforms are cheap next to the kernel quadratures.
class SpectralEngine {
public:
    explicit SpectralEngine(const TorusGrid& g) : grid_(g) {
        long m = g.node_count();
        buf_ = fftw_alloc_complex(size_t(m));
        if (g.dim == 1) {
            fwd_ = fftw_plan_dft_1d(g.n, buf_, buf_, FFTW_FORWARD, FFTW_ESTIMATE);
            bwd_ = fftw_plan_dft_1d(g.n, buf_, buf_, FFTW_BACKWARD, FFTW_ESTIMATE);
        } else {
            fwd_ = fftw_plan_dft_2d(g.n, g.n, buf_, buf_, FFTW_FORWARD, FFTW_ESTIMATE);
            bwd_ = fftw_plan_dft_2d(g.n, g.n, buf_, buf_, FFTW_BACKWARD, FFTW_ESTIMATE);
        }
    }
    ~SpectralEngine() {
        fftw_destroy_plan(fwd_);
        fftw_destroy_plan(bwd_);
        fftw_free(buf_);
    }
    SpectralEngine(const SpectralEngine&) = delete;
    SpectralEngine& operator=(const SpectralEngine&) = delete;

    Spectrum forward(const ScalarField& f) {
        std::lock_guard<std::mutex> lock(mu_);
        long m = grid_.node_count();
        for (long i = 0; i < m; ++i) {
            buf_[i][0] = f[i];
            buf_[i][1] = 0.0;
        }
        fftw_execute(fwd_);
        Spectrum s(grid_);
        double inv = 1.0 / double(m);
        for (long i = 0; i < m; ++i)
            s.c[size_t(i)] = {buf_[i][0] * inv, buf_[i][1] * inv};
        return s;
    }

    ScalarField backward(const Spectrum& s) {
        std::lock_guard<std::mutex> lock(mu_);
        long m = grid_.node_count();
        for (long i = 0; i < m; ++i) {
            buf_[i][0] = s.c[size_t(i)].real();
            buf_[i][1] = s.c[size_t(i)].imag();
        }
        fftw_execute(bwd_);
        ScalarField f(grid_);
        for (long i = 0; i < m; ++i) f[i] = buf_[i][0];
        return f;
    }

private:
    TorusGrid grid_;
    fftw_complex* buf_;
    fftw_plan fwd_, bwd_;
    std::mutex mu_;
};

SpectralEngine& engine_for(const TorusGrid& g) {
    static std::mutex reg_mu;
    static std::map<std::pair<int, int>, std::unique_ptr<SpectralEngine>> registry;
    std::lock_guard<std::mutex> lock(reg_mu);
    auto key = std::make_pair(g.dim, g.n);
    auto it = registry.find(key);
    if (it == registry.end())
        it = registry.emplace(key, std::make_unique<SpectralEngine>(g)).first;
    return *it->second;
}

} // namespace

Spectrum to_spectrum(const ScalarField& f) { return engine_for(f.grid).forward(f); }
ScalarField to_field(const Spectrum& s) { return engine_for(s.grid).backward(s); }

ScalarField derivative(const ScalarField& f, int axis, int order) {
    const TorusGrid& g = f.grid;
    if (axis < 0 || axis >= g.dim)
        throw std::invalid_argument("derivative: axis out of range");
    if (order < 1 || order > 6)
        throw std::invalid_argument("derivative: order must be in 1..6");
    Spectrum s = to_spectrum(f);
    const int half = g.n / 2;
    const std::complex<double> iunit(0.0, 1.0);
    for (long idx = 0; idx < g.node_count(); ++idx) {
        int j = g.dim == 1 ? int(idx) : (axis == 0 ? int(idx / g.n) : int(idx % g.n));
        int k = s.wavenumber(j);
        // the Nyquist mode has no well-defined odd derivative; drop it
        if (k == half && (order % 2)) {
            s.c[size_t(idx)] = 0.0;
            continue;
        }
        std::complex<double> mult = 1.0;
        double kp = std::pow(double(k), order);
        switch (order % 4) {
            case 0: mult = kp; break;
            case 1: mult = iunit * kp; break;
            case 2: mult = -kp; break;
            case 3: mult = -iunit * kp; break;
        }
        s.c[size_t(idx)] *= mult;
    }
    return to_field(s);
}

ScalarField divergence(const VectorField& u) {
    ScalarField d = derivative(u[0], 0, 1);
    if (u.dim() == 2) axpy(1.0, derivative(u[1], 1, 1), d);
    return d;
}

VectorField gradient(const ScalarField& f) {
    VectorField g(f.grid);
    for (int a = 0; a < f.grid.dim; ++a) g[a] = derivative(f, a, 1);
    return g;
}

double sobolev_norm(const ScalarField& f, double s, bool homogeneous) {
    if (s < 0.0) throw std::invalid_argument("sobolev_norm: s must be >= 0");
    if (s > 6.0) throw std::invalid_argument("sobolev_norm: s capped at 6 (diagnostic range)");
    Spectrum sp = to_spectrum(f);
    double acc = 0.0;
    for (long idx = 0; idx < f.grid.node_count(); ++idx) {
        double k2 = sp.ksq(idx);
        double w2s;
        if (homogeneous) {
            if (k2 == 0.0) continue;
            w2s = std::pow(k2, s);
        } else {
            w2s = std::pow(1.0 + k2, s);
        }
        acc += w2s * std::norm(sp.c[size_t(idx)]);
    }
    return std::sqrt(acc);
}

double l2_norm(const ScalarField& f) {
    double acc = 0.0;
    for (double x : f.v) acc += x * x;
    return std::sqrt(acc / double(f.grid.node_count()));
}

double l2_norm_diff(const ScalarField& a, const ScalarField& b) {
    double acc = 0.0;
    for (size_t i = 0; i < a.v.size(); ++i) {
        double d = a.v[i] - b.v[i];
        acc += d * d;
    }
    return std::sqrt(acc / double(a.grid.node_count()));
}

double linf_norm(const ScalarField& f) {
    double m = 0.0;
    for (double x : f.v) m = std::max(m, std::abs(x));
    return m;
}

ScalarField lp_project(const ScalarField& f, int q) {
    if (q < 0) throw std::invalid_argument("lp_project: q must be >= 0");
    Spectrum s = to_spectrum(f);
    double lo = q == 0 ? 0.0 : std::pow(2.0, q - 1);
    double hi = q == 0 ? 0.0 : std::pow(2.0, q);
    for (long idx = 0; idx < f.grid.node_count(); ++idx) {
        double kabs = std::sqrt(s.ksq(idx));
        bool keep = q == 0 ? kabs == 0.0 : (kabs >= lo && kabs < hi);
        if (!keep) s.c[size_t(idx)] = 0.0;
    }
    return to_field(s);
}

bool is_dealias_kept(const TorusGrid& g, long idx) {
    int cut = g.n / 3;
    if (g.dim == 1) {
        int k = int(idx) <= g.n / 2 ? int(idx) : int(idx) - g.n;
        return std::abs(k) <= cut;
    }
    int j1 = int(idx / g.n), j2 = int(idx % g.n);
    int k1 = j1 <= g.n / 2 ? j1 : j1 - g.n;
    int k2 = j2 <= g.n / 2 ? j2 : j2 - g.n;
    return std::abs(k1) <= cut && std::abs(k2) <= cut;
}

ScalarField dealias(const ScalarField& f) {
    Spectrum s = to_spectrum(f);
    for (long idx = 0; idx < f.grid.node_count(); ++idx)
        if (!is_dealias_kept(f.grid, idx)) s.c[size_t(idx)] = 0.0;
    return to_field(s);
}

VectorField dealias(const VectorField& u) {
    VectorField out(u.grid);
    for (int c = 0; c < u.dim(); ++c) out[c] = dealias(u[c]);
    return out;
}

ScalarField shift_field(const ScalarField& f, const std::array<double, 2>& shift) {
    Spectrum s = to_spectrum(f);
    const TorusGrid& g = f.grid;
    for (long idx = 0; idx < g.node_count(); ++idx) {
        double phase;
        if (g.dim == 1) {
            phase = s.wavenumber(int(idx)) * shift[0];
        } else {
            phase = s.wavenumber(int(idx / g.n)) * shift[0] +
                    s.wavenumber(int(idx % g.n)) * shift[1];
        }
        s.c[size_t(idx)] *= std::complex<double>(std::cos(phase), std::sin(phase));
    }
    return to_field(s);
}

} // namespace topoflock
