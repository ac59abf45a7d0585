#pragma once

// Uniform tensor grids on flat tori with FFTW-backed spectral calculus.

#include <complex>
#include <functional>
#include <numeric>
#include <vector>

#include <fftw3.h>

#include "slag/errors.hpp"
#include "slag/util.hpp"

namespace slag {

struct TorusGrid {
    std::vector<int> shape;      // points per axis
    std::vector<double> period;  // period length per axis

    TorusGrid() = default;
    TorusGrid(std::vector<int> shape_, std::vector<double> period_)
        : shape(std::move(shape_)), period(std::move(period_)) {
        if (shape.empty() || shape.size() != period.size())
            throw ArgumentError("TorusGrid: shape/period mismatch");
    }
    static TorusGrid cubic(int dim, int n, double L = 2.0 * kPi) {
        return TorusGrid(std::vector<int>(dim, n), std::vector<double>(dim, L));
    }

    int dim() const { return static_cast<int>(shape.size()); }
    std::size_t total() const {
        std::size_t t = 1;
        for (int s : shape) t *= static_cast<std::size_t>(s);
        return t;
    }
    double spacing(int axis) const { return period[axis] / shape[axis]; }

    /// Coordinates of the flat index.
    std::vector<double> point(std::size_t flat) const {
        std::vector<double> x(dim());
        for (int a = dim() - 1; a >= 0; --a) {
            const int i = static_cast<int>(flat % shape[a]);
            flat /= shape[a];
            x[a] = i * spacing(a);
        }
        return x;
    }

    /// Signed integer frequency for spectrum index i on an axis.
    static int freq_index(int i, int n) { return (i <= n / 2) ? i : i - n; }
};

namespace detail {

/// Full complex DFT of a real field (row-major, last axis contiguous).
inline std::vector<Complex> fft_forward(const TorusGrid& g, const std::vector<double>& v) {
    if (v.size() != g.total()) throw ArgumentError("fft_forward: size mismatch");
    std::vector<Complex> in(v.size()), out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) in[i] = v[i];
    fftw_plan plan = fftw_plan_dft(g.dim(), g.shape.data(),
                                   reinterpret_cast<fftw_complex*>(in.data()),
                                   reinterpret_cast<fftw_complex*>(out.data()),
                                   FFTW_FORWARD, FFTW_ESTIMATE);
    fftw_execute(plan);
    fftw_destroy_plan(plan);
    return out;
}

inline std::vector<double> fft_backward_real(const TorusGrid& g, std::vector<Complex> spec) {
    std::vector<Complex> out(spec.size());
    fftw_plan plan = fftw_plan_dft(g.dim(), g.shape.data(),
                                   reinterpret_cast<fftw_complex*>(spec.data()),
                                   reinterpret_cast<fftw_complex*>(out.data()),
                                   FFTW_BACKWARD, FFTW_ESTIMATE);
    fftw_execute(plan);
    fftw_destroy_plan(plan);
    std::vector<double> res(out.size());
    const double scale = 1.0 / static_cast<double>(g.total());
    for (std::size_t i = 0; i < out.size(); ++i) res[i] = out[i].real() * scale;
    return res;
}

/// Apply a frequency-space multiplier; mult receives the angular wavenumber
/// vector (2 pi k / L per axis) and the per-axis integer indices.
inline std::vector<double> spectral_multiplier(
    const TorusGrid& g, const std::vector<double>& v,
    const std::function<Complex(const std::vector<double>&, const std::vector<int>&)>& mult) {
    auto spec = fft_forward(g, v);
    const int d = g.dim();
    std::vector<int> idx(d, 0);
    std::vector<int> kk(d);
    std::vector<double> omega(d);
    for (std::size_t flat = 0; flat < spec.size(); ++flat) {
        std::size_t rem = flat;
        for (int a = d - 1; a >= 0; --a) {
            idx[a] = static_cast<int>(rem % g.shape[a]);
            rem /= g.shape[a];
        }
        for (int a = 0; a < d; ++a) {
            kk[a] = TorusGrid::freq_index(idx[a], g.shape[a]);
            omega[a] = 2.0 * kPi * kk[a] / g.period[a];
        }
        spec[flat] *= mult(omega, kk);
    }
    return fft_backward_real(g, spec);
}

} // namespace detail

/// d/dx_axis by spectral differentiation (Nyquist mode dropped).
inline std::vector<double> spectral_derivative(const TorusGrid& g, const std::vector<double>& v,
                                               int axis) {
    return detail::spectral_multiplier(g, v, [&](const std::vector<double>& om,
                                                 const std::vector<int>& kk) -> Complex {
        if (2 * std::abs(kk[axis]) == g.shape[axis]) return Complex(0, 0);
        return Complex(0, om[axis]);
    });
}

inline double field_mean(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

inline double field_sup(const std::vector<double>& v) {
    double m = 0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

inline double field_l2(const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x * x;
    return std::sqrt(s / static_cast<double>(v.size()));
}

} // namespace slag
