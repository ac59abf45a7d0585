#pragma once

// Geometric radial grids and two-point boundary-value solves for the
// mode operators  f'' + f'/r - (nu^2/r^2 + mu) f  that arise when the
// Laplacian is split over angular (and axial) modes.

#include <cmath>
#include <complex>
#include <vector>

#include "slag/errors.hpp"
#include "slag/util.hpp"

namespace slag {

struct RadialGrid {
    std::vector<double> r;

    static RadialGrid geometric(double r_min, double r_max, double ratio) {
        if (!(r_min > 0) || !(r_max > r_min) || !(ratio > 1))
            throw ArgumentError("RadialGrid::geometric: bad parameters");
        RadialGrid g;
        double x = r_min;
        while (x < r_max * (1.0 - 1e-12)) {
            g.r.push_back(x);
            x *= ratio;
        }
        g.r.push_back(r_max);
        return g;
    }

    std::size_t size() const { return r.size(); }
    double inner() const { return r.front(); }
    double outer() const { return r.back(); }
};

/// L[c r^s (log r)^p] for L = d^2/dr^2 + (1/r) d/dr - nu^2/r^2, expanded on
/// the (power, logpower) basis. Returns the terms of the image.
struct PowerTerm {
    double s = 0;   // exponent
    int p = 0;      // power of log r
    Complex c{0, 0};
};

inline std::vector<PowerTerm> apply_mode_laplacian(double nu, const PowerTerm& t) {
    // (r^s (log r)^p)'' + (r^s (log r)^p)'/r - nu^2 r^{s-2} (log r)^p
    //   = (s^2 - nu^2) r^{s-2} L^p + 2ps r^{s-2} L^{p-1} + p(p-1) r^{s-2} L^{p-2}
    std::vector<PowerTerm> out;
    const double s = t.s;
    const int p = t.p;
    out.push_back({s - 2, p, t.c * (s * s - nu * nu)});
    if (p >= 1) out.push_back({s - 2, p - 1, t.c * (2.0 * p * s)});
    if (p >= 2) out.push_back({s - 2, p - 2, t.c * double(p * (p - 1))});
    return out;
}

/// Particular solution of L f = c r^{s-2} (log r)^p with L as above.
/// Non-resonant (s != +-nu): pure powers. Resonant: one extra log power.
/// Sets *resonant when the resonant branch is taken.
inline std::vector<PowerTerm> particular_solution(double nu, double s_minus_2, int p, Complex c,
                                                  bool* resonant = nullptr,
                                                  double res_tol = 1e-9) {
    const double s = s_minus_2 + 2.0;
    std::vector<PowerTerm> out;
    if (std::abs(s - nu) > res_tol && std::abs(s + nu) > res_tol) {
        // Solve upward in log powers: f = sum_{q<=p} a_q r^s (log r)^q.
        // L maps a_q to (s^2-nu^2) a_q L^q + 2 s q a_q L^{q-1} + q(q-1) a_q L^{q-2}.
        std::vector<Complex> a(p + 1, Complex(0, 0));
        const double d = s * s - nu * nu;
        for (int q = p; q >= 0; --q) {
            Complex rhs = (q == p) ? c : Complex(0, 0);
            if (q + 1 <= p) rhs -= 2.0 * s * double(q + 1) * a[q + 1];
            if (q + 2 <= p) rhs -= double((q + 2) * (q + 1)) * a[q + 2];
            a[q] = rhs / d;
        }
        for (int q = 0; q <= p; ++q)
            if (a[q] != Complex(0, 0)) out.push_back({s, q, a[q]});
        if (resonant) *resonant = false;
        return out;
    }
    if (std::abs(s) < res_tol && std::abs(nu) < res_tol) {
        // L[(log r)^2] = 2 r^{-2}; only p = 0 supported here.
        if (p != 0) throw ArgumentError("particular_solution: unsupported resonance (s=nu=0, p>0)");
        out.push_back({0.0, 2, c / 2.0});
        if (resonant) *resonant = true;
        return out;
    }
    if (p != 0)
        throw ArgumentError("particular_solution: resonant source with log powers unsupported");
    // L[r^s log r] = 2 s r^{s-2} at s = +-nu
    out.push_back({s, 1, c / (2.0 * s)});
    if (resonant) *resonant = true;
    return out;
}

inline Complex eval_terms(const std::vector<PowerTerm>& terms, double r) {
    Complex v(0, 0);
    const double lr = std::log(r);
    for (const auto& t : terms) v += t.c * std::pow(r, t.s) * std::pow(lr, t.p);
    return v;
}

inline Complex eval_terms_d1(const std::vector<PowerTerm>& terms, double r) {
    Complex v(0, 0);
    const double lr = std::log(r);
    for (const auto& t : terms) {
        v += t.c * t.s * std::pow(r, t.s - 1) * std::pow(lr, t.p);
        if (t.p >= 1) v += t.c * double(t.p) * std::pow(r, t.s - 1) * std::pow(lr, t.p - 1);
    }
    return v;
}

/// Tridiagonal finite-difference solve of
///   f'' + f'/r - (nu^2/r^2 + mu) f = rhs,   f(R) = rim,
/// with the regular branch r^{s_reg} selected at the inner end through the
/// power-ratio condition f_1 = (r_1/r_0)^{s_reg} f_0.
/// Second-order stencils on the (nonuniform) grid.
template <typename Scalar>
std::vector<Scalar> solve_radial_bvp(const RadialGrid& g, double nu, double mu,
                                     const std::vector<Scalar>& rhs, Scalar rim,
                                     double s_reg = -1.0) {
    const std::size_t n = g.size();
    if (rhs.size() != n) throw ArgumentError("solve_radial_bvp: rhs size mismatch");
    if (s_reg < 0) s_reg = std::abs(nu);
    std::vector<Scalar> a(n, Scalar(0)), b(n, Scalar(0)), c(n, Scalar(0)), d(n, Scalar(0));
    // inner regularity row
    b[0] = Scalar(std::pow(g.r[1] / g.r[0], s_reg));
    c[0] = Scalar(-1.0);
    d[0] = Scalar(0.0);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double hm = g.r[i] - g.r[i - 1];
        const double hp = g.r[i + 1] - g.r[i];
        const double r = g.r[i];
        // f'' weights
        const double wmm = 2.0 / (hm * (hm + hp));
        const double wmc = -2.0 / (hm * hp);
        const double wmp = 2.0 / (hp * (hm + hp));
        // f' weights
        const double vm = -hp / (hm * (hm + hp));
        const double vc = (hp - hm) / (hm * hp);
        const double vp = hm / (hp * (hm + hp));
        a[i] = Scalar(wmm + vm / r);
        b[i] = Scalar(wmc + vc / r - nu * nu / (r * r) - mu);
        c[i] = Scalar(wmp + vp / r);
        d[i] = rhs[i];
    }
    a[n - 1] = Scalar(0);
    b[n - 1] = Scalar(1);
    d[n - 1] = rim;
    // Thomas algorithm with iterative refinement (the system is badly
    // scaled near the inner end)
    std::vector<Scalar> cp(n), dp(n);
    cp[0] = c[0] / b[0];
    for (std::size_t i = 1; i < n; ++i) {
        const Scalar m = b[i] - a[i] * cp[i - 1];
        cp[i] = (i + 1 < n) ? c[i] / m : Scalar(0);
        dp[i] = m; // keep the pivots
    }
    auto back_solve = [&](const std::vector<Scalar>& rhs_vec) {
        std::vector<Scalar> y(n);
        y[0] = rhs_vec[0] / b[0];
        for (std::size_t i = 1; i < n; ++i) y[i] = (rhs_vec[i] - a[i] * y[i - 1]) / dp[i];
        std::vector<Scalar> x(n);
        x[n - 1] = y[n - 1];
        for (std::size_t i = n - 1; i-- > 0;) x[i] = y[i] - cp[i] * x[i + 1];
        return x;
    };
    std::vector<Scalar> f = back_solve(d);
    for (int refine = 0; refine < 2; ++refine) {
        std::vector<Scalar> res(n);
        res[0] = d[0] - (b[0] * f[0] + c[0] * f[1]);
        for (std::size_t i = 1; i + 1 < n; ++i)
            res[i] = d[i] - (a[i] * f[i - 1] + b[i] * f[i] + c[i] * f[i + 1]);
        res[n - 1] = d[n - 1] - f[n - 1];
        auto delta = back_solve(res);
        for (std::size_t i = 0; i < n; ++i) f[i] += delta[i];
    }
    return f;
}

/// Discrete application of f'' + f'/r - (nu^2/r^2 + mu) f on interior nodes
/// (first and last entries are set to zero).
template <typename Scalar>
std::vector<Scalar> apply_radial_operator_fd(const RadialGrid& g, double nu, double mu,
                                             const std::vector<Scalar>& f) {
    const std::size_t n = g.size();
    std::vector<Scalar> out(n, Scalar(0));
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double hm = g.r[i] - g.r[i - 1];
        const double hp = g.r[i + 1] - g.r[i];
        const double r = g.r[i];
        const Scalar fpp = Scalar(2.0 / (hm * (hm + hp))) * f[i - 1] +
                           Scalar(-2.0 / (hm * hp)) * f[i] +
                           Scalar(2.0 / (hp * (hm + hp))) * f[i + 1];
        const Scalar fp = Scalar(-hp / (hm * (hm + hp))) * f[i - 1] +
                          Scalar((hp - hm) / (hm * hp)) * f[i] +
                          Scalar(hm / (hp * (hm + hp))) * f[i + 1];
        out[i] = fpp + fp / r - Scalar(nu * nu / (r * r) + mu) * f[i];
    }
    return out;
}

} // namespace slag
