#pragma once

// Mellin transform numerics, the closed-form pole formula, indicial roots of
// the twisted model operator, and polyhomogeneous-expansion fitting with
// log-term detection.

#include <complex>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "slag/errors.hpp"
#include "slag/util.hpp"

namespace slag {

// ---------------------------------------------------------------------------
// Mellin transform
// ---------------------------------------------------------------------------

namespace detail {

inline Complex adaptive_simpson(const std::function<Complex(double)>& g, double a, double b,
                                Complex fa, Complex fm, Complex fb, Complex whole, double tol,
                                int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const Complex flm = g(lm), frm = g(rm);
    const Complex left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const Complex right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if (depth <= 0 || std::abs(left + right - whole) < 15.0 * tol)
        return left + right + (left + right - whole) / 15.0;
    return adaptive_simpson(g, a, m, fa, flm, fm, left, tol / 2, depth - 1) +
           adaptive_simpson(g, m, b, fm, frm, fb, right, tol / 2, depth - 1);
}

inline Complex integrate(const std::function<Complex(double)>& g, double a, double b,
                         double tol) {
    // short panels guard against premature convergence on long intervals
    // with concentrated integrands
    const int panels = std::max(1, static_cast<int>(std::ceil((b - a) / 5.0)));
    Complex total(0, 0);
    for (int p = 0; p < panels; ++p) {
        const double pa = a + (b - a) * p / panels;
        const double pb = a + (b - a) * (p + 1) / panels;
        const double pm = 0.5 * (pa + pb);
        const Complex fa = g(pa), fm = g(pm), fb = g(pb);
        const Complex whole = (pb - pa) / 6.0 * (fa + 4.0 * fm + fb);
        total += adaptive_simpson(g, pa, pb, fa, fm, fb, whole, tol / panels, 40);
    }
    return total;
}

} // namespace detail

/// A compactly supported radial profile with a declared leading power at 0:
/// u(r) ~ r^{decay} near r = 0, u(r) = 0 for r > support.
struct RadialProfile {
    std::function<double(double)> u;
    double decay = 0;    // convergence strip: Im(zeta) < decay
    double support = 1;  // u vanishes beyond this radius
};

/// M u (zeta) = int_0^inf u(r) r^{i zeta - 1} dr, adaptive quadrature in the
/// log variable. Gate: Im(zeta) strictly inside the convergence strip.
inline Complex mellin_transform(const RadialProfile& u, Complex zeta, double tol = 1e-9) {
    if (!(zeta.imag() < u.decay - 1e-12))
        throw DomainError("mellin_transform: Im(zeta) = " + fmt(zeta.imag()) +
                          " not inside the convergence strip Im < " + fmt(u.decay));
    // r = e^x: integral of u(e^x) e^{i zeta x} dx over (-inf, log(support)]
    const double margin = u.decay - zeta.imag();
    const double x_hi = std::log(u.support) + 1e-12;
    // truncate where the e^{margin x} envelope falls below the tolerance
    const double x_lo = std::max(std::min(0.0, x_hi) - std::log(10.0 / tol) / margin,
                                 x_hi - 2500.0);
    auto g = [&](double x) -> Complex {
        const double r = std::exp(x);
        return u.u(r) * std::exp(Complex(0, 1) * zeta * x);
    };
    return detail::integrate(g, x_lo, x_hi, tol);
}

inline std::vector<Complex> mellin_transform(const RadialProfile& u,
                                             const std::vector<Complex>& zetas,
                                             double tol = 1e-9) {
    std::vector<Complex> out;
    out.reserve(zetas.size());
    for (const auto& z : zetas) out.push_back(mellin_transform(u, z, tol));
    return out;
}

/// Closed form of int_0^1 r^s (log r)^p r^{i zeta - 1} dr
///   = (-1)^p p! / (i zeta + s)^{p+1}.
/// Throws PoleError when i zeta + s = 0 (a pole of order p+1 at zeta = i s).
inline Complex mellin_pole_formula(double s, int p, Complex zeta) {
    const Complex a = Complex(0, 1) * zeta + s;
    if (std::abs(a) < 1e-12) throw PoleError(s, p);
    double fact = 1;
    for (int q = 2; q <= p; ++q) fact *= q;
    const double sign = (p % 2 == 0) ? 1.0 : -1.0;
    return sign * fact / std::pow(a, p + 1);
}

// ---------------------------------------------------------------------------
// Indicial roots of the model operator on monodromy -1 fields
// ---------------------------------------------------------------------------

/// d/dzeta log det I_zeta over the truncated half-integer mode basis,
/// I_zeta = d_theta^2 + zeta^2 acting as zeta^2 - (k+1/2)^2 on mode k.
inline Complex indicial_logderiv(Complex zeta, int K) {
    Complex s(0, 0);
    for (int k = -K; k <= K; ++k) {
        const double nu = k + 0.5;
        s += 2.0 * zeta / (zeta * zeta - nu * nu);
    }
    return s;
}

/// min_k |zeta^2 - (k+1/2)^2|: distance of det I_zeta from dropping rank.
inline double indicial_min_factor(Complex zeta, int K) {
    double m = INFINITY;
    for (int k = -K; k <= K; ++k) {
        const double nu = k + 0.5;
        m = std::min(m, std::abs(zeta * zeta - nu * nu));
    }
    return m;
}

namespace detail {

/// Winding number (zero count with multiplicity) of det I_zeta inside the
/// rectangle [a,b] x [-h,h], by the argument principle on the log-derivative.
inline int indicial_winding(double a, double b, double h, int K, int n_edge = 400) {
    Complex total(0, 0);
    const Complex corners[4] = {Complex(a, -h), Complex(b, -h), Complex(b, h), Complex(a, h)};
    for (int e = 0; e < 4; ++e) {
        const Complex z0 = corners[e], z1 = corners[(e + 1) % 4];
        Complex prev = indicial_logderiv(z0, K);
        for (int i = 1; i <= n_edge; ++i) {
            const Complex z = z0 + (z1 - z0) * (double(i) / n_edge);
            const Complex cur = indicial_logderiv(z, K);
            total += 0.5 * (prev + cur) * (z1 - z0) / double(n_edge);
            prev = cur;
        }
    }
    const double winding = (total / Complex(0, 2.0 * kPi)).real();
    return static_cast<int>(std::lround(winding));
}

} // namespace detail

struct IndicialRoot {
    double zeta = 0;
    int multiplicity = 0;
};

/// Roots of det I_zeta in the real window [lo, hi]: the argument principle
/// on rectangular contours isolates the roots with their multiplicities,
/// then a sign bisection of the (real) log-derivative pins each location.
inline std::vector<IndicialRoot> indicial_roots(double lo, double hi, int K = 64,
                                                double resolution = 1e-3) {
    std::vector<IndicialRoot> out;
    struct Segment {
        double a, b;
        int count;
    };
    std::vector<Segment> work, boxes;
    const double h = 0.2;
    // keep contour edges away from the poles of the log-derivative, or the
    // trapezoid winding integrals lose accuracy
    auto safe = [&](double x) {
        while (std::abs(indicial_min_factor(Complex(x, 0), K)) < 0.05) x += 7e-3;
        return x;
    };
    const double a0 = safe(lo), b0 = safe(hi);
    const int total = detail::indicial_winding(a0, b0, h, K);
    if (total > 0) work.push_back({a0, b0, total});
    while (!work.empty()) {
        Segment s = work.back();
        work.pop_back();
        if (s.b - s.a < 0.4) { // at most one distinct root per box
            boxes.push_back(s);
            continue;
        }
        const double mid = safe(0.5 * (s.a + s.b));
        const int left = detail::indicial_winding(s.a, mid, h, K);
        const int right = s.count - left;
        if (left > 0) work.push_back({s.a, mid, left});
        if (right > 0) work.push_back({mid, s.b, right});
    }
    for (const auto& box : boxes) {
        // the log-derivative behaves like m/(zeta - root): negative left of
        // the root, positive right of it
        double a = box.a, b = box.b;
        for (int it = 0; it < 80 && (b - a) > 0.01 * resolution; ++it) {
            const double mid = 0.5 * (a + b);
            (indicial_logderiv(Complex(mid, 0), K).real() > 0 ? b : a) = mid;
        }
        out.push_back({0.5 * (a + b), box.count});
    }
    std::sort(out.begin(), out.end(),
              [](const IndicialRoot& x, const IndicialRoot& y) { return x.zeta < y.zeta; });
    return out;
}

// ---------------------------------------------------------------------------
// Polyhomogeneous fits
// ---------------------------------------------------------------------------

struct PolyhomTerm {
    double gamma = 0;
    int p = 0;
    Complex coeff{0, 0};
    double uncertainty = 0;  // from two-resolution comparison
    bool log_detected = false;
};

struct PolyhomExpansion {
    std::vector<PolyhomTerm> terms;
    std::vector<std::pair<double, int>> indexSet; // (gamma, max log power)
    double residualTail = 0;
};

namespace detail {

inline std::vector<Complex> polyhom_lsq(const std::vector<double>& r,
                                        const std::vector<Complex>& f,
                                        const std::vector<std::size_t>& rows,
                                        const std::vector<std::pair<double, int>>& dict,
                                        double* resid) {
    Eigen::MatrixXd M(rows.size(), dict.size());
    Eigen::VectorXd yr(rows.size()), yi(rows.size());
    std::vector<double> colscale(dict.size(), 0.0);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const double x = r[rows[i]];
        for (std::size_t j = 0; j < dict.size(); ++j)
            M(i, j) = std::pow(x, dict[j].first) * std::pow(std::log(x), dict[j].second);
        yr[i] = f[rows[i]].real();
        yi[i] = f[rows[i]].imag();
    }
    for (std::size_t j = 0; j < dict.size(); ++j) {
        colscale[j] = M.col(j).norm();
        if (colscale[j] == 0) colscale[j] = 1;
        M.col(j) /= colscale[j];
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    if (sv(sv.size() - 1) <= 0 || sv(0) / sv(sv.size() - 1) > 1e8)
        throw FitError("polyhom_fit: dictionary collinear over the sampled range");
    Eigen::VectorXd cr = svd.solve(yr), ci = svd.solve(yi);
    if (resid) {
        const double rr = (M * cr - yr).norm() + (M * ci - yi).norm();
        const double sc = yr.norm() + yi.norm();
        *resid = sc > 0 ? rr / sc : rr;
    }
    std::vector<Complex> out(dict.size());
    for (std::size_t j = 0; j < dict.size(); ++j)
        out[j] = Complex(cr[j], ci[j]) / colscale[j];
    return out;
}

} // namespace detail

/// Weighted least squares of radial mode data on the dictionary
/// { r^gamma (log r)^p } restricted to the declared index set. Fit window:
/// the innermost 60% of the available decades, excluding the two innermost
/// cells. Uncertainties from a half-resolution refit; a log term is flagged
/// when its coefficient exceeds 5x its uncertainty.
inline PolyhomExpansion polyhom_fit(const std::vector<double>& r, const std::vector<Complex>& f,
                                    const std::vector<std::pair<double, int>>& indexSet) {
    if (r.size() != f.size() || r.size() < 8) throw ArgumentError("polyhom_fit: need >= 8 samples");
    std::vector<std::pair<double, int>> dict;
    for (const auto& [gamma, pmax] : indexSet)
        for (int p = 0; p <= pmax; ++p) dict.push_back({gamma, p});
    const std::size_t i_lo = 2;
    const double lg_lo = std::log10(r[i_lo]);
    const double lg_hi = std::log10(r.back());
    const double lg_cut = lg_lo + 0.6 * (lg_hi - lg_lo);
    std::vector<std::size_t> rows, rows_half;
    for (std::size_t i = i_lo; i < r.size(); ++i)
        if (std::log10(r[i]) <= lg_cut) {
            rows.push_back(i);
            if ((i - i_lo) % 2 == 0) rows_half.push_back(i);
        }
    if (rows.size() < dict.size() + 2) throw ArgumentError("polyhom_fit: window too short");
    double resid = 0;
    auto c_full = detail::polyhom_lsq(r, f, rows, dict, &resid);
    auto c_half = detail::polyhom_lsq(r, f, rows_half, dict, nullptr);
    PolyhomExpansion out;
    out.indexSet = indexSet;
    out.residualTail = resid;
    for (std::size_t j = 0; j < dict.size(); ++j) {
        PolyhomTerm t;
        t.gamma = dict[j].first;
        t.p = dict[j].second;
        t.coeff = c_full[j];
        t.uncertainty = std::abs(c_full[j] - c_half[j]);
        if (t.p >= 1)
            t.log_detected = std::abs(t.coeff) > 5.0 * std::max(t.uncertainty, 1e-14);
        out.terms.push_back(t);
    }
    std::sort(out.terms.begin(), out.terms.end(), [](const PolyhomTerm& a, const PolyhomTerm& b) {
        return a.gamma < b.gamma || (a.gamma == b.gamma && a.p < b.p);
    });
    return out;
}

struct ExponentFit {
    double exponent = 0;
    double uncertainty = 0;  // two-resolution comparison
};

/// Free-exponent fit: log-log slope of |values| against r, with the same
/// two-resolution uncertainty estimate. Used for singular-exponent reports.
inline ExponentFit fit_exponent(const std::vector<double>& r, const std::vector<double>& values) {
    if (r.size() != values.size() || r.size() < 4)
        throw DiagnosticError("fit_exponent: insufficient radial range", double(r.size()));
    std::vector<double> xs, ys, xs2, ys2;
    for (std::size_t i = 0; i < r.size(); ++i) {
        if (!(std::abs(values[i]) > 0)) continue;
        xs.push_back(r[i]);
        ys.push_back(std::abs(values[i]));
        if (i % 2 == 0) {
            xs2.push_back(r[i]);
            ys2.push_back(std::abs(values[i]));
        }
    }
    if (xs.size() < 4) throw DiagnosticError("fit_exponent: too many vanishing samples",
                                             double(xs.size()));
    ExponentFit out;
    out.exponent = loglog_slope(xs, ys);
    out.uncertainty = std::abs(out.exponent - loglog_slope(xs2, ys2));
    return out;
}

} // namespace slag
