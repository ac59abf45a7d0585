#pragma once

// Two-valued (Z2-twisted) fields on the annulus model: half-integer angular
// modes on a geometric radial grid, twisted Poisson solves with singular
// power-law sources, leading-coefficient extraction and nondegeneracy
// classification, and the local graph family w^2 = t^2 z^{2k-1}.

#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "slag/errors.hpp"
#include "slag/radial.hpp"
#include "slag/util.hpp"

namespace slag {

/// f(r, theta) = sum_k Re( f_k(r) e^{i (k + 1/2) theta} ), k in {-K..K}.
/// Anti-periodic under theta -> theta + 2 pi by construction.
struct TwistedField {
    RadialGrid grid;
    int K = 32;
    std::vector<std::vector<Complex>> modes; // [k + K][radial node]

    TwistedField() = default;
    TwistedField(RadialGrid g, int K_) : grid(std::move(g)), K(K_) {
        modes.assign(2 * K + 1, std::vector<Complex>(grid.size(), Complex(0, 0)));
    }

    std::vector<Complex>& mode(int k) { return modes[static_cast<std::size_t>(k + K)]; }
    const std::vector<Complex>& mode(int k) const {
        return modes[static_cast<std::size_t>(k + K)];
    }

    double eval_node(std::size_t i, double theta) const {
        double v = 0;
        for (int k = -K; k <= K; ++k) {
            const Complex c = mode(k)[i];
            if (c == Complex(0, 0)) continue;
            v += (c * std::exp(Complex(0, (k + 0.5) * theta))).real();
        }
        return v;
    }

    /// Largest |f_k| over the outermost modes, to monitor truncation.
    double tail_energy(int tail_width = 4) const {
        double m = 0;
        for (int k = K - tail_width + 1; k <= K; ++k)
            for (const auto& c : mode(k)) m = std::max(m, std::abs(c));
        return m;
    }

    std::string to_csv() const {
        CsvTable t({"k", "r", "re_f", "im_f"});
        for (int k = -K; k <= K; ++k)
            for (std::size_t i = 0; i < grid.size(); ++i) {
                const Complex c = mode(k)[i];
                if (c == Complex(0, 0) && k != 0) continue;
                t.add_row({std::to_string(k), fmt(grid.r[i]), fmt(c.real()), fmt(c.imag())});
            }
        return t.to_string();
    }
};

/// Angular transform of samples on (r_i, theta_m), theta_m = 4 pi m / n_theta,
/// onto half-integer modes. Gate: anti-periodicity under theta -> theta + 2 pi.
inline TwistedField mode_decompose(const RadialGrid& grid,
                                   const std::vector<std::vector<double>>& samples, int K,
                                   double antiperiodic_tol = 1e-8) {
    const std::size_t n_r = grid.size();
    if (samples.size() != n_r) throw ArgumentError("mode_decompose: radial size mismatch");
    const std::size_t n_t = samples[0].size();
    if (n_t % 2 != 0) throw ArgumentError("mode_decompose: need full double period");
    double scale = 0, defect = 0;
    for (std::size_t i = 0; i < n_r; ++i)
        for (std::size_t m = 0; m < n_t; ++m) {
            scale = std::max(scale, std::abs(samples[i][m]));
            defect = std::max(defect,
                              std::abs(samples[i][m] + samples[i][(m + n_t / 2) % n_t]));
        }
    if (defect > antiperiodic_tol * std::max(1.0, scale))
        throw ArgumentError("mode_decompose: anti-periodicity defect " + fmt(defect));
    if (4 * static_cast<std::size_t>(K) + 2 > n_t)
        throw ArgumentError("mode_decompose: angular grid too coarse for K");
    TwistedField f(grid, K);
    for (int k = 0; k <= K; ++k) {
        const double nu = k + 0.5;
        for (std::size_t i = 0; i < n_r; ++i) {
            Complex acc(0, 0);
            for (std::size_t m = 0; m < n_t; ++m) {
                const double th = 4.0 * kPi * m / n_t;
                acc += samples[i][m] * std::exp(Complex(0, -nu * th));
            }
            f.mode(k)[i] = 2.0 * acc / static_cast<double>(n_t);
        }
    }
    return f;
}

/// A power-law source term  c * r^sigma (log r)^p e^{i (k+1/2) theta}.
struct TwistedSource {
    int k = 0;
    double sigma = 0;
    int p = 0;
    Complex coeff{0, 0};
};

struct ModeTerms {
    int k = 0;
    std::vector<PowerTerm> terms;
};

/// Result of a twisted Poisson solve: mode samples, the closed-form part,
/// and the finite-difference remainder (kept so the discrete operator can be
/// re-applied exactly).
struct TwistedSolution {
    TwistedField field;                 // total solution samples
    std::vector<ModeTerms> structured;  // particular + homogeneous closed forms
    TwistedField fd_part;               // sampled remainder solved by FD
    bool resonant = false;              // a log-term particular was needed
};

/// Solve Delta f = rhs for the flat annulus Laplacian
/// Delta = d_rr + d_r/r + d_thth/r^2, mode by mode: each radial ODE
///   f_k'' + f_k'/r - (k+1/2)^2 f_k / r^2 = rhs_k
/// with the regular branch r^{|k+1/2|} selected at r -> 0 and Dirichlet data
/// at r = R. Power-law sources get exact particular solutions (with an
/// explicit r^s log r term at resonance); sampled remainders are solved by
/// finite differences on the grid.
inline TwistedSolution twisted_poisson_solve(const RadialGrid& grid, int K,
                                             const std::vector<TwistedSource>& sources,
                                             const TwistedField* sampled_rhs = nullptr,
                                             const std::vector<Complex>* rim = nullptr) {
    TwistedSolution sol;
    sol.field = TwistedField(grid, K);
    sol.fd_part = TwistedField(grid, K);
    const double R = grid.outer();
    for (int k = -K; k <= K; ++k) {
        const double nu = std::abs(k + 0.5);
        std::vector<PowerTerm> part;
        for (const auto& src : sources) {
            if (src.k != k) continue;
            bool res = false;
            auto terms = particular_solution(nu, src.sigma, src.p, src.coeff, &res);
            if (res) sol.resonant = true;
            part.insert(part.end(), terms.begin(), terms.end());
        }
        std::vector<Complex> fd(grid.size(), Complex(0, 0));
        bool have_fd = false;
        if (sampled_rhs && k >= -sampled_rhs->K && k <= sampled_rhs->K) {
            const auto& src = sampled_rhs->mode(k);
            double sup = 0;
            for (const auto& c : src) sup = std::max(sup, std::abs(c));
            if (sup > 0) {
                fd = solve_radial_bvp<Complex>(grid, nu, 0.0, src, Complex(0, 0));
                have_fd = true;
            }
        }
        if (part.empty() && !have_fd && !(rim && (*rim)[k + K] != Complex(0, 0))) continue;
        // homogeneous coefficient from the rim condition
        const Complex rim_val = rim ? (*rim)[k + K] : Complex(0, 0);
        const Complex part_at_R = eval_terms(part, R);
        const Complex A_h = (rim_val - part_at_R) / std::pow(R, nu);
        std::vector<PowerTerm> structured = part;
        if (A_h != Complex(0, 0)) structured.push_back({nu, 0, A_h});
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const Complex v = eval_terms(structured, grid.r[i]) + fd[i];
            sol.field.mode(k)[i] = v;
            sol.fd_part.mode(k)[i] = fd[i];
        }
        if (!structured.empty()) sol.structured.push_back({k, structured});
    }
    return sol;
}

/// Re-apply the twisted Laplacian to a solve output: closed forms are
/// differentiated exactly, the FD remainder with the same discrete stencil.
/// Returns per-mode right-hand-side samples (interior nodes meaningful).
inline TwistedField reapply_twisted_laplacian(const TwistedSolution& sol) {
    const RadialGrid& grid = sol.field.grid;
    const int K = sol.field.K;
    TwistedField rhs(grid, K);
    for (const auto& mt : sol.structured) {
        const double nu = std::abs(mt.k + 0.5);
        for (const auto& t : mt.terms) {
            for (const auto& img : apply_mode_laplacian(nu, t))
                for (std::size_t i = 0; i < grid.size(); ++i)
                    rhs.mode(mt.k)[i] += img.c * std::pow(grid.r[i], img.s) *
                                         std::pow(std::log(grid.r[i]), img.p);
        }
    }
    for (int k = -K; k <= K; ++k) {
        const double nu = std::abs(k + 0.5);
        double sup = 0;
        for (const auto& c : sol.fd_part.mode(k)) sup = std::max(sup, std::abs(c));
        if (sup == 0) continue;
        auto img = apply_radial_operator_fd<Complex>(grid, nu, 0.0, sol.fd_part.mode(k));
        for (std::size_t i = 0; i < grid.size(); ++i) rhs.mode(k)[i] += img[i];
    }
    return rhs;
}

/// Apply the annulus Laplacian to an analytic power-law mode field (oracle
/// for symbolic checks): input terms of mode k, output image terms.
inline std::vector<PowerTerm> twisted_laplacian_closed_form(int k,
                                                            const std::vector<PowerTerm>& terms) {
    const double nu = std::abs(k + 0.5);
    std::vector<PowerTerm> out;
    for (const auto& t : terms) {
        auto img = apply_mode_laplacian(nu, t);
        out.insert(out.end(), img.begin(), img.end());
    }
    return out;
}

struct LeadingCoefficients {
    Complex A{0, 0};       // coefficient of Re(A z^{1/2})
    Complex B{0, 0};       // coefficient of Re(B z^{3/2})
    Complex B_log{0, 0};   // coefficient of the r^{3/2} log r term in mode 1
    double fitResidual = 0;
    double scale = 0;      // magnitude for relative gates (modes 0..2)
};

namespace detail {

/// Complex LSQ of mode samples against real radial basis functions over
/// [i_lo, i_hi]; returns coefficients; cond gate 1e8.
inline std::vector<Complex> fit_mode(const std::vector<double>& r,
                                     const std::vector<Complex>& f, std::size_t i_lo,
                                     std::size_t i_hi,
                                     const std::vector<std::function<double(double)>>& basis,
                                     double* resid = nullptr) {
    const std::size_t m = i_hi - i_lo;
    const std::size_t nb = basis.size();
    Eigen::MatrixXd M(m, nb);
    Eigen::VectorXd yr(m), yi(m);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < nb; ++j) M(i, j) = basis[j](r[i_lo + i]);
        yr[i] = f[i_lo + i].real();
        yi[i] = f[i_lo + i].imag();
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const double cond = svd.singularValues()(0) /
                        svd.singularValues()(svd.singularValues().size() - 1);
    if (cond > 1e8) throw FitError("fit_mode: ill-conditioned basis, cond " + fmt(cond));
    Eigen::VectorXd cr = svd.solve(yr), ci = svd.solve(yi);
    if (resid) {
        const double rr = (M * cr - yr).norm() + (M * ci - yi).norm();
        double scale = yr.norm() + yi.norm();
        *resid = scale > 0 ? rr / scale : rr;
    }
    std::vector<Complex> out(nb);
    for (std::size_t j = 0; j < nb; ++j) out[j] = Complex(cr[j], ci[j]);
    return out;
}

} // namespace detail

/// Least-squares extraction of the leading expansion coefficients over the
/// inner decade (two innermost cells excluded).
inline LeadingCoefficients leading_coefficients(const TwistedField& f) {
    const auto& r = f.grid.r;
    std::size_t i_lo = 2;
    const double r_hi = 10.0 * r[i_lo];
    std::size_t i_hi = i_lo;
    while (i_hi < r.size() && r[i_hi] <= r_hi) ++i_hi;
    if (i_hi - i_lo < 4) throw FitError("leading_coefficients: radial grid does not resolve r << R");
    LeadingCoefficients lc;
    double res0 = 0, res1 = 0, res2 = 0;
    auto c0 = detail::fit_mode(r, f.mode(0), i_lo, i_hi,
                               {[](double x) { return std::sqrt(x); }}, &res0);
    lc.A = c0[0];
    auto c1 = detail::fit_mode(r, f.mode(1), i_lo, i_hi,
                               {[](double x) { return std::pow(x, 1.5); },
                                [](double x) { return std::pow(x, 1.5) * std::log(x); }},
                               &res1);
    lc.B = c1[0];
    lc.B_log = c1[1];
    Complex c2{0, 0};
    if (f.K >= 2) {
        auto cc = detail::fit_mode(r, f.mode(2), i_lo, i_hi,
                                   {[](double x) { return std::pow(x, 2.5); }}, &res2);
        c2 = cc[0];
    }
    lc.fitResidual = std::max(res0, std::max(res1, res2));
    lc.scale = std::max({std::abs(lc.A), std::abs(lc.B), std::abs(c2)});
    return lc;
}

enum class Nondegeneracy { Nondegenerate, DegenerateA, BVanishing };

inline const char* to_string(Nondegeneracy c) {
    switch (c) {
        case Nondegeneracy::Nondegenerate: return "nondegenerate";
        case Nondegeneracy::DegenerateA: return "degenerate-A";
        case Nondegeneracy::BVanishing: return "B-vanishing";
    }
    return "?";
}

/// nondegenerate iff |A| < tol*scale and |B| > tol*scale.
inline Nondegeneracy classify_nondegenerate(const LeadingCoefficients& lc, double tol = 1e-6) {
    const double s = lc.scale > 0 ? lc.scale : 1.0;
    if (std::abs(lc.A) >= tol * s) return Nondegeneracy::DegenerateA;
    if (std::abs(lc.B) <= tol * s) return Nondegeneracy::BVanishing;
    return Nondegeneracy::Nondegenerate;
}

/// The local family: graph of d( t * (2/(2k+1)) Re z^{k+1/2} ) over the
/// z-plane in the adapted C^2 structure, which lands on w = t z^{k - 1/2}.
struct MultivaluedGraph {
    int k = 1;
    double t = 0;
    std::vector<Complex> z, w;       // graph samples along the double cover
    double variety_defect = 0;       // sup |w^2 - t^2 z^{2k-1}|
    bool singular_at_origin = false; // k >= 2
    bool unbounded_gradient = false; // k == 0
};

inline MultivaluedGraph graph_of_multivalued(int k, double t, const RadialGrid& grid,
                                             int n_theta = 64) {
    if (k < 0 || k > 3) throw ArgumentError("graph_of_multivalued: need k in {0,..,3}");
    if (!(t > 0)) throw ArgumentError("graph_of_multivalued: need t > 0");
    MultivaluedGraph out;
    out.k = k;
    out.t = t;
    out.singular_at_origin = (k >= 2);
    out.unbounded_gradient = (k == 0);
    for (std::size_t i = 0; i < grid.size(); ++i)
        for (int m = 0; m < n_theta; ++m) {
            const double th = 4.0 * kPi * m / n_theta; // double cover angle
            const Complex z = std::polar(grid.r[i], th);
            const Complex w = t * std::pow(grid.r[i], k - 0.5) *
                              std::exp(Complex(0, (k - 0.5) * th));
            out.z.push_back(z);
            out.w.push_back(w);
            const Complex z_down = std::polar(grid.r[i], th); // z is single valued
            out.variety_defect = std::max(
                out.variety_defect,
                std::abs(w * w - t * t * std::pow(z_down, 2 * k - 1)));
        }
    return out;
}

} // namespace slag
