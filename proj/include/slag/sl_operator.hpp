#pragma once

// The graph special-Lagrangian residual: elementary symmetric polynomials of
// the derivative tensor, Im det(I + i Hess f), the pseudo-residual
// -d*alpha + P(grad alpha) on flat / conformally-flat metrics, and the
// even/odd splitting of two-valued fields on the double-cover angular domain.

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "slag/errors.hpp"
#include "slag/torus_grid.hpp"
#include "slag/util.hpp"

namespace slag {

/// Coefficients P_0..P_n with det(I + tH) = sum_k P_k(H) t^k.
inline std::vector<double> elementary_symmetric_all(const Eigen::MatrixXd& H) {
    const int n = static_cast<int>(H.rows());
    if (n != H.cols()) throw ArgumentError("elementary_symmetric: matrix not square");
    if (n > 8) throw ArgumentError("elementary_symmetric: n > 8 unsupported");
    if ((H - H.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, H.cwiseAbs().maxCoeff()))
        throw ArgumentError("elementary_symmetric: matrix not symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H, Eigen::EigenvaluesOnly);
    const Eigen::VectorXd lam = es.eigenvalues();
    std::vector<double> c(n + 1, 0.0);
    c[0] = 1.0;
    for (int i = 0; i < n; ++i)
        for (int k = i + 1; k >= 1; --k) c[k] += lam[i] * c[k - 1];
    return c;
}

inline double elementary_symmetric(const Eigen::MatrixXd& H, int k) {
    const int n = static_cast<int>(H.rows());
    if (k < 0 || k > n) throw ArgumentError("elementary_symmetric: need 0 <= k <= n");
    return elementary_symmetric_all(H)[static_cast<std::size_t>(k)];
}

/// Im det(I + iH) = P_1 - P_3 + P_5 - ... for symmetric H.
inline double im_det_I_plus_iH(const Eigen::MatrixXd& H) {
    const auto P = elementary_symmetric_all(H);
    double s = 0.0, sign = 1.0;
    for (std::size_t k = 1; k < P.size(); k += 2) {
        s += sign * P[k];
        sign = -sign;
    }
    return s;
}

/// The nonlinearity beyond the linear term: -P_3 + P_5 - P_7 + ...
inline double odd_symmetric_tail(const Eigen::MatrixXd& H) {
    const auto P = elementary_symmetric_all(H);
    double s = 0.0, sign = -1.0;
    for (std::size_t k = 3; k < P.size(); k += 2) {
        s += sign * P[k];
        sign = -sign;
    }
    return s;
}

/// Pointwise Im det(I + i Hess f) for a scalar field sampled on a flat torus,
/// Hessians by spectral differentiation.
inline std::vector<double> sl_residual_cn(const TorusGrid& g, const std::vector<double>& f) {
    const int d = g.dim();
    std::vector<std::vector<double>> hess(static_cast<std::size_t>(d * d));
    for (int a = 0; a < d; ++a) {
        auto da = spectral_derivative(g, f, a);
        for (int b = a; b < d; ++b) hess[a * d + b] = spectral_derivative(g, da, b);
    }
    std::vector<double> res(g.total());
    Eigen::MatrixXd H(d, d);
    for (std::size_t i = 0; i < g.total(); ++i) {
        for (int a = 0; a < d; ++a)
            for (int b = a; b < d; ++b) {
                H(a, b) = hess[a * d + b][i];
                H(b, a) = H(a, b);
            }
        res[i] = im_det_I_plus_iH(H);
    }
    return res;
}

/// Pointwise Im det(I + i H) from supplied Hessian samples.
inline std::vector<double> sl_residual_from_hessians(const std::vector<Eigen::MatrixXd>& hs) {
    std::vector<double> res;
    res.reserve(hs.size());
    for (const auto& H : hs) res.push_back(im_det_I_plus_iH(H));
    return res;
}

/// Conformally-flat metric g = e^{2 psi} * delta with analytic psi.
/// psi == nullptr means the flat metric.
struct ConformalMetric {
    int n = 3;
    std::function<double(const Eigen::VectorXd&)> psi;             // conformal exponent
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> dpsi;   // gradient
    std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> d2psi;  // Hessian (unused by pSL)

    bool flat() const { return !psi; }

    static ConformalMetric make_flat(int n) {
        ConformalMetric m;
        m.n = n;
        return m;
    }
};

/// Value and first derivatives of a 1-form at a point: d_alpha(j,k) = d_j alpha_k.
struct OneFormJet {
    Eigen::VectorXd alpha;
    Eigen::MatrixXd d_alpha;
};

/// The derivative endomorphism H^i_j = g^{ik} (nabla alpha)(d_j, d_k) of a
/// closed 1-form on a conformally-flat metric; symmetric as a matrix.
inline Eigen::MatrixXd derivative_endomorphism(const ConformalMetric& m,
                                               const Eigen::VectorXd& x, const OneFormJet& jet,
                                               double* curl_out = nullptr) {
    const int n = m.n;
    Eigen::MatrixXd nabla = jet.d_alpha; // nabla_j alpha_k = d_j alpha_k - Gamma^l_{jk} alpha_l
    if (!m.flat()) {
        const Eigen::VectorXd dp = m.dpsi(x);
        const double pdot = dp.dot(jet.alpha);
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) {
                double gamma = jet.alpha[j] * dp[k] + jet.alpha[k] * dp[j];
                if (j == k) gamma -= pdot;
                nabla(j, k) -= gamma;
            }
    }
    if (curl_out) {
        double c = 0;
        for (int j = 0; j < n; ++j)
            for (int k = j + 1; k < n; ++k) c = std::max(c, std::abs(nabla(j, k) - nabla(k, j)));
        *curl_out = c;
    }
    Eigen::MatrixXd H = 0.5 * (nabla + nabla.transpose());
    if (!m.flat()) H *= std::exp(-2.0 * m.psi(x));
    return H;
}

/// pSL(alpha) = -d*alpha + P(grad alpha) = P_1(H) - P_3(H) + P_5(H) - ...
/// evaluated from a 1-form jet at one point. Gate: closedness (curl of the
/// covariant derivative) below curl_tol.
inline double psl_residual_at(const ConformalMetric& m, const Eigen::VectorXd& x,
                              const OneFormJet& jet, double curl_tol = 1e-8,
                              double curl_scale = 1.0) {
    double curl = 0;
    const Eigen::MatrixXd H = derivative_endomorphism(m, x, jet, &curl);
    if (curl > curl_tol * std::max(1.0, curl_scale))
        throw DiagnosticError("psl_residual: 1-form not closed", curl);
    return im_det_I_plus_iH(H);
}

/// Even/odd split of a two-valued sample set over theta in [0, 4 pi).
/// plus(theta) = (v(theta) + v(theta + 2 pi))/2 on theta in [0, 2 pi),
/// minus likewise with a minus sign; plus + minus reconstructs the input.
struct SplitField {
    std::vector<double> plus;   // first half of the angular grid
    std::vector<double> minus;  // first half of the angular grid
};

/// values laid out as [slot][itheta] flattened with n_theta contiguous;
/// n_theta must be even and cover the full double period [0, 4 pi).
inline SplitField split_residual(const std::vector<double>& values, std::size_t n_slots,
                                 std::size_t n_theta, bool full_double_period = true) {
    if (!full_double_period || n_theta % 2 != 0)
        throw ArgumentError("split_residual: domain must be a full double period");
    if (values.size() != n_slots * n_theta) throw ArgumentError("split_residual: size mismatch");
    const std::size_t half = n_theta / 2;
    SplitField out;
    out.plus.resize(n_slots * half);
    out.minus.resize(n_slots * half);
    for (std::size_t s = 0; s < n_slots; ++s)
        for (std::size_t i = 0; i < half; ++i) {
            const double a = values[s * n_theta + i];
            const double b = values[s * n_theta + i + half];
            out.plus[s * half + i] = 0.5 * (a + b);
            out.minus[s * half + i] = 0.5 * (a - b);
        }
    return out;
}

} // namespace slag
