#pragma once

// Flat (constant-coefficient) Calabi-Yau model structures on R^{2n} and
// pullbacks of omega / Im(Omega) / Re(Omega) under sampled immersions.

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "slag/forms.hpp"
#include "slag/util.hpp"

namespace slag {

struct FlatCYStructure {
    int n = 0;                 // complex dimension; ambient real dimension is 2n
    std::string name;          // "standard-Cn" or "c2-hk"
    Eigen::MatrixXd metric;    // constant metric, 2n x 2n
    Eigen::MatrixXd J;         // complex structure, 2n x 2n
    AltForm omega;             // real 2-form
    AltForm Omega;             // complex n-form
    AltForm im_Omega;          // Im(Omega)
    AltForm re_Omega;          // Re(Omega)

    /// sup over basis pairs of |omega(u,v) - g(Ju,v)|.
    double compatibility_defect() const {
        const int m = 2 * n;
        double worst = 0;
        Eigen::MatrixXd frame(m, 2);
        for (int a = 0; a < m; ++a)
            for (int b = 0; b < m; ++b) {
                frame.setZero();
                frame(a, 0) = 1;
                frame(b, 1) = 1;
                const double w = omega.eval(frame).real();
                const double gj = (J.col(a).transpose() * metric * Eigen::VectorXd::Unit(m, b))(0);
                worst = std::max(worst, std::abs(w - gj));
            }
        return worst;
    }

    /// Residual of omega^n/n! = (-1)^{n(n-1)/2} (i/2)^n Omega ^ conj(Omega).
    double normalization_defect() const {
        AltForm lhs = omega;
        double factorial = 1;
        for (int k = 2; k <= n; ++k) {
            lhs = lhs.wedge(omega);
            factorial *= k;
        }
        lhs = lhs * Complex(1.0 / factorial, 0);
        const int s = (n * (n - 1) / 2) % 2 ? -1 : 1;
        AltForm rhs = Omega.wedge(Omega.conj()) * (std::pow(Complex(0, 0.5), n) * double(s));
        return (lhs - rhs).max_abs_coeff();
    }
};

/// Standard flat structure on C^n: ambient coordinates (x_1..x_n, y_1..y_n).
inline FlatCYStructure make_flat_structure(int n) {
    if (n < 1 || n > 4) throw ArgumentError("make_flat_structure: need 1 <= n <= 4");
    FlatCYStructure s;
    s.n = n;
    s.name = "standard-Cn";
    const int m = 2 * n;
    s.metric = Eigen::MatrixXd::Identity(m, m);
    s.J = Eigen::MatrixXd::Zero(m, m);
    for (int i = 0; i < n; ++i) {
        s.J(n + i, i) = 1;  // J dx_i = dy_i direction: J(e_xi) = e_yi
        s.J(i, n + i) = -1; // J(e_yi) = -e_xi
    }
    s.omega = AltForm(m, 2);
    for (int i = 0; i < n; ++i) s.omega.set({i, n + i}, 1.0);
    // Omega = (dx_1 + i dy_1) ^ ... ^ (dx_n + i dy_n)
    AltForm Om = AltForm::basis(m, {0}) + AltForm::basis(m, {n}) * Complex(0, 1);
    for (int i = 1; i < n; ++i) {
        AltForm dz = AltForm::basis(m, {i}) + AltForm::basis(m, {n + i}) * Complex(0, 1);
        Om = Om.wedge(dz);
    }
    s.Omega = Om;
    s.im_Omega = Om.imag();
    s.re_Omega = Om.real();
    return s;
}

/// The C^2 structure adapted to the holomorphic-curve picture, coordinates
/// (x1, x2, y1, y2) with z = x1 + i y1, w = x2 + i y2:
///   omega = dx1^dx2 - dy1^dy2,
///   Im(Omega) = dx1^dy2 + dy1^dx2,
///   Re(Omega) = -dx1^dy1 - dx2^dy2.
/// A surface is special Lagrangian for this structure exactly when dz^dw
/// restricts to zero, i.e. when it is a holomorphic curve in (z, w).
inline FlatCYStructure make_c2_hk_structure() {
    FlatCYStructure s;
    s.n = 2;
    s.name = "c2-hk";
    const int m = 4;
    const int x1 = 0, x2 = 1, y1 = 2, y2 = 3;
    s.metric = Eigen::MatrixXd::Identity(m, m);
    s.J = Eigen::MatrixXd::Zero(m, m);
    s.J(x2, x1) = 1;  // J(dx1-dir) = dx2-dir
    s.J(x1, x2) = -1;
    s.J(y2, y1) = -1; // J(dy1-dir) = -dy2-dir
    s.J(y1, y2) = 1;
    s.omega = AltForm(m, 2);
    s.omega.set({x1, x2}, 1.0);
    s.omega.set({y1, y2}, -1.0);
    AltForm im(m, 2), re(m, 2);
    im.set({x1, y2}, 1.0);
    im.set({y1, x2}, 1.0);
    re.set({x1, y1}, -1.0);
    re.set({x2, y2}, -1.0);
    s.im_Omega = im;
    s.re_Omega = re;
    s.Omega = re + im * Complex(0, 1);
    return s;
}

/// dz ^ dw as a complex 2-form in the c2-hk coordinates; equals
/// omega + i Im(Omega) for the displayed structure.
inline AltForm c2_dz_wedge_dw() {
    const int m = 4;
    const int x1 = 0, x2 = 1, y1 = 2, y2 = 3;
    AltForm dz = AltForm::basis(m, {x1}) + AltForm::basis(m, {y1}) * Complex(0, 1);
    AltForm dw = AltForm::basis(m, {x2}) + AltForm::basis(m, {y2}) * Complex(0, 1);
    return dz.wedge(dw);
}

enum class ImmersionKind { GraphOfOneForm, ParametricCurve };

/// A sampled immersion of a d-dimensional parameter domain into R^{2n}:
/// values plus first (and optionally second) derivative samples.
struct Immersion {
    ImmersionKind kind = ImmersionKind::GraphOfOneForm;
    int d = 0;           // domain dimension
    int ambient = 0;     // 2n
    std::vector<Eigen::VectorXd> params;              // parameter coordinates
    std::vector<Eigen::MatrixXd> jac;                 // ambient x d per point
    std::vector<std::vector<Eigen::MatrixXd>> hess;   // per point, per ambient coord: d x d
    std::vector<Eigen::VectorXd> values;

    bool has_second() const { return !hess.empty(); }
    std::size_t size() const { return params.size(); }

    Eigen::MatrixXd induced_metric(std::size_t i) const {
        return jac[i].transpose() * jac[i];
    }
};

/// Build an immersion from analytic jets.
inline Immersion immersion_from_jets(
    ImmersionKind kind, int d, int ambient, const std::vector<Eigen::VectorXd>& pts,
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& value,
    const std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>& jacobian,
    const std::function<std::vector<Eigen::MatrixXd>(const Eigen::VectorXd&)>& hessian = nullptr) {
    Immersion im;
    im.kind = kind;
    im.d = d;
    im.ambient = ambient;
    im.params = pts;
    im.values.reserve(pts.size());
    im.jac.reserve(pts.size());
    for (const auto& p : pts) {
        im.values.push_back(value(p));
        im.jac.push_back(jacobian(p));
        if (hessian) im.hess.push_back(hessian(p));
    }
    return im;
}

struct PullbackValues {
    // per point: sup over coordinate pairs |iota* omega (e_a, e_b)|
    std::vector<double> omega_sup;
    // per point: top-degree component of iota* Im(Omega), iota* Re(Omega)
    std::vector<double> im_Omega;
    std::vector<double> re_Omega;
    // per point: coordinate volume density sqrt(det g_induced)
    std::vector<double> volume;

    double max_omega() const {
        double m = 0;
        for (double v : omega_sup) m = std::max(m, std::abs(v));
        return m;
    }
    double max_im_Omega() const {
        double m = 0;
        for (double v : im_Omega) m = std::max(m, std::abs(v));
        return m;
    }
};

/// Pull a constant k-form back to the immersion's domain at one point; returns
/// the components over all sorted k-subsets of domain directions.
inline std::vector<Complex> pullback_form(const AltForm& form, const Immersion& im,
                                          std::size_t i) {
    if (form.degree() > im.d)
        throw ArgumentError("pullback_form: form degree " + std::to_string(form.degree()) +
                            " exceeds domain dimension " + std::to_string(im.d));
    if (form.dim() != im.ambient) throw ArgumentError("pullback_form: ambient dimension mismatch");
    const auto subsets = detail::combinations(im.d, form.degree());
    std::vector<Complex> comps;
    comps.reserve(subsets.size());
    Eigen::MatrixXd frame(im.ambient, form.degree());
    for (const auto& ss : subsets) {
        for (int c = 0; c < form.degree(); ++c) frame.col(c) = im.jac[i].col(ss[c]);
        comps.push_back(form.eval(frame));
    }
    return comps;
}

/// Evaluate iota*omega, iota*Im(Omega), iota*Re(Omega) at every sample point.
/// Requires im.d == n (Lagrangian candidates).
inline PullbackValues pullback_forms(const FlatCYStructure& S, const Immersion& im) {
    if (im.d != S.n)
        throw ArgumentError("pullback_forms: domain dimension " + std::to_string(im.d) +
                            " != complex dimension " + std::to_string(S.n));
    if (im.jac.empty()) throw StateError("pullback_forms: immersion has no derivative samples");
    PullbackValues out;
    out.omega_sup.reserve(im.size());
    out.im_Omega.reserve(im.size());
    out.re_Omega.reserve(im.size());
    out.volume.reserve(im.size());
    for (std::size_t i = 0; i < im.size(); ++i) {
        const auto w = pullback_form(S.omega, im, i);
        double sup = 0;
        for (const auto& c : w) sup = std::max(sup, std::abs(c));
        out.omega_sup.push_back(sup);
        out.im_Omega.push_back(pullback_form(S.im_Omega, im, i)[0].real());
        out.re_Omega.push_back(pullback_form(S.re_Omega, im, i)[0].real());
        out.volume.push_back(std::sqrt(std::max(0.0, im.induced_metric(i).determinant())));
    }
    return out;
}

/// Lagrangian angle theta in (-pi, pi] with iota*Omega = e^{i theta} * volume.
/// Gate: sup |iota*omega| <= lag_tol, else DiagnosticError carrying the sup.
inline std::vector<double> lagrangian_angle(const FlatCYStructure& S, const Immersion& im,
                                            double lag_tol = 1e-8) {
    const PullbackValues pv = pullback_forms(S, im);
    const double gate = pv.max_omega();
    if (gate > lag_tol)
        throw DiagnosticError("lagrangian_angle: input not Lagrangian within tolerance", gate);
    std::vector<double> theta;
    theta.reserve(im.size());
    for (std::size_t i = 0; i < im.size(); ++i) {
        Eigen::MatrixXd frame = im.jac[i];
        const Complex om = S.Omega.eval(frame);
        theta.push_back(std::atan2(om.imag(), om.real()));
    }
    return theta;
}

/// Discrete closedness defect of a sampled 1-form on a uniform grid is
/// checked where graphs are constructed; here we expose the angle identity
/// oracle for graphs over flat R^n: e^{i theta} = det(I + i H)/|det(I + i H)|.
inline Complex graph_phase_from_hessian(const Eigen::MatrixXd& hess) {
    const int n = static_cast<int>(hess.rows());
    Eigen::MatrixXcd A = Eigen::MatrixXcd::Identity(n, n) + Complex(0, 1) * hess;
    const Complex det = A.determinant();
    return det / std::abs(det);
}

} // namespace slag
