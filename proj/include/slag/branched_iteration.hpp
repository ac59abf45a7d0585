#pragma once

// Order-by-order approximate-deformation algorithm on the local branched
// model: extract the leading t-order of the residual, solve the +/-
// correction equations (3-D: half-integer angular modes x axial
// Sturm-Liouville modes x radial solves), compute the singular-set shift
// v = -2a/(3 B1), assemble the corrected pair, and verify the residual
// order ladder under the associated metric flows.
//
// Model: annulus x circle, metric e^{2 psi(x3)} * flat with psi = eps sin x3;
// pair = twisted d Re(B1 z^{3/2}) plus an untwisted harmonic part. On this
// metric both parts are harmonic and the residual is exactly cubic in t.

#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "slag/asymptotics.hpp"
#include "slag/sl_operator.hpp"
#include "slag/util.hpp"
#include "slag/z2_model.hpp"

namespace slag {

// ---------------------------------------------------------------------------
// Model
// ---------------------------------------------------------------------------

struct BranchedModel {
    double R = 1.0;        // disk radius of the annulus factor
    double eps = 0.3;      // conformal exponent amplitude: psi = eps sin(x3)
    double B1 = 1.0;       // leading coefficient of the twisted part
    double kappa = 0.5;    // untwisted z-harmonic part: kappa Re z^2
    double c3 = 0.75;      // axial part: c3 e^{-psi} dx3 (conformal model)
    double cexp = 0.0;     // flat-model 3D part: cexp e^{x1} cos x3

    double psi(double x3) const { return eps * std::sin(x3); }
    double dpsi(double x3) const { return eps * std::cos(x3); }
    double d2psi(double x3) const { return -eps * std::sin(x3); }

    ConformalMetric metric() const {
        ConformalMetric m;
        m.n = 3;
        if (eps != 0.0) {
            const double e = eps;
            m.psi = [e](const Eigen::VectorXd& x) { return e * std::sin(x[2]); };
            m.dpsi = [e](const Eigen::VectorXd& x) {
                Eigen::VectorXd g = Eigen::VectorXd::Zero(3);
                g[2] = e * std::cos(x[2]);
                return g;
            };
            m.d2psi = [e](const Eigen::VectorXd& x) {
                Eigen::MatrixXd h = Eigen::MatrixXd::Zero(3, 3);
                h(2, 2) = -e * std::sin(x[2]);
                return h;
            };
        }
        return m;
    }

    static BranchedModel conformal_c3() { return BranchedModel{}; }
    static BranchedModel flat_c3() {
        BranchedModel m;
        m.eps = 0.0;
        m.c3 = 0.0;
        m.cexp = 0.4;
        return m;
    }
};

// ---------------------------------------------------------------------------
// Potential pieces with full second-order jets
// ---------------------------------------------------------------------------

struct PotJet {
    double value = 0;
    Eigen::Vector3d grad = Eigen::Vector3d::Zero();
    Eigen::Matrix3d hess = Eigen::Matrix3d::Zero();
};

/// A scalar potential piece on the cover; twisted pieces read the cover
/// angle theta in [0, 4 pi), untwisted pieces only theta mod 2 pi.
class PotentialPiece {
public:
    virtual ~PotentialPiece() = default;
    virtual PotJet jet(double r, double theta, double x3) const = 0;
    virtual bool twisted() const { return false; }
};

namespace detail_pieces {

/// value/gradient/Hessian of Re(c z^a) in Cartesian z-plane coordinates,
/// z evaluated on the cover.
inline PotJet holomorphic_monomial(Complex c, double a, double r, double theta) {
    PotJet j;
    const Complex za = std::pow(r, a) * std::exp(Complex(0, a * theta));
    const Complex za1 = (a != 0.0) ? std::pow(r, a - 1) * std::exp(Complex(0, (a - 1) * theta))
                                   : Complex(0, 0);
    const Complex za2 = (a != 0.0 && a != 1.0)
                            ? std::pow(r, a - 2) * std::exp(Complex(0, (a - 2) * theta))
                            : Complex(0, 0);
    j.value = (c * za).real();
    const Complex d1 = c * a * za1;
    j.grad[0] = d1.real();
    j.grad[1] = -d1.imag();
    const Complex d2 = c * a * (a - 1) * za2;
    j.hess(0, 0) = d2.real();
    j.hess(0, 1) = j.hess(1, 0) = -d2.imag();
    j.hess(1, 1) = -d2.real();
    return j;
}

} // namespace detail_pieces

/// Re(c z^a); twisted when a is a half-integer.
class MonomialPot : public PotentialPiece {
public:
    MonomialPot(Complex c, double a) : c_(c), a_(a) {}
    PotJet jet(double r, double theta, double) const override {
        return detail_pieces::holomorphic_monomial(c_, a_, r, theta);
    }
    bool twisted() const override { return std::abs(a_ - std::round(a_)) > 0.25; }

private:
    Complex c_;
    double a_;
};

/// c * e^{x1} cos(x3): a 3-D harmonic potential for the flat model.
class ExpCosPot : public PotentialPiece {
public:
    explicit ExpCosPot(double c) : c_(c) {}
    PotJet jet(double r, double theta, double x3) const override {
        PotJet j;
        const double x1 = r * std::cos(theta);
        const double e = c_ * std::exp(x1);
        const double cc = std::cos(x3), ss = std::sin(x3);
        j.value = e * cc;
        j.grad[0] = e * cc;
        j.grad[2] = -e * ss;
        j.hess(0, 0) = e * cc;
        j.hess(0, 2) = j.hess(2, 0) = -e * ss;
        j.hess(2, 2) = -e * cc;
        return j;
    }

private:
    double c_;
};

/// Periodic coefficient function of x3, stored as a complex Fourier series.
struct FourierX3 {
    std::vector<Complex> coeff; // c_m for m in freq order 0, 1, -1, 2, -2, ...
    std::vector<int> freq;

    static FourierX3 from_samples(const std::vector<Complex>& samples) {
        const int n = static_cast<int>(samples.size());
        FourierX3 f;
        for (int m = -(n / 2 - 1); m <= n / 2 - 1; ++m) {
            Complex acc(0, 0);
            for (int i = 0; i < n; ++i)
                acc += samples[i] * std::exp(Complex(0, -m * (2.0 * kPi * i / n)));
            acc /= double(n);
            if (std::abs(acc) > 1e-14) {
                f.freq.push_back(m);
                f.coeff.push_back(acc);
            }
        }
        return f;
    }

    Complex eval(double x3, int deriv = 0) const {
        Complex v(0, 0);
        for (std::size_t i = 0; i < freq.size(); ++i) {
            Complex c = coeff[i];
            for (int d = 0; d < deriv; ++d) c *= Complex(0, freq[i]);
            v += c * std::exp(Complex(0, freq[i] * x3));
        }
        return v;
    }
};

/// chi(r) * Re(C(x3) z^b): the extension of a directional derivative of the
/// leading twisted/untwisted monomials along a normal-bundle section.
class CutoffHoloPot : public PotentialPiece {
public:
    CutoffHoloPot(FourierX3 C, double b, RadialCutoff chi) : C_(std::move(C)), b_(b), chi_(chi) {}

    PotJet jet(double r, double theta, double x3) const override {
        // W = Re(C(x3) z^b); f = chi(r) W
        const Complex C0 = C_.eval(x3), C1 = C_.eval(x3, 1), C2 = C_.eval(x3, 2);
        PotJet W = detail_pieces::holomorphic_monomial(C0, b_, r, theta);
        PotJet W3 = detail_pieces::holomorphic_monomial(C1, b_, r, theta);  // d/dx3
        PotJet W33 = detail_pieces::holomorphic_monomial(C2, b_, r, theta); // d2/dx3^2
        const double ch = chi_(r), ch1 = chi_.d1(r), ch2 = chi_.d2(r);
        const double x1 = r * std::cos(theta), x2 = r * std::sin(theta);
        Eigen::Vector3d dr(x1 / r, x2 / r, 0.0);
        Eigen::Matrix3d d2r = Eigen::Matrix3d::Zero();
        d2r(0, 0) = (1.0 - dr[0] * dr[0]) / r;
        d2r(0, 1) = d2r(1, 0) = -dr[0] * dr[1] / r;
        d2r(1, 1) = (1.0 - dr[1] * dr[1]) / r;
        PotJet j;
        j.value = ch * W.value;
        Eigen::Vector3d gradW = W.grad;
        gradW[2] = W3.value;
        j.grad = ch1 * W.value * dr + ch * gradW;
        Eigen::Matrix3d HW = W.hess;
        HW(0, 2) = HW(2, 0) = W3.grad[0];
        HW(1, 2) = HW(2, 1) = W3.grad[1];
        HW(2, 2) = W33.value;
        j.hess = ch2 * W.value * dr * dr.transpose() + ch1 * W.value * d2r +
                 ch1 * (dr * gradW.transpose() + gradW * dr.transpose()) + ch * HW;
        return j;
    }
    bool twisted() const override { return std::abs(b_ - std::round(b_)) > 0.25; }

private:
    FourierX3 C_;
    double b_;
    RadialCutoff chi_;
};

// ---------------------------------------------------------------------------
// Axial 1-form piece u(x3) dx3 (not a global potential; closed, and invariant
// under the z-plane flows used here)
// ---------------------------------------------------------------------------

struct AxialForm {
    double c3 = 0;
    const BranchedModel* model = nullptr;

    double u(double x3) const { return c3 * std::exp(-model->psi(x3)); }
    double du(double x3) const { return -model->dpsi(x3) * u(x3); }
};

// ---------------------------------------------------------------------------
// Numeric mode fields (solver output), radial Hermite interpolation
// ---------------------------------------------------------------------------

/// Mode data per angular index and axial grid point: value, radial
/// derivative, second radial derivative, axial derivative (and its radial
/// derivative), second axial derivative.
class ModeFieldPot : public PotentialPiece {
public:
    ModeFieldPot(RadialGrid grid, int n_modes, int n_x3, bool half_integer)
        : grid_(std::move(grid)), n_modes_(n_modes), n_x3_(n_x3), half_(half_integer) {
        const std::size_t sz = static_cast<std::size_t>(n_modes) * n_x3 * grid_.size();
        G_.assign(sz, Complex(0, 0));
        Gr_.assign(sz, Complex(0, 0));
        Grr_.assign(sz, Complex(0, 0));
        G3_.assign(sz, Complex(0, 0));
        G3r_.assign(sz, Complex(0, 0));
        G33_.assign(sz, Complex(0, 0));
    }

    double nu(int k) const { return half_ ? k + 0.5 : k; }
    int n_modes() const { return n_modes_; }
    int n_x3() const { return n_x3_; }
    const RadialGrid& grid() const { return grid_; }

    std::size_t idx(int k, int m, std::size_t i) const {
        return (static_cast<std::size_t>(k) * n_x3_ + m) * grid_.size() + i;
    }

    std::vector<Complex> G_, Gr_, Grr_, G3_, G3r_, G33_;

    PotJet jet(double r, double theta, double x3) const override {
        // x3 must be on the axial grid
        const double h3 = 2.0 * kPi / n_x3_;
        const int m = static_cast<int>(std::lround(x3 / h3)) % n_x3_;
        // radial bracket
        std::size_t i1 = 1;
        while (i1 + 1 < grid_.size() && grid_.r[i1] < r) ++i1;
        const std::size_t i0 = i1 - 1;
        const double r0 = grid_.r[i0], r1 = grid_.r[i1];
        const double w = (r - r0) / (r1 - r0);
        auto hermite = [&](Complex f0, Complex f1, Complex d0, Complex d1) {
            const double h = r1 - r0;
            const double w2 = w * w, w3 = w2 * w;
            return f0 * (2 * w3 - 3 * w2 + 1) + f1 * (-2 * w3 + 3 * w2) +
                   d0 * h * (w3 - 2 * w2 + w) + d1 * h * (w3 - w2);
        };
        PotJet out;
        for (int k = 0; k < n_modes_; ++k) {
            const std::size_t a = idx(k, m, i0), b = idx(k, m, i1);
            const Complex F = hermite(G_[a], G_[b], Gr_[a], Gr_[b]);
            const Complex Fr = hermite(Gr_[a], Gr_[b], Grr_[a], Grr_[b]);
            // second radial derivative: linear interpolation is enough here
            const Complex Frr = Grr_[a] * (1 - w) + Grr_[b] * w;
            const Complex F3 = hermite(G3_[a], G3_[b], G3r_[a], G3r_[b]);
            const Complex F3r = G3r_[a] * (1 - w) + G3r_[b] * w;
            const Complex F33 = G33_[a] * (1 - w) + G33_[b] * w;
            const double nuk = nu(k);
            const Complex e = std::exp(Complex(0, nuk * theta));
            // f_k(r, theta) = Re(F(r) e^{i nu theta}); convert polar jets to
            // Cartesian. d/dx = c d/dr - s/r d/dth ; d/dy = s d/dr + c/r d/dth
            const double c = std::cos(theta), s = std::sin(theta);
            const Complex iF = Complex(0, nuk) * F;    // d/dtheta
            const Complex iFr = Complex(0, nuk) * Fr;
            const Complex iiF = Complex(0, nuk) * iF;  // d2/dtheta2
            auto Re = [&](const Complex& z) { return (z * e).real(); };
            out.value += Re(F);
            const double fr = Re(Fr), fth = Re(iF);
            out.grad[0] += c * fr - s / r * fth;
            out.grad[1] += s * fr + c / r * fth;
            out.grad[2] += Re(F3);
            const double frr = Re(Frr), frth = Re(iFr), fthth = Re(iiF);
            const double f_xx = c * c * frr - 2 * c * s / r * frth + s * s / (r * r) * fthth +
                                s * s / r * fr + 2 * c * s / (r * r) * fth;
            const double f_yy = s * s * frr + 2 * c * s / r * frth + c * c / (r * r) * fthth +
                                c * c / r * fr - 2 * c * s / (r * r) * fth;
            const double f_xy = c * s * frr + (c * c - s * s) / r * frth -
                                c * s / (r * r) * fthth - c * s / r * fr -
                                (c * c - s * s) / (r * r) * fth;
            out.hess(0, 0) += f_xx;
            out.hess(1, 1) += f_yy;
            out.hess(0, 1) += f_xy;
            out.hess(1, 0) += f_xy;
            const double f3r = Re(F3r), f3th = Re(Complex(0, nuk) * F3);
            out.hess(0, 2) += c * f3r - s / r * f3th;
            out.hess(2, 0) = out.hess(0, 2);
            out.hess(1, 2) += s * f3r + c / r * f3th;
            out.hess(2, 1) = out.hess(1, 2);
            out.hess(2, 2) += Re(F33);
        }
        return out;
    }
    bool twisted() const override { return half_; }

private:
    RadialGrid grid_;
    int n_modes_ = 0, n_x3_ = 0;
    bool half_ = false;
};

// ---------------------------------------------------------------------------
// Flow maps: time-1 flow of tau * chi(|z|) v(x3) d_z with full jets
// ---------------------------------------------------------------------------

struct FlowSpec {
    int t_power = 2;       // flow rate is t^{t_power}
    RadialCutoff chi;
    FourierX3 v;           // complex shift v(x3) in the z-plane
};

struct FlowJet {
    Eigen::Vector3d y = Eigen::Vector3d::Zero();  // image point
    Eigen::Matrix3d J = Eigen::Matrix3d::Identity();
    std::array<Eigen::Matrix3d, 3> H{};           // H[c](a,b) = d2 y_c / dx_a dx_b
};

namespace detail_flow {

/// RK4 integration of the flow with first and second variational equations.
inline FlowJet integrate(const FlowSpec& spec, double tau, const Eigen::Vector3d& x0,
                         int steps = 32) {
    FlowJet st;
    st.y = x0;
    for (auto& h : st.H) h.setZero();
    const double x3 = x0[2];
    const Complex v = spec.v.eval(x3), v1 = spec.v.eval(x3, 1), v2 = spec.v.eval(x3, 2);

    struct Deriv {
        Eigen::Vector3d dy;
        Eigen::Matrix3d dJ;
        std::array<Eigen::Matrix3d, 3> dH;
    };
    auto field = [&](const FlowJet& s) -> Deriv {
        Deriv d;
        const double zx = s.y[0], zy = s.y[1];
        const double r = std::sqrt(zx * zx + zy * zy);
        const double ch = spec.chi(r), ch1 = spec.chi.d1(r), ch2 = spec.chi.d2(r);
        const Eigen::Vector2d u(v.real(), v.imag());
        const Eigen::Vector2d u1(v1.real(), v1.imag());
        const Eigen::Vector2d u2(v2.real(), v2.imag());
        Eigen::Vector2d rp = Eigen::Vector2d::Zero();
        Eigen::Matrix2d rpp = Eigen::Matrix2d::Zero();
        if (r > 1e-300) {
            rp << zx / r, zy / r;
            rpp = (Eigen::Matrix2d::Identity() - rp * rp.transpose()) / r;
        }
        // W(y) = tau * chi(r(y)) u(x3(y)), third component zero; x3 = y[2]
        d.dy.setZero();
        d.dy.head<2>() = tau * ch * u;
        // A = DW: A(c, a)
        Eigen::Matrix3d A = Eigen::Matrix3d::Zero();
        for (int c = 0; c < 2; ++c) {
            A(c, 0) = tau * ch1 * rp[0] * u[c];
            A(c, 1) = tau * ch1 * rp[1] * u[c];
            A(c, 2) = tau * ch * u1[c];
        }
        d.dJ = A * s.J;
        // D2W[c](a,b)
        std::array<Eigen::Matrix3d, 3> D2{};
        for (auto& m : D2) m.setZero();
        for (int c = 0; c < 2; ++c) {
            for (int a = 0; a < 2; ++a)
                for (int b = 0; b < 2; ++b)
                    D2[c](a, b) = tau * u[c] * (ch2 * rp[a] * rp[b] + ch1 * rpp(a, b));
            for (int a = 0; a < 2; ++a) {
                D2[c](a, 2) = tau * ch1 * rp[a] * u1[c];
                D2[c](2, a) = D2[c](a, 2);
            }
            D2[c](2, 2) = tau * ch * u2[c];
        }
        for (int c = 0; c < 3; ++c) {
            Eigen::Matrix3d term = Eigen::Matrix3d::Zero();
            if (c < 2) term = s.J.transpose() * D2[c] * s.J;
            for (int e = 0; e < 3; ++e) term += A(c, e) * s.H[e];
            d.dH[c] = term;
        }
        return d;
    };
    auto advance = [&](const FlowJet& s, const Deriv& d, double h) {
        FlowJet t = s;
        t.y += h * d.dy;
        t.J += h * d.dJ;
        for (int c = 0; c < 3; ++c) t.H[c] += h * d.dH[c];
        return t;
    };
    const double h = 1.0 / steps;
    for (int i = 0; i < steps; ++i) {
        const Deriv k1 = field(st);
        const Deriv k2 = field(advance(st, k1, h / 2));
        const Deriv k3 = field(advance(st, k2, h / 2));
        const Deriv k4 = field(advance(st, k3, h));
        FlowJet nx = st;
        nx.y += (h / 6.0) * (k1.dy + 2 * k2.dy + 2 * k3.dy + k4.dy);
        nx.J += (h / 6.0) * (k1.dJ + 2 * k2.dJ + 2 * k3.dJ + k4.dJ);
        for (int c = 0; c < 3; ++c)
            nx.H[c] += (h / 6.0) * (k1.dH[c] + 2 * k2.dH[c] + 2 * k3.dH[c] + k4.dH[c]);
        st = nx;
    }
    return st;
}

} // namespace detail_flow

/// Jets of the time-1 flow of t^{power} chi v; shortcuts for the regions
/// where the field vanishes or is a plain translation.
inline FlowJet flow_jet(const FlowSpec& spec, double t, const Eigen::Vector3d& x) {
    double tau = 1.0;
    for (int i = 0; i < spec.t_power; ++i) tau *= t;
    const double r = std::hypot(x[0], x[1]);
    const Complex v = spec.v.eval(x[2]);
    const double vmax = [&] {
        double m = 0;
        for (const auto& c : spec.v.coeff) m += std::abs(c);
        return m;
    }();
    FlowJet out;
    if (r >= spec.chi.r_out + 1e-12) {
        out.y = x; // field vanishes along the whole trajectory
        return out;
    }
    if (r + std::abs(tau) * vmax < spec.chi.r_in) {
        // chi == 1: exact translation z -> z + tau v(x3)
        out.y = x;
        out.y[0] += tau * v.real();
        out.y[1] += tau * v.imag();
        const Complex v1 = spec.v.eval(x[2], 1), v2 = spec.v.eval(x[2], 2);
        out.J(0, 2) = tau * v1.real();
        out.J(1, 2) = tau * v1.imag();
        out.H[0](2, 2) = tau * v2.real();
        out.H[1](2, 2) = tau * v2.imag();
        return out;
    }
    return detail_flow::integrate(spec, tau, x);
}

// ---------------------------------------------------------------------------
// Axial Sturm-Liouville eigenbasis of e^{-psi} d3 (e^{psi} d3 .)
// ---------------------------------------------------------------------------

/// Diagonalizes the axial part of the conformal Laplacian exactly on the
/// band-limited grid, through the symmetrizing substitution w = e^{psi/2} u:
/// the conjugated operator is d3^2 - q with q = (psi')^2/4 + psi''/2.
struct AxialBasis {
    int n = 0;
    std::vector<double> mu;              // eigenvalues >= 0 of -A3
    std::vector<std::vector<double>> u;  // eigenfunctions on the grid
    std::vector<std::vector<double>> u1; // first derivatives
    std::vector<std::vector<double>> u2; // second derivatives
    std::vector<double> weight;          // e^{psi} at grid points

    static AxialBasis build(const BranchedModel& model, int n) {
        AxialBasis B;
        B.n = n;
        const double h = 2.0 * kPi / n;
        Eigen::MatrixXd D = Eigen::MatrixXd::Zero(n, n);
        // spectral differentiation matrix (standard even-n periodic form)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                if (i == j) continue;
                const int d = i - j;
                D(i, j) = 0.5 * std::pow(-1.0, d) / std::tan(0.5 * h * d);
            }
        Eigen::MatrixXd S = D * D;
        for (int i = 0; i < n; ++i) {
            const double x3 = i * h;
            const double dp = model.dpsi(x3), d2p = model.d2psi(x3);
            S(i, i) -= 0.25 * dp * dp + 0.5 * d2p;
        }
        S = 0.5 * (S + S.transpose());
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
        B.mu.resize(n);
        B.u.assign(n, std::vector<double>(n));
        B.u1.assign(n, std::vector<double>(n));
        B.u2.assign(n, std::vector<double>(n));
        B.weight.resize(n);
        for (int i = 0; i < n; ++i) B.weight[i] = std::exp(model.psi(i * h));
        // eigenvalues of S are -mu (descending after negation)
        for (int j = 0; j < n; ++j) {
            const int col = n - 1 - j; // largest eigenvalue of S first => smallest mu
            B.mu[j] = std::max(0.0, -es.eigenvalues()(col));
            Eigen::VectorXd w = es.eigenvectors().col(col);
            Eigen::VectorXd w1 = D * w;
            for (int i = 0; i < n; ++i) {
                const double x3 = i * h;
                const double em = std::exp(-0.5 * model.psi(x3));
                const double dp = model.dpsi(x3);
                B.u[j][i] = em * w[i];
                B.u1[j][i] = em * (w1[i] - 0.5 * dp * w[i]);
                // from the eigenvalue equation: u'' = -mu u - psi' u'
                B.u2[j][i] = -B.mu[j] * B.u[j][i] - dp * B.u1[j][i];
            }
        }
        return B;
    }

    /// e^{psi}-weighted projection coefficients of samples over the basis.
    std::vector<double> project(const std::vector<double>& samples) const {
        std::vector<double> c(n, 0.0);
        for (int j = 0; j < n; ++j) {
            double num = 0, den = 0;
            for (int i = 0; i < n; ++i) {
                num += weight[i] * samples[i] * u[j][i];
                den += weight[i] * u[j][i] * u[j][i];
            }
            c[j] = num / den;
        }
        return c;
    }
};

// ---------------------------------------------------------------------------
// Pair, iteration state, residual evaluation
// ---------------------------------------------------------------------------

/// One term of the pair: a potential piece entering at a given power of t.
struct PairTerm {
    double t_power = 1;
    std::shared_ptr<PotentialPiece> pot;
};

/// The two-valued pair: potential pieces (twisted flag per piece), the axial
/// 1-form part, branch data and leading coefficients along the branch circle.
struct Pair {
    std::vector<PairTerm> terms;
    AxialForm axial;             // enters at t^1
    double B1 = 1.0;             // leading B of the t-linear twisted part
    double leadingA_abs = 0.0;   // |A| of the assembled pair at reference t
    double leadingB_min = 0.0;   // min |B| along Sigma at reference t
};

struct EvalGrid {
    std::vector<double> radii;
    int n_theta = 64;  // over [0, 4 pi)
    int n_x3 = 32;     // over [0, 2 pi)

    std::size_t total() const { return radii.size() * n_theta * n_x3; }
    double theta(int m) const { return 4.0 * kPi * m / n_theta; }
    double x3(int l) const { return 2.0 * kPi * l / n_x3; }
};

/// The iteration state: current order, pair, composed flows, grids, and the
/// recorded residual history.
struct IterationState {
    BranchedModel model;
    Pair pair;
    std::vector<FlowSpec> flows;     // applied in order: phi = lambda_2 o lambda_3 o ...
    int order = 3;                   // leading t-order of the residual
    double T_k = INFINITY;           // nondegeneracy threshold in t
    std::vector<std::pair<int, double>> slope_history; // (order, fitted slope)
    std::vector<double> shift_norms; // sup |v_k| per executed step
};

/// Initial nondegenerate harmonic pair on the chosen model.
inline IterationState make_initial_state(const BranchedModel& model) {
    IterationState st;
    st.model = model;
    st.pair.B1 = model.B1;
    st.pair.terms.push_back({1.0, std::make_shared<MonomialPot>(Complex(model.B1, 0), 1.5)});
    if (model.kappa != 0.0)
        st.pair.terms.push_back({1.0, std::make_shared<MonomialPot>(Complex(model.kappa, 0), 2.0)});
    if (model.cexp != 0.0)
        st.pair.terms.push_back({1.0, std::make_shared<ExpCosPot>(model.cexp)});
    st.pair.axial.c3 = model.c3;
    st.pair.axial.model = nullptr; // set per use; model lives in the state
    st.pair.leadingB_min = std::abs(model.B1);
    return st;
}

/// Residual field of the state at scale t: SL_{phi* g}(A_t) evaluated through
/// the composed forward flows, as described in the header comment. Returns
/// samples indexed [radius][theta][x3] flattened, plus the r-weight per
/// sample (distance to the branch circle in flowed coordinates).
struct ResidualField {
    EvalGrid grid;
    std::vector<double> values;
    std::vector<double> weight;

    double weighted_sup() const {
        double m = 0;
        for (std::size_t i = 0; i < values.size(); ++i)
            m = std::max(m, std::abs(values[i]) * weight[i]);
        return m;
    }
};

inline ResidualField evaluate_residual(const IterationState& st, double t, const EvalGrid& grid) {
    ResidualField out;
    out.grid = grid;
    out.values.resize(grid.total());
    out.weight.resize(grid.total());
    const ConformalMetric metric = st.model.metric();
    AxialForm axial = st.pair.axial;
    axial.model = &st.model;

    std::size_t idx = 0;
    for (std::size_t ir = 0; ir < grid.radii.size(); ++ir)
        for (int m = 0; m < grid.n_theta; ++m)
            for (int l = 0; l < grid.n_x3; ++l, ++idx) {
                const double r = grid.radii[ir];
                const double theta = grid.theta(m);
                const double x3 = grid.x3(l);
                Eigen::Vector3d x(r * std::cos(theta), r * std::sin(theta), x3);

                // forward flow jets at x, composed
                Eigen::Vector3d y = x;
                Eigen::Matrix3d J = Eigen::Matrix3d::Identity();
                std::array<Eigen::Matrix3d, 3> H{};
                for (auto& h : H) h.setZero();
                for (const auto& spec : st.flows) {
                    const FlowJet fj = flow_jet(spec, t, y);
                    // compose: new = fj o old
                    std::array<Eigen::Matrix3d, 3> Hn{};
                    for (int c = 0; c < 3; ++c) {
                        Hn[c] = J.transpose() * fj.H[c] * J;
                        for (int e = 0; e < 3; ++e) Hn[c] += fj.J(c, e) * H[e];
                    }
                    H = Hn;
                    J = fj.J * J;
                    y = fj.y;
                }
                const bool flowed = !st.flows.empty();

                // total potential jet at x
                PotJet total;
                for (const auto& term : st.pair.terms) {
                    const PotJet pj = term.pot->jet(r, theta, x3);
                    double tp = 1;
                    for (int q = 0; q < static_cast<int>(std::lround(term.t_power)); ++q)
                        tp *= t;
                    total.value += tp * pj.value;
                    total.grad += tp * pj.grad;
                    total.hess += tp * pj.hess;
                }

                OneFormJet jet;
                if (!flowed) {
                    jet.alpha = total.grad;
                    jet.d_alpha = total.hess;
                } else {
                    // pull the potential jet through the flow: the field is
                    // (F o lambda^{-1}) evaluated at p = lambda(x)
                    const Eigen::Matrix3d Jinv = J.inverse();
                    // Hessian of the inverse map at p
                    std::array<Eigen::Matrix3d, 3> Hinv{};
                    for (int c = 0; c < 3; ++c) {
                        Eigen::Matrix3d acc = Eigen::Matrix3d::Zero();
                        for (int e = 0; e < 3; ++e)
                            acc += Jinv(c, e) * (Jinv.transpose() * H[e] * Jinv);
                        Hinv[c] = -acc;
                    }
                    jet.alpha = Jinv.transpose() * total.grad;
                    Eigen::Matrix3d hp = Jinv.transpose() * total.hess * Jinv;
                    for (int c = 0; c < 3; ++c) hp += total.grad[c] * Hinv[c];
                    jet.d_alpha = hp;
                }
                // axial part u(x3) dx3 is invariant under the z-plane flows
                if (axial.c3 != 0.0) {
                    jet.alpha[2] += t * axial.u(flowed ? y[2] : x3);
                    jet.d_alpha(2, 2) += t * axial.du(flowed ? y[2] : x3);
                }

                const Eigen::Vector3d p = flowed ? y : x;
                out.values[idx] = psl_residual_at(metric, p, jet, 1e-5,
                                                  std::max(1.0, jet.d_alpha.cwiseAbs().maxCoeff()));
                out.weight[idx] = std::hypot(x[0], x[1]);
            }
    return out;
}

// ---------------------------------------------------------------------------
// Leading-order extraction
// ---------------------------------------------------------------------------

struct OrderTerm {
    bool exact = false;        // residual vanished at every t
    int order = 0;             // rounded slope
    double slope = 0;
    ResidualField coefficient; // Richardson-extrapolated t^order coefficient
};

/// Richardson-extrapolated coefficient of the leading t-power of the
/// residual over a geometric t-grid (>= 4 values), plus the slope estimate.
/// Slope must be within 0.2 of an integer.
inline OrderTerm extract_order_term(const IterationState& st, const std::vector<double>& ts,
                                    const EvalGrid& grid) {
    if (ts.size() < 4) throw ArgumentError("extract_order_term: need >= 4 t values");
    OrderTerm out;
    std::vector<ResidualField> fields;
    std::vector<double> norms;
    for (double t : ts) {
        fields.push_back(evaluate_residual(st, t, grid));
        norms.push_back(fields.back().weighted_sup());
    }
    double sup_scale = 0;
    for (double n : norms) sup_scale = std::max(sup_scale, n);
    if (sup_scale < 1e-13) {
        out.exact = true;
        out.coefficient = fields.back();
        return out;
    }
    out.slope = loglog_slope(ts, norms);
    const double rounded = std::round(out.slope);
    if (std::abs(out.slope - rounded) > 0.2)
        throw DiagnosticError("extract_order_term: slope not near an integer", out.slope);
    out.order = static_cast<int>(rounded);
    // linear Richardson in t on R(t)/t^order using the two smallest t's
    std::size_t i2 = 0, i3 = 1;
    if (ts[i3] > ts[i2]) std::swap(i2, i3);
    for (std::size_t i = 2; i < ts.size(); ++i) {
        if (ts[i] < ts[i3]) {
            i2 = i3;
            i3 = i;
        } else if (ts[i] < ts[i2]) {
            i2 = i;
        }
    }
    const double t2 = ts[i2], t3 = ts[i3];
    out.coefficient = fields[i3];
    const double p2 = std::pow(t2, out.order), p3 = std::pow(t3, out.order);
    for (std::size_t i = 0; i < out.coefficient.values.size(); ++i) {
        const double u2 = fields[i2].values[i] / p2;
        const double u3 = fields[i3].values[i] / p3;
        out.coefficient.values[i] = u3 + (u3 - u2) * t3 / (t2 - t3);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Shift vector
// ---------------------------------------------------------------------------

/// v = -2a/(3 B1) along the branch circle, from the r^{1/2}-coefficient a of
/// the minus solve. Gate: min |B1| > 0 (here B1 is a constant).
inline FourierX3 shift_vector(const std::vector<Complex>& a_slices, double B1,
                              double b1_gate = 1e-10) {
    if (!(std::abs(B1) > b1_gate))
        throw DiagnosticError("shift_vector: |B1| below the nondegeneracy gate", std::abs(B1));
    std::vector<Complex> v(a_slices.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = -2.0 * a_slices[i] / (3.0 * B1);
    return FourierX3::from_samples(v);
}

// ---------------------------------------------------------------------------
// The 3-D harmonic solve on the model
// ---------------------------------------------------------------------------

struct HarmonicSolve {
    std::shared_ptr<ModeFieldPot> field;   // the solved potential P
    std::vector<Complex> a_slices;         // r^{1/2}-coefficient per x3 (minus only)
    std::vector<Complex> b_slices;         // r^{3/2}-coefficient per x3 (minus only)
    double plus_mean = 0;                  // volume integral of a plus source
};

namespace detail_solve {

/// Project residual samples onto angular modes: half-integer (twisted) modes
/// of the minus part or integer modes of the plus part. Returns
/// [mode][x3][radius] complex profiles.
inline std::vector<std::vector<std::vector<Complex>>> angular_project(
    const ResidualField& rf, int n_modes, bool half) {
    const auto& g = rf.grid;
    std::vector<std::vector<std::vector<Complex>>> out(
        n_modes, std::vector<std::vector<Complex>>(g.n_x3,
                                                   std::vector<Complex>(g.radii.size())));
    for (std::size_t ir = 0; ir < g.radii.size(); ++ir)
        for (int l = 0; l < g.n_x3; ++l)
            for (int k = 0; k < n_modes; ++k) {
                const double nu = half ? k + 0.5 : k;
                Complex acc(0, 0);
                for (int m = 0; m < g.n_theta; ++m) {
                    const std::size_t idx =
                        (ir * g.n_theta + m) * g.n_x3 + l;
                    acc += rf.values[idx] * std::exp(Complex(0, -nu * g.theta(m)));
                }
                acc *= (nu == 0.0 ? 1.0 : 2.0) / double(g.n_theta);
                out[k][l][ir] = acc;
            }
    return out;
}

} // namespace detail_solve

/// Solve d*d P = rho on the model (i.e. (Delta_z + A3) P = -e^{2 psi} rho),
/// where rho is given as residual samples on a grid whose radii coincide
/// with the solve grid. half=true solves in the twisted (half-integer) modes,
/// otherwise in integer modes. singular_exponent is the expected leading
/// power of the source (-1/2 for the minus part, -1 for the plus part); the
/// corresponding power-law part is subtracted with an exact particular
/// solution before the finite-difference remainder solve.
inline HarmonicSolve solve_correction(const BranchedModel& model, const AxialBasis& basis,
                                      const ResidualField& rho, int n_modes, bool half,
                                      double singular_exponent) {
    const EvalGrid& g = rho.grid;
    RadialGrid grid;
    grid.r = g.radii;
    const std::size_t n_r = grid.size();
    const int n3 = g.n_x3;
    auto modes = detail_solve::angular_project(rho, n_modes, half);

    HarmonicSolve out;
    out.field = std::make_shared<ModeFieldPot>(grid, n_modes, n3, half);
    out.a_slices.assign(n3, Complex(0, 0));
    out.b_slices.assign(n3, Complex(0, 0));

    // plus-part volume integral (l = 0 angular mode only): 2 pi int rho_0 e^{3 psi} r dr dx3
    if (!half) {
        double mean = 0;
        const double h3 = 2.0 * kPi / n3;
        for (int l = 0; l < n3; ++l) {
            const double w3 = std::exp(3.0 * model.psi(g.x3(l))) * h3;
            for (std::size_t i = 0; i + 1 < n_r; ++i) {
                const double dr = grid.r[i + 1] - grid.r[i];
                mean += w3 * 2.0 * kPi * 0.5 *
                        (modes[0][l][i].real() * grid.r[i] +
                         modes[0][l][i + 1].real() * grid.r[i + 1]) * dr;
            }
        }
        out.plus_mean = mean;
    }

    // per (angular mode k, axial eigenmode j) radial solves
    const double s_part = singular_exponent + 2.0;
    std::vector<std::vector<Complex>> Fkj(n_modes * basis.n); // solved profiles
    std::vector<std::vector<Complex>> Qkj(n_modes * basis.n); // projected sources
    for (int k = 0; k < n_modes; ++k) {
        const double nuk = half ? k + 0.5 : k;
        // axial projection of -e^{2 psi} rho_k over the eigenbasis
        for (int j = 0; j < basis.n; ++j) Qkj[k * basis.n + j].assign(n_r, Complex(0, 0));
        for (std::size_t i = 0; i < n_r; ++i) {
            std::vector<double> re(n3), im(n3);
            for (int l = 0; l < n3; ++l) {
                const Complex val = -std::exp(2.0 * model.psi(g.x3(l))) * modes[k][l][i];
                re[l] = val.real();
                im[l] = val.imag();
            }
            const auto cre = basis.project(re);
            const auto cim = basis.project(im);
            for (int j = 0; j < basis.n; ++j)
                Qkj[k * basis.n + j][i] = Complex(cre[j], cim[j]);
        }
        for (int j = 0; j < basis.n; ++j) {
            const auto& rhs = Qkj[k * basis.n + j];
            double sup = 0;
            for (const auto& c : rhs) sup = std::max(sup, std::abs(c));
            std::vector<Complex>& F = Fkj[k * basis.n + j];
            F.assign(n_r, Complex(0, 0));
            if (sup < 1e-14) continue;
            // fit and subtract the leading singular power c r^{sigma}
            Complex c_lead(0, 0);
            if (std::abs(nuk - std::abs(s_part)) > 1e-9) {
                Complex wnum(0, 0);
                double wden = 0;
                for (std::size_t i = 2; i < n_r && grid.r[i] < 20.0 * grid.inner(); ++i) {
                    const double b = std::pow(grid.r[i], singular_exponent);
                    wnum += rhs[i] * b;
                    wden += b * b;
                }
                if (wden > 0) c_lead = wnum / wden;
            }
            std::vector<Complex> remainder = rhs;
            std::vector<PowerTerm> part;
            if (std::abs(c_lead) > 1e-13 * sup) {
                // L_mu[d r^s] = (s^2 - nu^2) d r^{s-2} - mu d r^s
                const Complex d = c_lead / (s_part * s_part - nuk * nuk);
                part.push_back({s_part, 0, d});
                for (std::size_t i = 0; i < n_r; ++i)
                    remainder[i] += -c_lead * std::pow(grid.r[i], singular_exponent) +
                                    basis.mu[j] * d * std::pow(grid.r[i], s_part);
            }
            auto fd = solve_radial_bvp<Complex>(grid, nuk, basis.mu[j], remainder,
                                                Complex(0, 0));
            for (std::size_t i = 0; i < n_r; ++i)
                F[i] = fd[i] + eval_terms(part, grid.r[i]);
            if (!part.empty()) {
                // cancel the power part at the rim through the regular
                // homogeneous branch
                const Complex at_R = eval_terms(part, grid.outer());
                if (basis.mu[j] < 1e-12) {
                    const Complex Ah = -at_R / std::pow(grid.outer(), nuk);
                    for (std::size_t i = 0; i < n_r; ++i)
                        F[i] += Ah * std::pow(grid.r[i], nuk);
                } else {
                    std::vector<Complex> zero(n_r, Complex(0, 0));
                    auto hom = solve_radial_bvp<Complex>(grid, nuk, basis.mu[j], zero, -at_R);
                    for (std::size_t i = 0; i < n_r; ++i) F[i] += hom[i];
                }
            }
        }
    }

    // collapse the axial basis into grid samples with derivatives
    ModeFieldPot& P = *out.field;
    for (int k = 0; k < n_modes; ++k) {
        const double nuk = half ? k + 0.5 : k;
        for (int j = 0; j < basis.n; ++j) {
            const auto& F = Fkj[k * basis.n + j];
            const auto& rhs = Qkj[k * basis.n + j];
            double sup = 0;
            for (const auto& c : F) sup = std::max(sup, std::abs(c));
            if (sup == 0) continue;
            // F' by centered differences, F'' from the mode equation
            std::vector<Complex> Fr(n_r), Frr(n_r);
            for (std::size_t i = 0; i < n_r; ++i) {
                if (i == 0)
                    Fr[i] = (F[1] - F[0]) / (grid.r[1] - grid.r[0]);
                else if (i + 1 == n_r)
                    Fr[i] = (F[i] - F[i - 1]) / (grid.r[i] - grid.r[i - 1]);
                else {
                    const double hm = grid.r[i] - grid.r[i - 1];
                    const double hp = grid.r[i + 1] - grid.r[i];
                    Fr[i] = (F[i + 1] * (hm / hp) - F[i - 1] * (hp / hm) +
                             F[i] * (hp / hm - hm / hp)) /
                            (hm + hp);
                }
            }
            for (std::size_t i = 0; i < n_r; ++i) {
                const double r = grid.r[i];
                Frr[i] = rhs[i] - Fr[i] / r + (nuk * nuk / (r * r) + basis.mu[j]) * F[i];
            }
            for (int l = 0; l < n3; ++l) {
                const double u0 = basis.u[j][l], u1 = basis.u1[j][l], u2 = basis.u2[j][l];
                for (std::size_t i = 0; i < n_r; ++i) {
                    const std::size_t a = P.idx(k, l, i);
                    P.G_[a] += F[i] * u0;
                    P.Gr_[a] += Fr[i] * u0;
                    P.Grr_[a] += Frr[i] * u0;
                    P.G3_[a] += F[i] * u1;
                    P.G3r_[a] += Fr[i] * u1;
                    P.G33_[a] += F[i] * u2;
                }
            }
        }
    }

    // leading-coefficient fits per x3 slice (minus solves)
    if (half) {
        std::size_t i_lo = 2;
        const double r_hi = 10.0 * grid.r[i_lo];
        std::size_t i_hi = i_lo;
        while (i_hi < n_r && grid.r[i_hi] <= r_hi) ++i_hi;
        for (int l = 0; l < n3; ++l) {
            Complex n05(0, 0), n15(0, 0);
            double d05 = 0, d15 = 0;
            for (std::size_t i = i_lo; i < i_hi; ++i) {
                const double b0 = std::sqrt(grid.r[i]);
                n05 += P.G_[P.idx(0, l, i)] * b0;
                d05 += b0 * b0;
                if (n_modes > 1) {
                    const double b1 = std::pow(grid.r[i], 1.5);
                    n15 += P.G_[P.idx(1, l, i)] * b1;
                    d15 += b1 * b1;
                }
            }
            out.a_slices[l] = n05 / d05;
            if (d15 > 0) out.b_slices[l] = n15 / d15;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Correction step and the order ladder
// ---------------------------------------------------------------------------

struct StepOptions {
    std::vector<double> t_grid{0.2, 0.1, 0.05, 0.025};
    int n_modes_minus = 6;
    int n_modes_plus = 6;
    double plus_mean_gate = 1e-6;
    double cutoff_inner = 0.55;   // chi == 1 below this radius
    double cutoff_outer = 0.80;
};

/// Grids for the demo models: a single geometric radial grid shared by the
/// solves and the residual evaluation, and the inner annulus where norms are
/// reported.
struct IterationGrids {
    EvalGrid solve;      // full radial range (rhs extraction, solves)
    EvalGrid report;     // the annulus where weighted norms are taken
};

inline IterationGrids make_iteration_grids(const BranchedModel& model, double ratio = 1.02,
                                           double r_min_rel = 1e-4, int n_theta = 64,
                                           int n_x3 = 32, double report_lo = 0.02,
                                           double report_hi = 0.5) {
    IterationGrids g;
    RadialGrid rg = RadialGrid::geometric(r_min_rel * model.R, model.R, ratio);
    g.solve.radii = rg.r;
    g.solve.n_theta = n_theta;
    g.solve.n_x3 = n_x3;
    g.report.n_theta = n_theta;
    g.report.n_x3 = n_x3;
    for (double r : rg.r)
        if (r >= report_lo * model.R && r <= report_hi * model.R) g.report.radii.push_back(r);
    return g;
}

/// One inductive step: extract the leading order rho, solve the twisted
/// equation, shift the singular set by v = -2a/(3 B1), solve the untwisted
/// equation behind the integral-vanishing gate, and assemble the corrected
/// pair with its metric flow. Returns the updated state.
inline IterationState correction_step(const IterationState& state, const IterationGrids& grids,
                                      const AxialBasis& basis, const StepOptions& opts = {}) {
    IterationState st = state;
    OrderTerm lead = extract_order_term(st, opts.t_grid, grids.solve);
    if (lead.exact) return st; // nothing to correct
    const int next_order = lead.order;
    if (next_order < 3)
        throw ArgumentError("correction_step: order estimate " + std::to_string(next_order) +
                            " below the first nonlinear order");

    // minus solve (half-integer modes)
    HarmonicSolve Pm = solve_correction(st.model, basis, lead.coefficient, opts.n_modes_minus,
                                        true, -0.5);
    // plus gate and solve (integer modes)
    HarmonicSolve Pp = solve_correction(st.model, basis, lead.coefficient, opts.n_modes_plus,
                                        false, -1.0);
    double plus_scale = 0;
    for (const auto& v : lead.coefficient.values) plus_scale = std::max(plus_scale, std::abs(v));
    if (std::abs(Pp.plus_mean) > opts.plus_mean_gate * std::max(1.0, plus_scale))
        throw DiagnosticError("correction_step: plus-part source mean exceeds the gate",
                              Pp.plus_mean);

    // shift vector from the r^{1/2} coefficient of the minus solve
    FourierX3 v = shift_vector(Pm.a_slices, st.pair.B1);
    double v_sup = 0, b_next = 0;
    for (const auto& c : Pm.a_slices) v_sup = std::max(v_sup, 2.0 * std::abs(c) /
                                                                  (3.0 * std::abs(st.pair.B1)));
    for (const auto& c : Pm.b_slices) b_next = std::max(b_next, std::abs(c));
    st.shift_norms.push_back(v_sup);

    RadialCutoff chi{opts.cutoff_inner * st.model.R, opts.cutoff_outer * st.model.R};

    // f_minus = P_minus + grad_V f1_minus, with grad_V f1^- = chi Re((3/2) B1 v z^{1/2})
    FourierX3 Cminus = v;
    for (auto& c : Cminus.coeff) c *= 1.5 * st.pair.B1;
    st.pair.terms.push_back({double(next_order), Pm.field});
    st.pair.terms.push_back(
        {double(next_order), std::make_shared<CutoffHoloPot>(Cminus, 0.5, chi)});

    // f_plus = P_plus + grad_V f1_plus, with grad_V f1^+ = chi 2 kappa Re(v z)
    st.pair.terms.push_back({double(next_order), Pp.field});
    if (st.model.kappa != 0.0) {
        FourierX3 Cplus = v;
        for (auto& c : Cplus.coeff) c *= 2.0 * st.model.kappa;
        st.pair.terms.push_back(
            {double(next_order), std::make_shared<CutoffHoloPot>(Cplus, 1.0, chi)});
    }

    // metric flow at rate t^{order-1}
    FlowSpec spec;
    spec.t_power = next_order - 1;
    spec.chi = chi;
    spec.v = v;
    st.flows.insert(st.flows.begin(), spec);

    // nondegeneracy threshold: T_{k+1} = min(T_k, 1/4 min|B_A| / max|B_next|)
    if (b_next > 0)
        st.T_k = std::min(st.T_k, 0.25 * std::abs(st.pair.B1) / b_next);
    st.order = next_order + 1;
    st.slope_history.push_back({next_order, lead.slope});
    return st;
}

struct LadderRow {
    int order = 0;
    double slope = 0;
    double intercept = 0;
    std::vector<double> norms;  // weighted residual norms over the t grid
};

/// Weighted-residual slope report for a state over a t grid.
inline LadderRow residual_order_check(const IterationState& st, const std::vector<double>& ts,
                                      const EvalGrid& grid) {
    LadderRow row;
    row.order = st.order;
    for (double t : ts) row.norms.push_back(evaluate_residual(st, t, grid).weighted_sup());
    double sup = 0;
    for (double n : row.norms) sup = std::max(sup, n);
    if (sup < 1e-13) {
        row.slope = INFINITY; // exact family
        return row;
    }
    row.slope = loglog_slope(ts, row.norms);
    row.intercept = loglog_intercept(ts, row.norms);
    return row;
}

struct ApproximatePairResult {
    IterationState state;
    std::vector<LadderRow> ladder;   // one row per order, starting at the input
    double T_N = INFINITY;
};

/// Apply correction steps until the residual order exceeds N or the step
/// budget runs out; reports the slope ladder and the composed shifts.
inline ApproximatePairResult build_approximate_pair(const IterationState& initial,
                                                    const IterationGrids& grids,
                                                    const AxialBasis& basis, int N,
                                                    const StepOptions& opts = {},
                                                    int step_budget = 6) {
    ApproximatePairResult out;
    out.state = initial;
    out.ladder.push_back(residual_order_check(out.state, opts.t_grid, grids.report));
    int steps = 0;
    while (out.ladder.back().slope < N + 1 - 0.1 && steps < step_budget) {
        if (std::isinf(out.ladder.back().slope)) break; // exact
        out.state = correction_step(out.state, grids, basis, opts);
        out.ladder.push_back(residual_order_check(out.state, opts.t_grid, grids.report));
        ++steps;
    }
    out.T_N = out.state.T_k;
    return out;
}

// ---------------------------------------------------------------------------
// Quadratic-term report (pSL of t * pair with singular-exponent fits)
// ---------------------------------------------------------------------------

struct QuadraticTermReport {
    bool exact = false;
    double linear_gate = 0;        // sup |d* a| of the linear part
    ExponentFit minus_exponent;    // fitted radial exponent of the minus part
    ExponentFit plus_exponent;     // fitted radial exponent of the plus part
    double t_order_slope = 0;      // fitted t-order of the full residual
};

/// Evaluate pSL(t a) over a t grid, assert the exponent structure of the
/// +/- parts near the branch point. Pre: the pair is harmonic (the linear
/// part vanishes); gate 1e-8 relative.
inline QuadraticTermReport quadratic_term(const IterationState& st, const IterationGrids& grids,
                                          const std::vector<double>& ts) {
    QuadraticTermReport rep;
    // linear-part gate: tr H of the pair at t = 1 must vanish (harmonicity)
    {
        const ConformalMetric metric = st.model.metric();
        AxialForm axial = st.pair.axial;
        axial.model = &st.model;
        double sup = 0, scale = 0;
        const EvalGrid& g = grids.report;
        for (std::size_t ir = 0; ir < g.radii.size(); ir += 7)
            for (int m = 0; m < g.n_theta; m += 5)
                for (int l = 0; l < g.n_x3; l += 3) {
                    const double r = g.radii[ir], theta = g.theta(m), x3 = g.x3(l);
                    Eigen::Vector3d x(r * std::cos(theta), r * std::sin(theta), x3);
                    OneFormJet jet;
                    PotJet total;
                    for (const auto& term : st.pair.terms) {
                        const PotJet pj = term.pot->jet(r, theta, x3);
                        total.grad += pj.grad;
                        total.hess += pj.hess;
                    }
                    jet.alpha = total.grad;
                    jet.d_alpha = total.hess;
                    if (axial.c3 != 0.0) {
                        jet.alpha[2] += axial.u(x3);
                        jet.d_alpha(2, 2) += axial.du(x3);
                    }
                    const Eigen::MatrixXd H = derivative_endomorphism(metric, x, jet);
                    sup = std::max(sup, std::abs(H.trace()));
                    scale = std::max(scale, H.cwiseAbs().maxCoeff());
                }
        rep.linear_gate = sup;
        if (sup > 1e-8 * std::max(1.0, scale))
            throw DiagnosticError("quadratic_term: pair is not harmonic", sup);
    }
    std::vector<double> norms;
    std::vector<ResidualField> fields;
    for (double t : ts) {
        fields.push_back(evaluate_residual(st, t, grids.report));
        norms.push_back(fields.back().weighted_sup());
    }
    double sup = 0;
    for (double n : norms) sup = std::max(sup, n);
    if (sup < 1e-13) {
        rep.exact = true;
        return rep;
    }
    rep.t_order_slope = loglog_slope(ts, norms);
    // radial profiles of |minus| and |plus| parts at the smallest t
    const ResidualField& rf = fields.back();
    const EvalGrid& g = rf.grid;
    std::vector<double> minus_prof(g.radii.size(), 0.0), plus_prof(g.radii.size(), 0.0);
    for (std::size_t ir = 0; ir < g.radii.size(); ++ir)
        for (int m = 0; m < g.n_theta / 2; ++m)
            for (int l = 0; l < g.n_x3; ++l) {
                const std::size_t i1 = (ir * g.n_theta + m) * g.n_x3 + l;
                const std::size_t i2 = (ir * g.n_theta + m + g.n_theta / 2) * g.n_x3 + l;
                plus_prof[ir] = std::max(plus_prof[ir],
                                         0.5 * std::abs(rf.values[i1] + rf.values[i2]));
                minus_prof[ir] = std::max(minus_prof[ir],
                                          0.5 * std::abs(rf.values[i1] - rf.values[i2]));
            }
    // fit over the inner half of the report annulus
    std::vector<double> rr, mm, pp;
    for (std::size_t ir = 0; ir < g.radii.size() / 2; ++ir) {
        rr.push_back(g.radii[ir]);
        mm.push_back(minus_prof[ir]);
        pp.push_back(plus_prof[ir]);
    }
    rep.minus_exponent = fit_exponent(rr, mm);
    rep.plus_exponent = fit_exponent(rr, pp);
    return rep;
}

} // namespace slag
