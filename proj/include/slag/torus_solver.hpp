#pragma once

// Spectral Laplacian inversion on flat tori, the contraction/Newton solver
// for nearby special-Lagrangian graph potentials, weighted first-eigenvalue
// computation, and the geometry report (tau, injectivity bound, Weinstein
// size, Upsilon gate).

#include <functional>
#include <random>
#include <sstream>
#include <vector>

#include <Eigen/Dense>

#include "slag/flat_cy.hpp"
#include "slag/sl_operator.hpp"
#include "slag/torus_grid.hpp"

namespace slag {

struct TorusField {
    TorusGrid grid;
    std::vector<double> samples;

    TorusField() = default;
    TorusField(TorusGrid g, std::vector<double> s) : grid(std::move(g)), samples(std::move(s)) {
        if (samples.size() != grid.total()) throw ArgumentError("TorusField: size mismatch");
    }
    static TorusField zeros(const TorusGrid& g) {
        return TorusField(g, std::vector<double>(g.total(), 0.0));
    }
    double mean() const { return field_mean(samples); }
    double sup() const { return field_sup(samples); }
};

/// Solve D f = -h for the positive Laplacian D = d*d (equivalently
/// sum_a d^2 f / dx_a^2 = h), spectrally exact on the grid; mean(f) = 0.
inline TorusField invert_laplacian(const TorusField& h, double mean_tol = 1e-12) {
    const double mu = h.mean();
    if (std::abs(mu) > mean_tol * std::max(1.0, h.sup()))
        throw ArgumentError("invert_laplacian: right-hand side has nonzero mean " + fmt(mu));
    auto out = detail::spectral_multiplier(
        h.grid, h.samples, [](const std::vector<double>& om, const std::vector<int>&) -> Complex {
            double w2 = 0;
            for (double w : om) w2 += w * w;
            if (w2 == 0.0) return Complex(0, 0);
            return Complex(-1.0 / w2, 0);
        });
    return TorusField(h.grid, std::move(out));
}

/// Apply the flat Laplacian sum_a d^2/dx_a^2 spectrally.
inline TorusField apply_flat_laplacian(const TorusField& f) {
    auto out = detail::spectral_multiplier(
        f.grid, f.samples, [](const std::vector<double>& om, const std::vector<int>&) -> Complex {
            double w2 = 0;
            for (double w : om) w2 += w * w;
            return Complex(-w2, 0);
        });
    return TorusField(f.grid, std::move(out));
}

// ---------------------------------------------------------------------------
// Weighted first eigenvalue: smallest positive eigenvalue of f -> d*(w df)
// on mean-zero fields.
// ---------------------------------------------------------------------------

/// Zero out all modes touching a Nyquist frequency; the discrete derivative
/// annihilates its own axis' Nyquist mode, and projecting on every axis keeps
/// the weighted operator symmetric on a fixed subspace.
inline std::vector<double> drop_nyquist(const TorusGrid& g, const std::vector<double>& v) {
    return detail::spectral_multiplier(
        g, v, [&](const std::vector<double>&, const std::vector<int>& kk) -> Complex {
            for (std::size_t a = 0; a < kk.size(); ++a)
                if (2 * std::abs(kk[a]) == g.shape[a]) return Complex(0, 0);
            return Complex(1, 0);
        });
}

/// Apply A f = -sum_a d_a (w d_a f) spectrally, de-aliased symmetrically
/// onto the Nyquist-free subspace.
inline std::vector<double> apply_weighted_laplacian(const TorusGrid& g,
                                                    const std::vector<double>& w,
                                                    const std::vector<double>& f) {
    auto fp = drop_nyquist(g, f);
    std::vector<double> acc(g.total(), 0.0);
    for (int a = 0; a < g.dim(); ++a) {
        auto df = spectral_derivative(g, fp, a);
        for (std::size_t i = 0; i < df.size(); ++i) df[i] *= w[i];
        auto dd = spectral_derivative(g, df, a);
        for (std::size_t i = 0; i < dd.size(); ++i) acc[i] -= dd[i];
    }
    return drop_nyquist(g, acc);
}

/// Dense assembly of the same operator (oracle / symmetry checks).
inline Eigen::MatrixXd assemble_weighted_laplacian_dense(const TorusGrid& g,
                                                         const std::vector<double>& w) {
    const std::size_t N = g.total();
    Eigen::MatrixXd A(N, N);
    std::vector<double> e(N, 0.0);
    for (std::size_t j = 0; j < N; ++j) {
        e.assign(N, 0.0);
        e[j] = 1.0;
        auto col = apply_weighted_laplacian(g, w, e);
        for (std::size_t i = 0; i < N; ++i) A(i, j) = col[i];
    }
    return A;
}

/// Smallest positive eigenvalue of d*(w df) via preconditioned inverse
/// iteration on the mean-zero subspace. Weight must be positive everywhere.
inline double first_eigenvalue(const TorusGrid& g, const std::vector<double>& w,
                               double rel_tol = 1e-12, int max_outer = 200) {
    if (w.size() != g.total()) throw ArgumentError("first_eigenvalue: weight size mismatch");
    double wmin = w[0], wmean = 0;
    for (double x : w) {
        wmin = std::min(wmin, x);
        wmean += x;
    }
    wmean /= static_cast<double>(w.size());
    if (wmin <= 0.0) throw ArgumentError("first_eigenvalue: weight not positive, min " + fmt(wmin));

    const std::size_t N = g.total();
    auto project = [&](std::vector<double>& v) {
        const double m = field_mean(v);
        for (auto& x : v) x -= m;
    };
    auto dot = [&](const std::vector<double>& a, const std::vector<double>& b) {
        double s = 0;
        for (std::size_t i = 0; i < N; ++i) s += a[i] * b[i];
        return s;
    };
    // preconditioner: (wmean * (-Delta))^{-1} on mean-zero fields
    auto precond = [&](const std::vector<double>& r) {
        TorusField rf(g, r);
        auto z = invert_laplacian(rf, 1e-6).samples;
        for (auto& x : z) x /= -wmean;
        return z;
    };
    auto apply = [&](const std::vector<double>& v) { return apply_weighted_laplacian(g, w, v); };

    // CG solve A x = b on mean-zero fields
    auto solve = [&](const std::vector<double>& b) {
        std::vector<double> x(N, 0.0), r = b, z = precond(r), p = z;
        project(r);
        double rz = dot(r, z);
        for (int it = 0; it < 500; ++it) {
            auto Ap = apply(p);
            const double alpha = rz / dot(p, Ap);
            for (std::size_t i = 0; i < N; ++i) {
                x[i] += alpha * p[i];
                r[i] -= alpha * Ap[i];
            }
            if (std::sqrt(dot(r, r)) < 1e-14 * std::sqrt(dot(b, b)) + 1e-300) break;
            z = precond(r);
            project(z);
            const double rz2 = dot(r, z);
            const double beta = rz2 / rz;
            rz = rz2;
            for (std::size_t i = 0; i < N; ++i) p[i] = z[i] + beta * p[i];
        }
        project(x);
        return x;
    };

    // block subspace iteration: the lowest eigenvalues can cluster, so a
    // single inverse-power vector stalls; a small Ritz block does not.
    const int block = std::min<std::size_t>(8, N - 1);
    std::mt19937_64 rng(12345);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    std::vector<std::vector<double>> Zb(block, std::vector<double>(N));
    for (auto& z : Zb) {
        for (auto& x : z) x = uni(rng);
        z = drop_nyquist(g, z);
        project(z);
    }
    auto orthonormalize = [&](std::vector<std::vector<double>>& Z) {
        for (int i = 0; i < block; ++i) {
            for (int j = 0; j < i; ++j) {
                const double c = dot(Z[i], Z[j]);
                for (std::size_t k = 0; k < N; ++k) Z[i][k] -= c * Z[j][k];
            }
            const double nrm = std::sqrt(dot(Z[i], Z[i]));
            for (auto& x : Z[i]) x /= nrm;
        }
    };
    orthonormalize(Zb);
    double lambda = 0, lambda_prev = -1;
    for (int outer = 0; outer < max_outer; ++outer) {
        for (auto& z : Zb) z = solve(z);
        orthonormalize(Zb);
        // Ritz projection
        Eigen::MatrixXd S(block, block);
        std::vector<std::vector<double>> AZ(block);
        for (int i = 0; i < block; ++i) AZ[i] = apply(Zb[i]);
        for (int i = 0; i < block; ++i)
            for (int j = 0; j < block; ++j) S(i, j) = dot(Zb[i], AZ[j]);
        S = 0.5 * (S + S.transpose());
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
        lambda = es.eigenvalues()(0);
        // rotate the block onto the Ritz basis to keep convergence clean
        std::vector<std::vector<double>> Zn(block, std::vector<double>(N, 0.0));
        for (int i = 0; i < block; ++i)
            for (int j = 0; j < block; ++j) {
                const double c = es.eigenvectors()(j, i);
                for (std::size_t k = 0; k < N; ++k) Zn[i][k] += c * Zb[j][k];
            }
        Zb = std::move(Zn);
        if (lambda_prev > 0 && std::abs(lambda - lambda_prev) <= rel_tol * lambda) break;
        lambda_prev = lambda;
    }
    return lambda;
}

// ---------------------------------------------------------------------------
// Geometry report
// ---------------------------------------------------------------------------

struct GeometryReport {
    double tau = 0;            // max second fundamental form
    double lambda = 1;         // first positive eigenvalue of the linearization
    double vol = 0;            // volume of the immersed manifold
    double weinstein_size = 0; // C / tau
    double inj_bound = 0;      // pi / (C + tau)
    double upsilon = 0;        // C (1 + lambda^{-1} vol tau^{2+gamma+n/2})^2 tau^gamma
    double gamma = 0.25;
    double C = 1.0;
};

/// Norm of the second fundamental form at sample i: sup over induced-unit
/// X, Y of |P_perp D^2 iota (X,Y)| (exact for curves, angular sampling for
/// surfaces and 3-folds).
inline double second_fundamental_form_norm(const Immersion& im, std::size_t i) {
    if (!im.has_second()) throw StateError("second_fundamental_form_norm: no second derivatives");
    const Eigen::MatrixXd& Jc = im.jac[i];
    const int d = im.d, amb = im.ambient;
    const Eigen::MatrixXd G = Jc.transpose() * Jc;
    const Eigen::MatrixXd Pt = Jc * G.inverse() * Jc.transpose();
    const Eigen::MatrixXd Pp = Eigen::MatrixXd::Identity(amb, amb) - Pt;
    // B(a,b) in ambient coordinates, perpendicular part
    std::vector<Eigen::VectorXd> B(static_cast<std::size_t>(d * d));
    for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) {
            Eigen::VectorXd v(amb);
            for (int c = 0; c < amb; ++c) v[c] = im.hess[i][c](a, b);
            B[a * d + b] = Pp * v;
        }
    if (d == 1) {
        return B[0].norm() / G(0, 0);
    }
    // G-orthonormal frame: columns of R with R^T G R = I
    Eigen::LLT<Eigen::MatrixXd> llt(G);
    Eigen::MatrixXd R = llt.matrixL().toDenseMatrix().transpose().inverse();
    auto Bframe = [&](const Eigen::VectorXd& X, const Eigen::VectorXd& Y) {
        Eigen::VectorXd v = Eigen::VectorXd::Zero(amb);
        const Eigen::VectorXd Xc = R * X, Yc = R * Y;
        for (int a = 0; a < d; ++a)
            for (int b = 0; b < d; ++b) v += Xc[a] * Yc[b] * B[a * d + b];
        return v.norm();
    };
    double best = 0;
    const int nang = 48;
    if (d == 2) {
        for (int p = 0; p < nang; ++p)
            for (int q = 0; q < nang; ++q) {
                Eigen::Vector2d X(std::cos(kPi * p / nang), std::sin(kPi * p / nang));
                Eigen::Vector2d Y(std::cos(kPi * q / nang), std::sin(kPi * q / nang));
                best = std::max(best, Bframe(X, Y));
            }
    } else {
        // deterministic direction sampling on the sphere
        std::mt19937_64 rng(7);
        std::normal_distribution<double> gauss;
        for (int s = 0; s < 512; ++s) {
            Eigen::VectorXd X(d), Y(d);
            for (int a = 0; a < d; ++a) {
                X[a] = gauss(rng);
                Y[a] = gauss(rng);
            }
            X.normalize();
            Y.normalize();
            best = std::max(best, Bframe(X, Y));
        }
    }
    return best;
}

/// tau, volume and the verbatim size formulas. C defaults to 1 and is a
/// reported knob; lambda is supplied by the caller (first_eigenvalue where a
/// torus discretization exists, 1 otherwise).
inline GeometryReport geometry_report(const Immersion& im, double gamma, double domain_measure,
                                      double lambda = 1.0, double C = 1.0, int ambient_n = 0) {
    if (!im.has_second()) throw StateError("geometry_report: immersion lacks second derivatives");
    GeometryReport rep;
    rep.gamma = gamma;
    rep.C = C;
    rep.lambda = lambda;
    double tau = 0, volsum = 0;
    for (std::size_t i = 0; i < im.size(); ++i) {
        tau = std::max(tau, second_fundamental_form_norm(im, i));
        volsum += std::sqrt(std::max(0.0, im.induced_metric(i).determinant()));
    }
    rep.tau = tau;
    rep.vol = volsum / static_cast<double>(im.size()) * domain_measure;
    rep.weinstein_size = C / tau; // +inf when tau == 0
    rep.inj_bound = kPi / (C + tau);
    const double n = ambient_n > 0 ? ambient_n : im.d;
    rep.upsilon = C * std::pow(1.0 + rep.vol * std::pow(tau, 2.0 + gamma + n / 2.0) / lambda, 2.0) *
                  std::pow(tau, gamma);
    return rep;
}

// ---------------------------------------------------------------------------
// Nearby special-Lagrangian solve on flat T^n
// ---------------------------------------------------------------------------

struct SolveOptions {
    double tol = 1e-11;          // sup-norm residual target
    int max_iter = 60;
    double gamma = 0.25;         // Hoelder exponent knob for the Upsilon gate
    double C = 1.0;              // geometry constant knob
    bool allow_newton = true;
};

struct IterationRecord {
    int iter = 0;
    double residual_sup = 0;
    double residual_l2 = 0;
    double contraction_ratio = 0; // vs previous sup
    bool newton_step = false;
};

struct SolveResult {
    TorusField f;                       // mean-zero correction potential
    std::vector<IterationRecord> trace;
    bool upsilon_warning = false;       // initial residual above the Upsilon gate
    double upsilon_gate = 0;
    int iterations = 0;
};

/// Graph immersion of d(f) over the flat torus, with spectral jets; used for
/// geometry reports.
inline Immersion graph_immersion_from_potential(const TorusGrid& g, const std::vector<double>& f) {
    const int d = g.dim();
    std::vector<std::vector<double>> grad(d), hess(static_cast<std::size_t>(d * d)),
        third(static_cast<std::size_t>(d * d * d));
    for (int a = 0; a < d; ++a) grad[a] = spectral_derivative(g, f, a);
    for (int a = 0; a < d; ++a)
        for (int b = a; b < d; ++b) {
            hess[a * d + b] = spectral_derivative(g, grad[a], b);
            hess[b * d + a] = hess[a * d + b];
        }
    for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b)
            for (int c = b; c < d; ++c) {
                third[(a * d + b) * d + c] = spectral_derivative(g, hess[a * d + b], c);
                third[(a * d + c) * d + b] = third[(a * d + b) * d + c];
            }
    Immersion im;
    im.kind = ImmersionKind::GraphOfOneForm;
    im.d = d;
    im.ambient = 2 * d;
    im.params.reserve(g.total());
    im.values.reserve(g.total());
    im.jac.reserve(g.total());
    im.hess.reserve(g.total());
    for (std::size_t i = 0; i < g.total(); ++i) {
        const auto x = g.point(i);
        Eigen::VectorXd p(d), v(2 * d);
        for (int a = 0; a < d; ++a) p[a] = x[a];
        for (int a = 0; a < d; ++a) {
            v[a] = x[a];
            v[d + a] = grad[a][i];
        }
        Eigen::MatrixXd Jm = Eigen::MatrixXd::Zero(2 * d, d);
        for (int a = 0; a < d; ++a) {
            Jm(a, a) = 1.0;
            for (int b = 0; b < d; ++b) Jm(d + a, b) = hess[a * d + b][i];
        }
        std::vector<Eigen::MatrixXd> H2(static_cast<std::size_t>(2 * d),
                                        Eigen::MatrixXd::Zero(d, d));
        for (int a = 0; a < d; ++a)
            for (int b = 0; b < d; ++b)
                for (int c = 0; c < d; ++c) H2[d + a](b, c) = third[(a * d + b) * d + c][i];
        im.params.push_back(std::move(p));
        im.values.push_back(std::move(v));
        im.jac.push_back(std::move(Jm));
        im.hess.push_back(std::move(H2));
    }
    return im;
}

/// Fixed-point (with Newton fallback) solve: find mean-zero f such that the
/// graph of d(f0 + f) over flat T^n has special-Lagrangian residual below
/// opts.tol in sup norm.
inline SolveResult nearby_sl_solve(const TorusField& f0, SolveOptions opts = {}) {
    const TorusGrid& g = f0.grid;
    SolveResult out;
    out.f = TorusField::zeros(g);

    auto residual_of = [&](const TorusField& f) {
        std::vector<double> F(g.total());
        for (std::size_t i = 0; i < F.size(); ++i) F[i] = f0.samples[i] + f.samples[i];
        return sl_residual_cn(g, F);
    };

    auto rho = residual_of(out.f);
    double sup = field_sup(rho);

    // Upsilon gate (soft): geometry report of the initial graph
    {
        double dom = 1;
        for (double L : g.period) dom *= L;
        Immersion im = graph_immersion_from_potential(g, f0.samples);
        std::vector<double> ones(g.total(), 1.0);
        const double lambda = first_eigenvalue(g, ones, 1e-10, 50);
        GeometryReport rep = geometry_report(im, opts.gamma, dom, lambda, opts.C, g.dim());
        out.upsilon_gate = rep.upsilon > 0 ? 1.0 / rep.upsilon : INFINITY;
        out.upsilon_warning = sup > out.upsilon_gate;
    }

    if (sup <= opts.tol) return out; // already special Lagrangian: zero iterations

    double prev_sup = sup;
    int growth_streak = 0, stall_streak = 0;
    bool newton = false;

    for (int it = 1; it <= opts.max_iter; ++it) {
        TorusField rho_f(g, rho);
        TorusField delta = invert_laplacian(rho_f, 1e-6);
        for (auto& x : delta.samples) x = -x;

        if (newton) {
            // refine delta on the full linearization: J delta = -rho with
            // J delta = sum dd delta + B(delta); inner Picard on B.
            std::vector<double> F(g.total());
            for (std::size_t i = 0; i < F.size(); ++i)
                F[i] = f0.samples[i] + out.f.samples[i];
            // Hessian of F per point
            const int d = g.dim();
            std::vector<std::vector<double>> hF(static_cast<std::size_t>(d * d));
            for (int a = 0; a < d; ++a) {
                auto da = spectral_derivative(g, F, a);
                for (int b = a; b < d; ++b) {
                    hF[a * d + b] = spectral_derivative(g, da, b);
                    hF[b * d + a] = hF[a * d + b];
                }
            }
            auto jacobian_apply = [&](const TorusField& v) {
                std::vector<std::vector<double>> hv(static_cast<std::size_t>(d * d));
                for (int a = 0; a < d; ++a) {
                    auto da = spectral_derivative(g, v.samples, a);
                    for (int b = a; b < d; ++b) {
                        hv[a * d + b] = spectral_derivative(g, da, b);
                        hv[b * d + a] = hv[a * d + b];
                    }
                }
                std::vector<double> res(g.total());
                Eigen::MatrixXcd A(d, d);
                Eigen::MatrixXcd dH(d, d);
                for (std::size_t i = 0; i < g.total(); ++i) {
                    for (int a = 0; a < d; ++a)
                        for (int b = 0; b < d; ++b) {
                            A(a, b) = Complex(a == b ? 1.0 : 0.0, hF[a * d + b][i]);
                            dH(a, b) = Complex(0, hv[a * d + b][i]);
                        }
                    const Complex det = A.determinant();
                    res[i] = (det * A.inverse().cwiseProduct(dH.transpose()).sum()).imag();
                }
                return res;
            };
            for (int inner = 0; inner < 8; ++inner) {
                auto Jd = jacobian_apply(delta);
                std::vector<double> lin(g.total());
                for (std::size_t i = 0; i < g.total(); ++i)
                    lin[i] = rho[i] + Jd[i];
                const double m = field_mean(lin);
                for (auto& x : lin) x -= m;
                TorusField corr = invert_laplacian(TorusField(g, lin), 1e-6);
                double cs = 0;
                for (std::size_t i = 0; i < g.total(); ++i) {
                    delta.samples[i] -= corr.samples[i];
                    cs = std::max(cs, std::abs(corr.samples[i]));
                }
                if (cs < 1e-15) break;
            }
        }

        for (std::size_t i = 0; i < g.total(); ++i) out.f.samples[i] += delta.samples[i];
        rho = residual_of(out.f);
        sup = field_sup(rho);

        IterationRecord rec;
        rec.iter = it;
        rec.residual_sup = sup;
        rec.residual_l2 = field_l2(rho);
        rec.contraction_ratio = sup / prev_sup;
        rec.newton_step = newton;
        out.trace.push_back(rec);
        out.iterations = it;

        if (sup <= opts.tol) return out;
        if (sup > prev_sup) {
            if (++growth_streak >= 5) {
                std::ostringstream ss;
                ss << "nearby_sl_solve: residual grew for 5 consecutive steps; trace:";
                for (const auto& r : out.trace) ss << " " << r.residual_sup;
                throw ConvergenceError(ss.str());
            }
        } else {
            growth_streak = 0;
        }
        if (rec.contraction_ratio > 0.9) {
            if (++stall_streak >= 3 && opts.allow_newton) newton = true;
        } else {
            stall_streak = 0;
        }
        prev_sup = sup;
    }
    std::ostringstream ss;
    ss << "nearby_sl_solve: no convergence in " << opts.max_iter
       << " iterations, residual " << fmt(sup);
    throw ConvergenceError(ss.str());
}

} // namespace slag
