#pragma once

// Cone metrics of angle 4 pi: the family (4r^2 + t^2)(dr^2 + r^2 dtheta^2)
// on the unit disk, first Dirichlet eigenvalues per angular mode, curvature
// of the local branch curve, and the injectivity / Weinstein size formulas.

#include <vector>

#include <Eigen/Dense>

#include "slag/errors.hpp"
#include "slag/util.hpp"

namespace slag {

/// Conformal radial metric rho(r) (dr^2 + r^2 dtheta^2) on the unit disk.
struct RadialMetric {
    double t = 0;
    double disk_radius = 1.0;
    std::function<double(double)> rho;

    double quasi_isometry_ratio(double r_lo = 0.1) const {
        // sup of rho / (4 r^2) - 1 away from the tip; meaningful for t = 0
        double worst = 0;
        for (int i = 0; i < 64; ++i) {
            const double r = r_lo + (disk_radius - r_lo) * i / 63.0;
            worst = std::max(worst, std::abs(rho(r) / (4.0 * r * r) - 1.0));
        }
        return worst;
    }
};

/// The family g_t = (4 r^2 + t^2)(dr^2 + r^2 dtheta^2); t = 0 is the pure
/// cone of angle 4 pi, t > 0 a smooth cap.
inline RadialMetric cone_metric_family(double t) {
    if (t < 0) throw ArgumentError("cone_metric_family: need t >= 0");
    RadialMetric m;
    m.t = t;
    m.rho = [t](double r) { return 4.0 * r * r + t * t; };
    return m;
}

/// First Dirichlet eigenvalue of the Laplacian of rho (dr^2 + r^2 dtheta^2)
/// on the unit disk in angular mode m, by P1 finite elements on a uniform
/// radial grid: stiffness int (u'v' r + m^2 u v / r) dr, mass int rho u v r dr.
inline double radial_dirichlet_eigenvalue(const RadialMetric& metric, int mode, int n_cells) {
    if (n_cells < 8) throw ArgumentError("radial_dirichlet_eigenvalue: grid too coarse");
    const double R = metric.disk_radius;
    const double h = R / n_cells;
    // unknowns: nodes 0..n_cells-1 at r = i h for mode 0 (natural at r=0),
    // nodes 1..n_cells-1 for mode >= 1 (Dirichlet at the tip); Dirichlet rim.
    const int i0 = (mode == 0) ? 0 : 1;
    const int n = n_cells - i0;
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n, n), M = Eigen::MatrixXd::Zero(n, n);
    const double gq[2] = {0.5 - 0.5 / std::sqrt(3.0), 0.5 + 0.5 / std::sqrt(3.0)};
    for (int e = 0; e < n_cells; ++e) {
        const double ra = e * h, rb = ra + h;
        // element matrices over [ra, rb] with hat functions
        double ke[2][2] = {{0, 0}, {0, 0}}, me[2][2] = {{0, 0}, {0, 0}};
        for (double q : gq) {
            const double r = ra + q * h, w = 0.5 * h;
            const double phi[2] = {1.0 - q, q};
            const double dphi[2] = {-1.0 / h, 1.0 / h};
            for (int a = 0; a < 2; ++a)
                for (int b = 0; b < 2; ++b) {
                    ke[a][b] += w * dphi[a] * dphi[b] * r;
                    if (mode > 0 && r > 0)
                        ke[a][b] += w * double(mode) * double(mode) * phi[a] * phi[b] / r;
                    me[a][b] += w * metric.rho(r) * phi[a] * phi[b] * r;
                }
        }
        const int nodes[2] = {e, e + 1};
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b) {
                const int ia = nodes[a] - i0, ib = nodes[b] - i0;
                if (ia < 0 || ib < 0 || ia >= n || ib >= n) continue; // Dirichlet rows
                K(ia, ib) += ke[a][b];
                M(ia, ib) += me[a][b];
            }
    }
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(K, M);
    for (int i = 0; i < es.eigenvalues().size(); ++i)
        if (es.eigenvalues()(i) > 1e-12) return es.eigenvalues()(i);
    throw ConvergenceError("radial_dirichlet_eigenvalue: no positive eigenvalue found");
}

struct EigenvalueReport {
    double lambda = 0;        // Richardson value from two resolutions
    double coarse = 0, fine = 0;
    double disagreement = 0;  // |fine - coarse| / fine
};

/// Two-resolution Richardson eigenvalue of the ground state (angular mode 0
/// unless requested otherwise). Discretization disagreement above max_disagree
/// raises a resolution error.
inline EigenvalueReport dtheta_eigenvalue(const RadialMetric& metric, int n_cells = 800,
                                          int mode = 0, double max_disagree = 0.01) {
    EigenvalueReport rep;
    rep.coarse = radial_dirichlet_eigenvalue(metric, mode, n_cells);
    rep.fine = radial_dirichlet_eigenvalue(metric, mode, 2 * n_cells);
    rep.lambda = (4.0 * rep.fine - rep.coarse) / 3.0;
    rep.disagreement = std::abs(rep.fine - rep.coarse) / std::abs(rep.fine);
    if (rep.disagreement > max_disagree)
        throw ConvergenceError("dtheta_eigenvalue: resolutions disagree by " +
                               fmt(rep.disagreement));
    return rep;
}

/// Curvature of the plane curve s -> (s^2/t^2, s): 2/t^2 at the branch point.
inline std::vector<double> second_fundamental_form_curve(double t,
                                                         const std::vector<double>& s_points) {
    if (!(t > 0)) throw ArgumentError("second_fundamental_form_curve: need t > 0");
    std::vector<double> out;
    out.reserve(s_points.size());
    for (double s : s_points) {
        const double xp = 2.0 * s / (t * t), xpp = 2.0 / (t * t);
        const double yp = 1.0, ypp = 0.0;
        out.push_back(std::abs(xpp * yp - xp * ypp) / std::pow(xp * xp + yp * yp, 1.5));
    }
    return out;
}

/// Verbatim formulas: injectivity radius lower bound pi/(C + tau) and
/// Weinstein neighborhood size C/tau.
inline std::pair<double, double> injectivity_and_weinstein(double tau, double C = 1.0) {
    if (!(tau > 0)) throw ArgumentError("injectivity_and_weinstein: tau must be positive");
    return {kPi / (C + tau), C / tau};
}

} // namespace slag
