#include <catch2/catch_amalgamated.hpp>

#include "slag/torus_solver.hpp"

#include <random>

using namespace slag;
using Catch::Approx;

namespace {

TorusField random_bandlimited(const TorusGrid& g, double hess_sup_target, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    std::vector<double> f(g.total(), 0.0);
    const int modes = 3;
    std::vector<double> amp;
    for (int rep = 0; rep < 8; ++rep) amp.push_back(uni(rng));
    for (std::size_t i = 0; i < g.total(); ++i) {
        const auto x = g.point(i);
        int a = 0;
        double v = 0;
        for (int k1 = 1; k1 <= modes && a < 8; ++k1)
            for (int k2 = 0; k2 <= 1 && a < 8; ++k2) {
                v += amp[a] * std::cos(k1 * x[0] + k2 * x[1 % x.size()] + 0.3 * a);
                ++a;
            }
        f[i] = v;
    }
    TorusField tf(g, f);
    // scale to the requested Hessian sup norm
    double hess_sup = 0;
    for (int axis = 0; axis < g.dim(); ++axis) {
        auto d = spectral_derivative(g, tf.samples, axis);
        for (int b = 0; b < g.dim(); ++b)
            hess_sup = std::max(hess_sup, field_sup(spectral_derivative(g, d, b)));
    }
    for (auto& v : tf.samples) v *= hess_sup_target / hess_sup;
    return tf;
}

} // namespace

TEST_CASE("spectral Laplacian inversion") {
    TorusGrid g = TorusGrid::cubic(1, 64);
    SECTION("h = cos(x1) gives f = -cos(x1)") {
        std::vector<double> h(g.total());
        for (std::size_t i = 0; i < g.total(); ++i) h[i] = std::cos(g.point(i)[0]);
        auto f = invert_laplacian(TorusField(g, h));
        for (std::size_t i = 0; i < g.total(); ++i)
            CHECK(f.samples[i] == Approx(-std::cos(g.point(i)[0])).margin(1e-13));
    }
    SECTION("h = 0 gives f = 0") {
        auto f = invert_laplacian(TorusField::zeros(g));
        CHECK(f.sup() < 1e-15);
    }
    SECTION("nonzero mean rejected with the mean reported") {
        std::vector<double> h(g.total(), 0.25);
        CHECK_THROWS_AS(invert_laplacian(TorusField(g, h)), ArgumentError);
    }
    SECTION("random band-limited: reapplication identity to 1e-12") {
        TorusGrid g3 = TorusGrid::cubic(3, 16);
        TorusField h = random_bandlimited(g3, 1.0, 77);
        const double mean = h.mean();
        for (auto& v : h.samples) v -= mean;
        auto f = invert_laplacian(h, 1e-9);
        auto back = apply_flat_laplacian(f);
        double worst = 0;
        for (std::size_t i = 0; i < g3.total(); ++i)
            worst = std::max(worst, std::abs(back.samples[i] - h.samples[i]));
        CHECK(worst < 1e-12);
        CHECK(std::abs(f.mean()) < 1e-13);
    }
}

TEST_CASE("weighted first eigenvalue") {
    SECTION("flat unit T^1: lambda = (2 pi)^2") {
        TorusGrid g({128}, {1.0});
        std::vector<double> w(g.total(), 1.0);
        CHECK(first_eigenvalue(g, w) == Approx(4.0 * kPi * kPi).epsilon(1e-10));
    }
    SECTION("flat unit T^2: lambda = (2 pi)^2") {
        TorusGrid g({16, 16}, {1.0, 1.0});
        std::vector<double> w(g.total(), 1.0);
        CHECK(first_eigenvalue(g, w) == Approx(4.0 * kPi * kPi).epsilon(1e-10));
    }
    SECTION("weight 1 + 0.1 cos x1 on T^2 against the dense oracle at doubled resolution") {
        TorusGrid g({12, 12}, {2.0 * kPi, 2.0 * kPi});
        std::vector<double> w(g.total());
        for (std::size_t i = 0; i < g.total(); ++i) w[i] = 1.0 + 0.1 * std::cos(g.point(i)[0]);
        const double lam = first_eigenvalue(g, w);

        TorusGrid g2({24, 24}, {2.0 * kPi, 2.0 * kPi});
        std::vector<double> w2(g2.total());
        for (std::size_t i = 0; i < g2.total(); ++i)
            w2[i] = 1.0 + 0.1 * std::cos(g2.point(i)[0]);
        Eigen::MatrixXd A = assemble_weighted_laplacian_dense(g2, w2);
        CHECK((A - A.transpose()).cwiseAbs().maxCoeff() < 1e-12);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
        double oracle = 0;
        for (int i = 0; i < es.eigenvalues().size(); ++i)
            if (es.eigenvalues()(i) > 1e-8) {
                oracle = es.eigenvalues()(i);
                break;
            }
        CHECK(lam == Approx(oracle).epsilon(1e-6));
    }
    SECTION("scaling: lambda(c w) = c lambda(w)") {
        TorusGrid g({10, 10}, {2.0 * kPi, 2.0 * kPi});
        std::vector<double> w(g.total());
        for (std::size_t i = 0; i < g.total(); ++i)
            w[i] = 1.0 + 0.2 * std::sin(g.point(i)[1]);
        const double l1 = first_eigenvalue(g, w);
        std::vector<double> w3 = w;
        for (auto& x : w3) x *= 3.0;
        CHECK(first_eigenvalue(g, w3) == Approx(3.0 * l1).epsilon(1e-10));
    }
    SECTION("nonpositive weight rejected") {
        TorusGrid g({8}, {1.0});
        std::vector<double> w(g.total(), -1.0);
        CHECK_THROWS_AS(first_eigenvalue(g, w), ArgumentError);
    }
}

TEST_CASE("geometry report") {
    SECTION("flat zero section: tau = 0, inj = pi / C") {
        TorusGrid g = TorusGrid::cubic(2, 8);
        std::vector<double> f(g.total(), 0.0);
        Immersion im = graph_immersion_from_potential(g, f);
        GeometryReport rep = geometry_report(im, 0.25, 4.0 * kPi * kPi, 1.0, 1.0, 2);
        CHECK(rep.tau == Approx(0.0).margin(1e-12));
        CHECK(rep.inj_bound == Approx(kPi));
    }
    SECTION("branch curve w^2 = t^2 z: tau = 2/t^2 at the branch point") {
        const double t = 0.5;
        std::vector<Eigen::VectorXd> pts;
        for (double s : {0.0, 0.01, -0.01, 0.1}) {
            Eigen::VectorXd p(1);
            p << s;
            pts.push_back(p);
        }
        auto im = immersion_from_jets(
            ImmersionKind::ParametricCurve, 1, 2, pts,
            [t](const Eigen::VectorXd& p) {
                Eigen::VectorXd v(2);
                v << p[0] * p[0] / (t * t), p[0];
                return v;
            },
            [t](const Eigen::VectorXd& p) {
                Eigen::MatrixXd J(2, 1);
                J << 2.0 * p[0] / (t * t), 1.0;
                return J;
            },
            [t](const Eigen::VectorXd&) {
                std::vector<Eigen::MatrixXd> H(2, Eigen::MatrixXd::Zero(1, 1));
                H[0](0, 0) = 2.0 / (t * t);
                return H;
            });
        GeometryReport rep = geometry_report(im, 0.25, 1.0, 1.0, 1.0, 2);
        CHECK(rep.tau == Approx(2.0 / (t * t)).epsilon(1e-6));
        CHECK(rep.tau == Approx(8.0).epsilon(1e-6));
        // doubling tau halves the Weinstein size exactly
        CHECK(rep.weinstein_size * rep.tau == Approx(rep.C));
        const auto [inj1, size1] = std::pair{kPi / (1.0 + rep.tau), 1.0 / rep.tau};
        CHECK(rep.inj_bound == Approx(inj1));
        CHECK(rep.weinstein_size == Approx(size1));
    }
}

TEST_CASE("nearby special Lagrangian solve") {
    SECTION("f0 = 0: zero iterations") {
        TorusGrid g = TorusGrid::cubic(2, 16);
        auto res = nearby_sl_solve(TorusField::zeros(g));
        CHECK(res.iterations == 0);
        CHECK(res.f.sup() < 1e-15);
    }
    SECTION("random band-limited f0 on T^3 converges below 1e-10") {
        TorusGrid g = TorusGrid::cubic(3, 32);
        TorusField f0 = random_bandlimited(g, 0.05, 2024);
        SolveOptions opts;
        opts.tol = 1e-11;
        auto res = nearby_sl_solve(f0, opts);
        // oracle: re-evaluate the residual of the returned potential
        std::vector<double> F(g.total());
        for (std::size_t i = 0; i < g.total(); ++i) F[i] = f0.samples[i] + res.f.samples[i];
        CHECK(field_sup(sl_residual_cn(g, F)) < 1e-10);
        CHECK(std::abs(res.f.mean()) < 1e-12);
        // contraction ratio <= 0.5 from the second record onward
        for (std::size_t i = 1; i < res.trace.size(); ++i)
            CHECK(res.trace[i].contraction_ratio <= 0.5);
        // idempotence: re-running from the output does nothing
        TorusField f1(g, F);
        auto res2 = nearby_sl_solve(f1, opts);
        CHECK(res2.iterations == 0);
    }
}
