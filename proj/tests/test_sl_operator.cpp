#include <catch2/catch_amalgamated.hpp>

#include "slag/sl_operator.hpp"

#include <random>

using namespace slag;
using Catch::Approx;

namespace {

Eigen::MatrixXd random_symmetric(int n, std::mt19937_64& rng, double scale = 1.0) {
    std::uniform_real_distribution<double> uni(-scale, scale);
    Eigen::MatrixXd H(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) H(i, j) = H(j, i) = uni(rng);
    return H;
}

} // namespace

TEST_CASE("elementary symmetric polynomials") {
    SECTION("identity matrix gives binomials") {
        Eigen::MatrixXd I3 = Eigen::MatrixXd::Identity(3, 3);
        CHECK(elementary_symmetric(I3, 0) == Approx(1.0));
        CHECK(elementary_symmetric(I3, 1) == Approx(3.0));
        CHECK(elementary_symmetric(I3, 2) == Approx(3.0));
        CHECK(elementary_symmetric(I3, 3) == Approx(1.0));
    }
    SECTION("zero matrix") {
        Eigen::MatrixXd Z = Eigen::MatrixXd::Zero(4, 4);
        CHECK(elementary_symmetric(Z, 0) == Approx(1.0));
        for (int k = 1; k <= 4; ++k) CHECK(elementary_symmetric(Z, k) == Approx(0.0).margin(0));
    }
    SECTION("k out of range") {
        Eigen::MatrixXd I2 = Eigen::MatrixXd::Identity(2, 2);
        CHECK_THROWS_AS(elementary_symmetric(I2, 3), ArgumentError);
        CHECK_THROWS_AS(elementary_symmetric(I2, -1), ArgumentError);
    }
    SECTION("det(I + tH) = sum P_k t^k against dense determinant oracle") {
        std::mt19937_64 rng(11);
        for (int rep = 0; rep < 50; ++rep) {
            Eigen::MatrixXd H = random_symmetric(5, rng);
            auto P = elementary_symmetric_all(H);
            for (double t : {0.1, 1.0, 2.0}) {
                double sum = 0, tp = 1;
                for (std::size_t k = 0; k < P.size(); ++k) {
                    sum += P[k] * tp;
                    tp *= t;
                }
                const double direct =
                    (Eigen::MatrixXd::Identity(5, 5) + t * H).determinant();
                CHECK(std::abs(sum - direct) < 1e-9);
            }
        }
    }
    SECTION("Im det(I + iH) = P1 - P3 + P5 against complex determinant") {
        std::mt19937_64 rng(13);
        for (int n = 1; n <= 4; ++n)
            for (int rep = 0; rep < 25; ++rep) {
                Eigen::MatrixXd H = random_symmetric(n, rng);
                Eigen::MatrixXcd A =
                    Eigen::MatrixXcd::Identity(n, n) + Complex(0, 1) * H;
                CHECK(std::abs(im_det_I_plus_iH(H) - A.determinant().imag()) < 1e-12);
            }
    }
}

TEST_CASE("graph residual on flat tori") {
    SECTION("f = 0") {
        TorusGrid g = TorusGrid::cubic(3, 16);
        std::vector<double> f(g.total(), 0.0);
        auto res = sl_residual_cn(g, f);
        CHECK(field_sup(res) < 1e-14);
    }
    SECTION("harmonic rank-2 quadratic Hessian: tr = det = 0") {
        const double eps = 0.3;
        Eigen::MatrixXd H = Eigen::MatrixXd::Zero(3, 3);
        H(0, 0) = eps;
        H(1, 1) = -eps;
        CHECK(im_det_I_plus_iH(H) == Approx(0.0).margin(1e-15));
    }
    SECTION("f = eps |x|^2 / 2 in n = 3: residual Im(1 + i eps)^3 = 3 eps - eps^3") {
        const double eps = 0.17;
        Eigen::MatrixXd H = eps * Eigen::MatrixXd::Identity(3, 3);
        CHECK(im_det_I_plus_iH(H) == Approx(3 * eps - eps * eps * eps).margin(1e-14));
    }
    SECTION("band-limited potential: spectral Hessian path equals pointwise oracle") {
        TorusGrid g = TorusGrid::cubic(2, 32);
        std::vector<double> f(g.total());
        for (std::size_t i = 0; i < g.total(); ++i) {
            const auto x = g.point(i);
            f[i] = 0.2 * std::cos(x[0]) * std::sin(2 * x[1]) + 0.1 * std::sin(x[0] + x[1]);
        }
        auto res = sl_residual_cn(g, f);
        for (std::size_t i = 0; i < g.total(); i += 37) {
            const auto x = g.point(i);
            Eigen::MatrixXd H(2, 2);
            H(0, 0) = -0.2 * std::cos(x[0]) * std::sin(2 * x[1]) - 0.1 * std::sin(x[0] + x[1]);
            H(0, 1) = -0.4 * std::sin(x[0]) * std::cos(2 * x[1]) - 0.1 * std::sin(x[0] + x[1]);
            H(1, 0) = H(0, 1);
            H(1, 1) = -0.8 * std::cos(x[0]) * std::sin(2 * x[1]) - 0.1 * std::sin(x[0] + x[1]);
            CHECK(res[i] == Approx(im_det_I_plus_iH(H)).margin(1e-10));
        }
    }
}

TEST_CASE("pseudo special Lagrangian residual") {
    SECTION("constant 1-form on a flat metric") {
        ConformalMetric m = ConformalMetric::make_flat(3);
        OneFormJet jet;
        jet.alpha = Eigen::Vector3d(0.3, -0.2, 0.5);
        jet.d_alpha = Eigen::Matrix3d::Zero();
        CHECK(psl_residual_at(m, Eigen::Vector3d::Zero(), jet) == Approx(0.0).margin(1e-15));
    }
    SECTION("cross-path equality: pSL(df) = Im det(I + i Hess f) on flat metric") {
        ConformalMetric m = ConformalMetric::make_flat(3);
        std::mt19937_64 rng(5);
        for (int rep = 0; rep < 20; ++rep) {
            Eigen::MatrixXd H = random_symmetric(3, rng, 0.4);
            OneFormJet jet;
            jet.alpha = Eigen::Vector3d::Random();
            jet.d_alpha = H;
            const double psl = psl_residual_at(m, Eigen::Vector3d::Zero(), jet);
            CHECK(psl == Approx(im_det_I_plus_iH(H)).margin(1e-12));
        }
    }
    SECTION("alpha^- = d Re(z^{3/2}) in flat C^3: residual identically zero") {
        ConformalMetric m = ConformalMetric::make_flat(3);
        // symbolic Hessian of Re z^{3/2}: rank-2 block with zero trace and
        // zero determinant; third row/column zero
        for (double r : {0.01, 0.1, 0.5})
            for (double th : {0.3, 2.0, 5.5, 9.0}) {
                const Complex z = std::polar(r, th);
                const Complex c = 0.75 * std::pow(z, -0.5);
                OneFormJet jet;
                jet.alpha = Eigen::Vector3d::Zero();
                jet.alpha[0] = (1.5 * std::pow(z, 0.5)).real();
                jet.alpha[1] = -(1.5 * std::pow(z, 0.5)).imag();
                jet.d_alpha = Eigen::Matrix3d::Zero();
                jet.d_alpha(0, 0) = c.real();
                jet.d_alpha(0, 1) = jet.d_alpha(1, 0) = -c.imag();
                jet.d_alpha(1, 1) = -c.real();
                Eigen::Vector3d x(r * std::cos(th), r * std::sin(th), 1.0);
                CHECK(psl_residual_at(m, x, jet) == Approx(0.0).margin(1e-12));
            }
    }
    SECTION("closedness gate carries the curl") {
        ConformalMetric m = ConformalMetric::make_flat(3);
        OneFormJet jet;
        jet.alpha = Eigen::Vector3d::Zero();
        jet.d_alpha = Eigen::Matrix3d::Zero();
        jet.d_alpha(0, 1) = 0.5;
        jet.d_alpha(1, 0) = -0.5;
        CHECK_THROWS_AS(psl_residual_at(m, Eigen::Vector3d::Zero(), jet), DiagnosticError);
    }
}

TEST_CASE("two-valued splitting") {
    const std::size_t n_theta = 64;
    auto sample = [&](auto f) {
        std::vector<double> v(n_theta);
        for (std::size_t m = 0; m < n_theta; ++m) v[m] = f(4.0 * kPi * m / n_theta);
        return v;
    };
    SECTION("cos(theta/2) is purely odd") {
        auto v = sample([](double th) { return std::cos(th / 2); });
        auto s = split_residual(v, 1, n_theta);
        CHECK(field_sup(s.plus) < 1e-14);
        for (std::size_t i = 0; i < s.minus.size(); ++i)
            CHECK(s.minus[i] == Approx(std::cos(4.0 * kPi * i / n_theta / 2)).margin(1e-14));
    }
    SECTION("cos(theta) is purely even") {
        auto v = sample([](double th) { return std::cos(th); });
        auto s = split_residual(v, 1, n_theta);
        CHECK(field_sup(s.minus) < 1e-14);
    }
    SECTION("mixed input: parts recovered and reconstruction exact") {
        auto v = sample([](double th) { return std::cos(th) + std::cos(th / 2); });
        auto s = split_residual(v, 1, n_theta);
        for (std::size_t i = 0; i < s.plus.size(); ++i) {
            const double th = 4.0 * kPi * i / n_theta;
            CHECK(s.plus[i] == Approx(std::cos(th)).margin(1e-14));
            CHECK(s.minus[i] == Approx(std::cos(th / 2)).margin(1e-14));
            CHECK(s.plus[i] + s.minus[i] == Approx(v[i]).margin(1e-14));
        }
        // idempotence: splitting the even part again leaves it fixed
        std::vector<double> plus_ext(n_theta);
        for (std::size_t i = 0; i < n_theta; ++i) plus_ext[i] = s.plus[i % s.plus.size()];
        auto s2 = split_residual(plus_ext, 1, n_theta);
        CHECK(field_sup(s2.minus) < 1e-14);
        for (std::size_t i = 0; i < s2.plus.size(); ++i)
            CHECK(s2.plus[i] == Approx(s.plus[i]).margin(1e-14));
    }
    SECTION("partial angular domain rejected") {
        std::vector<double> v(31, 0.0);
        CHECK_THROWS_AS(split_residual(v, 1, 31), ArgumentError);
    }
}
