#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "support.hpp"
#include "vpdeq/density.hpp"
#include "vpdeq/sampler.hpp"

using namespace vpdeq;
using oracle::Complex;

TEST_SUITE("sampler") {

TEST_CASE("zero profiles give zero matrices") {
    const VarianceProfile herm(Eigen::MatrixXd::Zero(5, 5), ProfileMode::hermitian);
    CHECK(sample_gue_profile(herm, 1).cwiseAbs().maxCoeff() == 0.0);
    const VarianceProfile rect(Eigen::MatrixXd::Zero(3, 4), ProfileMode::rectangular);
    CHECK(sample_rect_gaussian(rect, 1).cwiseAbs().maxCoeff() == 0.0);
    CHECK_THROWS_AS(sample_gue_profile(rect, 1), std::invalid_argument);
    CHECK_THROWS_AS(sample_rect_gaussian(herm, 1), std::invalid_argument);
}

TEST_CASE("sampled GUE matrices are exactly Hermitian and reproducible") {
    const auto p = bernoulli_profile(30, 30, 0.6, 2, ProfileMode::hermitian);
    const Eigen::MatrixXcd h = sample_gue_profile(p, 9);
    CHECK((h - h.adjoint()).cwiseAbs().maxCoeff() == 0.0);
    CHECK((h.diagonal().imag().array() == 0.0).all());
    CHECK(h == sample_gue_profile(p, 9));
    CHECK(h != sample_gue_profile(p, 10));
    // Zero variances stay zero.
    CHECK(((p.entries().array() == 0.0).cast<double>() * h.cwiseAbs().array()).maxCoeff() == 0.0);
}

TEST_CASE("off-diagonal real part has variance 1 / (2N)") {
    const Eigen::Index n = 200;
    const auto p = constant_profile(n, n, 1.0, ProfileMode::hermitian);
    double s = 0.0, s2 = 0.0;
    const int draws = 2000;
    for (int k = 0; k < draws; ++k) {
        Rng rng(derive_seed(4, k));
        const double x = sample_gue_profile(p, rng)(0, 1).real();
        s += x;
        s2 += x * x;
    }
    const double var = s2 / draws - (s / draws) * (s / draws);
    CHECK(var == doctest::Approx(1.0 / (2.0 * n)).epsilon(0.1));
}

TEST_CASE("property: entry variances follow the profile") {
    const Eigen::MatrixXd g = oracle::random_matrix(4, 4, 5, 0.5, 3.0);
    const VarianceProfile herm(0.5 * (g + g.transpose()), ProfileMode::hermitian);
    const VarianceProfile rect(oracle::random_matrix(3, 5, 6, 0.5, 3.0), ProfileMode::rectangular);
    const int draws = 4000;
    Eigen::MatrixXd vh = Eigen::MatrixXd::Zero(4, 4), vr = Eigen::MatrixXd::Zero(3, 5);
    for (int k = 0; k < draws; ++k) {
        Rng rng(derive_seed(12, k));
        vh += sample_gue_profile(herm, rng).cwiseAbs2();
        vr += sample_rect_gaussian(rect, rng).cwiseAbs2();
    }
    vh /= draws;
    vr /= draws;
    CHECK(((vh.array() / (herm.entries().array() / 4.0)) - 1.0).abs().maxCoeff() <= 0.1);
    CHECK(((vr.array() / (rect.entries().array() / 5.0)) - 1.0).abs().maxCoeff() <= 0.1);
}

TEST_CASE("rectangular entries are centred") {
    const auto p = constant_profile(3, 4, 1.0);
    const int draws = 5000;
    Eigen::MatrixXcd sum = Eigen::MatrixXcd::Zero(3, 4);
    for (int k = 0; k < draws; ++k) sum += sample_rect_gaussian(p, derive_seed(8, k));
    const Eigen::MatrixXcd mean = sum / static_cast<double>(draws);
    // Each part of an entry has standard deviation sqrt(1 / (2 * 4)).
    const double se = std::sqrt(1.0 / 8.0 / draws);
    CHECK(mean.real().cwiseAbs().maxCoeff() <= 3.5 * se);
    CHECK(mean.imag().cwiseAbs().maxCoeff() <= 3.5 * se);
}

TEST_CASE("largest singular value sits at the bulk edge") {
    const auto p = constant_profile(360, 400, 1.0);
    const double top = singular_values(sample_rect_gaussian(p, 2024))(0);
    CHECK(top >= 1.90);
    CHECK(top <= 2.00);
}

TEST_CASE("empirical spectrum") {
    const auto z = empirical_spectrum(Eigen::MatrixXcd::Zero(3, 3), Complex(0, 1));
    CHECK(std::abs(z.g_emp - Complex(0, -1)) <= 1e-15);

    Eigen::MatrixXcd d = Eigen::MatrixXcd::Zero(2, 2);
    d(0, 0) = 1.0;
    d(1, 1) = -1.0;
    const auto two = empirical_spectrum(d, Complex(0, 1));
    CHECK(std::abs(two.g_emp - Complex(0, -0.5)) <= 1e-15);
    CHECK(two.eigenvalues(0) == doctest::Approx(-1.0));

    const auto h = sample_gue_profile(constant_profile(50, 50, 1.0, ProfileMode::hermitian), 3);
    const Complex lambda(0.3, 0.2);
    const Eigen::MatrixXcd res = (lambda * Eigen::MatrixXcd::Identity(50, 50) - h).inverse();
    CHECK(std::abs(empirical_spectrum(h, lambda).g_emp - res.trace() / 50.0) <= 1e-10);

    Eigen::MatrixXcd bad = Eigen::MatrixXcd::Zero(2, 2);
    bad(0, 1) = 1.0;
    CHECK_THROWS_AS(empirical_spectrum(bad, Complex(0, 1)), std::invalid_argument);
    CHECK_THROWS_AS(empirical_spectrum(d, Complex(0, 0)), std::invalid_argument);
}

TEST_CASE("one large draw follows the semicircle") {
    const Eigen::Index n = 1000;
    const auto h = sample_gue_profile(constant_profile(n, n, 1.0, ProfileMode::hermitian), 5);
    const Eigen::VectorXd ev = empirical_spectrum(h, Complex(0, 1)).eigenvalues;
    double ks = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double f = oracle::semicircle_cdf(ev(i));
        ks = std::max({ks, std::abs(f - static_cast<double>(i) / n), std::abs(f - static_cast<double>(i + 1) / n)});
    }
    CHECK(ks < 0.05);
}

TEST_CASE("master equality: trivial and scalar cases") {
    const VarianceProfile zero(Eigen::MatrixXd::Zero(4, 4), ProfileMode::hermitian);
    CHECK(check_master_equality(zero, Eigen::MatrixXcd::Zero(4, 4), SpectralParameter::scalar(Complex(0, 1), 4),
                                {1, 50, 4}) == 0.0);

    // N = 1, gamma^2 = 1, lambda = 2i: E[x / (lambda - x)] and E[1 / (lambda - x)^2], x ~ N(0, 1).
    const Complex lambda(0.0, 2.0);
    auto gauss = [](double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI); };
    auto integrate_c = [&](auto f) {
        const double re = oracle::simpson([&](double x) { return (f(x) * gauss(x)).real(); }, -12.0, 12.0, 20000);
        const double im = oracle::simpson([&](double x) { return (f(x) * gauss(x)).imag(); }, -12.0, 12.0, 20000);
        return Complex(re, im);
    };
    const Complex lhs = integrate_c([&](double x) { return x / (lambda - x); });
    const Complex rhs = integrate_c([&](double x) { return 1.0 / ((lambda - x) * (lambda - x)); });
    CHECK(std::abs(lhs - rhs) <= 1e-10);

    const VarianceProfile one(Eigen::MatrixXd::Ones(1, 1), ProfileMode::hermitian);
    const auto est = estimate_master_equality(one, Eigen::MatrixXcd::Zero(1, 1), SpectralParameter::scalar(lambda, 1),
                                              {17, 20000, 1});
    CHECK(std::abs(est.lhs(0, 0) - lhs) <= 3.0 * est.lhs_stderr(0, 0));
    CHECK(std::abs(est.rhs(0, 0) - rhs) <= 3.0 * est.rhs_stderr(0, 0));
    CHECK(est.lhs_stderr(0, 0) > 0.0);
}

TEST_CASE("master equality estimates do not depend on the thread count") {
    const auto p = constant_profile(10, 10, 1.0, ProfileMode::hermitian);
    const SampleBatch batch{3, 100, 10};
    const auto lam = SpectralParameter::scalar(Complex(0.2, 1.0), 10);
    const auto a = estimate_master_equality(p, Eigen::MatrixXcd::Zero(10, 10), lam, batch, 1);
    const auto b = estimate_master_equality(p, Eigen::MatrixXcd::Zero(10, 10), lam, batch, 3);
    CHECK(a.lhs == b.lhs);
    CHECK(a.rhs == b.rhs);
    CHECK(a.deviation == b.deviation);
    CHECK_THROWS_AS(estimate_master_equality(p, Eigen::MatrixXcd::Zero(10, 10), lam, {3, 0, 10}), std::invalid_argument);
}

TEST_CASE("master equality at N = 50") {
    const auto p = constant_profile(50, 50, 1.0, ProfileMode::hermitian);
    const double dev = check_master_equality(p, Eigen::MatrixXcd::Zero(50, 50),
                                             SpectralParameter::scalar(Complex(0, 1), 50), {2000, 2000, 50});
    CHECK(dev <= 5.0 / std::sqrt(2000.0));
}

TEST_CASE("concentration check on a small model") {
    const auto p = constant_profile(100, 100, 1.0, ProfileMode::hermitian);
    const auto chk = validate_concentration(p, Eigen::MatrixXcd::Zero(100, 100), Complex(0.0, 1.0), {5, 20, 100});
    CHECK(chk.errors.size() == 20);
    CHECK(chk.bound.admissible);
    CHECK(std::abs(chk.g_square - oracle::semicircle_g(Complex(0.0, 1.0))) <= 1e-10);
    CHECK(chk.pass_rate() >= 0.95);
}

}
