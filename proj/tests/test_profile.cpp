#include "doctest.h"

#include <cmath>

#include "support.hpp"
#include "vpdeq/profile.hpp"

using namespace vpdeq;

TEST_SUITE("profile") {

TEST_CASE("constant profiles") {
    const auto p = constant_profile(2, 2, 1.0);
    CHECK(p.entries() == Eigen::MatrixXd::Ones(2, 2));
    CHECK(p.mode() == ProfileMode::rectangular);

    const auto big = constant_profile(360, 400, 1.0);
    CHECK(big.rows() == 360);
    CHECK(big.cols() == 400);
    CHECK(big.normalization() == doctest::Approx(1.0));

    const auto zero = constant_profile(1, 1, 0.0);
    CHECK(zero.entries()(0, 0) == 0.0);
    CHECK(zero.gamma_max_sq() == 0.0);

    CHECK_THROWS_AS(constant_profile(0, 3, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(constant_profile(3, 3, -1.0), std::invalid_argument);
    CHECK_THROWS_AS(constant_profile(2, 3, 1.0, ProfileMode::hermitian), std::invalid_argument);
}

TEST_CASE("validation of raw entries") {
    Eigen::MatrixXd bad(2, 2);
    bad << 1, 2, 3, 1;
    CHECK_THROWS_AS(VarianceProfile(bad, ProfileMode::hermitian), std::invalid_argument);
    CHECK_NOTHROW(VarianceProfile(bad, ProfileMode::rectangular));
    bad(0, 1) = std::nan("");
    CHECK_THROWS_AS(VarianceProfile(bad, ProfileMode::rectangular), std::invalid_argument);
    CHECK_THROWS_AS(VarianceProfile(Eigen::MatrixXd(0, 0), ProfileMode::rectangular), std::invalid_argument);
}

TEST_CASE("piecewise block layout") {
    const double a = 0.25, b = 3.0;
    const auto p = piecewise_profile(4, 4, a, b);
    Eigen::MatrixXd expect(4, 4);
    expect << a, b, b, b, b, a, a, a, b, a, a, a, b, a, a, a;
    CHECK(p.entries() == expect);

    const auto flat = piecewise_profile(4, 4, 2.0, 2.0);
    CHECK(flat.entries() == constant_profile(4, 4, 2.0).entries());

    const auto fig = normalize_profile(piecewise_profile(360, 400, 1.0, 200.0));
    CHECK(fig.normalization() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(fig.entries()(0, 399) / fig.entries()(0, 0) == doctest::Approx(200.0));
    CHECK(fig.entries()(0, 0) == doctest::Approx(16.0 / 1210.0).epsilon(1e-12));

    CHECK_THROWS_AS(piecewise_profile(6, 4, 1.0, 2.0), std::invalid_argument);
}

TEST_CASE("bernoulli profiles") {
    const auto full = bernoulli_profile(20, 30, 1.0, 5);
    CHECK((full.entries().array() == 1.0).all());

    const auto x = bernoulli_profile(50, 60, 0.3, 17);
    const auto y = bernoulli_profile(50, 60, 0.3, 17);
    CHECK(x.entries() == y.entries());
    CHECK(x.normalization() == doctest::Approx(1.0).epsilon(1e-12));

    // The common value is 1 / (fraction of nonzero entries).
    const auto sparse = bernoulli_profile(360, 400, 5.0 / 400.0, 1);
    const double frac = (sparse.entries().array() > 0.0).cast<double>().mean();
    CHECK(sparse.gamma_max_sq() == doctest::Approx(1.0 / frac).epsilon(1e-12));
    CHECK(sparse.gamma_max_sq() == doctest::Approx(80.0).epsilon(0.05));

    // gamma_max^2 of about 72 corresponds to p = 5 / N.
    const auto figure = bernoulli_profile(360, 400, 5.0 / 360.0, 1);
    CHECK(figure.gamma_max_sq() == doctest::Approx(72.0).epsilon(0.05));

    CHECK_THROWS_AS(bernoulli_profile(4, 4, 0.0, 1), std::invalid_argument);
    CHECK_THROWS_AS(bernoulli_profile(4, 4, 1.5, 1), std::invalid_argument);

    const auto herm = bernoulli_profile(30, 30, 0.4, 9, ProfileMode::hermitian);
    CHECK(herm.entries() == herm.entries().transpose());
}

TEST_CASE("bernoulli zero fraction over seeds") {
    double zeros = 0.0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto p = bernoulli_profile(200, 200, 0.5, seed);
        zeros += (p.entries().array() == 0.0).cast<double>().mean();
    }
    CHECK(std::abs(zeros / 10.0 - 0.5) <= 0.05);
}

TEST_CASE("doubly stochastic profiles") {
    const auto one = doubly_stochastic_profile(400, 1, 3);
    CHECK(one.gamma_max_sq() == doctest::Approx(400.0));
    const Eigen::MatrixXd perm = one.entries() / 400.0;
    CHECK(((perm.array() == 0.0) || (perm.array() == 1.0)).all());

    const auto eight = doubly_stochastic_profile(400, 8, 3);
    CHECK(eight.gamma_max_sq() <= 400.0);
    CHECK(eight.gamma_max_sq() >= 100.0);

    for (std::uint64_t seed : {1u, 2u, 3u}) {
        for (Eigen::Index k : {1, 3, 8}) {
            for (auto mode : {ProfileMode::rectangular, ProfileMode::hermitian}) {
                const auto p = doubly_stochastic_profile(37, k, seed, mode);
                const Eigen::MatrixXd s = p.entries() / 37.0;
                CHECK((s.rowwise().sum().array() - 1.0).abs().maxCoeff() <= 1e-12);
                CHECK((s.colwise().sum().array() - 1.0).abs().maxCoeff() <= 1e-12);
            }
        }
    }
    CHECK_THROWS_AS(doubly_stochastic_profile(5, 0, 1), std::invalid_argument);
}

TEST_CASE("normalization") {
    const auto ones = constant_profile(12, 16, 1.0);
    CHECK(normalize_profile(ones).entries() == ones.entries());

    const auto base = normalize_profile(VarianceProfile(oracle::random_matrix(8, 12, 4), ProfileMode::rectangular));
    const auto scaled = VarianceProfile(4.0 * base.entries(), ProfileMode::rectangular);
    CHECK((normalize_profile(scaled).entries() - base.entries()).cwiseAbs().maxCoeff() <= 1e-14);

    const auto thirty = normalize_profile(base, 30.0);
    CHECK(thirty.normalization() == doctest::Approx(30.0).epsilon(1e-13));

    CHECK_THROWS_AS(normalize_profile(constant_profile(3, 3, 0.0)), std::invalid_argument);
    CHECK_THROWS_AS(normalize_profile(ones, 0.0), std::invalid_argument);
}

TEST_CASE("property: normalization is idempotent and generators are non-negative") {
    for (unsigned seed = 0; seed < 20; ++seed) {
        const VarianceProfile p(oracle::random_matrix(6 + seed, 9, seed), ProfileMode::rectangular);
        const auto once = normalize_profile(p, 2.5);
        const auto twice = normalize_profile(once, 2.5);
        CHECK((once.entries() - twice.entries()).cwiseAbs().maxCoeff() <= 1e-14);
        CHECK((bernoulli_profile(8, 8, 0.5, seed).entries().array() >= 0.0).all());
        CHECK((doubly_stochastic_profile(8, 2, seed).entries().array() >= 0.0).all());
    }
}

TEST_CASE("mode names") {
    CHECK(to_string(ProfileMode::hermitian) == "hermitian");
    CHECK(parse_profile_mode("rectangular") == ProfileMode::rectangular);
    CHECK_THROWS_AS(parse_profile_mode("square"), std::invalid_argument);
}

}
