#include "doctest.h"

#include <cmath>

#include "support.hpp"
#include "vpdeq/density.hpp"
#include "vpdeq/dilation.hpp"

using namespace vpdeq;
using oracle::Complex;

namespace {

VarianceProfile zero_herm(Eigen::Index n) { return {Eigen::MatrixXd::Zero(n, n), ProfileMode::hermitian}; }

}  // namespace

TEST_SUITE("density") {

TEST_CASE("stieltjes_trace") {
    CHECK(stieltjes_trace(OperatorStieltjes(Eigen::VectorXcd::Constant(5, Complex(0, -1)))) == Complex(0, -1));
    Eigen::Vector2cd g(Complex(1, -1), Complex(-1, -1));
    CHECK(std::abs(stieltjes_trace(OperatorStieltjes(g)) - Complex(0, -1)) <= 1e-16);
    CHECK_THROWS_AS(stieltjes_trace(OperatorStieltjes()), std::invalid_argument);

    const auto p = doubly_stochastic_profile(50, 5, 1, ProfileMode::hermitian);
    const auto sol = DysonSystem(p).solve(SpectralParameter::scalar(Complex(0, 3), 50));
    CHECK(std::abs(stieltjes_trace(sol.g_square) - Complex(0, -0.302776)) < 1e-6);
}

TEST_CASE("zero noise gives Cauchy kernels") {
    const auto curve = density_curve(zero_herm(4), Eigen::MatrixXcd::Zero(4, 4), {0.0}, 0.01);
    CHECK(curve.values[0] == doctest::Approx(1.0 / (M_PI * 0.01)).epsilon(1e-12));
    CHECK(curve.values[0] == doctest::Approx(31.831).epsilon(1e-4));

    // Half the diagonal at +1 and half at -1.
    const Eigen::Index n = 6;
    Eigen::VectorXd yd(n);
    yd << 1, -1, 1, -1, 1, -1;
    const DysonSystem sys(zero_herm(n), yd);
    const auto grid = make_grid(-2.0, 2.0, 0.05);
    const auto two = density_curve(sys, grid, 0.05);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double expect = 0.5 * oracle::cauchy(grid[i] - 1.0, 0.05) + 0.5 * oracle::cauchy(grid[i] + 1.0, 0.05);
        CHECK(two.values[i] == doctest::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("doubly stochastic density matches the smoothed semicircle") {
    const auto p = doubly_stochastic_profile(120, 8, 5, ProfileMode::hermitian);
    const auto grid = make_grid(-3.0, 3.0, 0.02);
    const auto curve = density_curve(DysonSystem(p), grid, 0.01);
    REQUIRE(curve.all_converged());
    double worst = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        worst = std::max(worst, std::abs(curve.values[i] - oracle::smoothed_semicircle(grid[i], 0.01)));
    }
    CHECK(worst <= 2e-2);
}

TEST_CASE("mass and non-negativity") {
    for (double eta : {0.01, 0.02}) {
        const auto p = constant_profile(80, 80, 1.0, ProfileMode::hermitian);
        const auto grid = make_grid(-2.0 - 20 * eta, 2.0 + 20 * eta, eta / 2);
        const auto curve = density_curve(DysonSystem(p), grid, eta);
        const double mass = integrate(curve);
        CHECK(mass >= 0.95);
        CHECK(mass <= 1.02);
        for (double v : curve.values) CHECK(v >= -1e-12);
    }
}

TEST_CASE("halving eta sharpens isolated peaks") {
    const Eigen::Index n = 10;
    Eigen::VectorXd yd(n);
    for (Eigen::Index i = 0; i < n; ++i) yd(i) = i % 2 ? 2.0 : -2.0;
    const VarianceProfile p(0.05 * Eigen::MatrixXd::Ones(n, n), ProfileMode::hermitian);
    const DysonSystem sys(p, yd);
    double previous = 0.0;
    for (double eta : {0.08, 0.04, 0.02, 0.01}) {
        const auto curve = density_curve(sys, make_grid(1.5, 2.5, 0.001), eta);
        const double peak = *std::max_element(curve.values.begin(), curve.values.end());
        CHECK(peak > previous);
        previous = peak;
    }
}

TEST_CASE("threaded and sequential curves agree") {
    const auto p = normalize_profile(piecewise_profile(40, 40, 1.0, 20.0, ProfileMode::hermitian));
    const DysonSystem sys(p);
    const auto grid = make_grid(-3.0, 3.0, 0.1);
    DensityOptions par;
    par.threads = 3;
    const auto a = density_curve(sys, grid, 0.02);
    const auto b = density_curve(sys, grid, 0.02, {}, par);
    REQUIRE(a.values.size() == b.values.size());
    for (std::size_t i = 0; i < a.values.size(); ++i) CHECK(std::abs(a.values[i] - b.values[i]) <= 1e-9);
}

TEST_CASE("singular-value correction") {
    const double eta = 0.01;
    const auto grid = make_grid(0.0, 3.0, 0.005);

    DensityCurve raw;
    raw.grid = grid;
    raw.eta = eta;
    raw.converged.assign(grid.size(), true);
    for (double t : grid) raw.values.push_back(std::exp(-t));
    const auto same = sv_density_correction(raw, 50, 50);
    for (std::size_t i = 0; i < grid.size(); ++i) CHECK(same.values[i] == doctest::Approx(2.0 * raw.values[i]));

    const double r = (400.0 - 360.0) / (400.0 + 360.0);
    for (std::size_t i = 0; i < grid.size(); ++i) raw.values[i] = r * oracle::cauchy(grid[i], eta);
    const auto gone = sv_density_correction(raw, 360, 400);
    for (double v : gone.values) CHECK(std::abs(v) <= 1e-12);

    CHECK_THROWS_AS(sv_density_correction(raw, 400, 360), std::invalid_argument);
    raw.grid[0] = -0.1;
    CHECK_THROWS_AS(sv_density_correction(raw, 360, 400), std::invalid_argument);
}

TEST_CASE("corrected density of the dilated constant profile lives on the bulk") {
    const Eigen::Index n = 36, m = 40;
    const double eta = 0.01;
    const DilatedModel d = dilate_model(RectangularModel(constant_profile(n, m, 1.0)));
    const auto grid = make_grid(0.0, 3.0, eta / 2);
    const auto curve = sv_density_correction(density_curve(DysonSystem(d.profile, d.y), grid, eta), n, m);
    const double c = static_cast<double>(n) / m;
    const double lo = 1.0 - std::sqrt(c) - 3 * eta, hi = 1.0 + std::sqrt(c) + 3 * eta;
    CHECK(integrate(curve) == doctest::Approx(1.0).epsilon(0.05));
    CHECK(integrate(curve, lo, hi) >= 0.95);
}

TEST_CASE("grids and integration") {
    const auto g = make_grid(0.0, 1.0, 0.1);
    CHECK(g.size() == 11);
    CHECK(g.back() == doctest::Approx(1.0));
    CHECK(make_grid(2.0, 2.0, 0.5).size() == 1);
    CHECK_THROWS_AS(make_grid(1.0, 0.0, 0.1), std::invalid_argument);
    CHECK_THROWS_AS(make_grid(0.0, 1.0, 0.0), std::invalid_argument);

    DensityCurve lin;
    lin.grid = make_grid(0.0, 2.0, 0.5);
    for (double t : lin.grid) lin.values.push_back(t);
    lin.converged.assign(lin.grid.size(), true);
    CHECK(integrate(lin) == doctest::Approx(2.0));
    CHECK(integrate(lin, 0.25, 1.75) == doctest::Approx((1.75 * 1.75 - 0.25 * 0.25) / 2.0));
    CHECK(integrate(lin, -5.0, 5.0) == doctest::Approx(2.0));

    CHECK_THROWS_AS(density_curve(zero_herm(2), Eigen::MatrixXcd::Zero(2, 2), {0.0}, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(density_curve(zero_herm(2), Eigen::MatrixXcd::Zero(2, 2), {}, 0.01), std::invalid_argument);
}

}
