#pragma once

// Independent reference computations used as test oracles.

#include <chrono>
#include <cmath>
#include <complex>
#include <filesystem>
#include <functional>
#include <random>
#include <string>

#include <Eigen/Dense>

namespace oracle {

using Complex = std::complex<double>;

/// Stieltjes transform of the standard semicircle law on [-2, 2], branch with Im <= 0 for Im z > 0.
inline Complex semicircle_g(Complex z) {
    const Complex s = std::sqrt(z - 2.0) * std::sqrt(z + 2.0);
    return (z - s) / 2.0;
}

inline double cauchy(double t, double eta) { return eta / (M_PI * (t * t + eta * eta)); }

/// Composite Simpson rule with n (even) intervals.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n) {
    if (n % 2) ++n;
    const double h = (b - a) / n;
    double s = f(a) + f(b);
    for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
    return s * h / 3.0;
}

/// Semicircle density convolved with the Cauchy kernel of width eta, by quadrature
/// in the angle s = 2 cos(phi).
inline double smoothed_semicircle(double t, double eta) {
    auto f = [&](double phi) {
        const double s = 2.0 * std::cos(phi);
        const double w = 2.0 * std::sin(phi);
        return w * w / (2.0 * M_PI) * cauchy(t - s, eta);
    };
    return simpson(f, 0.0, M_PI, 40000);
}

/// Cumulative distribution function of the standard semicircle law.
inline double semicircle_cdf(double x) {
    if (x <= -2.0) return 0.0;
    if (x >= 2.0) return 1.0;
    return 0.5 + (x * std::sqrt(4.0 - x * x) / 4.0 + std::asin(x / 2.0)) / M_PI;
}

/// Haar-ish random orthonormal columns from a test-local generator.
inline Eigen::MatrixXcd random_orthonormal(Eigen::Index n, Eigen::Index k, unsigned seed) {
    std::mt19937 gen(seed);
    std::normal_distribution<double> nd;
    Eigen::MatrixXcd a(n, k);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < k; ++j) a(i, j) = Complex(nd(gen), nd(gen));
    }
    Eigen::HouseholderQR<Eigen::MatrixXcd> qr(a);
    return qr.householderQ() * Eigen::MatrixXcd::Identity(n, k);
}

inline Eigen::MatrixXd random_matrix(Eigen::Index n, Eigen::Index m, unsigned seed, double lo = 0.0, double hi = 1.0) {
    std::mt19937 gen(seed);
    std::uniform_real_distribution<double> ud(lo, hi);
    Eigen::MatrixXd a(n, m);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < m; ++j) a(i, j) = ud(gen);
    }
    return a;
}

/// Fresh empty directory under the system temp path.
inline std::filesystem::path scratch_dir(const std::string& tag) {
    static int counter = 0;
    const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
    auto dir = std::filesystem::temp_directory_path() /
               ("vpdeq_" + tag + "_" + std::to_string(stamp) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace oracle
