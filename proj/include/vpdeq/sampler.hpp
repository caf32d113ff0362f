#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "vpdeq/dyson.hpp"
#include "vpdeq/random.hpp"

namespace vpdeq {

struct SampleBatch {
    std::uint64_t seed = 0;
    int count = 1;
    Eigen::Index n = 0;

    void validate() const;
};

/// N x N Hermitian matrix with entries gamma(i, j) x_ij / sqrt(N); x real
/// standard Gaussian on the diagonal and standard complex Gaussian above it.
/// The lower triangle is the conjugate of the upper one.
Eigen::MatrixXcd sample_gue_profile(const VarianceProfile& profile, Rng& rng);
Eigen::MatrixXcd sample_gue_profile(const VarianceProfile& profile, std::uint64_t seed);

/// N x M matrix with entries gamma(i, j) x_ij / sqrt(M), x i.i.d. standard complex Gaussian.
Eigen::MatrixXcd sample_rect_gaussian(const VarianceProfile& profile, Rng& rng);
Eigen::MatrixXcd sample_rect_gaussian(const VarianceProfile& profile, std::uint64_t seed);

struct EmpiricalSpectrum {
    /// (1/N) sum_i 1 / (lambda - lambda_i).
    Complex g_emp;
    /// Ascending.
    Eigen::VectorXd eigenvalues;
};

/// Throws std::invalid_argument unless h is Hermitian (relative 1e-12) and Im lambda > 0.
EmpiricalSpectrum empirical_spectrum(const Eigen::MatrixXcd& h, Complex lambda);

/// Descending.
Eigen::VectorXd singular_values(const Eigen::MatrixXcd& a);

struct MasterEqualityEstimate {
    /// Sample means of X (Lambda - H)^{-1} and R(G_H(Lambda)) (Lambda - H)^{-1}.
    Eigen::MatrixXcd lhs;
    Eigen::MatrixXcd rhs;
    /// Entrywise standard errors of the two means.
    Eigen::MatrixXd lhs_stderr;
    Eigen::MatrixXd rhs_stderr;
    /// Operator norm of lhs - rhs.
    double deviation = 0.0;
    int count = 0;
};

/// Monte Carlo estimate of both sides of E[X (Lambda - H)^{-1}] = E[R(G_H) (Lambda - H)^{-1}]
/// with H = X + Y. Draw k uses Rng(derive_seed(batch.seed, k)); results do not
/// depend on the thread count.
MasterEqualityEstimate estimate_master_equality(const VarianceProfile& profile, const Eigen::MatrixXcd& y,
                                                const SpectralParameter& lambda, const SampleBatch& batch,
                                                unsigned threads = 1);

double check_master_equality(const VarianceProfile& profile, const Eigen::MatrixXcd& y,
                             const SpectralParameter& lambda, const SampleBatch& batch, unsigned threads = 1);

struct ConcentrationCheck {
    Complex g_square;
    ConcentrationEstimate bound;
    /// |g_emp - g_square| per draw.
    std::vector<double> errors;
    int passed = 0;

    double pass_rate() const;
};

/// Draw batch.count matrices H = X + Y and compare g_emp(lambda) with the
/// deterministic equivalent against the epsilon~ bound for (delta, d).
ConcentrationCheck validate_concentration(const VarianceProfile& profile, const Eigen::MatrixXcd& y,
                                          Complex lambda, const SampleBatch& batch, double delta = 0.5,
                                          double d = 2.0, const SolverConfig& config = {}, unsigned threads = 1);

}  // namespace vpdeq
