#pragma once

#include <complex>
#include <optional>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "vpdeq/profile.hpp"

namespace vpdeq {

using Complex = std::complex<double>;

/// Raised when an iteration produces NaN or Inf.
class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Diagonal of a spectral argument Lambda with strictly positive imaginary parts.
class SpectralParameter {
public:
    explicit SpectralParameter(Eigen::VectorXcd diag);
    static SpectralParameter scalar(Complex lambda, Eigen::Index n);

    const Eigen::VectorXcd& diag() const { return diag_; }
    Eigen::Index size() const { return diag_.size(); }
    double min_imag() const { return min_imag_; }
    /// Operator norm of (Im Lambda)^{-1}.
    double inv_imag_norm() const { return 1.0 / min_imag_; }

private:
    Eigen::VectorXcd diag_;
    double min_imag_ = 0.0;
};

/// Diagonal of an operator-valued Stieltjes transform; imaginary parts <= 0.
class OperatorStieltjes {
public:
    OperatorStieltjes() = default;
    explicit OperatorStieltjes(Eigen::VectorXcd diag);

    const Eigen::VectorXcd& diag() const { return diag_; }
    Eigen::Index size() const { return diag_.size(); }
    /// Operator norm, i.e. the largest modulus on the diagonal.
    double norm() const;

private:
    Eigen::VectorXcd diag_;
};

struct SolverConfig {
    double tolerance = 1e-12;
    int max_iterations = 10000;
    /// Mixing weight alpha of G <- (1 - alpha) G + alpha psi(G).
    double damping = 1.0;
    /// Halve alpha (down to 1/16) when the residual stops decreasing over 5 steps.
    bool adaptive_damping = true;
    /// Number of past residuals used for Anderson extrapolation; 0 gives the
    /// plain damped fixed-point iteration.
    int anderson_depth = 8;
    std::optional<OperatorStieltjes> initial;
    bool record_history = false;

    void validate() const;
};

struct DysonSolution {
    OperatorStieltjes g_square;
    int iterations = 0;
    /// sup-norm of G - psi(G) at the returned G.
    double residual = 0.0;
    bool converged = false;
    /// gamma_max^2 * ||(Im Lambda)^{-1}||^2 < 1, where psi is a strict contraction.
    bool contraction_certified = false;
    double final_damping = 1.0;
    /// Residual after each psi evaluation, when requested.
    std::vector<double> residual_history;
};

/// R(G)(i) = sum_j gamma^2(i, j) / N * G(j) for a hermitian profile.
Eigen::VectorXcd r_map(const VarianceProfile& profile, const Eigen::VectorXcd& g);

/// The fixed-point problem G = Delta[(Lambda - R(G) - Y)^{-1}] for one
/// profile and deformation, reusable across spectral parameters.
///
/// A diagonal Y takes the vector path: each step is one product with the
/// scaled profile followed by entrywise reciprocals. Otherwise each step
/// factorizes the shifted matrix and keeps the diagonal of its inverse.
class DysonSystem {
public:
    /// y must be Hermitian of the profile's size. Exactly diagonal y selects the vector path.
    DysonSystem(const VarianceProfile& profile, const Eigen::MatrixXcd& y);
    DysonSystem(const VarianceProfile& profile, const Eigen::VectorXd& y_diag);
    /// Y = 0.
    explicit DysonSystem(const VarianceProfile& profile);

    Eigen::Index size() const { return scaled_profile_.rows(); }
    bool diagonal_deformation() const { return !y_full_.has_value(); }
    double gamma_max_sq() const { return gamma_max_sq_; }
    const Eigen::VectorXd& y_diag() const { return y_diag_; }
    /// Dense Y (materialized on demand for the vector path).
    Eigen::MatrixXcd y_dense() const;

    Eigen::VectorXcd r_map(const Eigen::VectorXcd& g) const;
    /// psi_Lambda(G) = Delta[(Lambda - R(G) - Y)^{-1}].
    Eigen::VectorXcd psi(const SpectralParameter& lambda, const Eigen::VectorXcd& g) const;
    DysonSolution solve(const SpectralParameter& lambda, const SolverConfig& config = {}) const;

    /// (Omega - Y)^{-1} as a dense matrix, Omega = Lambda - R(G).
    Eigen::MatrixXcd shifted_resolvent(const Eigen::VectorXcd& omega) const;

private:
    void check_lambda(const SpectralParameter& lambda) const;

    Eigen::MatrixXd scaled_profile_;  // Gamma / N
    double gamma_max_sq_ = 0.0;
    Eigen::VectorXd y_diag_;
    std::optional<Eigen::MatrixXcd> y_full_;
};

OperatorStieltjes psi_step(const VarianceProfile& profile, const Eigen::MatrixXcd& y,
                           const SpectralParameter& lambda, const OperatorStieltjes& g);

DysonSolution solve_dyson(const VarianceProfile& profile, const Eigen::MatrixXcd& y,
                          const SpectralParameter& lambda, const SolverConfig& config = {});

/// Omega(Lambda) = Lambda - R(G(Lambda)). Throws if the solution did not converge.
Eigen::VectorXcd omega_square(const VarianceProfile& profile, const DysonSolution& solution,
                              const SpectralParameter& lambda);

/// Inputs of the concentration estimates for the trace and operator-valued
/// deterministic equivalents.
struct ConcentrationBound {
    double gamma_max = 1.0;
    double delta = 0.5;
    double d = 2.0;
    Eigen::Index n = 1;
    double im_lambda = 1.0;
    bool diagonal_y = false;
};

struct ConcentrationEstimate {
    /// Bound on the operator norm of G_H(Lambda) - G_square(Lambda).
    double epsilon = 0.0;
    /// Bound on |g_H(lambda) - g_square(lambda)| for scalar Lambda = lambda I.
    double epsilon_tilde = 0.0;
    /// Whether Im lambda satisfies the lower bound under which the estimates hold.
    bool admissible = false;
    double im_lambda_threshold = 0.0;
};

ConcentrationEstimate concentration_bound(const ConcentrationBound& params);

}  // namespace vpdeq
