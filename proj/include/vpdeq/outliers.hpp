#pragma once

#include <memory>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "vpdeq/dyson.hpp"
#include "vpdeq/spikes.hpp"

namespace vpdeq {

/// A Dyson solve that did not reach its tolerance where a converged solution is required.
class ConvergenceError : public SolverError {
public:
    using SolverError::SolverError;
};

/// Default imaginary part added to real spectral arguments. Small enough that
/// |det| at a genuine root stays well below the default acceptance threshold.
inline constexpr double default_eta_eval = 1e-6;

/// beta(lambda) = I_k - U^* G(lambda I) U Theta, Y diagonal.
/// A real lambda (Im == 0) is evaluated at lambda + i eta_eval.
Eigen::MatrixXcd beta_square(Complex lambda, const SpikeSet& spikes, const VarianceProfile& profile,
                             const Eigen::VectorXd& y_diag, const SolverConfig& config = {},
                             double eta_eval = default_eta_eval);

/// beta~(lambda) = I_k - U^* (Omega(lambda I) - Y)^{-1} U Theta, any Hermitian Y.
Eigen::MatrixXcd beta_tilde_square(Complex lambda, const SpikeSet& spikes, const VarianceProfile& profile,
                                   const Eigen::MatrixXcd& y, const SolverConfig& config = {},
                                   double eta_eval = default_eta_eval);

/// lambda -> det beta(lambda) or det beta~(lambda) for a fixed model.
///
/// Keeps the last Dyson solution and uses it as the initial guess of the next
/// evaluation, so consecutive nearby arguments are cheap. Not thread-safe;
/// give each thread its own copy.
class DeterminantFunction {
public:
    DeterminantFunction(std::shared_ptr<const DysonSystem> system, SpikeSet spikes, bool use_tilde,
                        SolverConfig config = {}, double eta_eval = default_eta_eval);

    /// Throws ConvergenceError when the Dyson solve does not converge.
    Eigen::MatrixXcd beta(Complex lambda);
    Complex det(Complex lambda);
    double det_abs(double lambda) { return std::abs(det(Complex(lambda, 0.0))); }

    const DysonSystem& system() const { return *system_; }
    const SpikeSet& spikes() const { return spikes_; }
    bool use_tilde() const { return use_tilde_; }
    double eta_eval() const { return eta_eval_; }
    /// Forget the warm start.
    void reset() { warm_.reset(); }

private:
    std::shared_ptr<const DysonSystem> system_;
    SpikeSet spikes_;
    bool use_tilde_;
    SolverConfig config_;
    double eta_eval_;
    std::optional<OperatorStieltjes> warm_;
};

struct Window {
    double lo = 0.0;
    double hi = 0.0;
};

struct OutlierCandidate {
    double lambda = 0.0;
    double det_abs = 0.0;
    bool accepted = false;
};

struct OutlierReport {
    /// Sorted by lambda.
    std::vector<OutlierCandidate> candidates;
    double threshold = 1e-3;
    Window search_window;

    std::vector<OutlierCandidate> accepted() const;
    /// Candidate with the smallest |det|; throws if there are none.
    const OutlierCandidate& best() const;
};

struct OutlierSearchConfig {
    double threshold = 1e-3;
    int scan_points = 50;
    bool use_tilde = false;
    double eta_eval = default_eta_eval;
    /// Simplex restarts after the first descent, each with a 10x smaller step.
    int restarts = 2;
    /// Scan on this many threads (cold starts); 1 scans in order with warm starts.
    unsigned threads = 1;
    SolverConfig solver;
};

/// Minimize |det beta(lambda)| over real lambda in the window: coarse scan,
/// then a simplex descent from every local minimum of the scan. Each local
/// minimizer is reported; it is accepted when |det| <= threshold.
OutlierReport locate_outliers(const DysonSystem& system, const SpikeSet& spikes, Window window,
                              const OutlierSearchConfig& config = {});

OutlierReport locate_outliers(const VarianceProfile& profile, const Eigen::MatrixXcd& y,
                              const SpikeSet& spikes, Window window, const OutlierSearchConfig& config = {});

/// Largest grid point (step 0.005) where the density at eta_eval exceeds 1e-3.
double estimate_bulk_edge(const DysonSystem& system, double eta_eval = default_eta_eval,
                          const SolverConfig& config = {});

/// [edge - 0.5, edge + max|theta| + 2].
Window default_search_window(double bulk_edge, const Eigen::VectorXd& theta);

enum class ClosedFormKind { constant, doubly_stochastic };

/// Outlier location predicted by the closed forms of the constant and doubly
/// stochastic profiles for a rank-one rectangular spike; empty below the
/// threshold (N/M)^{1/4} (constant) or 1 (doubly stochastic).
std::optional<double> closed_form_outlier(ClosedFormKind kind, double theta, Eigen::Index n, Eigen::Index m);

}  // namespace vpdeq
