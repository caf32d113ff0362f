#pragma once

#include <vector>

#include <Eigen/Dense>

#include "vpdeq/dyson.hpp"

namespace vpdeq {

/// Smoothed spectral density sampled on a real grid.
struct DensityCurve {
    std::vector<double> grid;
    std::vector<double> values;
    double eta = 0.01;
    /// Per grid point: did the Dyson solve at t + i eta converge.
    std::vector<bool> converged;

    bool all_converged() const;
};

/// (1/N) Tr G, the scalar Stieltjes transform of an operator-valued one.
Complex stieltjes_trace(const OperatorStieltjes& g);

struct DensityOptions {
    /// Solve grid points independently on this many threads. When 1, points
    /// are solved in grid order and each solve starts from its predecessor.
    unsigned threads = 1;
};

/// t -> -(1/pi) Im g(t + i eta) from the deterministic equivalent.
DensityCurve density_curve(const DysonSystem& system, const std::vector<double>& grid, double eta,
                           const SolverConfig& config = {}, const DensityOptions& options = {});

DensityCurve density_curve(const VarianceProfile& profile, const Eigen::MatrixXcd& y,
                           const std::vector<double>& grid, double eta,
                           const SolverConfig& config = {}, const DensityOptions& options = {});

/// Singular-value density of an n x m model (n <= m) from the density of its
/// (n + m) x (n + m) Hermitian dilation: removes the smoothed atom at zero of
/// mass (m - n) / (m + n) and renormalizes the t >= 0 half to unit mass.
DensityCurve sv_density_correction(const DensityCurve& raw, Eigen::Index n, Eigen::Index m);

/// Evenly spaced points lo, lo + step, ..., up to hi inclusive (within step / 1e6).
std::vector<double> make_grid(double lo, double hi, double step);

/// Trapezoid-rule integral of the curve over its grid.
double integrate(const DensityCurve& curve);
/// Trapezoid-rule integral restricted to [lo, hi] (partial cells interpolated linearly).
double integrate(const DensityCurve& curve, double lo, double hi);

}  // namespace vpdeq
