#pragma once

#include <functional>

#include <Eigen/Dense>

namespace vpdeq {

struct SimplexOptions {
    /// Edge length of the initial simplex along each coordinate.
    double initial_step = 0.1;
    /// Stop once every vertex is within x_tolerance of the best one (sup norm)
    /// and their values are within f_tolerance of the best value.
    double x_tolerance = 1e-10;
    double f_tolerance = 1e-14;
    int max_evaluations = 400;
};

struct SimplexResult {
    Eigen::VectorXd x;
    double value = 0.0;
    int evaluations = 0;
    bool converged = false;
};

/// Derivative-free minimization by the Nelder-Mead simplex method
/// (reflection 1, expansion 2, contraction 1/2, shrink 1/2).
SimplexResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& objective,
                          const Eigen::VectorXd& start, const SimplexOptions& options = {});

}  // namespace vpdeq
