#pragma once

#include <Eigen/Dense>

namespace vpdeq {

/// Low-rank Hermitian deformation Z = U diag(theta) U^*.
///
/// The columns of U are orthonormal (within 1e-10) and every theta is
/// nonzero. An empty set (k = 0) is allowed and means Z = 0.
class SpikeSet {
public:
    SpikeSet() = default;
    SpikeSet(Eigen::MatrixXcd u, Eigen::VectorXd theta);
    /// No spikes on an n-dimensional space.
    static SpikeSet empty(Eigen::Index n);

    const Eigen::MatrixXcd& u() const { return u_; }
    const Eigen::VectorXd& theta() const { return theta_; }
    Eigen::Index rank() const { return theta_.size(); }
    Eigen::Index dimension() const { return u_.rows(); }
    /// U diag(theta) U^*.
    Eigen::MatrixXcd matrix() const;

private:
    Eigen::MatrixXcd u_;
    Eigen::VectorXd theta_;
};

/// Low-rank rectangular deformation Z = U diag(theta) V^* with U (n x k) and
/// V (m x k). Checked by RectangularModel::validate, not on construction, so
/// that raw decompositions with vanishing singular values can be returned.
struct RectangularSpikes {
    Eigen::MatrixXcd u;
    Eigen::VectorXd theta;
    Eigen::MatrixXcd v;

    Eigen::Index rank() const { return theta.size(); }
    Eigen::MatrixXcd matrix() const;
};

/// Max entry of |Q^* Q - I|.
double orthonormality_defect(const Eigen::MatrixXcd& q);

}  // namespace vpdeq
