#include "vpdeq/spikes.hpp"

#include <stdexcept>
#include <string>

namespace vpdeq {

double orthonormality_defect(const Eigen::MatrixXcd& q) {
    if (q.cols() == 0) return 0.0;
    const Eigen::MatrixXcd gram = q.adjoint() * q;
    return (gram - Eigen::MatrixXcd::Identity(q.cols(), q.cols())).cwiseAbs().maxCoeff();
}

SpikeSet::SpikeSet(Eigen::MatrixXcd u, Eigen::VectorXd theta) : u_(std::move(u)), theta_(std::move(theta)) {
    if (u_.cols() != theta_.size()) throw std::invalid_argument("spike set: U has " + std::to_string(u_.cols()) +
                                                                " columns but " + std::to_string(theta_.size()) +
                                                                " spike values were given");
    if (theta_.size() > 0 && ((theta_.array() == 0.0).any() || !theta_.allFinite())) {
        throw std::invalid_argument("spike set: spike values must be finite and nonzero");
    }
    if (orthonormality_defect(u_) > 1e-10) throw std::invalid_argument("spike set: columns of U must be orthonormal");
}

SpikeSet SpikeSet::empty(Eigen::Index n) { return {Eigen::MatrixXcd(n, 0), Eigen::VectorXd(0)}; }

Eigen::MatrixXcd SpikeSet::matrix() const {
    return u_ * theta_.cast<std::complex<double>>().asDiagonal() * u_.adjoint();
}

Eigen::MatrixXcd RectangularSpikes::matrix() const {
    return u * theta.cast<std::complex<double>>().asDiagonal() * v.adjoint();
}

}  // namespace vpdeq
