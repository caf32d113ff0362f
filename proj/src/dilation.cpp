#include "vpdeq/dilation.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace vpdeq {

RectangularModel::RectangularModel(VarianceProfile p)
    : profile(std::move(p)), y(Eigen::MatrixXcd::Zero(profile.rows(), profile.cols())) {}

RectangularModel::RectangularModel(VarianceProfile p, Eigen::MatrixXcd y_, std::optional<RectangularSpikes> s)
    : profile(std::move(p)), y(std::move(y_)), spikes(std::move(s)) {}

void RectangularModel::validate() const {
    if (y.rows() != n() || y.cols() != m()) {
        throw std::invalid_argument("rectangular model: Y must be " + std::to_string(n()) + " x " +
                                    std::to_string(m()));
    }
    if (!spikes) return;
    const auto& s = *spikes;
    if (s.u.rows() != n() || s.v.rows() != m() || s.u.cols() != s.rank() || s.v.cols() != s.rank()) {
        throw std::invalid_argument("rectangular model: spike vectors have inconsistent shapes");
    }
    if ((s.theta.array() <= 0.0).any()) throw std::invalid_argument("rectangular model: spikes must be positive");
    if (orthonormality_defect(s.u) > 1e-10 || orthonormality_defect(s.v) > 1e-10) {
        throw std::invalid_argument("rectangular model: spike vectors must be orthonormal");
    }
}

SpikeSet DilatedModel::spikes() const { return {w, theta_signed}; }

Eigen::MatrixXcd hermitian_dilation(const Eigen::MatrixXcd& a) {
    const Eigen::Index n = a.rows();
    const Eigen::Index m = a.cols();
    Eigen::MatrixXcd d = Eigen::MatrixXcd::Zero(n + m, n + m);
    d.topRightCorner(n, m) = a;
    d.bottomLeftCorner(m, n) = a.adjoint();
    return d;
}

VarianceProfile dilate_profile(const VarianceProfile& rectangular) {
    const Eigen::Index n = rectangular.rows();
    const Eigen::Index m = rectangular.cols();
    const double scale = static_cast<double>(n + m) / static_cast<double>(m);
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n + m, n + m);
    d.topRightCorner(n, m) = scale * rectangular.entries();
    d.bottomLeftCorner(m, n) = scale * rectangular.entries().transpose();
    return {std::move(d), ProfileMode::hermitian};
}

DilatedModel dilate_model(const RectangularModel& model) {
    model.validate();
    const Eigen::Index n = model.n();
    const Eigen::Index m = model.m();
    const Eigen::Index k = model.spikes ? model.spikes->rank() : 0;

    DilatedModel out{dilate_profile(model.profile), hermitian_dilation(model.y),
                     Eigen::MatrixXcd::Zero(n + m, 2 * k), Eigen::VectorXd(2 * k), n, m};
    if (k > 0) {
        const double s = 1.0 / std::sqrt(2.0);
        const auto& u = model.spikes->u;
        const auto& v = model.spikes->v;
        out.w.topLeftCorner(n, k) = -s * u;
        out.w.topRightCorner(n, k) = s * u;
        out.w.bottomLeftCorner(m, k) = -s * v;
        out.w.bottomRightCorner(m, k) = -s * v;
        out.theta_signed.head(k) = model.spikes->theta;
        out.theta_signed.tail(k) = -model.spikes->theta;
    }
    return out;
}

ProfileDecomposition spike_decompose_profile(const VarianceProfile& profile, Eigen::Index k) {
    const Eigen::Index n = profile.rows();
    const Eigen::Index m = profile.cols();
    if (k < 1 || k > std::min(n, m)) {
        throw std::invalid_argument("spike_decompose_profile: k must lie in [1, min(N, M)]");
    }
    const Eigen::MatrixXd normalized = profile.entries() / static_cast<double>(m);
    const Eigen::BDCSVD<Eigen::MatrixXd> svd(normalized, Eigen::ComputeThinU | Eigen::ComputeThinV);

    ProfileDecomposition out;
    out.spikes.u = svd.matrixU().leftCols(k).cast<std::complex<double>>();
    out.spikes.v = svd.matrixV().leftCols(k).cast<std::complex<double>>();
    out.spikes.theta = svd.singularValues().head(k);
    out.y_k = normalized.cast<std::complex<double>>() - out.spikes.matrix();
    return out;
}

}  // namespace vpdeq
