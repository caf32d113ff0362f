#pragma once

#include <optional>

#include <Eigen/Dense>

#include "vpdeq/profile.hpp"
#include "vpdeq/spikes.hpp"

namespace vpdeq {

/// Information-plus-noise model H' = X + Y + U Theta V^* with X an n x m
/// Gaussian matrix of the given (rectangular) variance profile.
struct RectangularModel {
    VarianceProfile profile;
    Eigen::MatrixXcd y;
    std::optional<RectangularSpikes> spikes;

    /// Zero deformation, no spikes.
    explicit RectangularModel(VarianceProfile p);
    RectangularModel(VarianceProfile p, Eigen::MatrixXcd y_, std::optional<RectangularSpikes> s);

    Eigen::Index n() const { return profile.rows(); }
    Eigen::Index m() const { return profile.cols(); }

    /// Throws std::invalid_argument when dimensions disagree, U or V are not
    /// orthonormal within 1e-10, or some theta is not positive.
    void validate() const;
};

/// Hermitian embedding of a rectangular model, of size n + m.
struct DilatedModel {
    /// (n + m) / m * D(Gamma): its R-map equals deg(D(Gamma) / m * Lambda).
    VarianceProfile profile;
    /// D(Y), zero on the diagonal blocks.
    Eigen::MatrixXcd y;
    /// (n + m) x 2k, (1/sqrt 2) [[-U, U], [-V, -V]].
    Eigen::MatrixXcd w;
    /// (theta_1..theta_k, -theta_1..-theta_k).
    Eigen::VectorXd theta_signed;
    Eigen::Index n = 0;
    Eigen::Index m = 0;

    /// The dilated spikes as a Hermitian spike set (W, theta_signed).
    SpikeSet spikes() const;
};

/// [[0, A], [A^*, 0]].
Eigen::MatrixXcd hermitian_dilation(const Eigen::MatrixXcd& a);

/// The (n + m) x (n + m) hermitian profile (n + m) / m * D(Gamma).
VarianceProfile dilate_profile(const VarianceProfile& rectangular);

DilatedModel dilate_model(const RectangularModel& model);

struct ProfileDecomposition {
    /// Gamma / M - U_k Theta_k V_k^*.
    Eigen::MatrixXcd y_k;
    /// The k leading singular triplets of Gamma / M.
    RectangularSpikes spikes;
};

/// Split the normalized profile Gamma / M into its k leading singular
/// triplets and the remainder, 1 <= k <= min(N, M).
ProfileDecomposition spike_decompose_profile(const VarianceProfile& profile, Eigen::Index k);

}  // namespace vpdeq
