#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace vpdeq {

enum class ProfileMode { hermitian, rectangular };

std::string_view to_string(ProfileMode mode);
ProfileMode parse_profile_mode(std::string_view text);

/// Matrix of entrywise variances gamma^2(i, j) of a Gaussian noise matrix.
///
/// A hermitian profile is square and symmetric and describes an N x N GUE
/// matrix whose (i, j) entry has variance gamma^2(i, j) / N. A rectangular
/// profile describes an N x M matrix whose entries have variance
/// gamma^2(i, j) / M. Immutable once built.
class VarianceProfile {
public:
    /// Throws std::invalid_argument on negative or non-finite entries, empty
    /// dimensions, or a non-symmetric hermitian profile.
    VarianceProfile(Eigen::MatrixXd entries, ProfileMode mode);

    const Eigen::MatrixXd& entries() const { return entries_; }
    Eigen::Index rows() const { return entries_.rows(); }
    Eigen::Index cols() const { return entries_.cols(); }
    ProfileMode mode() const { return mode_; }
    bool is_hermitian() const { return mode_ == ProfileMode::hermitian; }

    double gamma_max_sq() const { return gamma_max_sq_; }
    double gamma_max() const;

    /// (1/N) * sum_{i,j} gamma^2(i, j) / M, the quantity fixed by normalization.
    double normalization() const;

private:
    Eigen::MatrixXd entries_;
    ProfileMode mode_;
    double gamma_max_sq_ = 0.0;
};

VarianceProfile constant_profile(Eigen::Index n, Eigen::Index m, double value,
                                 ProfileMode mode = ProfileMode::rectangular);

/// Two-level block profile: gamma1 on the top-left (n/4 x m/4) and
/// bottom-right (3n/4 x 3m/4) blocks, gamma2 on the two off-diagonal blocks.
VarianceProfile piecewise_profile(Eigen::Index n, Eigen::Index m, double gamma1, double gamma2,
                                  ProfileMode mode = ProfileMode::rectangular);

/// Each entry is zero with probability 1 - p, otherwise a common value chosen
/// after sampling so that normalization() == 1. Hermitian mode samples the
/// upper triangle and mirrors it.
VarianceProfile bernoulli_profile(Eigen::Index n, Eigen::Index m, double p, std::uint64_t seed,
                                  ProfileMode mode = ProfileMode::rectangular);

/// Gamma / n = (1/K) sum_k P_k for K random n x n permutation matrices.
/// In hermitian mode the sum is symmetrized, (1/2K) sum_k (P_k + P_k^T), which
/// keeps every row and column sum of Gamma / n at one.
VarianceProfile doubly_stochastic_profile(Eigen::Index n, Eigen::Index k_perms, std::uint64_t seed,
                                          ProfileMode mode = ProfileMode::rectangular);

/// Rescale so that normalization() == target. Throws on an all-zero profile.
VarianceProfile normalize_profile(const VarianceProfile& profile, double target = 1.0);

}  // namespace vpdeq
