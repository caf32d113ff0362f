#include "vpdeq/profile.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "vpdeq/random.hpp"

namespace vpdeq {

std::string_view to_string(ProfileMode mode) {
    return mode == ProfileMode::hermitian ? "hermitian" : "rectangular";
}

ProfileMode parse_profile_mode(std::string_view text) {
    if (text == "hermitian") return ProfileMode::hermitian;
    if (text == "rectangular") return ProfileMode::rectangular;
    throw std::invalid_argument("unknown profile mode '" + std::string(text) + "'");
}

VarianceProfile::VarianceProfile(Eigen::MatrixXd entries, ProfileMode mode)
    : entries_(std::move(entries)), mode_(mode) {
    if (entries_.rows() < 1 || entries_.cols() < 1) {
        throw std::invalid_argument("variance profile must have at least one row and column");
    }
    if (!entries_.allFinite()) throw std::invalid_argument("variance profile has non-finite entries");
    if ((entries_.array() < 0.0).any()) throw std::invalid_argument("variance profile has negative entries");
    gamma_max_sq_ = entries_.maxCoeff();
    if (mode_ == ProfileMode::hermitian) {
        if (entries_.rows() != entries_.cols()) {
            throw std::invalid_argument("hermitian variance profile must be square");
        }
        const double asym = (entries_ - entries_.transpose()).cwiseAbs().maxCoeff();
        if (asym > 1e-12 * std::max(gamma_max_sq_, 1.0)) {
            throw std::invalid_argument("hermitian variance profile must be symmetric");
        }
        if (asym > 0.0) entries_ = 0.5 * (entries_ + entries_.transpose()).eval();
    }
}

double VarianceProfile::gamma_max() const { return std::sqrt(gamma_max_sq_); }

double VarianceProfile::normalization() const {
    return entries_.sum() / static_cast<double>(rows()) / static_cast<double>(cols());
}

namespace {

void check_dims(Eigen::Index n, Eigen::Index m, ProfileMode mode) {
    if (n < 1 || m < 1) throw std::invalid_argument("profile dimensions must be positive");
    if (mode == ProfileMode::hermitian && n != m) {
        throw std::invalid_argument("hermitian profile requires n == m");
    }
}

}  // namespace

VarianceProfile constant_profile(Eigen::Index n, Eigen::Index m, double value, ProfileMode mode) {
    check_dims(n, m, mode);
    if (!(value >= 0.0)) throw std::invalid_argument("constant profile value must be >= 0");
    return {Eigen::MatrixXd::Constant(n, m, value), mode};
}

VarianceProfile piecewise_profile(Eigen::Index n, Eigen::Index m, double gamma1, double gamma2,
                                  ProfileMode mode) {
    check_dims(n, m, mode);
    if (n % 4 != 0 || m % 4 != 0) {
        throw std::invalid_argument("piecewise profile dimensions must be divisible by 4");
    }
    if (!(gamma1 >= 0.0) || !(gamma2 >= 0.0)) {
        throw std::invalid_argument("piecewise profile levels must be >= 0");
    }
    const Eigen::Index n1 = n / 4;
    const Eigen::Index m1 = m / 4;
    Eigen::MatrixXd g = Eigen::MatrixXd::Constant(n, m, gamma2);
    g.topLeftCorner(n1, m1).setConstant(gamma1);
    g.bottomRightCorner(n - n1, m - m1).setConstant(gamma1);
    return {std::move(g), mode};
}

VarianceProfile bernoulli_profile(Eigen::Index n, Eigen::Index m, double p, std::uint64_t seed,
                                  ProfileMode mode) {
    check_dims(n, m, mode);
    if (!(p > 0.0 && p <= 1.0)) throw std::invalid_argument("bernoulli probability must lie in (0, 1]");
    Rng rng(seed);
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(n, m);
    if (mode == ProfileMode::hermitian) {
        for (Eigen::Index j = 0; j < m; ++j) {
            for (Eigen::Index i = 0; i <= j; ++i) {
                if (rng.bernoulli(p)) g(i, j) = g(j, i) = 1.0;
            }
        }
    } else {
        for (Eigen::Index j = 0; j < m; ++j) {
            for (Eigen::Index i = 0; i < n; ++i) {
                if (rng.bernoulli(p)) g(i, j) = 1.0;
            }
        }
    }
    if (g.sum() == 0.0) {
        throw std::runtime_error("bernoulli profile sampled no positive entry; increase p or change seed");
    }
    return normalize_profile(VarianceProfile(std::move(g), mode), 1.0);
}

VarianceProfile doubly_stochastic_profile(Eigen::Index n, Eigen::Index k_perms, std::uint64_t seed,
                                          ProfileMode mode) {
    if (n < 1) throw std::invalid_argument("profile dimensions must be positive");
    if (k_perms < 1) throw std::invalid_argument("doubly stochastic profile needs at least one permutation");
    Rng rng(seed);
    Eigen::MatrixXd stochastic = Eigen::MatrixXd::Zero(n, n);
    std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
    for (Eigen::Index k = 0; k < k_perms; ++k) {
        std::iota(perm.begin(), perm.end(), Eigen::Index{0});
        // Fisher-Yates on the columns of the identity.
        for (std::size_t i = perm.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(rng.below(i));
            std::swap(perm[i - 1], perm[j]);
        }
        for (Eigen::Index i = 0; i < n; ++i) stochastic(i, perm[static_cast<std::size_t>(i)]) += 1.0;
    }
    if (mode == ProfileMode::hermitian) {
        stochastic = (0.5 * (stochastic + stochastic.transpose())).eval();
    }
    stochastic *= static_cast<double>(n) / static_cast<double>(k_perms);
    return {std::move(stochastic), mode};
}

VarianceProfile normalize_profile(const VarianceProfile& profile, double target) {
    if (!(target > 0.0)) throw std::invalid_argument("normalization target must be > 0");
    const double current = profile.normalization();
    if (current == 0.0) throw std::invalid_argument("cannot normalize an all-zero variance profile");
    return {profile.entries() * (target / current), profile.mode()};
}

}  // namespace vpdeq
