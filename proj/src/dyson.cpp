#include "vpdeq/dyson.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <string>

namespace vpdeq {

SpectralParameter::SpectralParameter(Eigen::VectorXcd diag) : diag_(std::move(diag)) {
    if (diag_.size() == 0) throw std::invalid_argument("spectral parameter must be non-empty");
    min_imag_ = diag_.imag().minCoeff();
    if (!(min_imag_ > 0.0) || !diag_.allFinite()) {
        throw std::invalid_argument("spectral parameter needs finite entries with Im > 0");
    }
}

SpectralParameter SpectralParameter::scalar(Complex lambda, Eigen::Index n) {
    return SpectralParameter(Eigen::VectorXcd::Constant(n, lambda));
}

OperatorStieltjes::OperatorStieltjes(Eigen::VectorXcd diag) : diag_(std::move(diag)) {
    if (diag_.size() > 0 && diag_.imag().maxCoeff() > 0.0) {
        throw std::invalid_argument("operator-valued Stieltjes transform needs Im <= 0");
    }
}

double OperatorStieltjes::norm() const {
    return diag_.size() == 0 ? 0.0 : diag_.cwiseAbs().maxCoeff();
}

void SolverConfig::validate() const {
    if (!(tolerance > 0.0)) throw std::invalid_argument("solver tolerance must be > 0");
    if (max_iterations < 1) throw std::invalid_argument("solver max_iterations must be >= 1");
    if (!(damping > 0.0 && damping <= 1.0)) throw std::invalid_argument("solver damping must lie in (0, 1]");
    if (anderson_depth < 0) throw std::invalid_argument("anderson_depth must be >= 0");
}

namespace {

Eigen::VectorXcd real_times_complex(const Eigen::MatrixXd& a, const Eigen::VectorXcd& g) {
    Eigen::MatrixX2d parts(g.size(), 2);
    parts.col(0) = g.real();
    parts.col(1) = g.imag();
    const Eigen::MatrixX2d prod = a * parts;
    Eigen::VectorXcd out(prod.rows());
    out.real() = prod.col(0);
    out.imag() = prod.col(1);
    return out;
}

double sup_norm(const Eigen::VectorXcd& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

void check_hermitian(const Eigen::MatrixXcd& y) {
    if (y.rows() != y.cols()) throw std::invalid_argument("deformation Y must be square");
    const double scale = std::max(1.0, y.cwiseAbs().maxCoeff());
    if ((y - y.adjoint()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
        throw std::invalid_argument("deformation Y must be Hermitian");
    }
}

bool is_diagonal(const Eigen::MatrixXcd& y) {
    for (Eigen::Index j = 0; j < y.cols(); ++j) {
        for (Eigen::Index i = 0; i < y.rows(); ++i) {
            if (i != j && y(i, j) != Complex{}) return false;
        }
    }
    return true;
}

}  // namespace

Eigen::VectorXcd r_map(const VarianceProfile& profile, const Eigen::VectorXcd& g) {
    if (!profile.is_hermitian()) throw std::invalid_argument("r_map needs a hermitian profile");
    if (profile.rows() != g.size()) throw std::invalid_argument("r_map dimension mismatch");
    return real_times_complex(profile.entries(), g) / static_cast<double>(profile.rows());
}

DysonSystem::DysonSystem(const VarianceProfile& profile, const Eigen::MatrixXcd& y)
    : gamma_max_sq_(profile.gamma_max_sq()) {
    if (!profile.is_hermitian()) throw std::invalid_argument("Dyson equation needs a hermitian profile");
    if (y.rows() != profile.rows()) throw std::invalid_argument("deformation size does not match profile");
    check_hermitian(y);
    scaled_profile_ = profile.entries() / static_cast<double>(profile.rows());
    y_diag_ = y.diagonal().real();
    if (!is_diagonal(y)) y_full_ = y;
}

DysonSystem::DysonSystem(const VarianceProfile& profile, const Eigen::VectorXd& y_diag)
    : gamma_max_sq_(profile.gamma_max_sq()), y_diag_(y_diag) {
    if (!profile.is_hermitian()) throw std::invalid_argument("Dyson equation needs a hermitian profile");
    if (y_diag.size() != profile.rows()) throw std::invalid_argument("deformation size does not match profile");
    if (!y_diag.allFinite()) throw std::invalid_argument("deformation has non-finite entries");
    scaled_profile_ = profile.entries() / static_cast<double>(profile.rows());
}

DysonSystem::DysonSystem(const VarianceProfile& profile)
    : DysonSystem(profile, Eigen::VectorXd(Eigen::VectorXd::Zero(profile.rows()))) {}

Eigen::MatrixXcd DysonSystem::y_dense() const {
    if (y_full_) return *y_full_;
    return y_diag_.cast<Complex>().asDiagonal();
}

Eigen::VectorXcd DysonSystem::r_map(const Eigen::VectorXcd& g) const {
    if (g.size() != size()) throw std::invalid_argument("r_map dimension mismatch");
    return real_times_complex(scaled_profile_, g);
}

void DysonSystem::check_lambda(const SpectralParameter& lambda) const {
    if (lambda.size() != size()) throw std::invalid_argument("spectral parameter size does not match profile");
}

Eigen::MatrixXcd DysonSystem::shifted_resolvent(const Eigen::VectorXcd& omega) const {
    Eigen::MatrixXcd shifted = -y_dense();
    shifted.diagonal() += omega;
    return shifted.partialPivLu().inverse();
}

Eigen::VectorXcd DysonSystem::psi(const SpectralParameter& lambda, const Eigen::VectorXcd& g) const {
    check_lambda(lambda);
    Eigen::VectorXcd omega = lambda.diag();
    if (gamma_max_sq_ > 0.0) omega -= r_map(g);
    if (!y_full_) return (omega - y_diag_.cast<Complex>()).cwiseInverse();
    Eigen::MatrixXcd shifted = -*y_full_;
    shifted.diagonal() += omega;
    return shifted.partialPivLu().inverse().diagonal();
}

DysonSolution DysonSystem::solve(const SpectralParameter& lambda, const SolverConfig& config) const {
    config.validate();
    check_lambda(lambda);

    DysonSolution out;
    out.contraction_certified =
        gamma_max_sq_ * lambda.inv_imag_norm() * lambda.inv_imag_norm() < 1.0;
    out.final_damping = config.damping;

    if (gamma_max_sq_ == 0.0) {
        // No noise: the fixed point is G_Y(Lambda) itself.
        out.g_square = OperatorStieltjes(psi(lambda, Eigen::VectorXcd::Zero(size())));
        out.iterations = 1;
        out.residual = 0.0;
        out.converged = true;
        if (config.record_history) out.residual_history.push_back(0.0);
        return out;
    }

    Eigen::VectorXcd g;
    if (config.initial) {
        if (config.initial->size() != size()) throw std::invalid_argument("initial guess size mismatch");
        g = config.initial->diag();
    } else {
        g = Complex(0.0, -1.0) * lambda.diag().imag().cwiseInverse().cast<Complex>();
    }

    double alpha = config.damping;
    constexpr double min_alpha = 1.0 / 16.0;
    constexpr int stall_window = 5;
    std::deque<double> recent;
    std::deque<Eigen::VectorXcd> hist_g;
    std::deque<Eigen::VectorXcd> hist_f;
    const auto depth = static_cast<std::size_t>(config.anderson_depth);

    Eigen::VectorXcd best_g = g;
    double best_res = std::numeric_limits<double>::infinity();

    for (int it = 1; it <= config.max_iterations; ++it) {
        const Eigen::VectorXcd pg = psi(lambda, g);
        if (!pg.allFinite()) {
            throw SolverError("Dyson iteration produced a non-finite value at iteration " + std::to_string(it));
        }
        const Eigen::VectorXcd f = pg - g;
        const double res = sup_norm(f);
        out.iterations = it;
        if (config.record_history) out.residual_history.push_back(res);
        if (res < best_res) {
            best_res = res;
            best_g = g;
        }
        if (res <= config.tolerance) break;

        recent.push_back(res);
        if (config.adaptive_damping && recent.size() > stall_window) {
            if (recent.back() >= recent.front() && alpha > min_alpha) {
                alpha = std::max(alpha / 2.0, min_alpha);
                hist_g.clear();
                hist_f.clear();
                recent.clear();
            } else {
                recent.pop_front();
            }
        }

        Eigen::VectorXcd next = g + alpha * f;
        if (depth > 0) {
            hist_g.push_back(g);
            hist_f.push_back(f);
            if (hist_g.size() > depth + 1) {
                hist_g.pop_front();
                hist_f.pop_front();
            }
            const auto cols = static_cast<Eigen::Index>(hist_g.size()) - 1;
            if (cols > 0) {
                Eigen::MatrixXcd d_g(size(), cols);
                Eigen::MatrixXcd d_f(size(), cols);
                for (Eigen::Index c = 0; c < cols; ++c) {
                    const auto k = static_cast<std::size_t>(c);
                    d_g.col(c) = hist_g[k + 1] - hist_g[k];
                    d_f.col(c) = hist_f[k + 1] - hist_f[k];
                }
                const Eigen::VectorXcd gamma = d_f.completeOrthogonalDecomposition().solve(f);
                Eigen::VectorXcd extrapolated = next - (d_g + alpha * d_f) * gamma;
                if (extrapolated.allFinite() && extrapolated.imag().maxCoeff() < 0.0) {
                    next = std::move(extrapolated);
                } else {
                    hist_g.clear();
                    hist_f.clear();
                }
            }
        }
        g = std::move(next);
    }

    out.g_square = OperatorStieltjes(best_g);
    out.residual = best_res;
    out.converged = best_res <= config.tolerance;
    out.final_damping = alpha;
    return out;
}

OperatorStieltjes psi_step(const VarianceProfile& profile, const Eigen::MatrixXcd& y,
                           const SpectralParameter& lambda, const OperatorStieltjes& g) {
    const DysonSystem system(profile, y);
    if (g.size() != system.size()) throw std::invalid_argument("psi_step dimension mismatch");
    return OperatorStieltjes(system.psi(lambda, g.diag()));
}

DysonSolution solve_dyson(const VarianceProfile& profile, const Eigen::MatrixXcd& y,
                          const SpectralParameter& lambda, const SolverConfig& config) {
    return DysonSystem(profile, y).solve(lambda, config);
}

Eigen::VectorXcd omega_square(const VarianceProfile& profile, const DysonSolution& solution,
                              const SpectralParameter& lambda) {
    if (!solution.converged) throw std::invalid_argument("omega_square needs a converged Dyson solution");
    if (solution.g_square.size() != lambda.size()) throw std::invalid_argument("omega_square dimension mismatch");
    return lambda.diag() - r_map(profile, solution.g_square.diag());
}

ConcentrationEstimate concentration_bound(const ConcentrationBound& p) {
    if (!(p.gamma_max >= 0.0)) throw std::invalid_argument("gamma_max must be >= 0");
    if (!(p.delta > 0.0 && p.delta < 1.0)) throw std::invalid_argument("delta must lie in (0, 1)");
    if (!(p.d > 0.0)) throw std::invalid_argument("d must be > 0");
    if (p.n < 1) throw std::invalid_argument("n must be >= 1");
    if (!(p.im_lambda > 0.0)) throw std::invalid_argument("im_lambda must be > 0");

    const double n = static_cast<double>(p.n);
    const double g = p.gamma_max;
    const double inv = 1.0 / p.im_lambda;  // ||(Im Lambda)^{-1}||
    const double log_n = std::log(n);
    const double amplification = 1.0 + g * g / p.delta * inv * inv;

    ConcentrationEstimate out;
    if (p.diagonal_y) {
        out.im_lambda_threshold = g * std::pow(n, -0.25) * std::pow(1.0 - p.delta, -1.0 / 6.0);
        out.epsilon = std::sqrt(2.0) * g * std::sqrt(p.d * log_n / n) * inv * inv +
                      amplification * std::pow(g, 4) * std::pow(inv, 5) / std::pow(n, 1.5);
        out.epsilon_tilde = std::sqrt(2.0) * g * std::sqrt(2.0 * p.d * log_n) * inv * inv / n +
                            amplification * std::pow(g, 4) * std::pow(inv, 5) / std::pow(n, 1.5);
    } else {
        out.im_lambda_threshold = g * std::pow(2.0 / (n * (1.0 - p.delta)), 0.2);
        out.epsilon = std::sqrt(2.0) * g * std::sqrt(p.d * log_n / n) * inv * inv +
                      amplification * 2.0 * std::pow(g, 3) * std::pow(inv, 4) / n;
        out.epsilon_tilde = std::sqrt(2.0) * g * std::sqrt(2.0 * p.d * log_n) * inv * inv / n +
                            amplification * 2.0 * std::pow(g, 3) * std::pow(inv, 4) / n;
    }
    out.admissible = p.im_lambda >= out.im_lambda_threshold;
    return out;
}

}  // namespace vpdeq
