#include "vpdeq/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <thread>

#include "vpdeq/density.hpp"

namespace vpdeq {

void SampleBatch::validate() const {
    if (count < 1) throw std::invalid_argument("sample batch: count must be >= 1");
    if (n < 0) throw std::invalid_argument("sample batch: n must be >= 0");
}

Eigen::MatrixXcd sample_gue_profile(const VarianceProfile& profile, Rng& rng) {
    if (!profile.is_hermitian()) throw std::invalid_argument("sample_gue_profile needs a hermitian profile");
    const Eigen::Index n = profile.rows();
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    const Eigen::MatrixXd gamma = profile.entries().cwiseSqrt() * scale;
    Eigen::MatrixXcd h(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        h(i, i) = gamma(i, i) * rng.normal();
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const Complex z = gamma(i, j) * rng.complex_normal();
            h(i, j) = z;
            h(j, i) = std::conj(z);
        }
    }
    return h;
}

Eigen::MatrixXcd sample_gue_profile(const VarianceProfile& profile, std::uint64_t seed) {
    Rng rng(seed);
    return sample_gue_profile(profile, rng);
}

Eigen::MatrixXcd sample_rect_gaussian(const VarianceProfile& profile, Rng& rng) {
    if (profile.is_hermitian()) throw std::invalid_argument("sample_rect_gaussian needs a rectangular profile");
    const double scale = 1.0 / std::sqrt(static_cast<double>(profile.cols()));
    const Eigen::MatrixXd gamma = profile.entries().cwiseSqrt() * scale;
    Eigen::MatrixXcd x(profile.rows(), profile.cols());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        for (Eigen::Index j = 0; j < x.cols(); ++j) x(i, j) = gamma(i, j) * rng.complex_normal();
    }
    return x;
}

Eigen::MatrixXcd sample_rect_gaussian(const VarianceProfile& profile, std::uint64_t seed) {
    Rng rng(seed);
    return sample_rect_gaussian(profile, rng);
}

namespace {

void check_hermitian(const Eigen::MatrixXcd& h, const char* what) {
    if (h.rows() != h.cols()) throw std::invalid_argument(std::string(what) + ": matrix must be square");
    const double scale = std::max(1.0, h.cwiseAbs().maxCoeff());
    if ((h - h.adjoint()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
        throw std::invalid_argument(std::string(what) + ": matrix must be Hermitian");
    }
}

}  // namespace

EmpiricalSpectrum empirical_spectrum(const Eigen::MatrixXcd& h, Complex lambda) {
    check_hermitian(h, "empirical_spectrum");
    if (!(lambda.imag() > 0.0)) throw std::invalid_argument("empirical_spectrum: Im lambda must be > 0");
    if (h.rows() == 0) throw std::invalid_argument("empirical_spectrum: empty matrix");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h, Eigen::EigenvaluesOnly);
    EmpiricalSpectrum out{Complex(0.0, 0.0), es.eigenvalues()};
    for (double ev : out.eigenvalues) out.g_emp += 1.0 / (lambda - ev);
    out.g_emp /= static_cast<double>(h.rows());
    return out;
}

Eigen::VectorXd singular_values(const Eigen::MatrixXcd& a) {
    return Eigen::BDCSVD<Eigen::MatrixXcd>(a).singularValues();
}

namespace {

// Partial sums over a fixed block of draws; blocks are combined in order so
// the floating-point result is independent of the thread count.
struct MasterSums {
    Eigen::MatrixXcd lhs, rhs;
    Eigen::MatrixXd lhs_sq, rhs_sq;

    explicit MasterSums(Eigen::Index n)
        : lhs(Eigen::MatrixXcd::Zero(n, n)), rhs(Eigen::MatrixXcd::Zero(n, n)),
          lhs_sq(Eigen::MatrixXd::Zero(n, n)), rhs_sq(Eigen::MatrixXd::Zero(n, n)) {}

    void add(const MasterSums& o) {
        lhs += o.lhs;
        rhs += o.rhs;
        lhs_sq += o.lhs_sq;
        rhs_sq += o.rhs_sq;
    }
};

constexpr int block_size = 32;

template <class Fn>
void run_blocks(int blocks, unsigned threads, Fn&& fn) {
    const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(blocks)));
    if (workers == 1) {
        for (int b = 0; b < blocks; ++b) fn(b);
        return;
    }
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (int b = static_cast<int>(w); b < blocks; b += static_cast<int>(workers)) fn(b);
        });
    }
}

}  // namespace

MasterEqualityEstimate estimate_master_equality(const VarianceProfile& profile, const Eigen::MatrixXcd& y,
                                                const SpectralParameter& lambda, const SampleBatch& batch,
                                                unsigned threads) {
    batch.validate();
    if (!profile.is_hermitian()) throw std::invalid_argument("master equality needs a hermitian profile");
    const Eigen::Index n = profile.rows();
    if (y.rows() != n || y.cols() != n) throw std::invalid_argument("master equality: Y has the wrong size");
    if (lambda.size() != n) throw std::invalid_argument("master equality: spectral parameter has the wrong size");
    check_hermitian(y, "master equality");

    const DysonSystem system(profile);  // only its R-map is used
    const int blocks = (batch.count + block_size - 1) / block_size;
    std::vector<MasterSums> partial(static_cast<std::size_t>(blocks), MasterSums(n));

    run_blocks(blocks, threads, [&](int b) {
        MasterSums& acc = partial[static_cast<std::size_t>(b)];
        const int end = std::min(batch.count, (b + 1) * block_size);
        for (int k = b * block_size; k < end; ++k) {
            Rng rng(derive_seed(batch.seed, static_cast<std::uint64_t>(k)));
            const Eigen::MatrixXcd x = sample_gue_profile(profile, rng);
            Eigen::MatrixXcd shifted = -(x + y);
            shifted.diagonal() += lambda.diag();
            const Eigen::MatrixXcd resolvent = shifted.partialPivLu().inverse();
            const Eigen::MatrixXcd left = x * resolvent;
            const Eigen::MatrixXcd right = system.r_map(resolvent.diagonal()).asDiagonal() * resolvent;
            acc.lhs += left;
            acc.rhs += right;
            acc.lhs_sq += left.cwiseAbs2();
            acc.rhs_sq += right.cwiseAbs2();
        }
    });

    MasterSums total(n);
    for (const auto& p : partial) total.add(p);

    const double c = batch.count;
    MasterEqualityEstimate out;
    out.count = batch.count;
    out.lhs = total.lhs / c;
    out.rhs = total.rhs / c;
    auto stderr_of = [&](const Eigen::MatrixXd& sq, const Eigen::MatrixXcd& mean) -> Eigen::MatrixXd {
        if (batch.count < 2) return Eigen::MatrixXd::Zero(n, n);
        const Eigen::MatrixXd var = ((sq / c - mean.cwiseAbs2()) * (c / (c - 1.0))).cwiseMax(0.0);
        return (var / c).cwiseSqrt();
    };
    out.lhs_stderr = stderr_of(total.lhs_sq, out.lhs);
    out.rhs_stderr = stderr_of(total.rhs_sq, out.rhs);
    const Eigen::MatrixXcd diff = out.lhs - out.rhs;
    out.deviation = n == 0 ? 0.0 : singular_values(diff)(0);
    return out;
}

double check_master_equality(const VarianceProfile& profile, const Eigen::MatrixXcd& y,
                             const SpectralParameter& lambda, const SampleBatch& batch, unsigned threads) {
    return estimate_master_equality(profile, y, lambda, batch, threads).deviation;
}

double ConcentrationCheck::pass_rate() const {
    if (errors.empty()) return 0.0;
    return static_cast<double>(passed) / static_cast<double>(errors.size());
}

ConcentrationCheck validate_concentration(const VarianceProfile& profile, const Eigen::MatrixXcd& y,
                                          Complex lambda, const SampleBatch& batch, double delta, double d,
                                          const SolverConfig& config, unsigned threads) {
    batch.validate();
    const Eigen::Index n = profile.rows();
    const DysonSystem system(profile, y);
    const auto param = SpectralParameter::scalar(lambda, n);
    const DysonSolution sol = system.solve(param, config);
    if (!sol.converged) throw SolverError("validate_concentration: Dyson solve did not converge");

    ConcentrationCheck out;
    out.g_square = stieltjes_trace(sol.g_square);
    out.bound = concentration_bound({profile.gamma_max(), delta, d, n, lambda.imag(), system.diagonal_deformation()});
    out.errors.assign(static_cast<std::size_t>(batch.count), 0.0);

    const int blocks = (batch.count + block_size - 1) / block_size;
    run_blocks(blocks, threads, [&](int b) {
        const int end = std::min(batch.count, (b + 1) * block_size);
        for (int k = b * block_size; k < end; ++k) {
            Rng rng(derive_seed(batch.seed, static_cast<std::uint64_t>(k)));
            const Eigen::MatrixXcd h = sample_gue_profile(profile, rng) + y;
            out.errors[static_cast<std::size_t>(k)] = std::abs(empirical_spectrum(h, lambda).g_emp - out.g_square);
        }
    });
    out.passed = static_cast<int>(std::count_if(out.errors.begin(), out.errors.end(),
                                                [&](double e) { return e <= out.bound.epsilon_tilde; }));
    return out;
}

}  // namespace vpdeq
