#include "vpdeq/outliers.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <limits>
#include <stdexcept>
#include <thread>

#include "vpdeq/density.hpp"
#include "vpdeq/simplex.hpp"

namespace vpdeq {

namespace {

Complex lift(Complex lambda, double eta_eval) {
    if (!std::isfinite(lambda.real()) || !std::isfinite(lambda.imag())) {
        throw std::invalid_argument("spectral argument must be finite");
    }
    if (lambda.imag() < 0.0) throw std::invalid_argument("spectral argument must have Im >= 0");
    if (lambda.imag() == 0.0) {
        if (!(eta_eval > 0.0)) throw std::invalid_argument("eta_eval must be > 0");
        return {lambda.real(), eta_eval};
    }
    return lambda;
}

void check_spikes(const SpikeSet& spikes, Eigen::Index n) {
    if (spikes.rank() > 0 && spikes.dimension() != n) {
        throw std::invalid_argument("spike vectors do not match the model dimension");
    }
}

Complex determinant(const Eigen::MatrixXcd& a) {
    if (a.size() == 0) return {1.0, 0.0};
    return a.partialPivLu().determinant();
}

}  // namespace

DeterminantFunction::DeterminantFunction(std::shared_ptr<const DysonSystem> system, SpikeSet spikes,
                                         bool use_tilde, SolverConfig config, double eta_eval)
    : system_(std::move(system)), spikes_(std::move(spikes)), use_tilde_(use_tilde),
      config_(std::move(config)), eta_eval_(eta_eval) {
    if (!system_) throw std::invalid_argument("determinant function needs a Dyson system");
    if (!(eta_eval_ > 0.0)) throw std::invalid_argument("eta_eval must be > 0");
    check_spikes(spikes_, system_->size());
    if (!use_tilde_ && !system_->diagonal_deformation()) {
        throw std::invalid_argument("beta needs a diagonal Y; use the tilde variant for general Y");
    }
    config_.validate();
}

Eigen::MatrixXcd DeterminantFunction::beta(Complex lambda) {
    const Eigen::Index k = spikes_.rank();
    const Complex z = lift(lambda, eta_eval_);
    if (k == 0) return Eigen::MatrixXcd(0, 0);

    const auto param = SpectralParameter::scalar(z, system_->size());
    SolverConfig cfg = config_;
    if (!cfg.initial && warm_) cfg.initial = warm_;
    DysonSolution sol = system_->solve(param, cfg);
    if (!sol.converged) {
        warm_.reset();
        throw ConvergenceError("Dyson solve did not converge at lambda = " + std::to_string(z.real()) + " + " +
                               std::to_string(z.imag()) + "i (residual " + std::to_string(sol.residual) + ")");
    }
    warm_ = sol.g_square;

    const Eigen::MatrixXcd& u = spikes_.u();
    Eigen::MatrixXcd middle;
    if (!use_tilde_) {
        middle = u.adjoint() * (sol.g_square.diag().asDiagonal() * u);
    } else {
        Eigen::VectorXcd omega = param.diag();
        if (system_->gamma_max_sq() > 0.0) omega -= system_->r_map(sol.g_square.diag());
        if (system_->diagonal_deformation()) {
            const Eigen::VectorXcd inv = (omega - system_->y_diag().cast<Complex>()).cwiseInverse();
            middle = u.adjoint() * (inv.asDiagonal() * u);
        } else {
            Eigen::MatrixXcd shifted = -system_->y_dense();
            shifted.diagonal() += omega;
            middle = u.adjoint() * shifted.partialPivLu().solve(u);
        }
    }
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Identity(k, k);
    out.noalias() -= middle * spikes_.theta().cast<Complex>().asDiagonal();
    return out;
}

Complex DeterminantFunction::det(Complex lambda) { return determinant(beta(lambda)); }

Eigen::MatrixXcd beta_square(Complex lambda, const SpikeSet& spikes, const VarianceProfile& profile,
                             const Eigen::VectorXd& y_diag, const SolverConfig& config, double eta_eval) {
    auto system = std::make_shared<const DysonSystem>(profile, y_diag);
    return DeterminantFunction(system, spikes, false, config, eta_eval).beta(lambda);
}

Eigen::MatrixXcd beta_tilde_square(Complex lambda, const SpikeSet& spikes, const VarianceProfile& profile,
                                   const Eigen::MatrixXcd& y, const SolverConfig& config, double eta_eval) {
    auto system = std::make_shared<const DysonSystem>(profile, y);
    return DeterminantFunction(system, spikes, true, config, eta_eval).beta(lambda);
}

std::vector<OutlierCandidate> OutlierReport::accepted() const {
    std::vector<OutlierCandidate> out;
    std::copy_if(candidates.begin(), candidates.end(), std::back_inserter(out),
                 [](const OutlierCandidate& c) { return c.accepted; });
    return out;
}

const OutlierCandidate& OutlierReport::best() const {
    if (candidates.empty()) throw std::logic_error("outlier report has no candidates");
    return *std::min_element(candidates.begin(), candidates.end(),
                             [](const auto& a, const auto& b) { return a.det_abs < b.det_abs; });
}

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

double safe_det_abs(DeterminantFunction& f, double t) {
    try {
        const double v = f.det_abs(t);
        return std::isfinite(v) ? v : inf;
    } catch (const SolverError&) {
        return inf;
    }
}

std::vector<double> scan(const DeterminantFunction& proto, const std::vector<double>& grid, unsigned threads) {
    std::vector<double> values(grid.size(), inf);
    const auto chunks = static_cast<std::size_t>(std::max(1u, std::min<unsigned>(threads, grid.size())));
    auto work = [&](std::size_t begin, std::size_t end) {
        DeterminantFunction f = proto;
        f.reset();
        for (std::size_t i = begin; i < end; ++i) values[i] = safe_det_abs(f, grid[i]);
    };
    if (chunks == 1) {
        work(0, grid.size());
        return values;
    }
    std::vector<std::jthread> pool;
    const std::size_t per = (grid.size() + chunks - 1) / chunks;
    for (std::size_t c = 0; c < chunks; ++c) {
        const std::size_t begin = c * per;
        const std::size_t end = std::min(grid.size(), begin + per);
        if (begin < end) pool.emplace_back(work, begin, end);
    }
    pool.clear();
    return values;
}

// Indices of scan local minima; a run of equal values counts once.
std::vector<std::size_t> local_minima(const std::vector<double>& v) {
    std::vector<std::size_t> out;
    const std::size_t n = v.size();
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && v[j + 1] == v[i]) ++j;
        const bool left_ok = i == 0 || v[i - 1] > v[i];
        const bool right_ok = j + 1 == n || v[j + 1] > v[i];
        if (std::isfinite(v[i]) && left_ok && right_ok) out.push_back(i);
        i = j + 1;
    }
    return out;
}

}  // namespace

OutlierReport locate_outliers(const DysonSystem& system, const SpikeSet& spikes, Window window,
                              const OutlierSearchConfig& config) {
    if (!std::isfinite(window.lo) || !std::isfinite(window.hi) || !(window.hi > window.lo)) {
        throw std::invalid_argument("outlier search window must satisfy lo < hi");
    }
    if (config.scan_points < 2) throw std::invalid_argument("scan_points must be >= 2");
    if (!(config.threshold > 0.0)) throw std::invalid_argument("threshold must be > 0");
    if (config.restarts < 0) throw std::invalid_argument("restarts must be >= 0");

    auto shared = std::make_shared<const DysonSystem>(system);
    DeterminantFunction f(shared, spikes, config.use_tilde, config.solver, config.eta_eval);

    const auto points = static_cast<std::size_t>(config.scan_points);
    const double spacing = (window.hi - window.lo) / static_cast<double>(points - 1);
    std::vector<double> grid(points);
    for (std::size_t i = 0; i < points; ++i) grid[i] = window.lo + spacing * static_cast<double>(i);
    grid.back() = window.hi;

    const std::vector<double> values = scan(f, grid, config.threads);
    if (std::none_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); })) {
        throw ConvergenceError("outlier search: the Dyson solve failed at every scan point");
    }

    auto clamp = [&](double x) { return std::clamp(x, window.lo, window.hi); };
    std::vector<OutlierCandidate> found;
    for (std::size_t idx : local_minima(values)) {
        double best_x = grid[idx];
        double best_v = values[idx];
        double step = 0.5 * spacing;
        for (int r = 0; r <= config.restarts; ++r) {
            SimplexOptions opts;
            opts.initial_step = step;
            opts.x_tolerance = 1e-12 * std::max(1.0, std::abs(best_x));
            const auto res = nelder_mead(
                [&](const Eigen::VectorXd& x) { return safe_det_abs(f, clamp(x(0))); },
                Eigen::VectorXd::Constant(1, best_x), opts);
            if (res.value < best_v) {
                best_v = res.value;
                best_x = clamp(res.x(0));
            }
            step *= 0.1;
        }
        found.push_back({best_x, best_v, best_v <= config.threshold});
    }

    std::sort(found.begin(), found.end(), [](const auto& a, const auto& b) { return a.lambda < b.lambda; });
    OutlierReport report;
    report.threshold = config.threshold;
    report.search_window = window;
    const double merge = 1e-7 * std::max(1.0, window.hi - window.lo);
    for (const auto& c : found) {
        if (!report.candidates.empty() && c.lambda - report.candidates.back().lambda <= merge) {
            if (c.det_abs < report.candidates.back().det_abs) report.candidates.back() = c;
            continue;
        }
        report.candidates.push_back(c);
    }
    return report;
}

OutlierReport locate_outliers(const VarianceProfile& profile, const Eigen::MatrixXcd& y, const SpikeSet& spikes,
                              Window window, const OutlierSearchConfig& config) {
    return locate_outliers(DysonSystem(profile, y), spikes, window, config);
}

double estimate_bulk_edge(const DysonSystem& system, double eta_eval, const SolverConfig& config) {
    if (!(eta_eval > 0.0)) throw std::invalid_argument("eta_eval must be > 0");
    constexpr double step = 0.005;
    constexpr double level = 1e-3;

    // The spectrum of the deterministic equivalent lies within 2 sqrt(max row
    // sum of Gamma / N) of the spectrum of Y.
    double y_norm = 0.0;
    if (system.diagonal_deformation()) {
        if (system.y_diag().size() > 0) y_norm = system.y_diag().cwiseAbs().maxCoeff();
    } else {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(system.y_dense(), Eigen::EigenvaluesOnly);
        y_norm = es.eigenvalues().cwiseAbs().maxCoeff();
    }
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(system.size());
    const double row_sum = system.r_map(ones.cast<Complex>()).real().maxCoeff();
    const double bound = y_norm + 2.0 * std::sqrt(std::max(0.0, row_sum));
    const double top = bound + 0.1 * (1.0 + bound);

    const Eigen::Index n = system.size();
    SolverConfig cfg = config;
    std::optional<OperatorStieltjes> warm = cfg.initial;
    const auto count = static_cast<long>(std::ceil(2.0 * top / step));
    for (long i = 0; i <= count; ++i) {
        const double t = top - step * static_cast<double>(i);
        cfg.initial = warm;
        const DysonSolution sol = system.solve(SpectralParameter::scalar({t, eta_eval}, n), cfg);
        if (!sol.converged) {
            warm.reset();
            continue;
        }
        warm = sol.g_square;
        const double density = -stieltjes_trace(sol.g_square).imag() / M_PI;
        if (density > level) return t;
    }
    throw ConvergenceError("bulk edge: no grid point with density above 1e-3");
}

Window default_search_window(double bulk_edge, const Eigen::VectorXd& theta) {
    const double reach = theta.size() > 0 ? theta.cwiseAbs().maxCoeff() : 0.0;
    return {bulk_edge - 0.5, bulk_edge + reach + 2.0};
}

std::optional<double> closed_form_outlier(ClosedFormKind kind, double theta, Eigen::Index n, Eigen::Index m) {
    if (n < 1 || m < 1) throw std::invalid_argument("closed form: dimensions must be positive");
    if (!std::isfinite(theta) || theta < 0.0) throw std::invalid_argument("closed form: theta must be >= 0");
    switch (kind) {
        case ClosedFormKind::constant: {
            if (n > m) throw std::invalid_argument("closed form: constant profile needs n <= m");
            const double c = static_cast<double>(n) / static_cast<double>(m);
            if (!(theta > std::pow(c, 0.25))) return std::nullopt;
            const double t2 = theta * theta;
            return std::sqrt((1.0 + t2) * (c + t2) / t2);
        }
        case ClosedFormKind::doubly_stochastic:
            if (!(theta > 1.0)) return std::nullopt;
            return theta + 1.0 / theta;
    }
    return std::nullopt;
}

}  // namespace vpdeq
