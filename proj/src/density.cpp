#include "vpdeq/density.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <thread>

namespace vpdeq {

bool DensityCurve::all_converged() const {
    return std::all_of(converged.begin(), converged.end(), [](bool c) { return c; });
}

Complex stieltjes_trace(const OperatorStieltjes& g) {
    if (g.size() == 0) throw std::invalid_argument("stieltjes_trace of an empty transform");
    return g.diag().mean();
}

namespace {

double density_at(const DysonSolution& sol) {
    return -stieltjes_trace(sol.g_square).imag() / std::numbers::pi;
}

void check_grid(const std::vector<double>& grid) {
    if (grid.empty()) throw std::invalid_argument("density grid must be non-empty");
    if (!std::is_sorted(grid.begin(), grid.end())) throw std::invalid_argument("density grid must be sorted");
}

}  // namespace

DensityCurve density_curve(const DysonSystem& system, const std::vector<double>& grid, double eta,
                           const SolverConfig& config, const DensityOptions& options) {
    if (!(eta > 0.0)) throw std::invalid_argument("density eta must be > 0");
    check_grid(grid);
    config.validate();

    DensityCurve curve;
    curve.grid = grid;
    curve.eta = eta;
    curve.values.assign(grid.size(), 0.0);
    curve.converged.assign(grid.size(), false);
    const Eigen::Index n = system.size();

    if (options.threads <= 1) {
        SolverConfig local = config;
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const auto sol = system.solve(SpectralParameter::scalar({grid[i], eta}, n), local);
            curve.values[i] = density_at(sol);
            curve.converged[i] = sol.converged;
            local.initial = sol.g_square;
        }
        return curve;
    }

    // Cold starts only, so the result does not depend on the thread count.
    std::vector<char> flags(grid.size(), 0);
    const unsigned workers = std::min<unsigned>(options.threads, static_cast<unsigned>(grid.size()));
    std::vector<std::exception_ptr> errors(workers);
    {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                try {
                    for (std::size_t i = w; i < grid.size(); i += workers) {
                        const auto sol = system.solve(SpectralParameter::scalar({grid[i], eta}, n), config);
                        curve.values[i] = density_at(sol);
                        flags[i] = sol.converged ? 1 : 0;
                    }
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        }
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    for (std::size_t i = 0; i < grid.size(); ++i) curve.converged[i] = flags[i] != 0;
    return curve;
}

DensityCurve density_curve(const VarianceProfile& profile, const Eigen::MatrixXcd& y,
                           const std::vector<double>& grid, double eta, const SolverConfig& config,
                           const DensityOptions& options) {
    return density_curve(DysonSystem(profile, y), grid, eta, config, options);
}

DensityCurve sv_density_correction(const DensityCurve& raw, Eigen::Index n, Eigen::Index m) {
    if (n < 1 || m < 1) throw std::invalid_argument("dimensions must be positive");
    if (n > m) throw std::invalid_argument("singular-value correction needs n <= m");
    if (raw.grid.size() != raw.values.size()) throw std::invalid_argument("malformed density curve");
    if (!raw.grid.empty() && raw.grid.front() < 0.0) {
        throw std::invalid_argument("singular-value correction needs a grid in [0, inf)");
    }
    const double atom = static_cast<double>(m - n) / static_cast<double>(m + n);
    const double scale = 2.0 / (1.0 - atom);
    const double eta = raw.eta;

    DensityCurve out = raw;
    for (std::size_t i = 0; i < raw.grid.size(); ++i) {
        const double t = raw.grid[i];
        const double cauchy = eta / (t * t + eta * eta) / std::numbers::pi;
        out.values[i] = scale * (raw.values[i] - atom * cauchy);
    }
    return out;
}

std::vector<double> make_grid(double lo, double hi, double step) {
    if (!(step > 0.0)) throw std::invalid_argument("grid step must be > 0");
    if (!(hi >= lo)) throw std::invalid_argument("grid bounds must satisfy min <= max");
    const auto count = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-6)) + 1;
    std::vector<double> grid(count);
    for (std::size_t i = 0; i < count; ++i) grid[i] = lo + static_cast<double>(i) * step;
    return grid;
}

double integrate(const DensityCurve& curve) {
    double total = 0.0;
    for (std::size_t i = 1; i < curve.grid.size(); ++i) {
        total += 0.5 * (curve.values[i] + curve.values[i - 1]) * (curve.grid[i] - curve.grid[i - 1]);
    }
    return total;
}

double integrate(const DensityCurve& curve, double lo, double hi) {
    double total = 0.0;
    for (std::size_t i = 1; i < curve.grid.size(); ++i) {
        const double a = curve.grid[i - 1];
        const double b = curve.grid[i];
        const double left = std::max(a, lo);
        const double right = std::min(b, hi);
        if (right <= left) continue;
        const auto interp = [&](double t) {
            return curve.values[i - 1] + (curve.values[i] - curve.values[i - 1]) * (t - a) / (b - a);
        };
        total += 0.5 * (interp(left) + interp(right)) * (right - left);
    }
    return total;
}

}  // namespace vpdeq
