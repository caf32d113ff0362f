#include "vpdeq/simplex.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace vpdeq {

SimplexResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& objective,
                          const Eigen::VectorXd& start, const SimplexOptions& options) {
    const Eigen::Index dim = start.size();
    if (dim == 0) throw std::invalid_argument("nelder_mead needs at least one coordinate");
    if (!(options.initial_step > 0.0)) throw std::invalid_argument("nelder_mead initial_step must be > 0");

    SimplexResult result;
    const auto eval = [&](const Eigen::VectorXd& x) {
        ++result.evaluations;
        return objective(x);
    };

    std::vector<Eigen::VectorXd> vertex(static_cast<std::size_t>(dim + 1), start);
    std::vector<double> value(vertex.size());
    for (Eigen::Index i = 0; i < dim; ++i) vertex[static_cast<std::size_t>(i + 1)](i) += options.initial_step;
    for (std::size_t i = 0; i < vertex.size(); ++i) value[i] = eval(vertex[i]);

    std::vector<std::size_t> order(vertex.size());
    const auto sort_vertices = [&] {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return value[a] < value[b]; });
        std::vector<Eigen::VectorXd> v2;
        std::vector<double> f2;
        for (auto i : order) {
            v2.push_back(vertex[i]);
            f2.push_back(value[i]);
        }
        vertex = std::move(v2);
        value = std::move(f2);
    };

    while (true) {
        sort_vertices();
        double diameter = 0.0;
        double spread = 0.0;
        for (std::size_t i = 1; i < vertex.size(); ++i) {
            diameter = std::max(diameter, (vertex[i] - vertex[0]).cwiseAbs().maxCoeff());
            spread = std::max(spread, std::abs(value[i] - value[0]));
        }
        if (diameter <= options.x_tolerance && spread <= options.f_tolerance) {
            result.converged = true;
            break;
        }
        // Values can be flat while the simplex is still wide (or the reverse);
        // a collapsed simplex is treated as converged either way.
        if (diameter <= options.x_tolerance * 1e-3) {
            result.converged = true;
            break;
        }
        if (result.evaluations >= options.max_evaluations) break;

        const std::size_t worst = vertex.size() - 1;
        Eigen::VectorXd centroid = Eigen::VectorXd::Zero(dim);
        for (std::size_t i = 0; i < worst; ++i) centroid += vertex[i];
        centroid /= static_cast<double>(worst);

        const Eigen::VectorXd reflected = centroid + (centroid - vertex[worst]);
        const double f_reflected = eval(reflected);
        if (f_reflected < value[0]) {
            const Eigen::VectorXd expanded = centroid + 2.0 * (centroid - vertex[worst]);
            const double f_expanded = eval(expanded);
            if (f_expanded < f_reflected) {
                vertex[worst] = expanded;
                value[worst] = f_expanded;
            } else {
                vertex[worst] = reflected;
                value[worst] = f_reflected;
            }
            continue;
        }
        if (f_reflected < value[worst - 1]) {
            vertex[worst] = reflected;
            value[worst] = f_reflected;
            continue;
        }
        const bool outside = f_reflected < value[worst];
        const Eigen::VectorXd contracted = outside ? Eigen::VectorXd(centroid + 0.5 * (reflected - centroid))
                                                   : Eigen::VectorXd(centroid + 0.5 * (vertex[worst] - centroid));
        const double f_contracted = eval(contracted);
        if (f_contracted < (outside ? f_reflected : value[worst])) {
            vertex[worst] = contracted;
            value[worst] = f_contracted;
            continue;
        }
        for (std::size_t i = 1; i < vertex.size(); ++i) {
            vertex[i] = vertex[0] + 0.5 * (vertex[i] - vertex[0]);
            value[i] = eval(vertex[i]);
        }
    }
    result.x = vertex[0];
    result.value = value[0];
    return result;
}

}  // namespace vpdeq
