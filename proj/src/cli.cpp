#include "vpdeq/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"

#include "vpdeq/density.hpp"
#include "vpdeq/dilation.hpp"
#include "vpdeq/io.hpp"
#include "vpdeq/outliers.hpp"
#include "vpdeq/sampler.hpp"

namespace vpdeq {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::vector<std::string> split_list(const std::string& text, char sep) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(text);
    while (std::getline(in, item, sep)) out.push_back(item);
    if (!text.empty() && text.back() == sep) out.emplace_back();
    return out;
}

double number(const std::string& text, const std::string& field) {
    try {
        return parse_double(text);
    } catch (const std::invalid_argument&) {
        throw ConfigError(field, "'" + text + "' is not a number");
    }
}

Eigen::Index count_value(const std::string& text, const std::string& field) {
    const double v = number(text, field);
    if (v < 1.0 || v != std::floor(v) || v > 1e9) throw ConfigError(field, "'" + text + "' is not a positive integer");
    return static_cast<Eigen::Index>(v);
}

std::uint64_t seed_value(const std::string& text, const std::string& field) {
    std::uint64_t v = 0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (text.empty() || res.ec != std::errc() || res.ptr != text.data() + text.size()) {
        throw ConfigError(field, "'" + text + "' is not a seed (unsigned integer)");
    }
    return v;
}

using Params = std::map<std::string, std::string>;

struct ProfileRequest {
    std::string kind;
    Params params;
};

VarianceProfile build_profile(const ProfileRequest& req, const std::string& field) {
    const std::map<std::string, std::vector<std::string>> allowed{
        {"constant", {"n", "m", "value", "mode"}},
        {"piecewise", {"n", "m", "ratio", "gamma1", "mode"}},
        {"bernoulli", {"n", "m", "p", "seed", "mode"}},
        {"doubly-stochastic", {"n", "k", "seed", "mode"}},
    };
    const auto kind = allowed.find(req.kind);
    if (kind == allowed.end()) {
        throw ConfigError(field, "unknown profile kind '" + req.kind +
                                     "' (constant, piecewise, bernoulli, doubly-stochastic)");
    }
    for (const auto& [key, value] : req.params) {
        if (std::find(kind->second.begin(), kind->second.end(), key) == kind->second.end()) {
            throw ConfigError(field, "unknown parameter '" + key + "' for " + req.kind);
        }
    }
    auto get = [&](const std::string& key) -> std::optional<std::string> {
        const auto it = req.params.find(key);
        if (it == req.params.end()) return std::nullopt;
        return it->second;
    };
    auto need = [&](const std::string& key) {
        auto v = get(key);
        if (!v) throw ConfigError(field, req.kind + " profile needs " + key);
        return *v;
    };

    ProfileMode mode = ProfileMode::rectangular;
    if (auto m = get("mode")) {
        try {
            mode = parse_profile_mode(*m);
        } catch (const std::invalid_argument&) {
            throw ConfigError(field, "mode must be hermitian or rectangular");
        }
    }
    const Eigen::Index n = count_value(need("n"), field + " n");
    Eigen::Index m = n;
    if (auto mv = get("m")) m = count_value(*mv, field + " m");
    if (mode == ProfileMode::hermitian && m != n) throw ConfigError(field, "a hermitian profile needs n == m");

    try {
        if (req.kind == "constant") {
            const double value = get("value") ? number(*get("value"), field + " value") : 1.0;
            return constant_profile(n, m, value, mode);
        }
        if (req.kind == "piecewise") {
            const double ratio = get("ratio") ? number(*get("ratio"), field + " ratio") : 200.0;
            if (auto g1 = get("gamma1")) {
                const double gamma1 = number(*g1, field + " gamma1");
                return piecewise_profile(n, m, gamma1, ratio * gamma1, mode);
            }
            return normalize_profile(piecewise_profile(n, m, 1.0, ratio, mode));
        }
        if (req.kind == "bernoulli") {
            const double p = number(need("p"), field + " p");
            const std::uint64_t seed = get("seed") ? seed_value(*get("seed"), field + " seed") : 0;
            return bernoulli_profile(n, m, p, seed, mode);
        }
        const Eigen::Index k = get("k") ? count_value(*get("k"), field + " k") : 8;
        const std::uint64_t seed = get("seed") ? seed_value(*get("seed"), field + " seed") : 0;
        return doubly_stochastic_profile(n, k, seed, mode);
    } catch (const ConfigError&) {
        throw;
    } catch (const std::invalid_argument& e) {
        throw ConfigError(field, e.what());
    }
}

struct SolverFlags {
    double tolerance = 1e-12;
    int max_iterations = 10000;
    double damping = 1.0;
    int anderson = 8;

    void add(CLI::App* app) {
        app->add_option("--tolerance", tolerance, "Dyson residual tolerance")->capture_default_str();
        app->add_option("--max-iterations", max_iterations, "Dyson iteration cap")->capture_default_str();
        app->add_option("--damping", damping, "initial damping in (0, 1]")->capture_default_str();
        app->add_option("--anderson", anderson, "Anderson depth, 0 for plain iteration")->capture_default_str();
    }

    SolverConfig config() const {
        SolverConfig c;
        c.tolerance = tolerance;
        c.max_iterations = max_iterations;
        c.damping = damping;
        c.anderson_depth = anderson;
        try {
            c.validate();
        } catch (const std::invalid_argument& e) {
            throw ConfigError("solver", e.what());
        }
        return c;
    }

    void record(json& j) const {
        j["tolerance"] = tolerance;
        j["max-iterations"] = max_iterations;
        j["damping"] = damping;
        j["anderson"] = anderson;
    }
};

unsigned thread_count() {
    const char* env = std::getenv("VPDEQ_THREADS");
    if (env == nullptr || *env == '\0') return 1;
    const std::string text(env);
    const auto v = count_value(text, "VPDEQ_THREADS");
    return static_cast<unsigned>(std::min<Eigen::Index>(v, 256));
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

// Metadata shared by every emitted JSON document.
json stamp(const std::string& command, const json& config) {
    json canonical{{"command", command}, {"config", config}};
    return {{"command", command}, {"config", config}, {"config_hash", fnv1a_hex(canonical.dump())}};
}

// Writes diagnostics.json and reports exit status 2.
int convergence_failure(const fs::path& out_dir, const json& meta, const std::string& message,
                        const json& details, std::ostream& err) {
    json d = meta;
    d["error"] = "non-convergence";
    d["message"] = message;
    d["details"] = details;
    try {
        write_file(out_dir / "diagnostics.json", dump(d));
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
    }
    err << "error: " << message << " (see " << (out_dir / "diagnostics.json").string() << ")\n";
    return 2;
}

// ---------------------------------------------------------------- profile

struct ProfileCmd {
    std::string kind = "constant";
    Eigen::Index n = 0;
    Eigen::Index m = 0;
    double p = 0.0;
    Eigen::Index k = 8;
    std::uint64_t seed = 0;
    std::string mode = "rectangular";
    double ratio = 200.0;
    double value = 1.0;
    bool normalize = false;
    std::string out = "out";
};

int run_profile(const ProfileCmd& c, std::ostream& out) {
    if (c.n < 1) throw ConfigError("--n", "must be >= 1");
    ProfileRequest req{c.kind, {{"n", std::to_string(c.n)}, {"mode", c.mode}}};
    if (c.kind != "doubly-stochastic") req.params["m"] = std::to_string(c.m > 0 ? c.m : c.n);
    if (c.kind == "constant") req.params["value"] = format_double(c.value);
    if (c.kind == "piecewise") req.params["ratio"] = format_double(c.ratio);
    if (c.kind == "bernoulli") {
        req.params["p"] = format_double(c.p);
        req.params["seed"] = std::to_string(c.seed);
    }
    if (c.kind == "doubly-stochastic") {
        req.params["k"] = std::to_string(c.k);
        req.params["seed"] = std::to_string(c.seed);
    }
    VarianceProfile profile = build_profile(req, "--kind");
    if (c.normalize) profile = normalize_profile(profile);

    json config{{"kind", c.kind}, {"n", c.n}, {"m", c.m > 0 ? c.m : c.n}, {"p", c.p},
                {"k", c.k}, {"seed", c.seed}, {"mode", c.mode}, {"ratio", c.ratio},
                {"value", c.value}, {"normalize", c.normalize}};
    json meta = stamp("profile", config);
    meta["profile"] = profile_to_json(profile);
    meta["normalization"] = profile.normalization();
    meta["gamma_max_sq"] = profile.gamma_max_sq();

    std::ostringstream csv;
    write_profile_csv(profile, csv);
    const fs::path dir(c.out);
    write_file(dir / "profile.csv", csv.str());
    write_file(dir / "profile.json", dump(meta));
    out << "wrote " << (dir / "profile.csv").string() << " (" << profile.rows() << " x " << profile.cols()
        << ", normalization " << format_double(profile.normalization()) << ")\n";
    return 0;
}

// ---------------------------------------------------------------- density

struct DensityCmd {
    std::string profile;
    std::string y = "zero";
    std::string grid;
    double eta = 0.01;
    SolverFlags solver;
    std::string out = "out";
};

std::vector<double> grid_from(const std::string& text, double eta, const std::string& field) {
    const auto parts = parse_colon_list(text, field);
    if (parts.size() != 2 && parts.size() != 3) throw ConfigError(field, "expected min:max or min:max:step");
    const double step = parts.size() == 3 ? parts[2] : eta / 2.0;
    try {
        return make_grid(parts[0], parts[1], step);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(field, e.what());
    }
}

int run_density(const DensityCmd& c, std::ostream& out, std::ostream& err) {
    if (!(c.eta > 0.0)) throw ConfigError("--eta", "must be > 0");
    const VarianceProfile profile = parse_profile_spec(c.profile, "--profile");
    const bool rect = !profile.is_hermitian();
    const Eigen::MatrixXcd y = parse_deformation_spec(c.y, profile.rows(), profile.cols(), "--y");
    const std::string grid_text = c.grid.empty() ? (rect ? "0:3" : "-3:3") : c.grid;
    const auto grid = grid_from(grid_text, c.eta, "--grid");
    if (rect && grid.front() < 0.0) throw ConfigError("--grid", "singular-value densities need min >= 0");
    if (rect && profile.rows() > profile.cols()) throw ConfigError("--profile", "rectangular profiles need n <= m");
    const SolverConfig cfg = c.solver.config();

    json config{{"profile", c.profile}, {"y", c.y}, {"grid", grid_text}, {"eta", c.eta}};
    c.solver.record(config);
    json meta = stamp("density", config);

    DensityOptions opts;
    opts.threads = thread_count();
    DensityCurve curve;
    try {
        if (rect) {
            const DilatedModel d = dilate_model(RectangularModel(profile, y, std::nullopt));
            curve = sv_density_correction(density_curve(DysonSystem(d.profile, d.y), grid, c.eta, cfg, opts),
                                          profile.rows(), profile.cols());
        } else {
            curve = density_curve(DysonSystem(profile, y), grid, c.eta, cfg, opts);
        }
    } catch (const SolverError& e) {
        return convergence_failure(c.out, meta, e.what(), json::object(), err);
    }

    const fs::path dir(c.out);
    std::ostringstream csv;
    write_density_csv(curve, csv);
    write_file(dir / "density.csv", csv.str());
    json side = density_metadata(curve, cfg.tolerance, meta["config_hash"]);
    side["command"] = "density";
    side["config"] = config;
    side["kind"] = rect ? "singular-values" : "eigenvalues";
    side["mass"] = integrate(curve);
    write_file(dir / "density.json", dump(side));

    if (!curve.all_converged()) {
        json failed = json::array();
        for (std::size_t i = 0; i < curve.grid.size(); ++i) {
            if (!curve.converged[i]) failed.push_back(curve.grid[i]);
        }
        return convergence_failure(dir, meta, "Dyson solve did not converge at " + std::to_string(failed.size()) +
                                                  " grid point(s)",
                                   {{"unconverged_t", failed}}, err);
    }
    out << "wrote " << (dir / "density.csv").string() << " (" << curve.grid.size() << " points, mass "
        << format_double(integrate(curve)) << ")\n";
    return 0;
}

// ---------------------------------------------------------------- outliers

struct OutliersCmd {
    std::string model;
    std::string y = "zero";
    std::string theta_list;
    std::string sweep;
    std::string vectors = "constant";
    bool use_tilde = false;
    double threshold = 1e-3;
    std::string window;
    int scan_points = 50;
    double eta_eval = default_eta_eval;
    int curve_points = 200;
    SolverFlags solver;
    std::string out = "out";
};

// Orthonormal columns: normalized ones followed by orthonormalized e_1, e_2, ...
Eigen::MatrixXcd constant_vectors(Eigen::Index dim, Eigen::Index k) {
    Eigen::MatrixXd seed = Eigen::MatrixXd::Zero(dim, k);
    seed.col(0).setConstant(1.0 / std::sqrt(static_cast<double>(dim)));
    for (Eigen::Index j = 1; j < k; ++j) seed(j - 1, j) = 1.0;
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(seed);
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(dim, k);
    for (Eigen::Index j = 0; j < k; ++j) {
        if (q.col(j).dot(seed.col(j)) < 0.0) q.col(j) = -q.col(j);
    }
    return q.cast<Complex>();
}

Eigen::MatrixXcd basis_vectors(Eigen::Index dim, Eigen::Index k) {
    return Eigen::MatrixXd::Identity(dim, k).cast<Complex>();
}

struct VectorChoice {
    Eigen::MatrixXcd u;
    Eigen::MatrixXcd v;  // empty for hermitian models
};

VectorChoice make_vectors(const std::string& spec, Eigen::Index n, Eigen::Index m, bool rect, Eigen::Index k) {
    const std::string field = "--vectors";
    if (k > n || (rect && k > m)) throw ConfigError(field, "more spikes than dimensions");
    if (spec == "constant") return {constant_vectors(n, k), rect ? constant_vectors(m, k) : Eigen::MatrixXcd()};
    if (spec == "e1") return {basis_vectors(n, k), rect ? basis_vectors(m, k) : Eigen::MatrixXcd()};
    if (spec.rfind("csv:", 0) == 0) {
        Eigen::MatrixXd raw;
        try {
            raw = read_matrix_csv(spec.substr(4));
        } catch (const std::exception& e) {
            throw ConfigError(field, e.what());
        }
        const Eigen::Index rows = rect ? n + m : n;
        if (raw.rows() != rows || raw.cols() < k) {
            throw ConfigError(field, "csv must have " + std::to_string(rows) + " rows and at least " +
                                         std::to_string(k) + " columns");
        }
        VectorChoice out{raw.topLeftCorner(n, k).cast<Complex>(),
                         rect ? Eigen::MatrixXcd(raw.bottomLeftCorner(m, k).cast<Complex>()) : Eigen::MatrixXcd()};
        if (orthonormality_defect(out.u) > 1e-10 || (rect && orthonormality_defect(out.v) > 1e-10)) {
            throw ConfigError(field, "csv columns must be orthonormal");
        }
        return out;
    }
    throw ConfigError(field, "expected constant, e1 or csv:<path>");
}

struct PreparedModel {
    std::shared_ptr<const DysonSystem> system;
    bool rect = false;
    Eigen::Index n = 0;
    Eigen::Index m = 0;
};

SpikeSet spikes_for(const PreparedModel& pm, const VectorChoice& vecs, const Eigen::VectorXd& theta) {
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
        if (theta(i) != 0.0) keep.push_back(i);
    }
    const auto k = static_cast<Eigen::Index>(keep.size());
    if (k == 0) return SpikeSet::empty(pm.rect ? pm.n + pm.m : pm.n);
    Eigen::MatrixXcd u(pm.n, k);
    Eigen::MatrixXcd v(pm.rect ? pm.m : 0, k);
    Eigen::VectorXd t(k);
    for (Eigen::Index j = 0; j < k; ++j) {
        u.col(j) = vecs.u.col(keep[static_cast<std::size_t>(j)]);
        if (pm.rect) v.col(j) = vecs.v.col(keep[static_cast<std::size_t>(j)]);
        t(j) = theta(keep[static_cast<std::size_t>(j)]);
    }
    if (!pm.rect) return {u, t};
    if ((t.array() < 0.0).any()) throw ConfigError("--theta-list", "rectangular spikes must be >= 0");
    const RectangularModel model(VarianceProfile(Eigen::MatrixXd::Zero(pm.n, pm.m), ProfileMode::rectangular),
                                 Eigen::MatrixXcd::Zero(pm.n, pm.m), RectangularSpikes{u, t, v});
    return dilate_model(model).spikes();
}

json report_json(const OutlierReport& r) { return outlier_report_to_json(r); }

int run_outliers(const OutliersCmd& c, std::ostream& out, std::ostream& err) {
    const VarianceProfile profile = parse_profile_spec(c.model, "--model");
    PreparedModel pm;
    pm.rect = !profile.is_hermitian();
    pm.n = profile.rows();
    pm.m = profile.cols();
    const Eigen::MatrixXcd y = parse_deformation_spec(c.y, pm.n, pm.m, "--y");
    if (pm.rect) {
        const DilatedModel d = dilate_model(RectangularModel(profile, y, std::nullopt));
        pm.system = std::make_shared<const DysonSystem>(d.profile, d.y);
    } else {
        pm.system = std::make_shared<const DysonSystem>(profile, y);
    }
    if (!c.use_tilde && !pm.system->diagonal_deformation()) {
        throw ConfigError("--use-tilde", "required when the (dilated) deformation is not diagonal");
    }
    if (!(c.threshold > 0.0)) throw ConfigError("--threshold", "must be > 0");
    if (c.scan_points < 2) throw ConfigError("--scan-points", "must be >= 2");
    if (!(c.eta_eval > 0.0)) throw ConfigError("--eta-eval", "must be > 0");
    if (c.curve_points < 0) throw ConfigError("--curve-points", "must be >= 0");
    if (!c.sweep.empty() && !c.theta_list.empty()) throw ConfigError("--sweep", "cannot be combined with --theta-list");

    std::vector<Eigen::VectorXd> thetas;
    if (!c.sweep.empty()) {
        const auto parts = parse_colon_list(c.sweep, "--sweep");
        if (parts.size() != 3) throw ConfigError("--sweep", "expected min:max:count");
        const Eigen::Index count = count_value(format_double(parts[2]), "--sweep");
        if (!(parts[1] >= parts[0])) throw ConfigError("--sweep", "max must be >= min");
        for (Eigen::Index i = 0; i < count; ++i) {
            const double t = count == 1 ? parts[0]
                                        : parts[0] + (parts[1] - parts[0]) * static_cast<double>(i) /
                                                         static_cast<double>(count - 1);
            thetas.push_back(Eigen::VectorXd::Constant(1, t));
        }
    } else {
        const std::string list = c.theta_list.empty() ? "2" : c.theta_list;
        const auto items = split_list(list, ',');
        Eigen::VectorXd t(static_cast<Eigen::Index>(items.size()));
        for (std::size_t i = 0; i < items.size(); ++i) t(static_cast<Eigen::Index>(i)) = number(items[i], "--theta-list");
        thetas.push_back(t);
    }
    Eigen::Index k = 0;
    for (const auto& t : thetas) k = std::max(k, t.size());
    const VectorChoice vecs = make_vectors(c.vectors, pm.n, pm.m, pm.rect, k);
    const SolverConfig cfg = c.solver.config();

    json config{{"model", c.model}, {"y", c.y}, {"theta-list", c.theta_list}, {"sweep", c.sweep},
                {"vectors", c.vectors}, {"use-tilde", c.use_tilde}, {"threshold", c.threshold},
                {"window", c.window}, {"scan-points", c.scan_points}, {"eta-eval", c.eta_eval},
                {"curve-points", c.curve_points}};
    c.solver.record(config);
    json meta = stamp("outliers", config);
    const fs::path dir(c.out);

    OutlierSearchConfig search;
    search.threshold = c.threshold;
    search.scan_points = c.scan_points;
    search.use_tilde = c.use_tilde;
    search.eta_eval = c.eta_eval;
    search.threads = thread_count();
    search.solver = cfg;

    try {
        std::optional<Window> fixed;
        std::optional<double> edge;
        if (!c.window.empty()) {
            const auto w = parse_colon_list(c.window, "--window");
            if (w.size() != 2 || !(w[1] > w[0])) throw ConfigError("--window", "expected lo:hi with lo < hi");
            fixed = Window{w[0], w[1]};
        } else {
            edge = estimate_bulk_edge(*pm.system, c.eta_eval, cfg);
            meta["bulk_edge"] = *edge;
        }

        json reports = json::array();
        std::ostringstream sweep_csv;
        sweep_csv << "theta,best_lambda,best_det_abs,accepted,first_accepted_lambda\n";
        for (const auto& t : thetas) {
            const SpikeSet spikes = spikes_for(pm, vecs, t);
            const Window window = fixed ? *fixed : default_search_window(*edge, t);
            const OutlierReport report = locate_outliers(*pm.system, spikes, window, search);
            json r = report_json(report);
            r["theta"] = std::vector<double>(t.begin(), t.end());
            reports.push_back(r);
            const auto acc = report.accepted();
            const bool any = !report.candidates.empty();
            sweep_csv << format_double(t(0)) << ',' << (any ? format_double(report.best().lambda) : "nan") << ','
                      << (any ? format_double(report.best().det_abs) : "nan") << ',' << acc.size() << ','
                      << (acc.empty() ? "nan" : format_double(acc.front().lambda)) << '\n';
            out << "theta " << format_double(t(0)) << (t.size() > 1 ? ",..." : "") << ": " << acc.size()
                << " accepted";
            for (const auto& a : acc) out << ' ' << format_double(a.lambda);
            out << '\n';

            if (c.sweep.empty() && c.curve_points > 0) {
                DeterminantFunction f(pm.system, spikes, c.use_tilde, cfg, c.eta_eval);
                std::ostringstream curve;
                curve << "lambda,det_abs\n";
                const int pts = std::max(2, c.curve_points);
                for (int i = 0; i < pts; ++i) {
                    const double l = window.lo + (window.hi - window.lo) * i / (pts - 1);
                    curve << format_double(l) << ',' << format_double(f.det_abs(l)) << '\n';
                }
                write_file(dir / "det_curve.csv", curve.str());
            }
        }
        json doc = meta;
        if (c.sweep.empty()) {
            doc.update(reports.front());
        } else {
            doc["sweep"] = reports;
            write_file(dir / "sweep.csv", sweep_csv.str());
        }
        write_file(dir / "outliers.json", dump(doc));
    } catch (const SolverError& e) {
        return convergence_failure(dir, meta, e.what(), json::object(), err);
    }
    return 0;
}

// ---------------------------------------------------------------- sample

struct SampleCmd {
    std::string profile = "constant:n=360,m=400";
    std::string y = "zero";
    int count = 1;
    std::uint64_t seed = 0;
    std::string out = "out";
};

int run_sample(const SampleCmd& c, std::ostream& out) {
    if (c.count < 1) throw ConfigError("--count", "must be >= 1");
    const VarianceProfile profile = parse_profile_spec(c.profile, "--profile");
    const Eigen::MatrixXcd y = parse_deformation_spec(c.y, profile.rows(), profile.cols(), "--y");
    const bool rect = !profile.is_hermitian();

    // Draw k uses its own stream so any subset of draws can be reproduced alone.
    const Eigen::Index per = std::min(profile.rows(), profile.cols());
    std::vector<Eigen::VectorXd> draws(static_cast<std::size_t>(c.count));
    const unsigned threads = std::max(1u, std::min<unsigned>(thread_count(), static_cast<unsigned>(c.count)));
    auto work = [&](unsigned w) {
        for (int k = static_cast<int>(w); k < c.count; k += static_cast<int>(threads)) {
            Rng rng(derive_seed(c.seed, static_cast<std::uint64_t>(k)));
            if (rect) {
                draws[static_cast<std::size_t>(k)] = singular_values(sample_rect_gaussian(profile, rng) + y);
            } else {
                Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(sample_gue_profile(profile, rng) + y,
                                                                   Eigen::EigenvaluesOnly);
                draws[static_cast<std::size_t>(k)] = es.eigenvalues();
            }
        }
    };
    if (threads == 1) {
        work(0);
    } else {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < threads; ++w) pool.emplace_back(work, w);
    }

    std::ostringstream csv;
    for (const auto& d : draws) write_values_csv(d, csv);
    json config{{"profile", c.profile}, {"y", c.y}, {"count", c.count}, {"seed", c.seed}};
    json meta = stamp("sample", config);
    meta["kind"] = rect ? "singular-values" : "eigenvalues";
    meta["values_per_draw"] = per;
    meta["rows"] = profile.rows();
    meta["cols"] = profile.cols();
    const fs::path dir(c.out);
    write_file(dir / "samples.csv", csv.str());
    write_file(dir / "samples.json", dump(meta));
    out << "wrote " << (dir / "samples.csv").string() << " (" << c.count << " draws x " << per << " values)\n";
    return 0;
}

// ---------------------------------------------------------------- validate

struct ValidateCmd {
    std::string what = "master";
    Eigen::Index n = 0;
    int samples = 0;
    double d = 2.0;
    double delta = 0.5;
    double lambda_imag = 0.0;
    std::uint64_t seed = 0;
    SolverFlags solver;
    std::string out = "out";
};

int run_validate(const ValidateCmd& c, std::ostream& out, std::ostream& err) {
    const bool master = c.what == "master";
    const Eigen::Index n = c.n > 0 ? c.n : (master ? 50 : 400);
    const int samples = c.samples > 0 ? c.samples : (master ? 2000 : 100);
    const double im = c.lambda_imag > 0.0 ? c.lambda_imag : (master ? 1.0 : 0.5);
    if (c.n < 0) throw ConfigError("--n", "must be >= 1");
    if (c.samples < 0) throw ConfigError("--samples", "must be >= 1");
    if (c.lambda_imag < 0.0) throw ConfigError("--lambda-imag", "must be > 0");
    if (!(c.delta > 0.0 && c.delta < 1.0)) throw ConfigError("--delta", "must lie in (0, 1)");
    if (!(c.d > 0.0)) throw ConfigError("--d", "must be > 0");
    const SolverConfig cfg = c.solver.config();

    json config{{"what", c.what}, {"n", n}, {"samples", samples}, {"d", c.d}, {"delta", c.delta},
                {"lambda-imag", im}, {"seed", c.seed}};
    c.solver.record(config);
    json doc = stamp("validate", config);
    const fs::path dir(c.out);

    const VarianceProfile profile = constant_profile(n, n, 1.0, ProfileMode::hermitian);
    const Eigen::MatrixXcd y = Eigen::MatrixXcd::Zero(n, n);
    const SampleBatch batch{c.seed, samples, n};
    bool passed = false;
    try {
        if (master) {
            const auto est = estimate_master_equality(profile, y, SpectralParameter::scalar({0.0, im}, n), batch,
                                                      thread_count());
            const double tol = 5.0 / std::sqrt(static_cast<double>(samples));
            passed = est.deviation <= tol;
            doc["deviation"] = est.deviation;
            doc["tolerance"] = tol;
            out << "master equality: deviation " << format_double(est.deviation) << " (tolerance "
                << format_double(tol) << ")\n";
        } else {
            const auto chk = validate_concentration(profile, y, {0.0, im}, batch, c.delta, c.d, cfg, thread_count());
            passed = chk.bound.admissible && chk.pass_rate() >= 0.95;
            doc["pass_rate"] = chk.pass_rate();
            doc["epsilon_tilde"] = chk.bound.epsilon_tilde;
            doc["admissible"] = chk.bound.admissible;
            doc["im_lambda_threshold"] = chk.bound.im_lambda_threshold;
            doc["g_square"] = {chk.g_square.real(), chk.g_square.imag()};
            doc["max_error"] = *std::max_element(chk.errors.begin(), chk.errors.end());
            out << "concentration: pass rate " << format_double(chk.pass_rate()) << " (epsilon~ "
                << format_double(chk.bound.epsilon_tilde) << ")\n";
        }
    } catch (const SolverError& e) {
        return convergence_failure(dir, doc, e.what(), json::object(), err);
    }
    doc["passed"] = passed;
    write_file(dir / "validate.json", dump(doc));
    out << (passed ? "PASS" : "FAIL") << "\n";
    return 0;
}

// ---------------------------------------------------------------- config file

// Splice the keys of a --config JSON object in front of the command-line flags
// so that explicit flags, parsed later, win.
std::vector<std::string> expand_config(const std::vector<std::string>& args, const CLI::App& app) {
    if (args.empty()) return args;
    std::vector<std::string> rest;
    std::optional<std::string> path;
    for (std::size_t i = 1; i < args.size(); ++i) {
        if (args[i] == "--config") {
            if (i + 1 >= args.size()) throw ConfigError("--config", "missing file name");
            path = args[++i];
        } else if (args[i].rfind("--config=", 0) == 0) {
            path = args[i].substr(9);
        } else {
            rest.push_back(args[i]);
        }
    }
    if (!path) return args;

    const CLI::App* sub = nullptr;
    for (const auto* s : app.get_subcommands({})) {
        if (s->get_name() == args[0]) sub = s;
    }
    if (sub == nullptr) return args;

    std::ifstream in(*path);
    if (!in) throw ConfigError("--config", "cannot open " + *path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("--config", std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("--config", "top level must be an object");

    std::vector<std::string> out{args[0]};
    for (const auto& [key, value] : j.items()) {
        const std::string flag = "--" + key;
        const CLI::Option* opt = sub->get_option_no_throw(flag);
        if (opt == nullptr || key == "config") throw ConfigError(key, "unknown field for " + args[0]);
        if (value.is_boolean()) {
            if (opt->get_type_size() != 0) throw ConfigError(key, "expects a value, not a boolean");
            if (value.get<bool>()) out.push_back(flag);
            continue;
        }
        if (opt->get_type_size() == 0) throw ConfigError(key, "is a flag; use true or false");
        std::string text;
        if (value.is_string()) {
            text = value.get<std::string>();
        } else if (value.is_number_integer() || value.is_number_unsigned()) {
            text = value.dump();
        } else if (value.is_number_float()) {
            text = format_double(value.get<double>());
        } else {
            throw ConfigError(key, "must be a string, number or boolean");
        }
        out.push_back(flag);
        out.push_back(text);
    }
    out.insert(out.end(), rest.begin(), rest.end());
    return out;
}

}  // namespace

std::vector<double> parse_colon_list(const std::string& text, const std::string& field) {
    std::vector<double> out;
    for (const auto& part : split_list(text, ':')) out.push_back(number(part, field));
    return out;
}

VarianceProfile parse_profile_spec(const std::string& spec, const std::string& field) {
    const auto colon = spec.find(':');
    const std::string head = spec.substr(0, colon);
    const bool generator = colon != std::string::npos &&
                           (head == "constant" || head == "piecewise" || head == "bernoulli" ||
                            head == "doubly-stochastic");
    if (generator) {
        ProfileRequest req{head, {}};
        for (const auto& item : split_list(spec.substr(colon + 1), ',')) {
            const auto eq = item.find('=');
            if (eq == std::string::npos || eq == 0) throw ConfigError(field, "expected key=value, got '" + item + "'");
            req.params[item.substr(0, eq)] = item.substr(eq + 1);
        }
        return build_profile(req, field);
    }
    if (spec.empty()) throw ConfigError(field, "missing profile");
    const fs::path path(spec);
    if (!fs::exists(path)) throw ConfigError(field, "no such profile file or generator '" + spec + "'");
    try {
        if (path.extension() == ".json") {
            std::ifstream in(path);
            json j;
            in >> j;
            if (j.contains("profile")) return profile_from_json(j.at("profile"));
            return profile_from_json(j);
        }
        return read_profile_csv(path);
    } catch (const std::exception& e) {
        throw ConfigError(field, e.what());
    }
}

Eigen::MatrixXcd parse_deformation_spec(const std::string& spec, Eigen::Index rows, Eigen::Index cols,
                                        const std::string& field) {
    if (spec.empty() || spec == "zero") return Eigen::MatrixXcd::Zero(rows, cols);
    const Eigen::Index diag = std::min(rows, cols);
    if (spec.rfind("diag:", 0) == 0) {
        const auto items = split_list(spec.substr(5), ',');
        Eigen::MatrixXcd y = Eigen::MatrixXcd::Zero(rows, cols);
        if (items.size() == 1) {
            y.diagonal().setConstant(number(items[0], field));
        } else if (static_cast<Eigen::Index>(items.size()) == diag) {
            for (Eigen::Index i = 0; i < diag; ++i) y(i, i) = number(items[static_cast<std::size_t>(i)], field);
        } else {
            throw ConfigError(field, "diag needs 1 or " + std::to_string(diag) + " values");
        }
        return y;
    }
    if (!fs::exists(spec)) throw ConfigError(field, "expected zero, diag:<values> or a CSV path");
    Eigen::MatrixXd raw;
    try {
        raw = read_matrix_csv(spec);
    } catch (const std::exception& e) {
        throw ConfigError(field, e.what());
    }
    if (raw.rows() != rows || raw.cols() != cols) {
        throw ConfigError(field, "matrix must be " + std::to_string(rows) + " x " + std::to_string(cols));
    }
    if (rows == cols && (raw - raw.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, raw.cwiseAbs().maxCoeff())) {
        throw ConfigError(field, "matrix must be symmetric");
    }
    return raw.cast<Complex>();
}

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Deterministic equivalents for Gaussian matrices with a variance profile", "vpdeq"};
    app.require_subcommand(1);
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

    std::string config_path;
    auto add_config = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "JSON file of flag values; explicit flags win");
    };

    ProfileCmd pc;
    auto* profile = app.add_subcommand("profile", "generate a variance profile");
    profile->add_option("--kind", pc.kind)
        ->check(CLI::IsMember({"constant", "piecewise", "bernoulli", "doubly-stochastic"}))
        ->capture_default_str();
    profile->add_option("--n", pc.n, "rows")->required();
    profile->add_option("--m", pc.m, "columns (default n)");
    profile->add_option("--p", pc.p, "bernoulli probability");
    profile->add_option("--k", pc.k, "number of permutations")->capture_default_str();
    profile->add_option("--seed", pc.seed)->capture_default_str();
    profile->add_option("--mode", pc.mode)->check(CLI::IsMember({"hermitian", "rectangular"}))->capture_default_str();
    profile->add_option("--ratio", pc.ratio, "piecewise gamma2 / gamma1")->capture_default_str();
    profile->add_option("--value", pc.value, "constant value")->capture_default_str();
    profile->add_flag("--normalize", pc.normalize, "rescale to normalization 1");
    profile->add_option("--out", pc.out, "output directory")->capture_default_str();
    add_config(profile);

    DensityCmd dc;
    auto* density = app.add_subcommand("density", "deterministic-equivalent spectral density");
    density->add_option("--profile", dc.profile, "generator spec or profile file")->required();
    density->add_option("--y", dc.y, "zero | diag:<values> | CSV path")->capture_default_str();
    density->add_option("--grid", dc.grid, "min:max[:step]");
    density->add_option("--eta", dc.eta)->capture_default_str();
    dc.solver.add(density);
    density->add_option("--out", dc.out)->capture_default_str();
    add_config(density);

    OutliersCmd oc;
    auto* outliers = app.add_subcommand("outliers", "locate outliers of a spiked model");
    outliers->add_option("--model", oc.model, "profile spec; rectangular profiles are dilated")->required();
    outliers->add_option("--y", oc.y)->capture_default_str();
    outliers->add_option("--theta-list", oc.theta_list, "comma-separated spike strengths (default 2)");
    outliers->add_option("--sweep", oc.sweep, "min:max:count rank-one sweep");
    outliers->add_option("--vectors", oc.vectors, "constant | e1 | csv:<path>")->capture_default_str();
    outliers->add_flag("--use-tilde", oc.use_tilde, "use the subordination determinant");
    outliers->add_option("--threshold", oc.threshold)->capture_default_str();
    outliers->add_option("--window", oc.window, "lo:hi (default from the bulk edge)");
    outliers->add_option("--scan-points", oc.scan_points)->capture_default_str();
    outliers->add_option("--eta-eval", oc.eta_eval)->capture_default_str();
    outliers->add_option("--curve-points", oc.curve_points)->capture_default_str();
    oc.solver.add(outliers);
    outliers->add_option("--out", oc.out)->capture_default_str();
    add_config(outliers);

    SampleCmd sc;
    auto* sample = app.add_subcommand("sample", "draw random matrices and export their spectra");
    sample->add_option("--profile", sc.profile)->capture_default_str();
    sample->add_option("--y", sc.y)->capture_default_str();
    sample->add_option("--count", sc.count)->capture_default_str();
    sample->add_option("--seed", sc.seed)->capture_default_str();
    sample->add_option("--out", sc.out)->capture_default_str();
    add_config(sample);

    ValidateCmd vc;
    auto* validate = app.add_subcommand("validate", "Monte Carlo checks");
    validate->add_option("--what", vc.what)->check(CLI::IsMember({"master", "concentration"}))->capture_default_str();
    validate->add_option("--n", vc.n, "dimension (default 50 / 400)");
    validate->add_option("--samples", vc.samples, "draws (default 2000 / 100)");
    validate->add_option("--d", vc.d)->capture_default_str();
    validate->add_option("--delta", vc.delta)->capture_default_str();
    validate->add_option("--lambda-imag", vc.lambda_imag, "Im lambda (default 1 / 0.5)");
    validate->add_option("--seed", vc.seed)->capture_default_str();
    vc.solver.add(validate);
    validate->add_option("--out", vc.out)->capture_default_str();
    add_config(validate);

    try {
        std::vector<std::string> tokens = expand_config(args, app);
        std::reverse(tokens.begin(), tokens.end());
        try {
            app.parse(tokens);
        } catch (const CLI::ParseError& e) {
            const int code = app.exit(e, out, err);
            return code == 0 ? 0 : 1;
        }
        if (profile->parsed()) return run_profile(pc, out);
        if (density->parsed()) return run_density(dc, out, err);
        if (outliers->parsed()) return run_outliers(oc, out, err);
        if (sample->parsed()) return run_sample(sc, out);
        if (validate->parsed()) return run_validate(vc, out, err);
        return 1;
    } catch (const ConvergenceError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const SolverError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace vpdeq
