#include "vpdeq/io.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <system_error>

namespace vpdeq {

std::string format_double(double x) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 17);
    return {buf, res.ptr};
}

double parse_double(std::string_view text) {
    while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
    while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) text.remove_suffix(1);
    if (!text.empty() && text.front() == '+') text.remove_prefix(1);
    double value = 0.0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
    if (text.empty() || res.ec != std::errc() || res.ptr != text.data() + text.size()) {
        throw std::invalid_argument("not a number: '" + std::string(text) + "'");
    }
    return value;
}

std::string fnv1a_hex(std::string_view data) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    static constexpr char digits[] = "0123456789abcdef";
    for (int i = 15; i >= 0; --i) {
        buf[i] = digits[h & 0xf];
        h >>= 4;
    }
    buf[16] = '\0';
    return buf;
}

namespace {

std::vector<std::string_view> split(std::string_view line, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(sep, start);
        out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

bool next_line(std::istream& in, std::string& line) {
    while (std::getline(in, line)) {
        if (!trim(line).empty()) return true;
    }
    return false;
}

Eigen::Index parse_index(std::string_view text, const char* field) {
    text = trim(text);
    long long v = 0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (text.empty() || res.ec != std::errc() || res.ptr != text.data() + text.size() || v < 0) {
        throw std::invalid_argument(std::string("profile csv: bad ") + field + " '" + std::string(text) + "'");
    }
    return static_cast<Eigen::Index>(v);
}

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return in;
}

}  // namespace

void write_profile_csv(const VarianceProfile& profile, std::ostream& out) {
    out << "rows,cols,mode\n" << profile.rows() << ',' << profile.cols() << ',' << to_string(profile.mode()) << '\n';
    const auto& e = profile.entries();
    for (Eigen::Index i = 0; i < e.rows(); ++i) {
        for (Eigen::Index j = 0; j < e.cols(); ++j) {
            if (j > 0) out << ',';
            out << format_double(e(i, j));
        }
        out << '\n';
    }
}

VarianceProfile read_profile_csv(std::istream& in) {
    std::string line;
    if (!next_line(in, line) || trim(line) != "rows,cols,mode") {
        throw std::invalid_argument("profile csv: expected header 'rows,cols,mode'");
    }
    if (!next_line(in, line)) throw std::invalid_argument("profile csv: missing dimensions line");
    const auto head = split(line, ',');
    if (head.size() != 3) throw std::invalid_argument("profile csv: dimensions line needs rows,cols,mode");
    const Eigen::Index rows = parse_index(head[0], "rows");
    const Eigen::Index cols = parse_index(head[1], "cols");
    const ProfileMode mode = parse_profile_mode(trim(head[2]));

    Eigen::MatrixXd e(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        if (!next_line(in, line)) throw std::invalid_argument("profile csv: expected " + std::to_string(rows) + " rows");
        const auto cells = split(line, ',');
        if (static_cast<Eigen::Index>(cells.size()) != cols) {
            throw std::invalid_argument("profile csv: row " + std::to_string(i + 1) + " has " +
                                        std::to_string(cells.size()) + " values, expected " + std::to_string(cols));
        }
        for (Eigen::Index j = 0; j < cols; ++j) e(i, j) = parse_double(cells[static_cast<std::size_t>(j)]);
    }
    if (next_line(in, line)) throw std::invalid_argument("profile csv: trailing data after the last row");
    return {std::move(e), mode};
}

VarianceProfile read_profile_csv(const std::filesystem::path& path) {
    auto in = open_input(path);
    return read_profile_csv(in);
}

nlohmann::json profile_to_json(const VarianceProfile& profile) {
    const auto& e = profile.entries();
    std::vector<double> flat;
    flat.reserve(static_cast<std::size_t>(e.size()));
    for (Eigen::Index i = 0; i < e.rows(); ++i) {
        for (Eigen::Index j = 0; j < e.cols(); ++j) flat.push_back(e(i, j));
    }
    return {{"rows", profile.rows()}, {"cols", profile.cols()}, {"mode", to_string(profile.mode())}, {"entries", flat}};
}

VarianceProfile profile_from_json(const nlohmann::json& j) {
    const auto rows = j.at("rows").get<Eigen::Index>();
    const auto cols = j.at("cols").get<Eigen::Index>();
    const auto mode = parse_profile_mode(j.at("mode").get<std::string>());
    const auto flat = j.at("entries").get<std::vector<double>>();
    if (rows < 0 || cols < 0 || static_cast<Eigen::Index>(flat.size()) != rows * cols) {
        throw std::invalid_argument("profile json: entries must hold rows * cols values");
    }
    Eigen::MatrixXd e(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index jj = 0; jj < cols; ++jj) e(i, jj) = flat[static_cast<std::size_t>(i * cols + jj)];
    }
    return {std::move(e), mode};
}

Eigen::MatrixXd read_matrix_csv(const std::filesystem::path& path) {
    auto in = open_input(path);
    std::vector<std::vector<double>> rows;
    std::string line;
    while (next_line(in, line)) {
        std::vector<double> row;
        for (auto cell : split(line, ',')) row.push_back(parse_double(cell));
        if (!rows.empty() && row.size() != rows.front().size()) {
            throw std::invalid_argument(path.string() + ": row " + std::to_string(rows.size() + 1) +
                                        " has a different length");
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw std::invalid_argument(path.string() + ": empty matrix");
    Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
    for (Eigen::Index i = 0; i < out.rows(); ++i) {
        for (Eigen::Index j = 0; j < out.cols(); ++j) {
            out(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        }
    }
    return out;
}

void write_density_csv(const DensityCurve& curve, std::ostream& out) {
    out << "t,density\n";
    for (std::size_t i = 0; i < curve.grid.size(); ++i) {
        out << format_double(curve.grid[i]) << ',' << format_double(curve.values[i]) << '\n';
    }
}

nlohmann::json density_metadata(const DensityCurve& curve, double tolerance, const std::string& config_hash) {
    std::vector<bool> flags(curve.converged.begin(), curve.converged.end());
    return {{"eta", curve.eta},
            {"tolerance", tolerance},
            {"points", curve.grid.size()},
            {"all_converged", curve.all_converged()},
            {"converged", flags},
            {"config_hash", config_hash}};
}

nlohmann::json outlier_report_to_json(const OutlierReport& report) {
    nlohmann::json cands = nlohmann::json::array();
    for (const auto& c : report.candidates) {
        cands.push_back({{"lambda", c.lambda}, {"det_abs", c.det_abs}, {"accepted", c.accepted}});
    }
    return {{"threshold", report.threshold},
            {"window", {report.search_window.lo, report.search_window.hi}},
            {"candidates", cands}};
}

OutlierReport outlier_report_from_json(const nlohmann::json& j) {
    OutlierReport r;
    r.threshold = j.at("threshold").get<double>();
    const auto& w = j.at("window");
    r.search_window = {w.at(0).get<double>(), w.at(1).get<double>()};
    for (const auto& c : j.at("candidates")) {
        r.candidates.push_back({c.at("lambda").get<double>(), c.at("det_abs").get<double>(), c.at("accepted").get<bool>()});
    }
    return r;
}

void write_values_csv(const Eigen::VectorXd& values, std::ostream& out) {
    for (double v : values) out << format_double(v) << '\n';
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << contents;
    if (!out) throw std::runtime_error("error writing " + path.string());
}

}  // namespace vpdeq
