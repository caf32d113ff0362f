#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include "json.hpp"

#include "vpdeq/density.hpp"
#include "vpdeq/outliers.hpp"
#include "vpdeq/profile.hpp"

namespace vpdeq {

/// Locale-independent, 17 significant digits.
std::string format_double(double x);
/// Strict locale-independent parse; throws std::invalid_argument on junk.
double parse_double(std::string_view text);

/// 64-bit FNV-1a, as 16 lowercase hex digits.
std::string fnv1a_hex(std::string_view data);

/// Header "rows,cols,mode", one line with those values, then one CSV line per row.
void write_profile_csv(const VarianceProfile& profile, std::ostream& out);
VarianceProfile read_profile_csv(std::istream& in);
VarianceProfile read_profile_csv(const std::filesystem::path& path);

/// {rows, cols, mode, entries} with entries row-major.
nlohmann::json profile_to_json(const VarianceProfile& profile);
VarianceProfile profile_from_json(const nlohmann::json& j);

/// Plain numeric CSV (no header), every row of the same length.
Eigen::MatrixXd read_matrix_csv(const std::filesystem::path& path);

/// "t,density" then one line per grid point.
void write_density_csv(const DensityCurve& curve, std::ostream& out);
nlohmann::json density_metadata(const DensityCurve& curve, double tolerance, const std::string& config_hash);

nlohmann::json outlier_report_to_json(const OutlierReport& report);
OutlierReport outlier_report_from_json(const nlohmann::json& j);

/// One value per line.
void write_values_csv(const Eigen::VectorXd& values, std::ostream& out);

/// Write text to a file, creating parent directories; throws std::runtime_error on failure.
void write_file(const std::filesystem::path& path, const std::string& contents);

}  // namespace vpdeq
