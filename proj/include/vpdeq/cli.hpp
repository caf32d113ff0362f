#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "vpdeq/profile.hpp"

namespace vpdeq {

/// Invalid experiment configuration; field() names the offending flag or key.
class ConfigError : public std::invalid_argument {
public:
    ConfigError(std::string field, const std::string& message)
        : std::invalid_argument(field + ": " + message), field_(std::move(field)) {}
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

/// "constant:n=360,m=400", "piecewise:n=..,m=..,ratio=200", "bernoulli:n=..,m=..,p=..,seed=..",
/// "doubly-stochastic:n=..,k=8,seed=..", each with optional mode=hermitian|rectangular,
/// or a path to a profile CSV or JSON file. `field` names the flag in error messages.
VarianceProfile parse_profile_spec(const std::string& spec, const std::string& field = "--profile");

/// "zero", "diag:v" (v broadcast), "diag:v1,v2,...", or a CSV path; rows x cols.
Eigen::MatrixXcd parse_deformation_spec(const std::string& spec, Eigen::Index rows, Eigen::Index cols,
                                        const std::string& field = "--y");

/// "a:b:c" into three numbers; "a:b" gives two.
std::vector<double> parse_colon_list(const std::string& text, const std::string& field);

/// Run one subcommand. args excludes the program name. Returns 0 on success,
/// 1 on configuration errors and 2 when a Dyson solve fails to converge.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace vpdeq
