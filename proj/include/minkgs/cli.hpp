#pragma once

/// @file cli.hpp
/// Command-line front end. Subcommands:
///   thresholds  alpha, xi0, beta, gamma and the hypothesis report
///   shoot       one shot from --xi
///   solve       bracket, bisect and verify a ground state
///   scan        classify a uniform grid of initial heights
/// Options may also come from a TOML file given by --config; options on the
/// command line take precedence.

#include "minkgs/nonlinearity.hpp"
#include "minkgs/shooting.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace minkgs::cli {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int {
    kSuccess = 0,
    kConfigError = 1,
    kAssumptionFailure = 2,
    kBracketFailure = 3,
    kVerificationFailure = 4,
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    std::string command;

    std::string family;
    std::optional<double> lambda;
    std::optional<double> q;
    std::string table_path;
    int N = 3;
    std::optional<double> scan_max;  // family default when unset

    ShootingConfig shooting;

    std::optional<double> xi;      // shoot
    std::optional<double> xi_min;  // scan
    std::optional<double> xi_max;
    int points = 101;

    std::string summary_path;  // empty: summary goes to stdout
    std::string profile_path;  // empty: no profile CSV
    std::string table_out;     // scan classification CSV
    std::uint64_t seed = 0;
    bool wall_clock = false;

    /// Throws ConfigError on values no module would accept.
    void validate() const;
};

/// Builds the family named in cfg. Throws ConfigError on missing or invalid
/// parameters.
Nonlinearity build_nonlinearity(const RunConfig& cfg);

/// Reads a two-column (s, f) table; a non-numeric first line is a header.
Nonlinearity read_table(const std::string& path);

int cmd_thresholds(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_shoot(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_solve(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_scan(const RunConfig& cfg, std::ostream& out, std::ostream& err);

/// Parses argv (argv[0] is the program name) and dispatches.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Profile rows as CSV with header r,u,uprime,q,D,energy_residual.
void write_profile_csv(std::ostream& os, const std::vector<ProfileRow>& rows);

}  // namespace minkgs::cli
