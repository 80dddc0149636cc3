#pragma once

/// @file shooting.hpp
/// Shooting on the initial height xi = u(0). A shot ends at the first of
///   - Turning:  q reaches 0 while u > 0,
///   - Crossing: u reaches 0 (with q < 0),
///   - GroundCandidate: u and |q| both fall below their tolerances,
///   - Undetermined: r_max is reached.
/// Turning heights and crossing heights form two disjoint open sets, and a
/// bisection between one of each converges on a ground state.

#include "minkgs/errors.hpp"
#include "minkgs/integrator.hpp"
#include "minkgs/nonlinearity.hpp"
#include "minkgs/variational.hpp"

#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace minkgs {

struct Turning {
    double r_turn = 0.0;
};
struct Crossing {
    double r_cross = 0.0;
};
struct GroundCandidate {
    double r_reached = 0.0;
    double u_final = 0.0;
    double q_final = 0.0;
};
struct Undetermined {
    double r_max = 0.0;
};

using Outcome = std::variant<Turning, Crossing, GroundCandidate, Undetermined>;

const char* outcome_name(const Outcome& o);
/// Event radius, reached radius or r_max depending on the tag.
double outcome_radius(const Outcome& o);

struct ShootingConfig {
    IntegratorConfig integrator;
    double r_max = 100.0;
    double u_tol = 1e-4;
    double q_tol = 1e-4;
    double xi_tol = 1e-10;
    double margin_tol = 1e-3;
    double res_tol = 1e-7;
    double decay_tol = 1e-3;
    double fd_tol = 1e-5;
    bool detect_ground_candidate = true;
    bool store_profile = true;
    unsigned workers = 1;  ///< 0 selects the hardware concurrency
    int max_bisections = 200;
    MinimizeConfig variational;
    bool variational_seed = true;

    void validate() const;
};

/// Radius to which Turning and Crossing events are localised.
inline constexpr double kEventTolerance = 1e-12;

struct ShotRecord {
    double xi = 0.0;
    Outcome outcome = Undetermined{};
    std::vector<ProfileRow> profile;  ///< r = 0, multiples of the stride, final state
    RadialState final_state;          ///< state at the event or where the shot stopped
    double max_energy_residual = 0.0;
    double min_slope_margin = 1.0;
    double min_u = 0.0;
    std::size_t steps = 0;
    std::size_t rhs_evaluations = 0;
    std::string error;  ///< set by classify_scan when the shot threw
};

/// A shot that failed inside the integrator; carries the partial record.
class ShotError : public NumericalError {
public:
    ShotError(const std::string& what, ShotRecord partial)
        : NumericalError(what), partial_(std::move(partial)) {}
    [[nodiscard]] const ShotRecord& partial() const { return partial_; }

private:
    ShotRecord partial_;
};

/// Everything the shooting stage needs about (N, f): the original f, the
/// version truncated at beta used for every shot, thresholds and the
/// hypothesis report.
struct Problem {
    int N = 3;
    Nonlinearity original;
    Nonlinearity truncated;
    Thresholds thresholds;
    AssumptionReport report;
};

/// Throws PreconditionError for N < 2 and AssumptionError when thresholds
/// cannot be computed.
Problem make_problem(int N, const Nonlinearity& nl);

/// Requires xi in (alpha, min(beta, scan_max)).
ShotRecord shoot(const Problem& p, double xi, const ShootingConfig& cfg);

/// Shots in parallel over cfg.workers threads, results in grid order.
/// Per-shot failures are recorded in ShotRecord::error.
std::vector<ShotRecord> classify_scan(const Problem& p, const std::vector<double>& grid,
                                      const ShootingConfig& cfg);

/// Raised when no crossing height is found.
class BracketError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

struct VariationalSeed {
    double gamma = 0.0;
    double rho = 0.0;
    double J_trial = 0.0;
    double J_min = 0.0;
    double xi_bar = 0.0;
    double ode_residual = 0.0;
    int iterations = 0;
    bool converged = false;
    int interior_zeros = 0;
    std::string status;
    std::string shot_outcome;
};

struct Bracket {
    double xi_plus = 0.0;   ///< a Turning height
    double xi_minus = 0.0;  ///< a Crossing height
    std::string source;     ///< "variational" or "scan"
    std::optional<VariationalSeed> seed;
    std::vector<std::string> diagnostics;
    std::size_t shots = 0;
};

/// xi_plus is the midpoint of (alpha, xi0). xi_minus comes from the
/// variational minimizer when that shot crosses, otherwise from the upward
/// scan xi0 + (upper - xi0) 2^(k-20), k = 0..19, continued by
/// upper - (upper - xi0) 2^(-k), k = 2..40. Throws AssumptionError when the
/// hypothesis report has a failure.
Bracket find_bracket(const Problem& p, const ShootingConfig& cfg);

struct GroundStateSolution {
    double xi_star = 0.0;
    double bracket_width = 0.0;
    double xi_turning = 0.0;  ///< final Turning end of the bracket
    double xi_crossing = 0.0; ///< final Crossing end of the bracket
    int bisections = 0;
    bool resolved_as_candidate = false;  ///< stopped on an Undetermined midpoint
    ShotRecord shot;                     ///< midpoint shot at termination
    std::vector<ProfileRow> profile;     ///< decaying part of shot.profile
    std::vector<std::string> diagnostics;
};

GroundStateSolution bisect_ground_state(const Problem& p, const Bracket& bracket,
                                        const ShootingConfig& cfg);

struct Check {
    std::string name;
    bool passed = false;
    double value = 0.0;
    double tolerance = 0.0;
};

struct VerificationReport {
    std::vector<Check> checks;
    [[nodiscard]] bool passed() const;
    [[nodiscard]] const Check& at(const std::string& name) const;
};

/// Max over uniform interior rows of |q' + (N-1) q / r + f(u)| with q' from
/// the five-point central difference.
double profile_ode_residual(const std::vector<ProfileRow>& rows, const Nonlinearity& nl, int N);

/// Checks "positive_decreasing", "slope_margin", "energy_residual",
/// "tail_decay" and "ode_residual".
VerificationReport verify_ground_state(const std::vector<ProfileRow>& profile,
                                       const Nonlinearity& nl, int N, const ShootingConfig& cfg);
VerificationReport verify_ground_state(const GroundStateSolution& sol, const Problem& p,
                                       const ShootingConfig& cfg);

}  // namespace minkgs
