#pragma once

/// @file nonlinearity.hpp
/// The source term f of the radial problem, its primitive F, the structural
/// thresholds alpha < xi0 < beta that organise the shooting argument, and a
/// sampling-based checker for the standing hypotheses (f1)-(f6) on f.
///
/// Conventions shared by every family:
///   - f is extended by zero on the negative half line,
///   - F(s) = integral of f over [0, s], so F(s) = 0 for s <= 0,
///   - a truncation level, when set, replaces f by zero above it.

#include <algorithm>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace minkgs {

using ScalarFunction = std::function<double(double)>;

/// Closed intervals known to bracket a threshold. A hint replaces the sign
/// scan for that threshold; the bracket must show the expected sign change.
struct ThresholdHints {
    std::optional<std::pair<double, double>> alpha;
    std::optional<std::pair<double, double>> xi0;
    std::optional<std::pair<double, double>> beta;
};

class Nonlinearity {
public:
    static constexpr double kDefaultScanMax = 50.0;

    /// f(s) = -lambda s + s^q, lambda > 0, q > 1.
    static Nonlinearity power(double lambda, double q);
    /// f(s) = -s sin(s) |sin(s)|^(q-1), q >= 1.
    static Nonlinearity sine(double q);
    /// Monotone cubic (PCHIP) interpolant through (s_i, f_i). The abscissae
    /// must start at 0 and increase strictly; f(0) is taken from the table.
    static Nonlinearity tabulated(std::vector<double> s, std::vector<double> f);
    /// Arbitrary callable. Without a closed primitive, F is computed by
    /// adaptive quadrature.
    static Nonlinearity custom(std::string name, ScalarFunction f,
                               std::optional<ScalarFunction> primitive = std::nullopt);

    /// f(s); zero for s < 0 and above the truncation level.
    [[nodiscard]] double f(double s) const;
    /// F(s) = int_0^s f.
    [[nodiscard]] double F(double s) const;
    /// F(s) by quadrature even when a closed form exists (used as a
    /// cross-check of the closed forms).
    [[nodiscard]] double F_by_quadrature(double s) const;
    /// int_a^b f by adaptive Gauss-Kronrod quadrature, splitting at the
    /// family's non-smooth points.
    [[nodiscard]] double integrate(double a, double b) const;

    [[nodiscard]] bool has_closed_primitive() const { return static_cast<bool>(primitive_); }
    [[nodiscard]] bool is_tabulated() const { return tabulated_; }
    [[nodiscard]] const std::string& family() const { return family_; }
    [[nodiscard]] const std::map<std::string, double>& parameters() const { return params_; }

    [[nodiscard]] double scan_max() const { return scan_max_; }
    Nonlinearity& set_scan_max(double value);

    [[nodiscard]] const ThresholdHints& hints() const { return hints_; }
    Nonlinearity& set_hints(ThresholdHints hints);

    /// Level above which f is replaced by zero, if any.
    [[nodiscard]] std::optional<double> truncation() const { return truncation_; }
    /// Largest argument at which f is defined (finite only for tables).
    [[nodiscard]] double domain_max() const { return domain_max_; }

private:
    friend Nonlinearity with_truncation(const Nonlinearity& nl, double level);

    double raw_f(double s) const;
    double raw_F(double s) const;
    double quadrature(double a, double b) const;

    std::string family_;
    std::map<std::string, double> params_;
    ScalarFunction f_;
    ScalarFunction primitive_;
    std::vector<double> breakpoints_;  // sorted, non-smooth points of f
    std::shared_ptr<const std::vector<double>> breakpoint_F_;  // F at breakpoints_
    double scan_max_ = kDefaultScanMax;
    double domain_max_ = std::numeric_limits<double>::infinity();
    bool tabulated_ = false;
    ThresholdHints hints_;
    std::optional<double> truncation_;
};

double eval_f(const Nonlinearity& nl, double s);
double eval_F(const Nonlinearity& nl, double s);

struct Thresholds {
    double alpha = 0.0;
    double xi0 = 0.0;
    double beta = std::numeric_limits<double>::infinity();  ///< +inf when f keeps its sign
    double gamma = 0.0;  ///< a witness with F(gamma) > 0

    [[nodiscard]] bool beta_finite() const { return beta < std::numeric_limits<double>::infinity(); }
    /// Upper end of the admissible initial heights: min(beta, scan_max).
    [[nodiscard]] double upper(double scan_max) const { return beta_finite() ? std::min(beta, scan_max) : scan_max; }
};

/// Width to which every threshold bracket is bisected.
inline constexpr double kThresholdWidth = 1e-12;
/// Points in the uniform sign scan over (0, scan_max].
inline constexpr int kThresholdScanPoints = 10000;

/// Sign scan plus bisection. Throws AssumptionError when (f3) or (f5) fails
/// on (0, scan_max].
Thresholds compute_thresholds(const Nonlinearity& nl, int N);

enum class Verdict { Pass, Fail, NotApplicable };
const char* to_string(Verdict v);

struct Evidence {
    std::string assumption;  // "f1" .. "f6"
    double s = 0.0;
    double value = 0.0;
    std::string note;
};

struct AssumptionReport {
    std::map<std::string, Verdict> status;  // keys f1..f6
    std::optional<double> f4_limit_estimate;
    bool f4_unbounded = false;
    bool tabulated = false;
    std::optional<Thresholds> thresholds;
    std::vector<Evidence> evidence;
    std::string failure;  // set when thresholds could not be computed

    /// True when no assumption failed.
    [[nodiscard]] bool passed() const;
};

AssumptionReport check_assumptions(const Nonlinearity& nl, int N);

/// f~ : f below beta, zero above. Identity when beta = +inf.
Nonlinearity truncate_at_beta(const Nonlinearity& nl, const Thresholds& th);

}  // namespace minkgs
