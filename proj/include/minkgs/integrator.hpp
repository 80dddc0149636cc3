#pragma once

/// @file integrator.hpp
/// Radial Cauchy problem in flux form.
///
/// With q = u'/sqrt(1 - u'^2) the radial equation becomes the first-order
/// system
///
///     u' = q / sqrt(1 + q^2)
///     q' = -((N - 1) / r) q - f(u)
///     D' = q^2 / (r sqrt(1 + q^2))
///
/// where D accumulates the damping integral of the energy identity
///
///     H + (N - 1) D = F(xi) - F(u),   H = sqrt(1 + q^2) - 1.
///
/// The slope constraint |u'| < 1 holds for every finite q.

#include "minkgs/nonlinearity.hpp"

#include <array>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace minkgs {

struct RadialState {
    double r = 0.0;
    double u = 0.0;
    double q = 0.0;  ///< flux, phi'(u')
    double D = 0.0;  ///< dissipation integral
};

struct IntegratorConfig {
    double abs_tol = 1e-10;
    double rel_tol = 1e-10;
    double r_start = 1e-4;
    double h_max = 0.1;
    double sample_stride = 0.01;

    void validate() const;
};

/// Smallest step the integrator may take before declaring failure.
inline constexpr double kMinStep = 1e-14;

/// u' recovered from the flux: q / sqrt(1 + q^2), always in (-1, 1).
double slope_from_flux(double q);
/// phi'(t) = t / sqrt(1 - t^2), defined for |t| < 1.
double flux_from_slope(double t);
/// 1 - |slope_from_flux(q)| without cancellation.
double slope_margin(double q);
/// H(t) = (1 - sqrt(1 - t^2)) / sqrt(1 - t^2) written in the flux variable.
double hamiltonian_from_flux(double q);

struct Derivative {
    double du = 0.0;
    double dq = 0.0;
    double dD = 0.0;
};

/// Right-hand side of the flux system. Requires s.r > 0.
Derivative vector_field(int N, const Nonlinearity& nl, const RadialState& s);

/// Second-order series start at r0 > 0 from u(0) = xi, u'(0) = 0:
/// u'' (0) = -f(xi)/N.
RadialState taylor_start(int N, const Nonlinearity& nl, double xi, double r0);

/// H + (N-1) D - F(xi) + F(u); zero on exact trajectories.
double energy_residual(const Nonlinearity& nl, int N, double xi, const RadialState& s);

/// One CSV/profile row: r, u, u', q, D, energy residual.
struct ProfileRow {
    double r = 0.0;
    double u = 0.0;
    double uprime = 0.0;
    double q = 0.0;
    double D = 0.0;
    double energy_residual = 0.0;
};

ProfileRow make_row(const Nonlinearity& nl, int N, double xi, const RadialState& s);

/// Thrown when the adaptive step falls below kMinStep. Carries the last
/// accepted state.
class StiffnessError : public std::runtime_error {
public:
    StiffnessError(const std::string& what, RadialState last)
        : std::runtime_error(what), last_(last) {}
    [[nodiscard]] const RadialState& last_state() const { return last_; }

private:
    RadialState last_;
};

/// Adaptive Dormand-Prince 5(4) stepper for the flux system with the
/// classical fourth-order continuous extension. Owns its state; not shared
/// between threads.
class RadialIntegrator {
public:
    RadialIntegrator(int N, const Nonlinearity& nl, IntegratorConfig cfg, RadialState start);

    /// Takes one accepted step, never stepping past r_limit.
    void step(double r_limit);

    [[nodiscard]] const RadialState& state() const { return current_; }
    [[nodiscard]] const RadialState& previous() const { return previous_; }
    /// Dense-output state inside the last accepted step.
    [[nodiscard]] RadialState interpolate(double r) const;

    [[nodiscard]] std::size_t accepted_steps() const { return accepted_; }
    [[nodiscard]] std::size_t rejected_steps() const { return rejected_; }
    [[nodiscard]] std::size_t rhs_evaluations() const { return rhs_evals_; }
    /// Sum of the local error estimates on u over all accepted steps.
    [[nodiscard]] double accumulated_error() const { return error_sum_; }

private:
    using Vec = std::array<double, 3>;
    Vec rhs(double r, const Vec& y);

    int N_;
    const Nonlinearity* nl_;
    IntegratorConfig cfg_;
    RadialState current_;
    RadialState previous_;
    double h_;
    Vec k1_{};  // derivative at the current state (FSAL)
    std::array<Vec, 5> dense_{};
    double dense_r0_ = 0.0;
    double dense_h_ = 0.0;
    std::size_t accepted_ = 0;
    std::size_t rejected_ = 0;
    std::size_t rhs_evals_ = 0;
    double error_sum_ = 0.0;
};

struct AdvanceResult {
    RadialState state;
    std::vector<RadialState> samples;  ///< states at multiples of sample_stride
    std::size_t steps = 0;
    double error_estimate = 0.0;
};

/// Integrates from s to r_target, emitting dense samples at the multiples of
/// cfg.sample_stride that lie in (s.r, r_target].
AdvanceResult advance(int N, const Nonlinearity& nl, const IntegratorConfig& cfg,
                      const RadialState& s, double r_target);

}  // namespace minkgs
