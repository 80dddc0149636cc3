#pragma once

/// @file variational.hpp
/// Discrete energy on the ball of radius rho,
///
///     J(u) = int_0^rho r^(N-1) (1 - sqrt(1 - u'^2)) dr - int_0^rho r^(N-1) F(u) dr,
///
/// over Lipschitz-1 radial profiles with u(rho) = 0. Profiles are stored by
/// their cell slopes and reconstructed from the right end, so the admissible
/// set is the box |s_i| <= 1 - eps_s.

#include "minkgs/integrator.hpp"
#include "minkgs/nonlinearity.hpp"

#include <cstddef>
#include <string>
#include <vector>

namespace minkgs {

struct GridFunction {
    double rho = 0.0;
    std::vector<double> slopes;  ///< slope on cell i = [i h, (i+1) h]

    [[nodiscard]] std::size_t cells() const { return slopes.size(); }
    [[nodiscard]] double h() const { return rho / static_cast<double>(slopes.size()); }
    /// Nodal values u_0..u_n with u_n = 0 and u_i = u_{i+1} - s_i h.
    [[nodiscard]] std::vector<double> values() const;
    [[nodiscard]] double value_at_origin() const;
    /// Throws PreconditionError unless rho > 0, n >= 2 and |s_i| <= 1 - eps_s.
    void validate(double eps_s) const;
};

struct MinimizeConfig {
    std::size_t n = 2000;
    double eps_s = 1e-6;
    double grad_tol = 1e-8;  ///< on the Euclidean norm of the projected gradient
    int max_iters = 500;
    double armijo = 1e-4;
    int max_backtracks = 60;
    double tol_neg = 1e-3;  ///< choose_rho stops once J(w_rho) < -tol_neg

    void validate() const;
};

/// Midpoint rule on cells for the curvature part, trapezoid on nodes for the
/// potential part.
double discrete_J(int N, const Nonlinearity& nl, const GridFunction& gf);

/// dJ/ds_i.
std::vector<double> gradient_J(int N, const Nonlinearity& nl, const GridFunction& gf);

/// || clip(s - g) - s ||_2 for the box |s| <= 1 - eps_s.
double projected_gradient_norm(const GridFunction& gf, const std::vector<double>& grad, double eps_s);

/// Plateau at height gamma on [0, rho - 2 gamma], then slope -1/2 down to
/// zero at rho; cell slopes are exact secants of that profile.
GridFunction trial_w_rho(double rho, double gamma, std::size_t n);

/// Doubles rho from 4 gamma until J(w_rho) < -tol_neg (at most 20 doublings).
double choose_rho(int N, const Nonlinearity& nl, double gamma, std::size_t n = 2000,
                  double tol_neg = 1e-3);

struct MinimizeResult {
    GridFunction minimizer;
    double J_initial = 0.0;
    double J_final = 0.0;
    std::vector<double> history;  ///< J after every accepted iteration
    int iterations = 0;
    bool converged = false;
    double projected_gradient = 0.0;
    int newton_steps = 0;
    int gradient_steps = 0;
    int active_bounds = 0;   ///< slopes sitting on the clip at exit
    int interior_zeros = 0;  ///< sign changes of u inside (0, rho)
    std::string status;
};

/// Projected Newton iteration on the slope vector, started at `start`.
/// Steps are clipped to the box and accepted under an Armijo condition, so
/// J never increases.
MinimizeResult minimize_J(int N, const Nonlinearity& nl, const GridFunction& start,
                          const MinimizeConfig& cfg);
/// Same, started from trial_w_rho(rho, gamma, cfg.n).
MinimizeResult minimize_J(int N, const Nonlinearity& nl, double rho, double gamma,
                          const MinimizeConfig& cfg);

/// Raised when the minimizer does not yield an admissible initial height.
class SeedError : public std::runtime_error {
public:
    SeedError(const std::string& what, double value) : std::runtime_error(what), value_(value) {}
    [[nodiscard]] double value() const { return value_; }

private:
    double value_;
};

/// u(0) of the minimizer, checked to lie in (alpha, beta).
double seed_from_minimizer(const GridFunction& gf, const Thresholds& th);

/// max over interior nodes of
///   |P_{i+1/2} - P_{i-1/2} + h r_i^(N-1) f(u_i)| / (h r_i^(N-1)),
/// with P = r^(N-1) phi'(s) on cell midpoints.
double ode_residual_of_minimizer(const GridFunction& gf, const Nonlinearity& nl, int N);

int count_interior_zeros(const GridFunction& gf);

/// Rows in the shooting profile schema: u' is the slope of the cell to the
/// right of each node (left cell at rho), D by the midpoint rule, energy
/// residual against xi = u(0).
std::vector<ProfileRow> minimizer_profile(const GridFunction& gf, const Nonlinearity& nl, int N);

/// Witness gamma used to seed the variational problem: among candidates in
/// (xi0, min(beta, scan_max)) the one for which choose_rho returns the
/// smallest ball.
double select_seed_gamma(int N, const Nonlinearity& nl, const Thresholds& th, std::size_t n,
                         double tol_neg);

}  // namespace minkgs
