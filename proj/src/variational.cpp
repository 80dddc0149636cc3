#include "minkgs/variational.hpp"

#include "minkgs/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace minkgs {

namespace {

double phi(double s) {
    // 1 - sqrt(1 - s^2) without cancellation
    return s * s / (1.0 + std::sqrt((1.0 - s) * (1.0 + s)));
}

double dphi(double s) { return s / std::sqrt((1.0 - s) * (1.0 + s)); }

double ddphi(double s) {
    const double w = (1.0 - s) * (1.0 + s);
    return 1.0 / (w * std::sqrt(w));
}

double radial_weight(double r, int N) {
    double w = 1.0;
    for (int k = 1; k < N; ++k) w *= r;
    return w;
}

double fd_derivative(const Nonlinearity& nl, double v) {
    const double d = 1e-7 * std::max(1.0, std::abs(v));
    return (nl.f(v + d) - nl.f(v - d)) / (2.0 * d);
}

double clip(double s, double bound) { return std::clamp(s, -bound, bound); }

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(12);
    os << v;
    return os.str();
}

// Solves the symmetric tridiagonal system (diag, off) x = rhs in place by
// LDL^T; returns false on a non-positive pivot.
bool solve_tridiagonal_spd(std::vector<double> diag, const std::vector<double>& off,
                           std::vector<double>& rhs) {
    const std::size_t n = diag.size();
    std::vector<double> l(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        if (i > 0) {
            l[i] = off[i - 1] / diag[i - 1];
            diag[i] -= l[i] * off[i - 1];
            rhs[i] -= l[i] * rhs[i - 1];
        }
        if (!(diag[i] > 0.0) || !std::isfinite(diag[i])) return false;
    }
    rhs[n - 1] /= diag[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) {
        rhs[i] = rhs[i] / diag[i] - l[i + 1] * rhs[i + 1];
    }
    return true;
}

}  // namespace

// -- grid functions -----------------------------------------------------------

std::vector<double> GridFunction::values() const {
    const std::size_t n = slopes.size();
    std::vector<double> u(n + 1, 0.0);
    const long double hh = h();
    long double acc = 0.0L;
    for (std::size_t i = n; i-- > 0;) {
        acc -= static_cast<long double>(slopes[i]) * hh;
        u[i] = static_cast<double>(acc);
    }
    return u;
}

double GridFunction::value_at_origin() const {
    long double acc = 0.0L;
    for (double s : slopes) acc -= static_cast<long double>(s);
    return static_cast<double>(acc * static_cast<long double>(h()));
}

void GridFunction::validate(double eps_s) const {
    if (!(rho > 0.0) || !std::isfinite(rho)) throw PreconditionError("grid function needs rho > 0");
    if (slopes.size() < 2) throw PreconditionError("grid function needs at least two cells");
    const double bound = 1.0 - eps_s;
    for (double s : slopes) {
        if (!(std::abs(s) <= bound)) {
            throw PreconditionError("slope " + fmt(s) + " outside [-(1-eps_s), 1-eps_s]");
        }
    }
}

void MinimizeConfig::validate() const {
    if (n < 2) throw PreconditionError("MinimizeConfig.n must be at least 2");
    if (!(eps_s > 0.0 && eps_s < 1.0)) throw PreconditionError("MinimizeConfig.eps_s must be in (0, 1)");
    if (!(grad_tol > 0.0)) throw PreconditionError("MinimizeConfig.grad_tol must be positive");
    if (max_iters < 1 || max_backtracks < 1) throw PreconditionError("MinimizeConfig iteration limits must be positive");
    if (!(armijo > 0.0 && armijo < 0.5)) throw PreconditionError("MinimizeConfig.armijo must be in (0, 1/2)");
    if (!(tol_neg > 0.0)) throw PreconditionError("MinimizeConfig.tol_neg must be positive");
}

// -- functional -------------------------------------------------------------

double discrete_J(int N, const Nonlinearity& nl, const GridFunction& gf) {
    if (N < 2) throw PreconditionError("dimension N must be at least 2");
    const std::size_t n = gf.cells();
    if (n < 2) throw PreconditionError("grid function needs at least two cells");
    const double h = gf.h();
    const auto u = gf.values();
    long double psi = 0.0L;
    for (std::size_t j = 0; j < n; ++j) {
        const double s = gf.slopes[j];
        if (!(std::abs(s) < 1.0)) return std::numeric_limits<double>::infinity();
        psi += radial_weight((j + 0.5) * h, N) * phi(s);
    }
    long double pot = 0.0L;
    for (std::size_t i = 1; i < n; ++i) {
        pot += radial_weight(i * h, N) * nl.F(u[i]);
    }
    // endpoints: zero weight at r = 0, F(u_n) = F(0) = 0 at r = rho
    return static_cast<double>(h * (psi - pot));
}

std::vector<double> gradient_J(int N, const Nonlinearity& nl, const GridFunction& gf) {
    if (N < 2) throw PreconditionError("dimension N must be at least 2");
    const std::size_t n = gf.cells();
    const double h = gf.h();
    const auto u = gf.values();
    std::vector<double> g(n);
    long double source = 0.0L;  // sum_{i <= j} w_i f(u_i)
    for (std::size_t j = 0; j < n; ++j) {
        if (j >= 1) source += h * radial_weight(j * h, N) * nl.f(u[j]);
        const double flux = radial_weight((j + 0.5) * h, N) * dphi(gf.slopes[j]);
        g[j] = static_cast<double>(h * (flux + source));
    }
    return g;
}

double projected_gradient_norm(const GridFunction& gf, const std::vector<double>& grad, double eps_s) {
    const double bound = 1.0 - eps_s;
    long double acc = 0.0L;
    for (std::size_t j = 0; j < gf.cells(); ++j) {
        const double d = clip(gf.slopes[j] - grad[j], bound) - gf.slopes[j];
        acc += static_cast<long double>(d) * d;
    }
    return static_cast<double>(std::sqrt(acc));
}

GridFunction trial_w_rho(double rho, double gamma, std::size_t n) {
    if (!(gamma > 0.0)) throw PreconditionError("trial_w_rho requires gamma > 0");
    if (!(rho > 2.0 * gamma)) throw PreconditionError("trial_w_rho requires rho > 2 gamma");
    if (n < 2) throw PreconditionError("trial_w_rho requires at least two cells");
    auto w = [&](double r) { return r <= rho - 2.0 * gamma ? gamma : 0.5 * (rho - r); };
    GridFunction gf;
    gf.rho = rho;
    gf.slopes.resize(n);
    const double h = rho / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double r0 = i * h;
        const double r1 = (i + 1 == n) ? rho : (i + 1) * h;
        gf.slopes[i] = (w(r1) - w(r0)) / h;
    }
    return gf;
}

double choose_rho(int N, const Nonlinearity& nl, double gamma, std::size_t n, double tol_neg) {
    if (!(nl.F(gamma) > 0.0)) {
        throw PreconditionError("choose_rho requires F(gamma) > 0, got F(" + fmt(gamma) +
                                ") = " + fmt(nl.F(gamma)));
    }
    double rho = 4.0 * gamma;
    for (int k = 0; k <= 20; ++k) {
        if (discrete_J(N, nl, trial_w_rho(rho, gamma, n)) < -tol_neg) return rho;
        rho *= 2.0;
    }
    throw NumericalError("choose_rho: J(w_rho) stayed above -" + fmt(tol_neg) +
                         " after 20 doublings; gamma = " + fmt(gamma) + " is likely misconfigured");
}

// -- minimisation -----------------------------------------------------------

MinimizeResult minimize_J(int N, const Nonlinearity& nl, const GridFunction& start,
                          const MinimizeConfig& cfg) {
    cfg.validate();
    start.validate(cfg.eps_s);
    const std::size_t n = start.cells();
    const double h = start.h();
    const double bound = 1.0 - cfg.eps_s;

    MinimizeResult res;
    res.minimizer = start;
    GridFunction& gf = res.minimizer;
    double J = discrete_J(N, nl, gf);
    res.J_initial = J;
    res.history.push_back(J);

    std::vector<double> a(n);  // r_{j+1/2}^{N-1}
    std::vector<double> w(n);  // h r_i^{N-1}, w_0 = 0
    for (std::size_t j = 0; j < n; ++j) {
        a[j] = radial_weight((j + 0.5) * h, N);
        w[j] = j == 0 ? 0.0 : h * radial_weight(j * h, N);
    }

    auto try_step = [&](const std::vector<double>& dir, const std::vector<double>& g,
                        GridFunction& trial, double& J_trial) {
        double t = 1.0;
        for (int b = 0; b < cfg.max_backtracks; ++b, t *= 0.5) {
            long double decrease = 0.0L;
            for (std::size_t j = 0; j < n; ++j) {
                trial.slopes[j] = clip(gf.slopes[j] + t * dir[j], bound);
                decrease += static_cast<long double>(g[j]) * (trial.slopes[j] - gf.slopes[j]);
            }
            if (!(decrease < 0.0L)) continue;
            J_trial = discrete_J(N, nl, trial);
            if (J_trial <= J + cfg.armijo * static_cast<double>(decrease)) return true;
        }
        return false;
    };

    double mu = 0.0;
    GridFunction trial = gf;
    std::vector<double> diag(n), off(n > 0 ? n - 1 : 0), dv(n), ds(n), gv(n);
    // Once grad_tol is met, a few more Newton steps are taken while they still
    // halve the projected gradient; the nodal residual near r = 0 is far more
    // sensitive than the Euclidean norm suggests.
    constexpr int kPolishSteps = 8;
    int polish = 0;
    double pg_prev = std::numeric_limits<double>::infinity();
    for (res.iterations = 0; res.iterations < cfg.max_iters; ++res.iterations) {
        const auto g = gradient_J(N, nl, gf);
        res.projected_gradient = projected_gradient_norm(gf, g, cfg.eps_s);
        if (res.projected_gradient <= cfg.grad_tol) {
            res.converged = true;
            res.status = "converged";
            if (polish >= kPolishSteps || res.projected_gradient > 0.5 * pg_prev) break;
            ++polish;
        }
        pg_prev = res.projected_gradient;

        // Newton system in nodal variables v_0..v_{n-1} (v_n = 0 is fixed);
        // the Hessian there is tridiagonal.
        const auto u = gf.values();
        std::vector<double> c(n);
        for (std::size_t j = 0; j < n; ++j) c[j] = a[j] * ddphi(gf.slopes[j]) / h;
        for (std::size_t i = 0; i < n; ++i) {
            const double p_left = i == 0 ? 0.0 : a[i - 1] * dphi(gf.slopes[i - 1]);
            const double p_right = a[i] * dphi(gf.slopes[i]);
            gv[i] = p_left - p_right - w[i] * nl.f(u[i]);
            diag[i] = c[i] + (i > 0 ? c[i - 1] : 0.0) - w[i] * fd_derivative(nl, u[i]);
            if (i + 1 < n) off[i] = -c[i];
        }

        bool accepted = false;
        for (int attempt = 0; attempt < 40 && !accepted; ++attempt) {
            std::vector<double> dm = diag;
            for (std::size_t i = 0; i < n; ++i) dm[i] += mu * (std::abs(diag[i]) + 1e-300);
            for (std::size_t i = 0; i < n; ++i) dv[i] = -gv[i];
            if (!solve_tridiagonal_spd(dm, off, dv)) {
                mu = std::max(1e-10, 10.0 * mu);
                continue;
            }
            for (std::size_t j = 0; j < n; ++j) {
                ds[j] = ((j + 1 < n ? dv[j + 1] : 0.0) - dv[j]) / h;
            }
            double J_trial = J;
            if (try_step(ds, g, trial, J_trial)) {
                std::swap(gf.slopes, trial.slopes);
                J = J_trial;
                accepted = true;
                ++res.newton_steps;
                mu = mu < 1e-9 ? 0.0 : 0.1 * mu;
            } else {
                mu = std::max(1e-10, 10.0 * mu);
            }
        }

        if (!accepted) {
            // diagonally scaled projected gradient
            for (std::size_t j = 0; j < n; ++j) {
                const double scale = h * a[j] * ddphi(gf.slopes[j]);
                ds[j] = -g[j] / (scale > 0.0 ? scale : 1.0);
            }
            double J_trial = J;
            if (try_step(ds, g, trial, J_trial)) {
                std::swap(gf.slopes, trial.slopes);
                J = J_trial;
                ++res.gradient_steps;
                accepted = true;
            }
        }
        if (!accepted) {
            if (!res.converged) {
                res.status = "stalled: no descent after full backtracking (projected gradient " +
                             fmt(res.projected_gradient) + ")";
            }
            break;
        }
        res.history.push_back(J);
    }
    if (res.status.empty() || res.iterations == cfg.max_iters) {
        res.projected_gradient = projected_gradient_norm(gf, gradient_J(N, nl, gf), cfg.eps_s);
        res.converged = res.projected_gradient <= cfg.grad_tol;
        res.status = res.converged ? "converged" : "max_iters reached";
    }
    res.J_final = J;
    res.active_bounds = static_cast<int>(std::count_if(
        gf.slopes.begin(), gf.slopes.end(), [&](double s) { return std::abs(s) >= bound; }));
    res.interior_zeros = count_interior_zeros(gf);
    return res;
}

MinimizeResult minimize_J(int N, const Nonlinearity& nl, double rho, double gamma,
                          const MinimizeConfig& cfg) {
    return minimize_J(N, nl, trial_w_rho(rho, gamma, cfg.n), cfg);
}

double seed_from_minimizer(const GridFunction& gf, const Thresholds& th) {
    const double xi = gf.value_at_origin();
    if (!(xi > 0.0)) {
        throw SeedError("minimizer is trivial (u(0) = " + fmt(xi) +
                            "); J has no negative values on this ball, rho too small",
                        xi);
    }
    if (xi <= th.alpha) {
        throw SeedError("u(0) = " + fmt(xi) + " <= alpha = " + fmt(th.alpha) +
                            ": F(u(0)) <= 0 contradicts the energy balance at r = rho; "
                            "discretization too coarse",
                        xi);
    }
    if (xi >= th.beta) {
        throw SeedError("u(0) = " + fmt(xi) + " >= beta = " + fmt(th.beta) +
                            ": only the constant solution starts there",
                        xi);
    }
    return xi;
}

double ode_residual_of_minimizer(const GridFunction& gf, const Nonlinearity& nl, int N) {
    const std::size_t n = gf.cells();
    const double h = gf.h();
    const auto u = gf.values();
    double worst = 0.0;
    for (std::size_t i = 1; i < n; ++i) {
        const double p_right = radial_weight((i + 0.5) * h, N) * dphi(gf.slopes[i]);
        const double p_left = radial_weight((i - 0.5) * h, N) * dphi(gf.slopes[i - 1]);
        const double wi = h * radial_weight(i * h, N);
        worst = std::max(worst, std::abs(p_right - p_left + wi * nl.f(u[i])) / wi);
    }
    return worst;
}

int count_interior_zeros(const GridFunction& gf) {
    const auto u = gf.values();
    int zeros = 0;
    for (std::size_t i = 0; i + 2 < u.size(); ++i) {
        if ((u[i] > 0.0) != (u[i + 1] > 0.0)) ++zeros;
    }
    return zeros;
}

std::vector<ProfileRow> minimizer_profile(const GridFunction& gf, const Nonlinearity& nl, int N) {
    const std::size_t n = gf.cells();
    const double h = gf.h();
    const auto u = gf.values();
    const double xi = u.front();
    std::vector<ProfileRow> rows;
    rows.reserve(n + 1);
    double D = 0.0;
    for (std::size_t i = 0; i <= n; ++i) {
        const double r = i == n ? gf.rho : i * h;
        const double s = gf.slopes[std::min(i, n - 1)];
        const double q = dphi(s);
        rows.push_back(make_row(nl, N, xi, {r, u[i], q, D}));
        if (i < n) {
            const double rm = (i + 0.5) * h;
            D += h * q * q / (rm * std::sqrt(1.0 + q * q));
        }
    }
    return rows;
}

double select_seed_gamma(int N, const Nonlinearity& nl, const Thresholds& th, std::size_t n,
                         double tol_neg) {
    const double hi = th.upper(nl.scan_max());
    std::vector<double> candidates{th.gamma};
    constexpr int kCandidates = 32;
    for (int k = 1; k <= kCandidates; ++k) {
        candidates.push_back(th.xi0 * std::pow(hi / th.xi0, static_cast<double>(k) / (kCandidates + 1)));
    }
    double best_gamma = th.gamma;
    double best_rho = std::numeric_limits<double>::infinity();
    double best_F = -std::numeric_limits<double>::infinity();
    for (double g : candidates) {
        const double Fg = nl.F(g);
        if (!(Fg > 0.0)) continue;
        try {
            const double rho = choose_rho(N, nl, g, n, tol_neg);
            if (rho < best_rho || (rho == best_rho && Fg > best_F)) {
                best_rho = rho;
                best_gamma = g;
                best_F = Fg;
            }
        } catch (const NumericalError&) {
            // candidate never drives J negative
        }
    }
    if (!std::isfinite(best_rho)) {
        throw NumericalError("no seed gamma in (xi0, " + fmt(hi) + ") makes J(w_rho) negative");
    }
    return best_gamma;
}

}  // namespace minkgs
