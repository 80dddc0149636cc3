#include "minkgs/shooting.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <sstream>
#include <thread>

namespace minkgs {

namespace {

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(15);
    os << v;
    return os.str();
}

// pred(lo) is false and pred(hi) is true; returns the first radius found to
// satisfy pred once the bracket is below kEventTolerance.
template <class Pred>
double localize(const RadialIntegrator& integ, double lo, double hi, Pred pred) {
    while (hi - lo > kEventTolerance) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (pred(integ.interpolate(mid))) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    return hi;
}

struct Classified {
    ShotRecord shot;
    bool doubled = false;
};

// Decisive classification: ground-candidate detection off, one doubling of
// r_max for an Undetermined shot.
Classified classify(const Problem& p, double xi, const ShootingConfig& cfg) {
    ShootingConfig c = cfg;
    c.detect_ground_candidate = false;
    c.store_profile = false;
    Classified out{shoot(p, xi, c), false};
    if (std::holds_alternative<Undetermined>(out.shot.outcome)) {
        c.r_max = 2.0 * cfg.r_max;
        out.shot = shoot(p, xi, c);
        out.doubled = true;
    }
    return out;
}

}  // namespace

const char* outcome_name(const Outcome& o) {
    struct {
        const char* operator()(const Turning&) const { return "Turning"; }
        const char* operator()(const Crossing&) const { return "Crossing"; }
        const char* operator()(const GroundCandidate&) const { return "GroundCandidate"; }
        const char* operator()(const Undetermined&) const { return "Undetermined"; }
    } visitor;
    return std::visit(visitor, o);
}

double outcome_radius(const Outcome& o) {
    struct {
        double operator()(const Turning& t) const { return t.r_turn; }
        double operator()(const Crossing& c) const { return c.r_cross; }
        double operator()(const GroundCandidate& g) const { return g.r_reached; }
        double operator()(const Undetermined& u) const { return u.r_max; }
    } visitor;
    return std::visit(visitor, o);
}

void ShootingConfig::validate() const {
    integrator.validate();
    if (!(r_max > integrator.r_start)) throw PreconditionError("r_max must exceed r_start");
    if (!(u_tol > 0.0) || !(q_tol > 0.0)) throw PreconditionError("u_tol and q_tol must be positive");
    if (!(xi_tol > 0.0)) throw PreconditionError("xi_tol must be positive");
    if (!(margin_tol >= 0.0) || !(res_tol > 0.0) || !(decay_tol > 0.0) || !(fd_tol > 0.0)) {
        throw PreconditionError("verification tolerances must be positive");
    }
    if (max_bisections < 1) throw PreconditionError("max_bisections must be positive");
    variational.validate();
}

Problem make_problem(int N, const Nonlinearity& nl) {
    if (N < 2) throw PreconditionError("dimension N must be at least 2");
    Problem p{N, nl, nl, {}, check_assumptions(nl, N)};
    if (!p.report.thresholds) throw AssumptionError(p.report.failure);
    p.thresholds = *p.report.thresholds;
    p.truncated = truncate_at_beta(nl, p.thresholds);
    return p;
}

// -- single shot ------------------------------------------------------------

ShotRecord shoot(const Problem& p, double xi, const ShootingConfig& cfg) {
    cfg.validate();
    const Thresholds& th = p.thresholds;
    const double upper = th.upper(p.original.scan_max());
    if (!std::isfinite(xi) || !(xi > th.alpha) || !(xi < upper)) {
        throw PreconditionError("initial height " + fmt(xi) + " outside (alpha, min(beta, scan_max)) = (" +
                                fmt(th.alpha) + ", " + fmt(upper) + ")");
    }
    const Nonlinearity& nl = p.truncated;
    const int N = p.N;
    const double stride = cfg.integrator.sample_stride;

    ShotRecord rec;
    rec.xi = xi;
    rec.min_u = xi;
    auto record = [&](const RadialState& s) {
        const ProfileRow row = make_row(nl, N, xi, s);
        rec.max_energy_residual = std::max(rec.max_energy_residual, std::abs(row.energy_residual));
        rec.min_slope_margin = std::min(rec.min_slope_margin, slope_margin(s.q));
        rec.min_u = std::min(rec.min_u, s.u);
        if (cfg.store_profile) rec.profile.push_back(row);
    };
    record({0.0, xi, 0.0, 0.0});

    const RadialState start = taylor_start(N, nl, xi, cfg.integrator.r_start);
    RadialIntegrator integ(N, nl, cfg.integrator, start);
    long long next_k = 1;
    while (next_k * stride <= start.r) ++next_k;
    auto emit_until = [&](double r_end, bool inclusive) {
        while (inclusive ? next_k * stride <= r_end : next_k * stride < r_end) {
            record(integ.interpolate(next_k * stride));
            ++next_k;
        }
    };
    auto finish = [&](const RadialState& s) {
        if (!cfg.store_profile || rec.profile.empty() || rec.profile.back().r < s.r) {
            record(s);
        } else {
            rec.min_u = std::min(rec.min_u, s.u);
        }
        rec.final_state = s;
        rec.steps = integ.accepted_steps();
        rec.rhs_evaluations = integ.rhs_evaluations();
    };

    try {
        while (true) {
            const RadialState prev = integ.state();
            integ.step(cfg.r_max);
            const RadialState cur = integ.state();

            const bool turned = cur.q >= 0.0;
            const bool crossed = cur.u <= 0.0;
            if (turned || crossed) {
                double r_turn = std::numeric_limits<double>::infinity();
                double r_cross = std::numeric_limits<double>::infinity();
                if (turned) {
                    r_turn = localize(integ, prev.r, cur.r, [](const RadialState& s) { return s.q >= 0.0; });
                }
                if (crossed) {
                    r_cross = localize(integ, prev.r, cur.r, [](const RadialState& s) { return s.u <= 0.0; });
                }
                const RadialState at_turn = integ.interpolate(r_turn);
                if (r_turn < r_cross && at_turn.u > 0.0) {
                    emit_until(r_turn, false);
                    rec.outcome = Turning{r_turn};
                    finish(at_turn);
                } else {
                    emit_until(r_cross, false);
                    rec.outcome = Crossing{r_cross};
                    finish(integ.interpolate(r_cross));
                }
                return rec;
            }

            emit_until(cur.r, true);
            if (cfg.detect_ground_candidate && cur.u < cfg.u_tol && std::abs(cur.q) < cfg.q_tol) {
                rec.outcome = GroundCandidate{cur.r, cur.u, cur.q};
                finish(cur);
                return rec;
            }
            if (cur.r >= cfg.r_max) {
                rec.outcome = Undetermined{cfg.r_max};
                finish(cur);
                return rec;
            }
        }
    } catch (const StiffnessError& e) {
        rec.outcome = Undetermined{e.last_state().r};
        rec.final_state = e.last_state();
        rec.steps = integ.accepted_steps();
        rec.rhs_evaluations = integ.rhs_evaluations();
        throw ShotError(std::string("shot from xi = ") + fmt(xi) + " failed: " + e.what(), rec);
    }
}

std::vector<ShotRecord> classify_scan(const Problem& p, const std::vector<double>& grid,
                                      const ShootingConfig& cfg) {
    cfg.validate();
    std::vector<ShotRecord> out(grid.size());
    if (grid.empty()) return out;
    unsigned workers = cfg.workers == 0 ? std::max(1u, std::thread::hardware_concurrency()) : cfg.workers;
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, grid.size()));

    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < grid.size(); i = next++) {
            try {
                out[i] = shoot(p, grid[i], cfg);
            } catch (const ShotError& e) {
                out[i] = e.partial();
                out[i].error = e.what();
            } catch (const std::exception& e) {
                out[i] = ShotRecord{};
                out[i].xi = grid[i];
                out[i].error = e.what();
            }
        }
    };
    if (workers <= 1) {
        work();
        return out;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
    return out;
}

// -- bracket ------------------------------------------------------------------

Bracket find_bracket(const Problem& p, const ShootingConfig& cfg) {
    cfg.validate();
    if (!p.report.passed()) {
        std::string failed;
        for (const auto& [name, v] : p.report.status) {
            if (v == Verdict::Fail) failed += (failed.empty() ? "" : ", ") + name;
        }
        throw AssumptionError("hypotheses not satisfied for N = " + std::to_string(p.N) + ": " + failed);
    }
    const Thresholds& th = p.thresholds;
    const double upper = th.upper(p.original.scan_max());
    Bracket b;

    b.xi_plus = 0.5 * (th.alpha + th.xi0);
    const auto plus = classify(p, b.xi_plus, cfg);
    ++b.shots;
    if (!std::holds_alternative<Turning>(plus.shot.outcome)) {
        throw BracketError("xi_plus = " + fmt(b.xi_plus) + " in (alpha, xi0) classified " +
                           outcome_name(plus.shot.outcome) + " instead of Turning");
    }

    if (cfg.variational_seed) {
        try {
            const MinimizeConfig& mc = cfg.variational;
            VariationalSeed seed;
            seed.gamma = select_seed_gamma(p.N, p.truncated, th, mc.n, mc.tol_neg);
            seed.rho = choose_rho(p.N, p.truncated, seed.gamma, mc.n, mc.tol_neg);
            seed.J_trial = discrete_J(p.N, p.truncated, trial_w_rho(seed.rho, seed.gamma, mc.n));
            const auto res = minimize_J(p.N, p.truncated, seed.rho, seed.gamma, mc);
            seed.J_min = res.J_final;
            seed.iterations = res.iterations;
            seed.converged = res.converged;
            seed.status = res.status;
            seed.interior_zeros = res.interior_zeros;
            seed.ode_residual = ode_residual_of_minimizer(res.minimizer, p.truncated, p.N);
            seed.xi_bar = seed_from_minimizer(res.minimizer, th);
            if (seed.xi_bar < upper) {
                const auto minus = classify(p, seed.xi_bar, cfg);
                ++b.shots;
                seed.shot_outcome = outcome_name(minus.shot.outcome);
                if (std::holds_alternative<Crossing>(minus.shot.outcome)) {
                    b.xi_minus = seed.xi_bar;
                    b.source = "variational";
                    b.seed = seed;
                    return b;
                }
                b.diagnostics.push_back("variational seed " + fmt(seed.xi_bar) + " classified " +
                                        seed.shot_outcome + "; falling back to the upward scan");
            } else {
                b.diagnostics.push_back("variational seed " + fmt(seed.xi_bar) +
                                        " above the scan range; falling back to the upward scan");
            }
            b.seed = seed;
        } catch (const std::exception& e) {
            b.diagnostics.push_back(std::string("variational seed failed: ") + e.what());
        }
    }

    // upward from xi0 with doubling offsets, then geometrically towards upper
    std::vector<double> candidates;
    for (int k = 0; k < 20; ++k) candidates.push_back(th.xi0 + (upper - th.xi0) * std::ldexp(1.0, k - 20));
    for (int k = 2; k <= 40; ++k) candidates.push_back(upper - (upper - th.xi0) * std::ldexp(1.0, -k));
    for (double xi : candidates) {
        if (!(xi < upper)) break;
        const auto minus = classify(p, xi, cfg);
        ++b.shots;
        if (std::holds_alternative<Crossing>(minus.shot.outcome)) {
            b.xi_minus = xi;
            b.source = "scan";
            return b;
        }
    }
    throw BracketError("I- not detected within budget: no Crossing below " + fmt(upper));
}

// -- bisection ----------------------------------------------------------------

GroundStateSolution bisect_ground_state(const Problem& p, const Bracket& bracket,
                                        const ShootingConfig& cfg) {
    cfg.validate();
    const auto a = classify(p, bracket.xi_plus, cfg);
    const auto b = classify(p, bracket.xi_minus, cfg);
    const bool a_turn = std::holds_alternative<Turning>(a.shot.outcome);
    const bool b_turn = std::holds_alternative<Turning>(b.shot.outcome);
    const bool a_cross = std::holds_alternative<Crossing>(a.shot.outcome);
    const bool b_cross = std::holds_alternative<Crossing>(b.shot.outcome);
    if (!((a_turn && b_cross) || (a_cross && b_turn))) {
        throw PreconditionError(std::string("invalid bracket: endpoints classified ") +
                                outcome_name(a.shot.outcome) + " and " + outcome_name(b.shot.outcome));
    }
    double t = a_turn ? bracket.xi_plus : bracket.xi_minus;
    double c = a_turn ? bracket.xi_minus : bracket.xi_plus;

    GroundStateSolution sol;
    double xi_star = 0.5 * (t + c);
    bool done = false;
    for (sol.bisections = 0; sol.bisections < cfg.max_bisections; ++sol.bisections) {
        if (std::abs(t - c) <= cfg.xi_tol) {
            done = true;
            break;
        }
        const double mid = 0.5 * (t + c);
        if (mid == t || mid == c) {
            sol.diagnostics.push_back("bracket reached floating-point resolution");
            done = true;
            break;
        }
        const auto m = classify(p, mid, cfg);
        if (std::holds_alternative<Turning>(m.shot.outcome)) {
            t = mid;
        } else if (std::holds_alternative<Crossing>(m.shot.outcome)) {
            c = mid;
        } else {
            sol.resolved_as_candidate = true;
            sol.diagnostics.push_back("midpoint " + fmt(mid) + " undetermined at r_max = " +
                                      fmt(2.0 * cfg.r_max) + "; accepted as ground candidate");
            xi_star = mid;
            done = true;
            ++sol.bisections;
            break;
        }
    }
    if (!done) {
        throw NumericalError("classification flip-flop: bracket width " + fmt(std::abs(t - c)) +
                             " after " + std::to_string(cfg.max_bisections) + " bisections");
    }
    if (!sol.resolved_as_candidate) xi_star = 0.5 * (t + c);

    sol.xi_star = xi_star;
    sol.xi_turning = t;
    sol.xi_crossing = c;
    sol.bracket_width = std::abs(t - c);

    ShootingConfig final_cfg = cfg;
    final_cfg.detect_ground_candidate = true;
    final_cfg.store_profile = true;
    sol.shot = shoot(p, xi_star, final_cfg);
    sol.profile = sol.shot.profile;
    if (std::holds_alternative<Turning>(sol.shot.outcome) ||
        std::holds_alternative<Crossing>(sol.shot.outcome)) {
        sol.diagnostics.push_back(std::string("final shot ended with ") + outcome_name(sol.shot.outcome) +
                                  " at r = " + fmt(outcome_radius(sol.shot.outcome)) +
                                  "; event row dropped from the profile");
        if (!sol.profile.empty()) sol.profile.pop_back();
    }
    return sol;
}

// -- verification -----------------------------------------------------------

bool VerificationReport::passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
}

const Check& VerificationReport::at(const std::string& name) const {
    for (const auto& c : checks) {
        if (c.name == name) return c;
    }
    throw std::out_of_range("no verification check named " + name);
}

double profile_ode_residual(const std::vector<ProfileRow>& rows, const Nonlinearity& nl, int N) {
    if (rows.size() < 5) return std::numeric_limits<double>::infinity();
    const double h = rows[1].r - rows[0].r;
    if (!(h > 0.0)) return std::numeric_limits<double>::infinity();
    std::size_t m = 1;
    while (m < rows.size() && std::abs((rows[m].r - rows[m - 1].r) - h) <= 1e-9 * h) ++m;
    if (m < 5) return std::numeric_limits<double>::infinity();
    double worst = 0.0;
    for (std::size_t i = 2; i + 2 < m; ++i) {
        const double dq = (rows[i - 2].q - 8.0 * rows[i - 1].q + 8.0 * rows[i + 1].q - rows[i + 2].q) / (12.0 * h);
        const double res = dq + (N - 1) * rows[i].q / rows[i].r + nl.f(rows[i].u);
        worst = std::max(worst, std::abs(res));
    }
    return worst;
}

VerificationReport verify_ground_state(const std::vector<ProfileRow>& profile, const Nonlinearity& nl,
                                       int N, const ShootingConfig& cfg) {
    VerificationReport rep;
    if (profile.empty()) {
        for (const char* name : {"positive_decreasing", "slope_margin", "energy_residual", "tail_decay", "ode_residual"}) {
            rep.checks.push_back({name, false, std::numeric_limits<double>::quiet_NaN(), 0.0});
        }
        return rep;
    }
    double violations = 0.0;
    double min_margin = std::numeric_limits<double>::infinity();
    double max_res = 0.0;
    for (std::size_t i = 0; i < profile.size(); ++i) {
        const auto& row = profile[i];
        if (!(row.u > 0.0)) ++violations;
        if (row.r > 0.0 && !(row.uprime < 0.0)) ++violations;
        if (i > 0 && !(row.u < profile[i - 1].u)) ++violations;
        min_margin = std::min(min_margin, slope_margin(row.q));
        max_res = std::max(max_res, std::abs(row.energy_residual));
    }
    const double tail = profile.back().u;
    const double fd = profile_ode_residual(profile, nl, N);
    rep.checks.push_back({"positive_decreasing", violations == 0.0, violations, 0.0});
    rep.checks.push_back({"slope_margin", min_margin >= cfg.margin_tol, min_margin, cfg.margin_tol});
    rep.checks.push_back({"energy_residual", max_res <= cfg.res_tol, max_res, cfg.res_tol});
    rep.checks.push_back({"tail_decay", tail <= cfg.decay_tol, tail, cfg.decay_tol});
    rep.checks.push_back({"ode_residual", fd <= cfg.fd_tol, fd, cfg.fd_tol});
    return rep;
}

VerificationReport verify_ground_state(const GroundStateSolution& sol, const Problem& p,
                                       const ShootingConfig& cfg) {
    return verify_ground_state(sol.profile, p.truncated, p.N, cfg);
}

}  // namespace minkgs
