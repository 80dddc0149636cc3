#include "minkgs/cli.hpp"

#include "output.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <fstream>
#include <locale>
#include <map>
#include <random>

namespace minkgs::cli {

namespace {

class Stopwatch {
public:
    [[nodiscard]] double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

Json base_summary(const RunConfig& cfg, const Nonlinearity& nl) {
    Json j;
    j["version"] = kVersion;
    j["config"] = config_json(cfg, nl);
    return j;
}

void finish_timings(const RunConfig& cfg, Json& summary, Json timings, const Stopwatch& clock) {
    // wall time breaks byte-identical reruns, so it is opt-in
    if (cfg.wall_clock) timings["wall_seconds"] = clock.seconds();
    summary["timings"] = std::move(timings);
}

}  // namespace

int cmd_thresholds(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    const Stopwatch clock;
    cfg.validate();
    const Nonlinearity nl = build_nonlinearity(cfg);
    Json summary = base_summary(cfg, nl);
    const AssumptionReport rep = check_assumptions(nl, cfg.N);
    summary["thresholds"] = rep.thresholds ? thresholds_json(*rep.thresholds, nl.scan_max()) : Json(nullptr);
    summary["assumption_report"] = report_json(rep);

    // closed-form primitive against quadrature at seeded random points
    constexpr int kSamples = 100;
    std::mt19937_64 rng(cfg.seed);
    const double top = rep.thresholds ? rep.thresholds->upper(nl.scan_max()) : nl.scan_max();
    std::uniform_real_distribution<double> dist(0.0, top);
    double worst = 0.0;
    for (int i = 0; i < kSamples; ++i) {
        const double s = dist(rng);
        worst = std::max(worst, std::abs(nl.F(s) - nl.F_by_quadrature(s)));
    }
    summary["primitive_check"] = {{"samples", kSamples},
                                  {"closed_form", nl.has_closed_primitive()},
                                  {"max_abs_difference", worst}};
    finish_timings(cfg, summary, {{"primitive_samples", kSamples}}, clock);
    emit_summary(cfg, summary, out);
    if (!rep.passed()) {
        err << "assumption check failed";
        if (!rep.failure.empty()) err << ": " << rep.failure;
        err << '\n';
        return kAssumptionFailure;
    }
    return kSuccess;
}

int cmd_shoot(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    const Stopwatch clock;
    cfg.validate();
    if (!cfg.xi) throw ConfigError("shoot needs --xi");
    const Nonlinearity nl = build_nonlinearity(cfg);
    const Problem p = make_problem(cfg.N, nl);
    Json summary = base_summary(cfg, nl);
    summary["thresholds"] = thresholds_json(p.thresholds, nl.scan_max());
    summary["assumption_report"] = report_json(p.report);

    ShotRecord rec;
    int code = kSuccess;
    try {
        rec = shoot(p, *cfg.xi, cfg.shooting);
    } catch (const ShotError& e) {
        rec = e.partial();
        rec.error = e.what();
        err << e.what() << '\n';
        code = kVerificationFailure;
    }
    summary["outcome"] = shot_json(rec);
    summary["verification"] = verification_json(verify_ground_state(rec.profile, p.truncated, p.N, cfg.shooting));
    finish_timings(cfg, summary, {{"shots", 1}, {"integrator_steps", rec.steps}, {"rhs_evaluations", rec.rhs_evaluations}}, clock);
    emit_profile(cfg, rec.profile);
    emit_summary(cfg, summary, out);
    return code;
}

int cmd_solve(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    const Stopwatch clock;
    cfg.validate();
    const Nonlinearity nl = build_nonlinearity(cfg);
    const Problem p = make_problem(cfg.N, nl);
    Json summary = base_summary(cfg, nl);
    summary["thresholds"] = thresholds_json(p.thresholds, nl.scan_max());
    summary["assumption_report"] = report_json(p.report);
    Json timings = Json::object();

    if (!p.report.passed()) {
        summary["solution"] = nullptr;
        finish_timings(cfg, summary, timings, clock);
        emit_summary(cfg, summary, out);
        err << "assumption check failed for N = " << cfg.N << '\n';
        return kAssumptionFailure;
    }

    Bracket bracket;
    GroundStateSolution sol;
    try {
        bracket = find_bracket(p, cfg.shooting);
        summary["bracket"] = bracket_json(bracket);
        timings["bracket_shots"] = bracket.shots;
        sol = bisect_ground_state(p, bracket, cfg.shooting);
    } catch (const NumericalError& e) {
        summary["bracket_error"] = e.what();
        summary["solution"] = nullptr;
        finish_timings(cfg, summary, timings, clock);
        emit_summary(cfg, summary, out);
        err << e.what() << '\n';
        return kBracketFailure;
    }

    const VerificationReport rep = verify_ground_state(sol, p, cfg.shooting);
    summary["solution"] = solution_json(sol);
    summary["verification"] = verification_json(rep);
    timings["bisections"] = sol.bisections;
    timings["final_shot_steps"] = sol.shot.steps;
    timings["final_shot_rhs_evaluations"] = sol.shot.rhs_evaluations;
    finish_timings(cfg, summary, timings, clock);
    emit_profile(cfg, sol.profile);
    emit_summary(cfg, summary, out);
    if (!rep.passed()) {
        err << "verification failed:";
        for (const auto& c : rep.checks) {
            if (!c.passed) err << ' ' << c.name << " (" << c.value << " vs " << c.tolerance << ')';
        }
        err << '\n';
        return kVerificationFailure;
    }
    return kSuccess;
}

int cmd_scan(const RunConfig& cfg, std::ostream& out, std::ostream& /*err*/) {
    const Stopwatch clock;
    cfg.validate();
    const Nonlinearity nl = build_nonlinearity(cfg);
    const Problem p = make_problem(cfg.N, nl);
    const double upper = p.thresholds.upper(nl.scan_max());
    const double lo = cfg.xi_min.value_or(p.thresholds.alpha + 1e-3);
    const double hi = cfg.xi_max.value_or(upper - 1e-3);
    if (!(lo > p.thresholds.alpha) || !(hi < upper) || !(lo <= hi)) {
        throw ConfigError("scan range must lie inside (alpha, min(beta, scan_max))");
    }
    std::vector<double> grid(static_cast<std::size_t>(cfg.points));
    for (int i = 0; i < cfg.points; ++i) {
        grid[static_cast<std::size_t>(i)] = cfg.points == 1 ? lo : lo + (hi - lo) * i / (cfg.points - 1);
    }
    ShootingConfig sc = cfg.shooting;
    sc.store_profile = false;
    const auto records = classify_scan(p, grid, sc);

    Json summary = base_summary(cfg, nl);
    summary["thresholds"] = thresholds_json(p.thresholds, nl.scan_max());
    summary["assumption_report"] = report_json(p.report);

    auto label = [](const ShotRecord& r) { return r.error.empty() ? std::string(outcome_name(r.outcome)) : std::string("Error"); };
    std::map<std::string, int> counts;
    Json rows = Json::array();
    Json transitions = Json::array();
    std::size_t steps = 0;
    std::size_t rhs = 0;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        ++counts[label(r)];
        steps += r.steps;
        rhs += r.rhs_evaluations;
        Json row{{"xi", r.xi}, {"class", label(r)}, {"event_r", outcome_radius(r.outcome)}, {"max_residual", r.max_energy_residual}};
        if (!r.error.empty()) row["error"] = r.error;
        rows.push_back(row);
        if (i > 0 && label(r) != label(records[i - 1])) {
            transitions.push_back({{"xi_left", records[i - 1].xi},
                                   {"xi_right", r.xi},
                                   {"from", label(records[i - 1])},
                                   {"to", label(r)},
                                   {"gap", r.xi - records[i - 1].xi}});
        }
    }
    Json counts_json = Json::object();
    for (const auto& [k, v] : counts) counts_json[k] = v;
    summary["outcome"] = {{"counts", counts_json}, {"transitions", transitions}, {"rows", rows}};
    finish_timings(cfg, summary, {{"shots", records.size()}, {"integrator_steps", steps}, {"rhs_evaluations", rhs}}, clock);

    if (!cfg.table_out.empty()) {
        std::ofstream os(cfg.table_out, std::ios::binary);
        if (!os) throw ConfigError("cannot write " + cfg.table_out);
        os.imbue(std::locale::classic());
        os.precision(std::numeric_limits<double>::max_digits10);
        os << "xi,class,event_r,max_residual\n";
        for (const auto& r : records) {
            os << r.xi << ',' << label(r) << ',' << outcome_radius(r.outcome) << ',' << r.max_energy_residual << '\n';
        }
    }
    emit_summary(cfg, summary, out);
    return kSuccess;
}

// -- argument parsing -------------------------------------------------------

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    RunConfig cfg;
    ShootingConfig& s = cfg.shooting;
    IntegratorConfig& ic = s.integrator;
    MinimizeConfig& mc = s.variational;
    double lambda = 0.0;
    double q = 0.0;
    double scan_max = 0.0;
    double xi = 0.0;
    double xi_min = 0.0;
    double xi_max = 0.0;
    bool no_variational = false;

    CLI::App app{"Radial ground states of the Minkowski mean-curvature equation", "minkgs"};
    app.set_version_flag("--version", kVersion);
    app.set_config("--config", "", "TOML file with the same keys as the long options");
    app.require_subcommand(1);
    app.fallthrough();

    app.add_option("--family", cfg.family, "power, sine or table");
    auto* lambda_opt = app.add_option("--lambda", lambda, "power family: f(s) = -lambda s + s^q");
    auto* q_opt = app.add_option("--q", q, "exponent of the power or sine family");
    app.add_option("--table", cfg.table_path, "CSV file of (s, f(s)) samples for family table");
    app.add_option("--N", cfg.N, "space dimension (>= 2)")->capture_default_str();
    auto* scan_opt = app.add_option("--scan-max", scan_max, "upper end of the threshold scan");

    app.add_option("--abs-tol", ic.abs_tol, "integrator absolute tolerance")->capture_default_str();
    app.add_option("--rel-tol", ic.rel_tol, "integrator relative tolerance")->capture_default_str();
    app.add_option("--r-start", ic.r_start, "radius of the series start")->capture_default_str();
    app.add_option("--h-max", ic.h_max, "largest integrator step")->capture_default_str();
    app.add_option("--stride", ic.sample_stride, "profile sample spacing")->capture_default_str();

    app.add_option("--r-max", s.r_max, "shot budget in r")->capture_default_str();
    app.add_option("--u-tol", s.u_tol, "ground-candidate height tolerance")->capture_default_str();
    app.add_option("--q-tol", s.q_tol, "ground-candidate flux tolerance")->capture_default_str();
    app.add_option("--xi-tol", s.xi_tol, "bisection width")->capture_default_str();
    app.add_option("--margin-tol", s.margin_tol, "required slope margin 1 - |u'|")->capture_default_str();
    app.add_option("--res-tol", s.res_tol, "energy residual tolerance")->capture_default_str();
    app.add_option("--decay-tol", s.decay_tol, "tail height tolerance")->capture_default_str();
    app.add_option("--fd-tol", s.fd_tol, "finite-difference ODE residual tolerance")->capture_default_str();
    app.add_option("--max-bisections", s.max_bisections, "bisection budget")->capture_default_str();

    app.add_option("--var-n", mc.n, "cells of the variational grid")->capture_default_str();
    app.add_option("--eps-s", mc.eps_s, "slope clip distance from 1")->capture_default_str();
    app.add_option("--grad-tol", mc.grad_tol, "projected gradient tolerance")->capture_default_str();
    app.add_option("--max-iters", mc.max_iters, "minimizer iteration budget")->capture_default_str();
    app.add_option("--tol-neg", mc.tol_neg, "choose_rho stops once J(w_rho) < -tol_neg")->capture_default_str();
    app.add_flag("--no-variational-seed", no_variational, "skip the variational seed in solve");

    app.add_option("--workers", s.workers, "scan threads (0: hardware concurrency)")->capture_default_str();
    app.add_option("--seed", cfg.seed, "seed for sampled checks")->capture_default_str();
    app.add_option("--summary", cfg.summary_path, "write the JSON summary here instead of stdout");
    app.add_option("--profile", cfg.profile_path, "write the profile CSV here");
    app.add_flag("--wall-clock", cfg.wall_clock, "add wall time to the summary timings");

    auto* thresholds = app.add_subcommand("thresholds", "thresholds and hypothesis report");
    auto* shoot_cmd = app.add_subcommand("shoot", "one shot from u(0) = xi");
    auto* xi_opt = shoot_cmd->add_option("--xi", xi, "initial height")->required();
    auto* solve = app.add_subcommand("solve", "bracket, bisect and verify a ground state");
    auto* scan = app.add_subcommand("scan", "classify a uniform grid of initial heights");
    auto* xi_min_opt = scan->add_option("--xi-min", xi_min, "first grid point");
    auto* xi_max_opt = scan->add_option("--xi-max", xi_max, "last grid point");
    scan->add_option("--points", cfg.points, "grid size")->capture_default_str();
    scan->add_option("--output", cfg.table_out, "classification CSV");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? kSuccess : kConfigError;
    }

    if (lambda_opt->count() > 0) cfg.lambda = lambda;
    if (q_opt->count() > 0) cfg.q = q;
    if (scan_opt->count() > 0) cfg.scan_max = scan_max;
    if (xi_opt->count() > 0) cfg.xi = xi;
    if (xi_min_opt->count() > 0) cfg.xi_min = xi_min;
    if (xi_max_opt->count() > 0) cfg.xi_max = xi_max;
    s.variational_seed = !no_variational;

    CLI::App* chosen = app.get_subcommands().front();
    cfg.command = chosen->get_name();
    try {
        if (chosen == thresholds) return cmd_thresholds(cfg, out, err);
        if (chosen == shoot_cmd) return cmd_shoot(cfg, out, err);
        if (chosen == solve) return cmd_solve(cfg, out, err);
        return cmd_scan(cfg, out, err);
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << "\n\n"
            << app.get_formatter()->make_help(&app, app.get_name(), CLI::AppFormatMode::Normal);
        return kConfigError;
    } catch (const PreconditionError& e) {
        err << "error: " << e.what() << '\n';
        return kConfigError;
    } catch (const AssumptionError& e) {
        err << "assumption failure: " << e.what() << '\n';
        return kAssumptionFailure;
    } catch (const NumericalError& e) {
        err << "numerical failure: " << e.what() << '\n';
        return kVerificationFailure;
    }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    std::vector<const char*> argv;
    argv.reserve(args.size() + 1);
    for (const auto& a : args) argv.push_back(a.c_str());
    argv.push_back(nullptr);
    return run(static_cast<int>(args.size()), argv.data(), out, err);
}

}  // namespace minkgs::cli
