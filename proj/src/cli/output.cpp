#include "output.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <locale>

namespace minkgs::cli {

namespace {

// Non-finite values become null; nlohmann would do the same silently.
Json number(double v) {
    if (!std::isfinite(v)) return nullptr;
    return v;
}

std::ofstream open_output(const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ConfigError("cannot write " + path);
    return os;
}

}  // namespace

Json config_json(const RunConfig& cfg, const Nonlinearity& nl) {
    const ShootingConfig& s = cfg.shooting;
    Json family{{"name", cfg.family}};
    if (cfg.lambda) family["lambda"] = *cfg.lambda;
    if (cfg.q) family["q"] = *cfg.q;
    if (!cfg.table_path.empty()) family["table"] = cfg.table_path;
    family["scan_max"] = nl.scan_max();

    Json j;
    j["command"] = cfg.command;
    j["family"] = family;
    j["N"] = cfg.N;
    j["integrator"] = {{"abs_tol", s.integrator.abs_tol},
                       {"rel_tol", s.integrator.rel_tol},
                       {"r_start", s.integrator.r_start},
                       {"h_max", s.integrator.h_max},
                       {"sample_stride", s.integrator.sample_stride}};
    j["shooting"] = {{"r_max", s.r_max},           {"u_tol", s.u_tol},
                     {"q_tol", s.q_tol},           {"xi_tol", s.xi_tol},
                     {"margin_tol", s.margin_tol}, {"res_tol", s.res_tol},
                     {"decay_tol", s.decay_tol},   {"fd_tol", s.fd_tol},
                     {"max_bisections", s.max_bisections}};
    j["variational"] = {{"enabled", s.variational_seed},
                        {"n", s.variational.n},
                        {"eps_s", s.variational.eps_s},
                        {"grad_tol", s.variational.grad_tol},
                        {"max_iters", s.variational.max_iters},
                        {"tol_neg", s.variational.tol_neg}};
    if (cfg.command == "shoot" && cfg.xi) j["xi"] = *cfg.xi;
    if (cfg.command == "scan") {
        j["scan"] = {{"xi_min", cfg.xi_min ? number(*cfg.xi_min) : Json(nullptr)},
                     {"xi_max", cfg.xi_max ? number(*cfg.xi_max) : Json(nullptr)},
                     {"points", cfg.points}};
    }
    j["outputs"] = {{"summary", cfg.summary_path}, {"profile", cfg.profile_path}, {"table", cfg.table_out}};
    j["seed"] = cfg.seed;
    return j;
}

Json thresholds_json(const Thresholds& th, double scan_max) {
    return {{"alpha", th.alpha},
            {"xi0", th.xi0},
            {"beta", number(th.beta)},
            {"beta_finite", th.beta_finite()},
            {"gamma", th.gamma},
            {"upper", th.upper(scan_max)}};
}

Json report_json(const AssumptionReport& rep) {
    Json status = Json::object();
    for (const auto& [name, v] : rep.status) status[name] = to_string(v);
    Json evidence = Json::array();
    for (const auto& e : rep.evidence) {
        evidence.push_back({{"assumption", e.assumption}, {"s", number(e.s)}, {"value", number(e.value)}, {"note", e.note}});
    }
    Json j{{"passed", rep.passed()}, {"status", status}, {"tabulated", rep.tabulated}};
    j["f4_limit_estimate"] = rep.f4_limit_estimate ? number(*rep.f4_limit_estimate) : Json(nullptr);
    j["f4_unbounded"] = rep.f4_unbounded;
    if (!rep.failure.empty()) j["failure"] = rep.failure;
    j["evidence"] = evidence;
    return j;
}

Json outcome_json(const Outcome& o) {
    Json j{{"class", outcome_name(o)}};
    if (const auto* t = std::get_if<Turning>(&o)) j["r_turn"] = t->r_turn;
    if (const auto* c = std::get_if<Crossing>(&o)) j["r_cross"] = c->r_cross;
    if (const auto* g = std::get_if<GroundCandidate>(&o)) {
        j["r_reached"] = g->r_reached;
        j["u_final"] = g->u_final;
        j["q_final"] = g->q_final;
    }
    if (const auto* u = std::get_if<Undetermined>(&o)) j["r_max"] = u->r_max;
    return j;
}

Json shot_json(const ShotRecord& rec) {
    Json j{{"xi", rec.xi}, {"outcome", outcome_json(rec.outcome)}};
    j["final_state"] = {{"r", rec.final_state.r}, {"u", rec.final_state.u}, {"q", rec.final_state.q}, {"D", rec.final_state.D}};
    j["max_energy_residual"] = number(rec.max_energy_residual);
    j["min_slope_margin"] = number(rec.min_slope_margin);
    j["min_u"] = number(rec.min_u);
    j["rows"] = rec.profile.size();
    if (!rec.error.empty()) j["error"] = rec.error;
    return j;
}

Json bracket_json(const Bracket& b) {
    Json j{{"xi_plus", b.xi_plus}, {"xi_minus", b.xi_minus}, {"source", b.source}, {"shots", b.shots}};
    if (b.seed) {
        const auto& s = *b.seed;
        j["variational_seed"] = {{"gamma", s.gamma},
                                 {"rho", s.rho},
                                 {"J_trial", number(s.J_trial)},
                                 {"J_min", number(s.J_min)},
                                 {"xi_bar", number(s.xi_bar)},
                                 {"ode_residual", number(s.ode_residual)},
                                 {"iterations", s.iterations},
                                 {"converged", s.converged},
                                 {"status", s.status},
                                 {"interior_zeros", s.interior_zeros},
                                 {"shot_outcome", s.shot_outcome}};
    }
    j["diagnostics"] = b.diagnostics;
    return j;
}

Json solution_json(const GroundStateSolution& sol) {
    Json j{{"xi_star", sol.xi_star},
           {"bracket_width", sol.bracket_width},
           {"xi_turning", sol.xi_turning},
           {"xi_crossing", sol.xi_crossing},
           {"bisections", sol.bisections},
           {"resolved_as_candidate", sol.resolved_as_candidate},
           {"final_shot", shot_json(sol.shot)},
           {"profile_rows", sol.profile.size()}};
    if (!sol.profile.empty()) {
        j["r_end"] = sol.profile.back().r;
        j["u_end"] = sol.profile.back().u;
    }
    j["diagnostics"] = sol.diagnostics;
    return j;
}

Json verification_json(const VerificationReport& rep) {
    Json checks = Json::object();
    for (const auto& c : rep.checks) {
        checks[c.name] = {{"passed", c.passed}, {"value", number(c.value)}, {"tolerance", c.tolerance}};
    }
    return {{"passed", rep.passed()}, {"checks", checks}};
}

void emit_summary(const RunConfig& cfg, const Json& summary, std::ostream& out) {
    const std::string text = summary.dump(2) + "\n";
    if (cfg.summary_path.empty()) {
        out << text;
        return;
    }
    auto os = open_output(cfg.summary_path);
    os << text;
}

void write_profile_csv(std::ostream& os, const std::vector<ProfileRow>& rows) {
    os.imbue(std::locale::classic());
    os.precision(std::numeric_limits<double>::max_digits10);
    os << "r,u,uprime,q,D,energy_residual\n";
    for (const auto& r : rows) {
        os << r.r << ',' << r.u << ',' << r.uprime << ',' << r.q << ',' << r.D << ',' << r.energy_residual << '\n';
    }
}

void emit_profile(const RunConfig& cfg, const std::vector<ProfileRow>& rows) {
    if (cfg.profile_path.empty()) return;
    auto os = open_output(cfg.profile_path);
    write_profile_csv(os, rows);
}

}  // namespace minkgs::cli
