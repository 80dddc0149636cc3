#pragma once

#include "minkgs/cli.hpp"

#include <json.hpp>

namespace minkgs::cli {

using Json = nlohmann::ordered_json;

Json config_json(const RunConfig& cfg, const Nonlinearity& nl);
Json thresholds_json(const Thresholds& th, double scan_max);
Json report_json(const AssumptionReport& rep);
Json outcome_json(const Outcome& o);
Json shot_json(const ShotRecord& rec);
Json bracket_json(const Bracket& b);
Json solution_json(const GroundStateSolution& sol);
Json verification_json(const VerificationReport& rep);

/// Writes the summary to cfg.summary_path, or to out when no path is set.
void emit_summary(const RunConfig& cfg, const Json& summary, std::ostream& out);
/// Writes rows to cfg.profile_path when one is set.
void emit_profile(const RunConfig& cfg, const std::vector<ProfileRow>& rows);

}  // namespace minkgs::cli
