#pragma once

// JSON run report of a mining run.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "invmine/invgen.hpp"

namespace invmine {

struct RevisionEntry {
  int round = 0;
  std::string trigger;
  std::string formula;
  double seconds = 0.0;
  std::size_t reached = 0;
  std::size_t speculated = 0;
  friend bool operator==(const RevisionEntry&, const RevisionEntry&) = default;
};

struct Report {
  std::string model;
  std::uint64_t seed = 0;
  nlohmann::json config = nlohmann::json::object();
  std::string status;
  std::string error;
  int rounds = 0;
  std::vector<RevisionEntry> revisions;
  std::size_t visited_states = 0;
  std::optional<std::size_t> reachable_states;
  std::optional<double> visited_ratio;
  std::string final_invariant;
  int survival_rounds = 0;
  double cp_lower_bound = 0.0;
  nlohmann::json learner_stats = nlohmann::json::object();
  nlohmann::json tightness_estimate = nlohmann::json::object();
  double wall_seconds = 0.0;
  friend bool operator==(const Report&, const Report&) = default;
};

nlohmann::json config_to_json(const ProgramModel& m, const InvGenConfig& cfg);
nlohmann::json stats_to_json(const ProgramModel& m, const LearnStats& stats);

/// Fills everything derivable from the run; oracle-dependent fields are
/// left for the caller.
Report make_report(const std::string& model_name, const ProgramModel& m, const InvGenConfig& cfg,
                   const InvGenResult& run);

void to_json(nlohmann::json& j, const RevisionEntry& r);
void from_json(const nlohmann::json& j, RevisionEntry& r);
void to_json(nlohmann::json& j, const Report& r);
void from_json(const nlohmann::json& j, Report& r);

}  // namespace invmine
