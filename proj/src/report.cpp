#include "invmine/report.hpp"

namespace invmine {

using nlohmann::json;

json config_to_json(const ProgramModel& m, const InvGenConfig& cfg) {
  const std::vector<int> alphabet = cfg.alphabet.empty() ? default_alphabet(m) : cfg.alphabet;
  json names = json::array();
  for (int s : alphabet) names.push_back(m.slot(s).name);
  return json{
      {"trace_len", cfg.trace_len},
      {"negatives_per_round", cfg.negatives_per_round},
      {"trace_budget", cfg.trace_budget},
      {"effective_budget", cfg.effective_budget()},
      {"alpha", cfg.alpha},
      {"epsilon", cfg.epsilon},
      {"certify", cfg.certify},
      {"revision_mode", cfg.mode == RevisionMode::Lazy ? "lazy" : "literal"},
      {"max_rounds", cfg.max_rounds},
      {"alphabet", names},
      {"learner",
       {{"delta", cfg.learner.delta},
        {"leaf_bound", cfg.learner.leaf_bound},
        {"max_inv_length", cfg.learner.max_inv_length},
        {"subsample_size", cfg.learner.subsample_size},
        {"max_subsample_rounds", cfg.learner.max_subsample_rounds},
        {"max_tree_depth", cfg.learner.max_tree_depth},
        {"max_candidates", cfg.learner.max_candidates}}},
  };
}

json stats_to_json(const ProgramModel& m, const LearnStats& stats) {
  json splits = json::array();
  for (const SplitRecord& s : stats.splits)
    splits.push_back({{"depth", s.depth},
                      {"atom", to_string(m, s.atom)},
                      {"precision", s.precision.to_string()},
                      {"positives", s.positives},
                      {"negatives", s.negatives}});
  return json{{"atoms", stats.atoms},
              {"enumerated", stats.enumerated},
              {"deduplicated", stats.deduplicated},
              {"subsample_rounds", stats.subsample_rounds},
              {"tree_nodes", stats.tree_nodes},
              {"splits", splits},
              {"wall_seconds", stats.wall_seconds}};
}

Report make_report(const std::string& model_name, const ProgramModel& m, const InvGenConfig& cfg,
                   const InvGenResult& run) {
  Report r;
  r.model = model_name;
  r.seed = cfg.seed;
  r.config = config_to_json(m, cfg);
  r.status = status_name(run.status);
  r.error = run.error;
  r.rounds = run.state.rounds;
  for (const Revision& rev : run.state.revisions)
    r.revisions.push_back(RevisionEntry{rev.round, rev.trigger, rev.formula.to_string(m),
                                        rev.seconds, rev.reached, rev.speculated});
  r.visited_states = run.state.reached.size();
  r.final_invariant = run.invariant().to_string(m);
  r.survival_rounds = run.state.survival;
  r.cp_lower_bound = run.state.survival > 0 ? cp_lower_bound(run.state.survival, cfg.alpha) : 0.0;
  r.learner_stats = stats_to_json(m, run.learner_stats);
  r.wall_seconds = run.wall_seconds;
  return r;
}

void to_json(json& j, const RevisionEntry& r) {
  j = json{{"round", r.round},     {"trigger", r.trigger}, {"formula", r.formula},
           {"seconds", r.seconds}, {"reached", r.reached}, {"speculated", r.speculated}};
}

void from_json(const json& j, RevisionEntry& r) {
  j.at("round").get_to(r.round);
  j.at("trigger").get_to(r.trigger);
  j.at("formula").get_to(r.formula);
  j.at("seconds").get_to(r.seconds);
  j.at("reached").get_to(r.reached);
  j.at("speculated").get_to(r.speculated);
}

void to_json(json& j, const Report& r) {
  j = json{{"model", r.model},
           {"seed", r.seed},
           {"config", r.config},
           {"status", r.status},
           {"error", r.error},
           {"rounds", r.rounds},
           {"revisions", r.revisions},
           {"visited_states", r.visited_states},
           {"reachable_states", nullptr},
           {"visited_ratio", nullptr},
           {"final_invariant", r.final_invariant},
           {"survival_rounds", r.survival_rounds},
           {"cp_lower_bound", r.cp_lower_bound},
           {"learner_stats", r.learner_stats},
           {"tightness_estimate", r.tightness_estimate},
           {"wall_seconds", r.wall_seconds}};
  if (r.reachable_states) j["reachable_states"] = *r.reachable_states;
  if (r.visited_ratio) j["visited_ratio"] = *r.visited_ratio;
}

void from_json(const json& j, Report& r) {
  j.at("model").get_to(r.model);
  j.at("seed").get_to(r.seed);
  r.config = j.at("config");
  j.at("status").get_to(r.status);
  j.at("error").get_to(r.error);
  j.at("rounds").get_to(r.rounds);
  j.at("revisions").get_to(r.revisions);
  j.at("visited_states").get_to(r.visited_states);
  const json& reach = j.at("reachable_states");
  r.reachable_states = reach.is_null() ? std::nullopt : std::optional(reach.get<std::size_t>());
  const json& ratio = j.at("visited_ratio");
  r.visited_ratio = ratio.is_null() ? std::nullopt : std::optional(ratio.get<double>());
  j.at("final_invariant").get_to(r.final_invariant);
  j.at("survival_rounds").get_to(r.survival_rounds);
  j.at("cp_lower_bound").get_to(r.cp_lower_bound);
  r.learner_stats = j.at("learner_stats");
  r.tightness_estimate = j.at("tightness_estimate");
  j.at("wall_seconds").get_to(r.wall_seconds);
}

}  // namespace invmine
