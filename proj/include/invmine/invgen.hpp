#pragma once

// The sampling/revision loop: grow the reached set from random traces,
// speculate unreached states as negatives, re-learn the candidate whenever
// the evidence contradicts it, stop after enough traces in a row agree.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "invmine/executor.hpp"
#include "invmine/formula.hpp"
#include "invmine/learner.hpp"
#include "invmine/stats.hpp"

namespace invmine {

enum class RevisionMode {
  /// Revise whenever any trigger set, including the new negatives, is nonempty.
  Literal,
  /// New negatives only trigger a revision when the candidate admits one.
  Lazy,
};

struct InvGenConfig {
  int trace_len = 10;
  int negatives_per_round = 2;
  int trace_budget = 72;
  double alpha = 0.05;
  double epsilon = 0.05;  // reported only
  bool certify = false;   // raise the budget to cp_trials(alpha)
  RevisionMode mode = RevisionMode::Lazy;
  LearnerConfig learner;
  /// Slots the learner may mention; empty means every data slot.
  std::vector<int> alphabet;
  std::vector<AtomTemplate> templates = default_templates();
  SchedulerPolicy scheduler = SchedulerPolicy::uniform();
  std::uint64_t seed = 0;
  /// Hard cap on loop iterations; 0 means none.
  int max_rounds = 100'000;

  int effective_budget() const;
  /// Throws std::invalid_argument on out-of-range fields.
  void validate(const ProgramModel& m) const;
};

/// Data slots of the model, in slot order.
std::vector<int> default_alphabet(const ProgramModel& m);

/// Copy of `s` with every slot outside `alphabet` reset to its domain minimum.
ProgramState project(const ProgramModel& m, const ProgramState& s, const std::vector<int>& alphabet);

struct Revision {
  int round = 0;
  std::string trigger;  // "missedPos+newNegs", ...
  Formula formula = Formula::constant(false);
  double seconds = 0.0;
  std::size_t reached = 0;
  std::size_t speculated = 0;
  LearnStats stats;
};

struct InvGenState {
  StateSet reached;
  StateSet speculated;
  Formula phi = Formula::constant(false);
  int survival = 0;
  int rounds = 0;
  std::vector<Revision> revisions;
};

/// What happened in one loop iteration, for instrumentation.
struct RoundEvent {
  int round = 0;
  std::size_t trace_states = 0;
  std::size_t missed_pos = 0;
  std::size_t bad_negs = 0;
  std::size_t new_negs = 0;
  std::size_t reached_before = 0;
  std::size_t reached_after = 0;
  bool revised = false;
  const Trace* trace = nullptr;  // valid during the callback only
};

using RoundObserver = std::function<void(const RoundEvent&, const InvGenState&)>;

enum class InvGenStatus { Converged, RoundLimit, LearnerFailure };
const char* status_name(InvGenStatus s);

struct InvGenResult {
  InvGenStatus status = InvGenStatus::Converged;
  InvGenState state;
  std::string error;
  int budget = 0;
  LearnStats learner_stats;  // accumulated over all revisions
  double wall_seconds = 0.0;

  const Formula& invariant() const { return state.phi; }
};

/// Up to i distinct domain states whose projection is not in
/// `excluded` (a set of projected states), drawn uniformly with counters
/// restricted to valid positions. Gives up after 100*i draws.
std::vector<ProgramState> speculate_negatives(const ProgramModel& m, const StateSet& excluded,
                                              int i, Rng& rng,
                                              const std::vector<int>& alphabet);

/// Unprojected form: rejects states contained in `reached`.
std::vector<ProgramState> speculate_negatives(const ProgramModel& m, const StateSet& reached, int i,
                                              Rng& rng);

/// Positive and negative examples, projected onto the alphabet and
/// deduplicated, in sorted order.
ExampleSets learning_examples(const ProgramModel& m, const InvGenState& st,
                              const std::vector<int>& alphabet);

InvGenResult run_invgen(const ProgramModel& m, const InvGenConfig& cfg,
                        const RoundObserver& observer = {});

}  // namespace invmine
