#include "invmine/invgen.hpp"

#include <algorithm>
#include <chrono>
#include <set>
#include <stdexcept>

namespace invmine {

int InvGenConfig::effective_budget() const {
  return certify ? std::max(trace_budget, cp_trials(alpha)) : trace_budget;
}

void InvGenConfig::validate(const ProgramModel& m) const {
  if (trace_len < 0) throw std::invalid_argument("trace length must be >= 0");
  if (negatives_per_round < 0) throw std::invalid_argument("negatives per round must be >= 0");
  if (trace_budget < 1) throw std::invalid_argument("trace budget must be positive");
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must be in (0, 1)");
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw std::invalid_argument("epsilon must be in (0, 1)");
  if (max_rounds < 0) throw std::invalid_argument("max rounds must be >= 0");
  for (int s : alphabet)
    if (s < 0 || s >= m.slot_count()) throw std::invalid_argument("alphabet slot out of range");
  learner.validate();
}

const char* status_name(InvGenStatus s) {
  switch (s) {
    case InvGenStatus::Converged: return "converged";
    case InvGenStatus::RoundLimit: return "round_limit";
    case InvGenStatus::LearnerFailure: return "learner_failure";
  }
  return "?";
}

std::vector<int> default_alphabet(const ProgramModel& m) {
  std::vector<int> out;
  for (int i = 0; i < m.slot_count(); ++i)
    if (m.slot(i).kind == SlotKind::Data) out.push_back(i);
  return out;
}

ProgramState project(const ProgramModel& m, const ProgramState& s, const std::vector<int>& alphabet) {
  std::vector<Value> slots(s.size());
  for (int i = 0; i < m.slot_count(); ++i) slots[i] = m.slot(i).domain.min();
  for (int i : alphabet) slots[i] = s[i];
  return ProgramState(std::move(slots));
}

std::vector<ProgramState> speculate_negatives(const ProgramModel& m, const StateSet& excluded,
                                              int i, Rng& rng,
                                              const std::vector<int>& alphabet) {
  if (i < 0) throw std::invalid_argument("negative speculation count");
  std::vector<ProgramState> out;
  StateSet drawn;
  const long cap = 100L * i;
  for (long attempt = 0; attempt < cap && static_cast<int>(out.size()) < i; ++attempt) {
    ProgramState s = random_domain_state(m, rng);
    if (excluded.count(project(m, s, alphabet))) continue;
    if (!drawn.insert(s).second) continue;
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<ProgramState> speculate_negatives(const ProgramModel& m, const StateSet& reached, int i,
                                              Rng& rng) {
  std::vector<int> all(m.slot_count());
  for (int k = 0; k < m.slot_count(); ++k) all[k] = k;
  return speculate_negatives(m, reached, i, rng, all);
}

ExampleSets learning_examples(const ProgramModel& m, const InvGenState& st,
                              const std::vector<int>& alphabet) {
  std::set<ProgramState> pos, neg;
  for (const ProgramState& s : st.reached) pos.insert(project(m, s, alphabet));
  for (const ProgramState& s : st.speculated) {
    ProgramState p = project(m, s, alphabet);
    if (!pos.count(p)) neg.insert(std::move(p));
  }
  return ExampleSets{{pos.begin(), pos.end()}, {neg.begin(), neg.end()}};
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

}  // namespace

InvGenResult run_invgen(const ProgramModel& m, const InvGenConfig& cfg,
                        const RoundObserver& observer) {
  cfg.validate(m);
  const auto start = Clock::now();
  const std::vector<int> alphabet = cfg.alphabet.empty() ? default_alphabet(m) : cfg.alphabet;
  if (alphabet.empty()) throw std::invalid_argument("model has no variables to learn over");

  InvGenResult result;
  result.budget = cfg.effective_budget();
  InvGenState& st = result.state;
  StateSet reached_proj;  // projections of st.reached
  Rng rng(cfg.seed);

  while (st.survival < result.budget) {
    if (cfg.max_rounds > 0 && st.rounds >= cfg.max_rounds) {
      result.status = InvGenStatus::RoundLimit;
      break;
    }
    RoundEvent ev;
    ev.round = ++st.rounds;
    ev.reached_before = st.reached.size();

    const Trace trace = sample_trace(m, cfg.trace_len, cfg.scheduler, rng());
    ev.trace_states = trace.states.size();
    ev.trace = &trace;

    StateSet missed;
    for (const ProgramState& s : trace.states)
      if (!st.phi.eval(s)) missed.insert(s);
    ev.missed_pos = missed.size();

    std::size_t bad = 0;
    for (const ProgramState& s : trace.states) {
      if (st.speculated.erase(s)) ++bad;
      if (st.reached.insert(s).second) reached_proj.insert(project(m, s, alphabet));
    }
    ev.bad_negs = bad;

    // Speculated states that now look like a reached state to the learner
    // can no longer serve as negatives.
    for (auto it = st.speculated.begin(); it != st.speculated.end();) {
      if (reached_proj.count(project(m, *it, alphabet)))
        it = st.speculated.erase(it);
      else
        ++it;
    }

    const std::vector<ProgramState> fresh =
        speculate_negatives(m, reached_proj, cfg.negatives_per_round, rng, alphabet);
    std::size_t admitted = 0;
    for (const ProgramState& s : fresh) {
      if (st.speculated.insert(s).second) ++ev.new_negs;
      if (st.phi.eval(s)) ++admitted;
    }

    const bool neg_trigger = cfg.mode == RevisionMode::Literal ? ev.new_negs > 0 : admitted > 0;
    ev.reached_after = st.reached.size();

    if (ev.missed_pos > 0 || ev.bad_negs > 0 || neg_trigger) {
      std::string trigger;
      auto add = [&](bool on, const char* name) {
        if (!on) return;
        if (!trigger.empty()) trigger += '+';
        trigger += name;
      };
      add(ev.missed_pos > 0, "missedPos");
      add(ev.bad_negs > 0, "badNegs");
      add(neg_trigger, "newNegs");

      const auto t0 = Clock::now();
      const ExampleSets ex = learning_examples(m, st, alphabet);
      const std::vector<Atom> atoms = instantiate_atoms(m, ex.positives, cfg.templates, alphabet);
      LearnResult learned = decision_tree_learn(ex, cfg.learner, atoms, rng);
      result.learner_stats.merge(learned.stats);
      if (!learned.ok) {
        result.status = InvGenStatus::LearnerFailure;
        result.error = learned.error;
        if (observer) observer(ev, st);
        break;
      }
      st.phi = learned.formula;
      st.survival = 0;
      st.revisions.push_back(Revision{ev.round, trigger, st.phi, seconds_since(t0),
                                      st.reached.size(), st.speculated.size(),
                                      learned.stats});
      ev.revised = true;
    } else {
      ++st.survival;
    }
    if (observer) observer(ev, st);
  }
  result.learner_stats.wall_seconds = 0.0;
  for (const Revision& r : st.revisions) result.learner_stats.wall_seconds += r.seconds;
  result.wall_seconds = seconds_since(start);
  return result;
}

}  // namespace invmine
