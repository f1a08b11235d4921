#include "invmine/executor.hpp"

#include <ostream>

namespace invmine {

std::optional<ProgramState> step(const ProgramModel& m, const ProgramState& s, int pid) {
  const ProcTemplate& proc = m.process_template(pid);
  const int pos = proc.position_of(s[m.pc_slot(pid)]);
  if (pos < 0 || pos >= static_cast<int>(proc.code.size())) return std::nullopt;

  const Stmt& stmt = proc.statement(pos);
  const int line = stmt.loc.line;
  ProgramState next = s;
  switch (stmt.kind) {
    case StmtKind::Guard:
      if (evaluate(m, *stmt.expr, s, pid, line) == 0) return std::nullopt;
      break;
    case StmtKind::Assign: {
      const VarDecl& d = m.decls()[stmt.target_var];
      std::int64_t element = 0;
      if (stmt.target_index) {
        element = evaluate(m, *stmt.target_index, s, pid, line);
        if (element < 0 || element >= d.length)
          throw RuntimeDomainError(pid, line, s,
                                   "index " + std::to_string(element) + " out of bounds for '" +
                                       d.name + "'");
      }
      std::int64_t v = evaluate(m, *stmt.expr, s, pid, line);
      if (!d.type.contains(v))
        throw RuntimeDomainError(pid, line, s,
                                 "value " + std::to_string(v) + " outside the domain of '" +
                                     d.name + "'");
      next[m.data_slot(stmt.target_var, static_cast<int>(element))] = static_cast<Value>(v);
      break;
    }
    case StmtKind::Goto:
    case StmtKind::Assert:
    case StmtKind::Label:
      break;
  }
  next[m.pc_slot(pid)] = proc.lines[proc.next[pos]];
  return next;
}

std::vector<Transition> enabled_transitions(const ProgramModel& m, const ProgramState& s) {
  std::vector<Transition> out;
  for (int pid = 0; pid < m.process_count(); ++pid) {
    if (auto dst = step(m, s, pid)) {
      out.push_back(Transition{s, std::move(*dst), TransitionLabel{pid, s[m.pc_slot(pid)]}});
    }
  }
  return out;
}

SchedulerPolicy SchedulerPolicy::weighted(std::vector<double> weights) {
  for (double w : weights)
    if (!(w > 0.0)) throw std::invalid_argument("scheduler weights must be positive");
  SchedulerPolicy p;
  p.kind_ = Kind::Weighted;
  p.weights_ = std::move(weights);
  return p;
}

std::optional<Transition> sample_step(const ProgramModel& m, const ProgramState& s,
                                      const SchedulerPolicy& policy, Rng& rng) {
  std::vector<Transition> enabled = enabled_transitions(m, s);
  if (enabled.empty()) return std::nullopt;
  std::size_t pick = 0;
  if (policy.kind() == SchedulerPolicy::Kind::Uniform) {
    pick = std::uniform_int_distribution<std::size_t>(0, enabled.size() - 1)(rng);
  } else {
    if (static_cast<int>(policy.weights().size()) != m.process_count())
      throw std::invalid_argument("scheduler needs one weight per process");
    std::vector<double> w;
    w.reserve(enabled.size());
    for (const Transition& t : enabled) w.push_back(policy.weights()[t.label.pid]);
    pick = std::discrete_distribution<std::size_t>(w.begin(), w.end())(rng);
  }
  return std::move(enabled[pick]);
}

Trace sample_trace(const ProgramModel& m, int k, const SchedulerPolicy& policy,
                   std::uint64_t seed) {
  if (k < 0) throw std::invalid_argument("trace length must be >= 0");
  Rng rng(seed);
  Trace trace;
  trace.seed = seed;
  trace.states.push_back(m.initial_state());
  for (int i = 0; i < k; ++i) {
    auto t = sample_step(m, trace.states.back(), policy, rng);
    if (!t) break;
    trace.states.push_back(std::move(t->dst));
  }
  return trace;
}

void write_trace(std::ostream& os, const Trace& trace) {
  for (const ProgramState& s : trace.states) os << s.to_tsv() << '\n';
}

StateExplosion::StateExplosion(std::size_t count)
    : std::runtime_error("state explosion: " + std::to_string(count) +
                         " states reached, over the ceiling"),
      count_(count) {}

Exploration explore(const ProgramModel& m, std::optional<int> max_depth, std::size_t ceiling) {
  Exploration out;
  out.states.insert(m.initial_state());
  std::vector<ProgramState> frontier{m.initial_state()};
  while (!frontier.empty()) {
    if (max_depth && out.depth >= *max_depth) {
      out.complete = true;
      return out;
    }
    std::vector<ProgramState> next;
    for (const ProgramState& s : frontier) {
      for (int pid = 0; pid < m.process_count(); ++pid) {
        auto dst = step(m, s, pid);
        if (!dst) continue;
        if (out.states.insert(*dst).second) {
          if (out.states.size() > ceiling) return out;
          next.push_back(std::move(*dst));
        }
      }
    }
    frontier = std::move(next);
    ++out.depth;
  }
  out.complete = true;
  return out;
}

StateSet reach_k(const ProgramModel& m, int k, std::size_t ceiling) {
  Exploration e = explore(m, k, ceiling);
  if (!e.complete) throw StateExplosion(e.states.size());
  return std::move(e.states);
}

StateSet reach_fixpoint(const ProgramModel& m, std::size_t ceiling) {
  Exploration e = explore(m, std::nullopt, ceiling);
  if (!e.complete) throw StateExplosion(e.states.size());
  return std::move(e.states);
}

ProgramState random_domain_state(const ProgramModel& m, Rng& rng) {
  std::vector<Value> slots;
  slots.reserve(m.slot_count());
  for (const SlotInfo& info : m.slots()) {
    std::uniform_int_distribution<std::uint64_t> pick(0, info.domain.size() - 1);
    slots.push_back(info.domain.at(pick(rng)));
  }
  return ProgramState(std::move(slots));
}

void for_each_domain_state(const ProgramModel& m,
                           const std::function<bool(const ProgramState&)>& visit) {
  const int n = m.slot_count();
  std::vector<std::uint64_t> idx(n, 0);
  std::vector<Value> slots(n);
  for (int i = 0; i < n; ++i) slots[i] = m.slot(i).domain.at(0);
  while (true) {
    if (!visit(ProgramState(slots))) return;
    int i = n - 1;
    while (i >= 0) {
      if (++idx[i] < m.slot(i).domain.size()) {
        slots[i] = m.slot(i).domain.at(idx[i]);
        break;
      }
      idx[i] = 0;
      slots[i] = m.slot(i).domain.at(0);
      --i;
    }
    if (i < 0) return;
  }
}

}  // namespace invmine
