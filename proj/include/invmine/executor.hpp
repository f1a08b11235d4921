#pragma once

// Interleaving semantics: one atomic statement of one process per
// transition, probabilistic trace sampling, and exhaustive reachability.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

#include "invmine/lang.hpp"
#include "invmine/state.hpp"

namespace invmine {

using Rng = std::mt19937_64;

struct TransitionLabel {
  int pid = 0;
  int line = 0;  // source line of the executed statement
  friend bool operator==(const TransitionLabel&, const TransitionLabel&) = default;
};

struct Transition {
  ProgramState src;
  ProgramState dst;
  TransitionLabel label;
};

/// Successor of `s` when process `pid` executes its next statement, or
/// nullopt if that process is blocked on a false guard or has terminated.
std::optional<ProgramState> step(const ProgramModel& m, const ProgramState& s, int pid);

/// One transition per enabled process, in ascending process order.
/// Throws RuntimeDomainError when a statement would leave a domain.
std::vector<Transition> enabled_transitions(const ProgramModel& m, const ProgramState& s);

class SchedulerPolicy {
 public:
  enum class Kind { Uniform, Weighted };

  static SchedulerPolicy uniform() { return SchedulerPolicy(); }
  /// One strictly positive weight per process.
  static SchedulerPolicy weighted(std::vector<double> weights);

  Kind kind() const { return kind_; }
  const std::vector<double>& weights() const { return weights_; }

 private:
  Kind kind_ = Kind::Uniform;
  std::vector<double> weights_;
};

/// Draws one enabled transition according to `policy`; nullopt on deadlock.
std::optional<Transition> sample_step(const ProgramModel& m, const ProgramState& s,
                                      const SchedulerPolicy& policy, Rng& rng);

struct Trace {
  std::vector<ProgramState> states;
  std::uint64_t seed = 0;
};

/// At most k steps from the initial state. Stops early at a deadlock.
Trace sample_trace(const ProgramModel& m, int k, const SchedulerPolicy& policy,
                   std::uint64_t seed);

/// One state per line, tab-separated slots.
void write_trace(std::ostream& os, const Trace& trace);

class StateExplosion : public std::runtime_error {
 public:
  explicit StateExplosion(std::size_t count);
  std::size_t count() const { return count_; }

 private:
  std::size_t count_;
};

inline constexpr std::size_t kDefaultStateCeiling = 5'000'000;

struct Exploration {
  StateSet states;
  int depth = 0;          // BFS layers fully expanded
  bool complete = false;  // false when the ceiling stopped the search
};

/// Breadth-first closure from the initial state, layer by layer. Stops at
/// `max_depth` layers (if given), at the fixpoint, or when more than
/// `ceiling` states have been found.
Exploration explore(const ProgramModel& m, std::optional<int> max_depth,
                    std::size_t ceiling = kDefaultStateCeiling);

/// States reachable with at most k transitions. Throws StateExplosion.
StateSet reach_k(const ProgramModel& m, int k, std::size_t ceiling = kDefaultStateCeiling);

/// The full reachable set. Throws StateExplosion.
StateSet reach_fixpoint(const ProgramModel& m, std::size_t ceiling = kDefaultStateCeiling);

/// Uniform draw from the product of all slot domains.
ProgramState random_domain_state(const ProgramModel& m, Rng& rng);

/// Visits every state of the domain product in lexicographic order.
/// The visitor returns false to stop early.
void for_each_domain_state(const ProgramModel& m,
                           const std::function<bool(const ProgramState&)>& visit);

}  // namespace invmine
