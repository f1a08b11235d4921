#pragma once

// Command-line front end. The entry point takes its streams so tests can
// drive it in-process.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "invmine/executor.hpp"

namespace invmine {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitLearner = 2,
  kExitExplosion = 3,
};

struct Verdict {
  bool sound = true;
  std::size_t reachable = 0;
  std::vector<ProgramState> counterexamples;  // at most `max_counterexamples`
  bool tightness_exhaustive = true;
  std::uint64_t domain_size = 0;      // 0 when it overflows 64 bits
  std::uint64_t tightness_checked = 0;  // states examined for tightness
  std::uint64_t excess = 0;           // of those: satisfy phi, unreachable
};

using StatePredicate = std::function<bool(const ProgramState&)>;

/// Checks `phi` against the full reachable set (throws StateExplosion) and
/// measures how many unreachable states it admits: exhaustively when the
/// domain has at most `domain_ceiling` states, else over `samples` uniform
/// draws.
Verdict check_invariant(const ProgramModel& m, const StatePredicate& phi,
                        std::size_t state_ceiling = kDefaultStateCeiling,
                        std::uint64_t domain_ceiling = 20'000'000, std::uint64_t samples = 100'000,
                        std::uint64_t seed = 0, std::size_t max_counterexamples = 10);

/// Resolves a comma-separated list of slot or variable names (a bare array
/// name stands for all its elements). Throws std::invalid_argument.
std::vector<int> parse_alphabet(const ProgramModel& m, const std::string& list);

/// Runs one command line (args exclude the program name).
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace invmine
