#pragma once

// Formula learning from positive/negative state examples: bounded
// enumeration on sub-samples, wrapped in a precision-driven decision tree.

#include <cstddef>
#include <string>
#include <vector>

#include "invmine/executor.hpp"
#include "invmine/formula.hpp"

namespace invmine {

struct LearnerConfig {
  double delta = 0.95;
  int leaf_bound = 200;
  int max_inv_length = 9;
  int subsample_size = 50;
  int max_subsample_rounds = 5;
  int max_tree_depth = 12;
  /// Upper bound on formulas kept per enumeration run; hitting it counts
  /// as length exhaustion.
  std::size_t max_candidates = 100'000;

  /// Throws std::invalid_argument when a field is out of range.
  void validate() const;
};

struct SplitRecord {
  int depth = 0;
  Atom atom;
  Ratio precision;
  std::size_t positives = 0;
  std::size_t negatives = 0;
};

struct LearnStats {
  std::size_t atoms = 0;
  std::size_t enumerated = 0;    // candidates built
  std::size_t deduplicated = 0;  // candidates dropped as observationally equal
  std::size_t subsample_rounds = 0;
  std::size_t tree_nodes = 0;
  std::vector<SplitRecord> splits;
  double wall_seconds = 0.0;

  void merge(const LearnStats& other);
};

struct LearnResult {
  bool ok = false;
  Formula formula = Formula::constant(false);
  LearnStats stats;
  std::string error;  // set when !ok
};

/// Bounded enumeration by formula length over sub-samples of P and N.
/// On failure `formula` is the best candidate seen (recall 1 on the
/// sub-sample, highest precision), or false. Throws std::invalid_argument
/// when P is empty.
LearnResult inv_learn(const ExampleSets& ex, const LearnerConfig& cfg,
                      const std::vector<Atom>& atoms, Rng& rng);

/// Recursive partitioning on the highest-precision atom, delegating small
/// nodes to inv_learn.
LearnResult decision_tree_learn(const ExampleSets& ex, const LearnerConfig& cfg,
                                const std::vector<Atom>& atoms, Rng& rng, int depth = 0);

/// Keeps the first formula of each signature over `ex`.
std::vector<Formula> dedup_by_signature(const std::vector<Formula>& candidates,
                                        const ExampleSets& ex);

/// The acceptance test of a learned formula: recall 1 and precision above
/// delta (precision 1 when delta is 1).
bool meets_threshold(const Signature& sig, std::size_t positives, const Ratio& delta);

}  // namespace invmine
