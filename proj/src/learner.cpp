#include "invmine/learner.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <iterator>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <unordered_set>

namespace invmine {

void LearnerConfig::validate() const {
  if (!(delta > 0.0 && delta <= 1.0)) throw std::invalid_argument("delta must be in (0, 1]");
  if (leaf_bound < 1) throw std::invalid_argument("leaf bound must be positive");
  if (max_inv_length < 1) throw std::invalid_argument("max invariant length must be positive");
  if (subsample_size < 1) throw std::invalid_argument("sub-sample size must be positive");
  if (max_subsample_rounds < 1) throw std::invalid_argument("sub-sample rounds must be positive");
  if (max_tree_depth < 1) throw std::invalid_argument("max tree depth must be positive");
  if (max_candidates < 1) throw std::invalid_argument("candidate limit must be positive");
}

void LearnStats::merge(const LearnStats& other) {
  atoms = std::max(atoms, other.atoms);
  enumerated += other.enumerated;
  deduplicated += other.deduplicated;
  subsample_rounds += other.subsample_rounds;
  tree_nodes += other.tree_nodes;
  splits.insert(splits.end(), other.splits.begin(), other.splits.end());
}

bool meets_threshold(const Signature& sig, std::size_t positives, const Ratio& delta) {
  if (sig.count(0, positives) != positives) return false;
  const Ratio p = precision(sig, positives);
  if (delta.num >= delta.den) return p.den != 0 && p.num == p.den;
  return p > delta;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

Signature direct_signature(const Formula& f, const ExampleSets& ex) {
  Signature sig(ex.size());
  for (std::size_t i = 0; i < ex.size(); ++i)
    if (f.eval(ex.at(i))) sig.set(i);
  return sig;
}

Formula make_not(const Formula& a) {
  if (a.is_constant(true)) return Formula::constant(false);
  if (a.is_constant(false)) return Formula::constant(true);
  return Formula::negate(a);
}

Formula make_and(const Formula& a, const Formula& b) {
  if (a.is_constant(false) || b.is_constant(false)) return Formula::constant(false);
  if (a.is_constant(true)) return b;
  if (b.is_constant(true)) return a;
  return Formula::binary(FormulaOp::And, a, b);
}

Formula make_or(const Formula& a, const Formula& b) {
  if (a.is_constant(true) || b.is_constant(true)) return Formula::constant(true);
  if (a.is_constant(false)) return b;
  if (b.is_constant(false)) return a;
  return Formula::binary(FormulaOp::Or, a, b);
}

// Sub-sample of one example set, as sorted indices.
class Subsample {
 public:
  Subsample(std::size_t total, std::size_t draw, Rng& rng) : total_(total) { grow(draw, rng); }

  bool complete() const { return chosen_.size() == total_; }
  const std::vector<std::size_t>& indices() const { return chosen_; }

  // Adds up to `draw` indices not chosen yet, uniformly without replacement.
  void grow(std::size_t draw, Rng& rng) {
    std::vector<std::size_t> rest;
    rest.reserve(total_ - chosen_.size());
    std::size_t j = 0;
    for (std::size_t i = 0; i < total_; ++i) {
      if (j < chosen_.size() && chosen_[j] == i) {
        ++j;
        continue;
      }
      rest.push_back(i);
    }
    std::vector<std::size_t> picked;
    std::sample(rest.begin(), rest.end(), std::back_inserter(picked),
                std::min(draw, rest.size()), rng);
    chosen_.insert(chosen_.end(), picked.begin(), picked.end());
    std::sort(chosen_.begin(), chosen_.end());
  }

 private:
  std::size_t total_;
  std::vector<std::size_t> chosen_;
};

enum class Outcome { Found, FullCheckFailed, Exhausted };

// One enumeration run over a fixed sub-sample. Candidates live in flat
// arrays (node table plus signature arena); Formula objects are only built
// for results.
class Enumerator {
 public:
  Enumerator(const ExampleSets& sub, const ExampleSets& full, const std::vector<Atom>& atoms,
             const LearnerConfig& cfg, const Ratio& delta, LearnStats& stats)
      : sub_(sub), full_(full), atoms_(atoms), cfg_(cfg), delta_(delta), stats_(stats),
        words_((sub.size() + 63) / 64), levels_(cfg.max_inv_length + 1),
        seen_(1024, ArenaHash{this}, ArenaEq{this}) {
    if (sub.size() % 64 != 0) tail_mask_ = (std::uint64_t{1} << (sub.size() % 64)) - 1;
  }

  Outcome run() {
    for (std::size_t k = 0; k < atoms_.size(); ++k) {
      std::uint64_t* out = reserve_slot();
      const Signature sig = atom_signature(atoms_[k], sub_);
      for (std::size_t w = 0; w < words_; ++w) out[w] = word_of(sig, w);
      if (auto o = commit(1, Node{FormulaOp::Atom, static_cast<std::uint32_t>(k), 0})) return *o;
    }
    for (int len = 2; len <= cfg_.max_inv_length; ++len) {
      // Negations of the previous length.
      const std::size_t prev = levels_[len - 1].size();
      for (std::size_t k = 0; k < prev; ++k) {
        const std::uint32_t c = levels_[len - 1][k];
        std::uint64_t* out = reserve_slot();
        const std::uint64_t* x = sig(c);
        for (std::size_t w = 0; w < words_; ++w) out[w] = ~x[w];
        if (auto o = commit(len, Node{FormulaOp::Not, c, 0})) return *o;
      }
      // Binary nodes whose children sum to len - 1.
      for (int i = 1; i <= len - 2; ++i) {
        const int j = len - 1 - i;
        const std::size_t ni = levels_[i].size();
        const std::size_t nj = levels_[j].size();
        for (std::size_t a = 0; a < ni; ++a) {
          for (std::size_t b = 0; b < nj; ++b) {
            const std::uint32_t x = levels_[i][a];
            const std::uint32_t y = levels_[j][b];
            // Commutative operators need one orientation; x <-> x stays in
            // as the shortest tautology.
            if (i < j || (i == j && a <= b)) {
              for (FormulaOp op : {FormulaOp::And, FormulaOp::Or, FormulaOp::Iff})
                if (auto o = combine(len, op, x, y)) return *o;
            }
            if (i != j || a != b)
              if (auto o = combine(len, FormulaOp::Implies, x, y)) return *o;
          }
        }
      }
    }
    return Outcome::Exhausted;
  }

  Formula found() const { return build(found_); }
  bool has_best() const { return has_best_; }
  Formula best() const { return build(best_); }

 private:
  struct Node {
    FormulaOp op;
    std::uint32_t a;  // atom index, or child candidate
    std::uint32_t b;  // second child
  };

  struct ArenaHash {
    const Enumerator* e;
    std::size_t operator()(std::uint32_t k) const {
      const std::uint64_t* s = e->sig(k);
      std::size_t h = 0x9e3779b97f4a7c15ull;
      for (std::size_t w = 0; w < e->words_; ++w) h = (h ^ s[w]) * 0x100000001b3ull + (h >> 31);
      return h;
    }
  };
  struct ArenaEq {
    const Enumerator* e;
    bool operator()(std::uint32_t x, std::uint32_t y) const {
      return std::equal(e->sig(x), e->sig(x) + e->words_, e->sig(y));
    }
  };

  static std::uint64_t word_of(const Signature& s, std::size_t w) {
    std::uint64_t out = 0;
    for (std::size_t bit = 0; bit < 64 && w * 64 + bit < s.size(); ++bit)
      if (s.test(w * 64 + bit)) out |= std::uint64_t{1} << bit;
    return out;
  }

  const std::uint64_t* sig(std::uint32_t k) const { return arena_.data() + k * words_; }

  // Space for the signature of the next candidate, at the end of the arena.
  std::uint64_t* reserve_slot() {
    arena_.resize((nodes_.size() + 1) * words_);
    return arena_.data() + nodes_.size() * words_;
  }

  std::optional<Outcome> combine(int len, FormulaOp op, std::uint32_t x, std::uint32_t y) {
    std::uint64_t* out = reserve_slot();
    const std::uint64_t* l = sig(x);
    const std::uint64_t* r = sig(y);
    switch (op) {
      case FormulaOp::And:
        for (std::size_t w = 0; w < words_; ++w) out[w] = l[w] & r[w];
        break;
      case FormulaOp::Or:
        for (std::size_t w = 0; w < words_; ++w) out[w] = l[w] | r[w];
        break;
      case FormulaOp::Implies:
        for (std::size_t w = 0; w < words_; ++w) out[w] = ~l[w] | r[w];
        break;
      default:
        for (std::size_t w = 0; w < words_; ++w) out[w] = ~(l[w] ^ r[w]);
        break;
    }
    return commit(len, Node{op, x, y});
  }

  std::size_t count(const std::uint64_t* s, std::size_t begin, std::size_t end) const {
    std::size_t total = 0;
    for (std::size_t i = begin; i < end; ++i) total += (s[i >> 6] >> (i & 63)) & 1u;
    return total;
  }

  // Registers the candidate whose signature was just written by
  // reserve_slot(), unless an equal signature was seen before.
  std::optional<Outcome> commit(int len, Node node) {
    ++stats_.enumerated;
    const auto k = static_cast<std::uint32_t>(nodes_.size());
    if (words_ > 0 && tail_mask_ != 0) arena_[k * words_ + words_ - 1] &= tail_mask_;
    nodes_.push_back(node);
    if (!seen_.insert(k).second) {
      ++stats_.deduplicated;
      nodes_.pop_back();
      return std::nullopt;
    }
    if (nodes_.size() > cfg_.max_candidates) return Outcome::Exhausted;

    const std::uint64_t* s = sig(k);
    const std::size_t np = sub_.positives.size();
    std::size_t tp = 0;
    for (std::size_t w = 0; w < np / 64; ++w) tp += std::popcount(s[w]);
    tp += count(s, (np / 64) * 64, np);
    if (tp == np) {
      std::size_t all = 0;
      for (std::size_t w = 0; w < words_; ++w) all += std::popcount(s[w]);
      const Ratio p = all == 0 ? Ratio{0, 1} : Ratio{tp, all};
      if (!has_best_ || p > best_precision_) {
        has_best_ = true;
        best_ = k;
        best_precision_ = p;
      }
      const bool pass = delta_.num >= delta_.den ? all == tp : p > delta_;
      if (pass) {
        const Formula f = build(k);
        if (meets_threshold(direct_signature(f, full_), full_.positives.size(), delta_)) {
          found_ = k;
          return Outcome::Found;
        }
        return Outcome::FullCheckFailed;
      }
    }
    levels_[len].push_back(k);
    return std::nullopt;
  }

  Formula build(std::uint32_t k) const {
    const Node& n = nodes_[k];
    switch (n.op) {
      case FormulaOp::Atom: return Formula::atom(atoms_[n.a]);
      case FormulaOp::Not: return Formula::negate(build(n.a));
      default: return Formula::binary(n.op, build(n.a), build(n.b));
    }
  }

  const ExampleSets& sub_;
  const ExampleSets& full_;
  const std::vector<Atom>& atoms_;
  const LearnerConfig& cfg_;
  Ratio delta_;
  LearnStats& stats_;
  std::size_t words_;
  std::uint64_t tail_mask_ = 0;
  std::vector<Node> nodes_;
  std::vector<std::uint64_t> arena_;
  std::vector<std::vector<std::uint32_t>> levels_;
  std::unordered_set<std::uint32_t, ArenaHash, ArenaEq> seen_;
  std::uint32_t found_ = 0;
  bool has_best_ = false;
  std::uint32_t best_ = 0;
  Ratio best_precision_;
};

ExampleSets select(const ExampleSets& ex, const Subsample& p, const Subsample& n) {
  ExampleSets out;
  out.positives.reserve(p.indices().size());
  out.negatives.reserve(n.indices().size());
  for (std::size_t i : p.indices()) out.positives.push_back(ex.positives[i]);
  for (std::size_t i : n.indices()) out.negatives.push_back(ex.negatives[i]);
  return out;
}

void check_contract(const Formula& f, const ExampleSets& ex, const Ratio& delta) {
  if (!meets_threshold(direct_signature(f, ex), ex.positives.size(), delta))
    throw std::logic_error("learned formula violates the recall/precision contract");
}

}  // namespace

LearnResult inv_learn(const ExampleSets& ex, const LearnerConfig& cfg,
                      const std::vector<Atom>& atoms, Rng& rng) {
  if (ex.positives.empty()) throw std::invalid_argument("inv_learn needs at least one positive");
  cfg.validate();
  const auto start = Clock::now();
  const Ratio delta = ratio_from_double(cfg.delta);

  LearnResult result;
  result.stats.atoms = atoms.size();
  const auto draw = static_cast<std::size_t>(cfg.subsample_size);
  Subsample sp(ex.positives.size(), draw, rng);
  Subsample sn(ex.negatives.size(), draw, rng);

  for (int round = 0; round < cfg.max_subsample_rounds; ++round) {
    ++result.stats.subsample_rounds;
    const ExampleSets sub = select(ex, sp, sn);
    Enumerator e(sub, ex, atoms, cfg, delta, result.stats);
    const Outcome o = e.run();
    if (e.has_best()) result.formula = e.best();
    if (o == Outcome::Found) {
      check_contract(e.found(), ex, delta);
      result.ok = true;
      result.formula = e.found();
      result.stats.wall_seconds = seconds_since(start);
      return result;
    }
    if (o == Outcome::Exhausted) {
      result.error = "no formula of length <= " + std::to_string(cfg.max_inv_length) +
                     " separates the examples";
      result.stats.wall_seconds = seconds_since(start);
      return result;
    }
    if (sp.complete() && sn.complete()) break;
    sp.grow(draw, rng);
    sn.grow(draw, rng);
  }
  result.error = "sub-sample rounds exhausted";
  result.stats.wall_seconds = seconds_since(start);
  return result;
}

LearnResult decision_tree_learn(const ExampleSets& ex, const LearnerConfig& cfg,
                                const std::vector<Atom>& atoms, Rng& rng, int depth) {
  cfg.validate();
  const auto start = Clock::now();
  const Ratio delta = ratio_from_double(cfg.delta);
  LearnResult result;
  result.stats.atoms = atoms.size();
  result.stats.tree_nodes = 1;
  auto finish = [&](LearnResult& r) -> LearnResult& {
    r.stats.wall_seconds = seconds_since(start);
    return r;
  };

  if (ex.positives.empty()) {
    result.ok = true;
    return finish(result);
  }
  if (ex.negatives.empty()) {
    result.ok = true;
    result.formula = Formula::constant(true);
    return finish(result);
  }
  if (depth > cfg.max_tree_depth) {
    result.error = "decision tree deeper than " + std::to_string(cfg.max_tree_depth);
    return finish(result);
  }

  if (ex.size() <= static_cast<std::size_t>(cfg.leaf_bound)) {
    LearnResult leaf = inv_learn(ex, cfg, atoms, rng);
    result.stats.merge(leaf.stats);
    if (leaf.ok) {
      result.ok = true;
      result.formula = leaf.formula;
      return finish(result);
    }
    // Fall through: force a split.
  }

  // Highest-precision atom among those that split the node; the first one
  // wins ties.
  const std::size_t np = ex.positives.size();
  int chosen = -1;
  Ratio best;
  Signature chosen_sig;
  for (std::size_t k = 0; k < atoms.size(); ++k) {
    Signature sig = atom_signature(atoms[k], ex);
    const std::size_t all = sig.count();
    if (all == 0 || all == ex.size()) continue;
    const Ratio p = precision(sig, np);
    if (chosen < 0 || p > best) {
      chosen = static_cast<int>(k);
      best = p;
      chosen_sig = std::move(sig);
    }
  }
  if (chosen < 0) {
    result.error = "no atom separates the remaining examples";
    return finish(result);
  }
  const Atom& a = atoms[chosen];
  result.stats.splits.push_back(SplitRecord{depth, a, best, np, ex.negatives.size()});

  // Negatives follow the same guard as positives, so each branch is judged
  // only against the negatives it can still admit.
  ExampleSets in, out;
  for (std::size_t i = 0; i < ex.size(); ++i) {
    const bool pos = i < np;
    ExampleSets& side = chosen_sig.test(i) ? in : out;
    (pos ? side.positives : side.negatives).push_back(ex.at(i));
  }

  LearnResult left = decision_tree_learn(in, cfg, atoms, rng, depth + 1);
  result.stats.merge(left.stats);
  if (!left.ok) {
    result.error = left.error;
    return finish(result);
  }
  LearnResult right = decision_tree_learn(out, cfg, atoms, rng, depth + 1);
  result.stats.merge(right.stats);
  if (!right.ok) {
    result.error = right.error;
    return finish(result);
  }

  const Formula guard = Formula::atom(a);
  result.formula = make_or(make_and(guard, left.formula), make_and(make_not(guard), right.formula));
  if (depth == 0) check_contract(result.formula, ex, delta);
  result.ok = true;
  return finish(result);
}

std::vector<Formula> dedup_by_signature(const std::vector<Formula>& candidates,
                                        const ExampleSets& ex) {
  std::unordered_set<Signature, SignatureHash> seen;
  std::vector<Formula> out;
  SignatureCache cache;
  for (const Formula& f : candidates)
    if (seen.insert(signature(f, ex, cache)).second) out.push_back(f);
  return out;
}

}  // namespace invmine
