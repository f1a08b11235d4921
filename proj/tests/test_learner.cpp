#include <doctest.h>

#include <set>

#include "gen.hpp"
#include "invmine/invgen.hpp"
#include "invmine/learner.hpp"
#include "oracle.hpp"
#include "support.hpp"

using namespace invmine;

namespace {

ProgramState st(std::vector<Value> v) { return ProgramState(std::move(v)); }

bool separates(const Formula& f, const ExampleSets& ex, double delta) {
  Signature sig(ex.size());
  for (std::size_t i = 0; i < ex.size(); ++i)
    if (f.eval(ex.at(i))) sig.set(i);
  return meets_threshold(sig, ex.positives.size(), ratio_from_double(delta));
}

Signature direct(const Formula& f, const ExampleSets& ex) {
  Signature sig(ex.size());
  for (std::size_t i = 0; i < ex.size(); ++i)
    if (f.eval(ex.at(i))) sig.set(i);
  return sig;
}

}  // namespace

TEST_CASE("configuration checks") {
  LearnerConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.delta = 0.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.delta = 1.0;
  CHECK_NOTHROW(cfg.validate());
  cfg.delta = 1.5;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = LearnerConfig{};
  cfg.leaf_bound = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("threshold test") {
  Signature s(5);  // P = bits 0..2
  s.set(0);
  s.set(1);
  s.set(2);
  CHECK(meets_threshold(s, 3, ratio_from_double(0.95)));
  s.set(3);
  CHECK_FALSE(meets_threshold(s, 3, ratio_from_double(0.95)));  // 3/4
  CHECK(meets_threshold(s, 3, ratio_from_double(0.7)));
  CHECK_FALSE(meets_threshold(s, 3, ratio_from_double(1.0)));
  s.set(0, false);
  CHECK_FALSE(meets_threshold(s, 3, ratio_from_double(0.1)));  // recall < 1
}

TEST_CASE("xor-separable data needs length three") {
  auto m = parse("bool a;\nbool b;\nproc {\n  a = 1;\n}\n");
  // slots: pc[0], a, b
  ExampleSets ex{{st({3, 0, 0}), st({3, 1, 1})}, {st({3, 0, 1}), st({3, 1, 0})}};
  const auto atoms = instantiate_atoms(*m, ex.positives, parse_templates(*m, "EQ_CONST\nNEQ_CONST\n"), {1, 2});
  REQUIRE(atoms.size() == 4);
  for (const Atom& a : atoms) CHECK_FALSE(separates(Formula::atom(a), ex, 0.95));

  std::vector<oracle::Table> tables;
  for (const Atom& a : atoms) {
    oracle::Table t = 0;
    for (std::size_t i = 0; i < ex.size(); ++i)
      if (a.holds(ex.at(i))) t |= oracle::Table{1} << i;
    tables.push_back(t);
  }
  const auto by_len = oracle::tables_by_length(tables, 5, 4);
  const int expected = oracle::min_length(by_len, 0b0011);
  CHECK(expected == 3);

  Rng rng(1);
  const LearnResult r = inv_learn(ex, LearnerConfig{}, atoms, rng);
  REQUIRE(r.ok);
  CHECK(r.formula.length() == expected);
  CHECK(separates(r.formula, ex, 0.95));
}

TEST_CASE("enumeration finds every truth table at its minimal length") {
  // Random 3-atom / 6-example instances; every table reachable within
  // length 4 is posed as an exact learning target.
  auto m = parse("int[0..3] x;\nint[0..3] y;\nproc {\n  x = 1;\n}\n");
  std::mt19937_64 rng(17);
  LearnerConfig cfg;
  cfg.delta = 1.0;  // exact separation
  cfg.max_inv_length = 4;
  int targets = 0;
  for (int round = 0; round < 6; ++round) {
    std::set<ProgramState> distinct;
    while (distinct.size() < 6) distinct.insert(random_domain_state(*m, rng));
    const std::vector<ProgramState> examples(distinct.begin(), distinct.end());
    std::vector<ProgramState> pool = examples;
    auto all_atoms = instantiate_atoms(*m, pool, default_templates(), {1, 2});
    std::shuffle(all_atoms.begin(), all_atoms.end(), rng);
    const std::vector<Atom> atoms(all_atoms.begin(), all_atoms.begin() + 3);

    std::vector<oracle::Table> tables;
    for (const Atom& a : atoms) {
      oracle::Table t = 0;
      for (std::size_t i = 0; i < examples.size(); ++i)
        if (a.holds(examples[i])) t |= oracle::Table{1} << i;
      tables.push_back(t);
    }
    const auto by_len = oracle::tables_by_length(tables, 4, 6);
    std::set<oracle::Table> reachable;
    for (const auto& s : by_len) reachable.insert(s.begin(), s.end());

    for (oracle::Table t : reachable) {
      if (t == 0) continue;
      ExampleSets ex;
      for (std::size_t i = 0; i < examples.size(); ++i)
        ((t >> i) & 1 ? ex.positives : ex.negatives).push_back(examples[i]);
      Rng lrng(round);
      const LearnResult r = inv_learn(ex, cfg, atoms, lrng);
      CAPTURE(t);
      REQUIRE(r.ok);
      CHECK(r.formula.length() == oracle::min_length(by_len, t));
      CHECK(separates(r.formula, ex, 1.0));
      ++targets;
    }
  }
  CHECK(targets > 30);
}

TEST_CASE("with no negatives the first atom true on all positives wins") {
  auto m = support::corpus("peterson2");
  ExampleSets ex{{st({7, 7, 0, 0, 0, 0}), st({8, 7, 1, 0, 0, 0})}, {}};
  const auto atoms = instantiate_atoms(*m, ex.positives, default_templates(), {2, 3, 4, 5});
  Rng rng(1);
  const LearnResult r = inv_learn(ex, LearnerConfig{}, atoms, rng);
  REQUIRE(r.ok);
  CHECK(r.formula.length() == 1);
  // flag[0] differs between the two states; flag[1] == 0 is the first atom true on both
  CHECK(r.formula.to_string(*m) == "(flag[1] == 0)");
  CHECK_THROWS_AS(inv_learn(ExampleSets{{}, {st({7, 7, 0, 0, 0, 0})}}, LearnerConfig{}, atoms, rng),
                  std::invalid_argument);
}

TEST_CASE("peterson first round learns flag[1] == 0") {
  auto m = support::corpus("peterson2");
  InvGenState state;
  for (auto v : std::vector<std::vector<Value>>{{7, 7, 0, 0, 0, 0}, {8, 7, 1, 0, 0, 0},
                                                {9, 7, 1, 0, 0, 0}, {11, 7, 1, 0, 0, 1},
                                                {13, 7, 1, 0, 0, 0}, {7, 7, 0, 0, 0, 0}})
    state.reached.insert(st(v));
  state.speculated.insert(st({7, 8, 0, 1, 0, 0}));
  state.speculated.insert(st({7, 9, 0, 1, 1, 0}));
  const std::vector<int> alphabet = default_alphabet(*m);
  const ExampleSets ex = learning_examples(*m, state, alphabet);
  const auto atoms = instantiate_atoms(*m, ex.positives, default_templates(), alphabet);
  Rng rng(0);
  const LearnResult r = decision_tree_learn(ex, LearnerConfig{}, atoms, rng);
  REQUIRE(r.ok);
  const Formula target = Formula::atom(Atom{AtomShape::EqConst, 3, -1, 0});
  CHECK(direct(r.formula, ex) == direct(target, ex));
  CHECK(r.formula.length() == 1);
}

TEST_CASE("small nodes delegate to inv_learn") {
  auto m = support::corpus("peterson2");
  std::mt19937_64 g(8);
  for (int round = 0; round < 10; ++round) {
    StateSet pos;
    for (const auto& s : gen::states(*m, 12, g)) pos.insert(project(*m, s, {2, 3, 4, 5}));
    ExampleSets ex;
    for (const auto& s : pos) ex.positives.push_back(s);
    for (const auto& s : gen::states(*m, 12, g)) {
      auto p = project(*m, s, {2, 3, 4, 5});
      if (!pos.count(p)) ex.negatives.push_back(p);
    }
    const auto atoms = instantiate_atoms(*m, ex.positives, default_templates(), {2, 3, 4, 5});
    Rng a(round), b(round);
    const LearnResult direct_result = inv_learn(ex, LearnerConfig{}, atoms, a);
    const LearnResult tree = decision_tree_learn(ex, LearnerConfig{}, atoms, b);
    if (!direct_result.ok) continue;
    REQUIRE(tree.ok);
    CHECK(tree.formula.to_string(*m) == direct_result.formula.to_string(*m));
  }
}

TEST_CASE("a perfect root atom is the whole tree") {
  // b == 1 is the only atom with precision 1, and it also has recall 1.
  auto m = parse("bool b;\nint[0..3] y;\nproc {\n  b = 1;\n}\n");
  ExampleSets ex;
  for (Value y = 0; y <= 3; ++y) {
    ex.positives.push_back(st({4, 1, y}));
    ex.negatives.push_back(st({4, 0, y}));
  }
  const auto atoms = instantiate_atoms(*m, ex.positives, default_templates(), {1, 2});
  LearnerConfig cfg;
  cfg.leaf_bound = 4;  // force a split at the root
  Rng rng(0);
  const LearnResult r = decision_tree_learn(ex, cfg, atoms, rng);
  REQUIRE(r.ok);
  REQUIRE(r.stats.splits.size() == 1);
  const Formula chosen = Formula::atom(r.stats.splits.front().atom);
  CHECK(chosen.to_string(*m) == "(b == 1)");
  CHECK(r.stats.splits.front().precision == Ratio{1, 1});
  CHECK(direct(r.formula, ex) == direct(chosen, ex));
  CHECK(r.formula.length() == 1);
}

TEST_CASE("precision ties go to the first atom") {
  auto m = parse("int[0..9] x;\nproc {\n  x = 1;\n}\n");
  ExampleSets ex;
  for (Value x = 0; x <= 9; ++x) (x <= 4 ? ex.positives : ex.negatives).push_back(st({4, x}));
  const auto atoms = instantiate_atoms(*m, ex.positives, default_templates(), {1});
  LearnerConfig cfg;
  cfg.leaf_bound = 2;
  Rng rng(0);
  const LearnResult r = decision_tree_learn(ex, cfg, atoms, rng);
  REQUIRE(r.ok);
  // x == 0 (from x <= 0) is the first of several precision-1 atoms
  CHECK(to_string(*m, r.stats.splits.front().atom) == "(x == 0)");
  CHECK(separates(r.formula, ex, cfg.delta));
}

TEST_CASE("decision trees keep recall 1 and precision above delta") {
  auto m = parse("int[0..5] x;\nint[0..5] y;\nint[0..3] z;\nproc {\n  x = 1;\n}\n");
  std::mt19937_64 g(99);
  for (int round = 0; round < 8; ++round) {
    std::set<ProgramState> seen;
    while (seen.size() < 120) seen.insert(random_domain_state(*m, g));
    ExampleSets ex;
    for (const auto& s : seen) {
      const bool target = (s[1] <= 2 && s[2] >= 1) || s[3] == 0 || (s[1] == s[2]);
      (target ? ex.positives : ex.negatives).push_back(s);
    }
    const auto atoms = instantiate_atoms(*m, ex.positives, default_templates(), {1, 2, 3});
    LearnerConfig cfg;
    cfg.leaf_bound = 8;
    Rng rng(round);
    const LearnResult r = decision_tree_learn(ex, cfg, atoms, rng);
    REQUIRE(r.ok);
    CHECK(separates(r.formula, ex, cfg.delta));
    CHECK(r.stats.tree_nodes > 1);
  }
}

TEST_CASE("trivial tree leaves") {
  auto m = support::corpus("toggle");
  const std::vector<Atom> atoms{Atom{AtomShape::EqConst, 2, -1, 0}};
  Rng rng(0);
  const LearnResult t = decision_tree_learn(ExampleSets{{st({4, 4, 0})}, {}}, LearnerConfig{}, atoms, rng);
  REQUIRE(t.ok);
  CHECK(t.formula.is_constant(true));
  const LearnResult f = decision_tree_learn(ExampleSets{{}, {st({4, 4, 0})}}, LearnerConfig{}, atoms, rng);
  REQUIRE(f.ok);
  CHECK(f.formula.is_constant(false));
}

TEST_CASE("inseparable examples fail cleanly") {
  auto m = parse("int[0..3] x;\nbyte hidden;\nproc {\n  x = 1;\n}\n");
  // Only x is in the alphabet; the labels depend on `hidden`.
  ExampleSets ex{{st({3, 1, 0}), st({3, 2, 0})}, {st({3, 1, 5}), st({3, 2, 5})}};
  const auto atoms = instantiate_atoms(*m, ex.positives, default_templates(), {1});
  LearnerConfig cfg;
  cfg.max_inv_length = 3;
  Rng rng(0);
  const LearnResult r = decision_tree_learn(ex, cfg, atoms, rng);
  CHECK_FALSE(r.ok);
  CHECK_FALSE(r.error.empty());
}

TEST_CASE("learning is deterministic for a seed") {
  auto m = parse("int[0..5] x;\nint[0..5] y;\nproc {\n  x = 1;\n}\n");
  std::mt19937_64 g(4);
  std::set<ProgramState> seen;
  while (seen.size() < 30) seen.insert(random_domain_state(*m, g));
  ExampleSets ex;
  for (const auto& s : seen) (s[1] + s[2] <= 5 ? ex.positives : ex.negatives).push_back(s);
  const auto atoms = instantiate_atoms(*m, ex.positives, default_templates(), {1, 2});
  LearnerConfig cfg;
  cfg.subsample_size = 5;
  Rng a(7), b(7);
  const LearnResult x = decision_tree_learn(ex, cfg, atoms, a);
  const LearnResult y = decision_tree_learn(ex, cfg, atoms, b);
  REQUIRE(x.ok == y.ok);
  CHECK(x.formula.to_string(*m) == y.formula.to_string(*m));
}

TEST_CASE("signature deduplication") {
  auto m = parse("int[0..4] x;\nproc {\n  x = 1;\n}\n");
  ExampleSets ex{{st({3, 0}), st({3, 2})}, {st({3, 4})}};
  const Formula le2 = Formula::atom(Atom{AtomShape::LeqConst, 1, -1, 2});
  const Formula le3 = Formula::atom(Atom{AtomShape::LeqConst, 1, -1, 3});
  const Formula nn = Formula::negate(Formula::negate(le2));
  CHECK(dedup_by_signature({le2, nn}, ex).size() == 1);
  const auto kept = dedup_by_signature({le2, le3}, ex);  // no example has x = 3
  REQUIRE(kept.size() == 1);
  CHECK(kept[0].identity() == le2.identity());
  const Formula le0 = Formula::atom(Atom{AtomShape::LeqConst, 1, -1, 0});
  const Formula f = Formula::constant(false);
  CHECK(dedup_by_signature({le0, le2, f}, ex).size() == 3);
}
