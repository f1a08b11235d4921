#include <doctest.h>

#include <map>
#include <set>
#include <sstream>

#include "invmine/executor.hpp"
#include "support.hpp"

using namespace invmine;

namespace {

ProgramState st(std::vector<Value> v) { return ProgramState(std::move(v)); }

// Depth-first closure built only from enabled_transitions.
StateSet dfs_closure(const ProgramModel& m) {
  StateSet seen{m.initial_state()};
  std::vector<ProgramState> stack{m.initial_state()};
  while (!stack.empty()) {
    ProgramState s = stack.back();
    stack.pop_back();
    for (const Transition& t : enabled_transitions(m, s))
      if (seen.insert(t.dst).second) stack.push_back(t.dst);
  }
  return seen;
}

}  // namespace

TEST_CASE("toggle reaches exactly the four hand-enumerated states") {
  auto m = support::corpus("toggle");
  const StateSet r = reach_fixpoint(*m);
  const StateSet expected{st({4, 4, 0}), st({5, 4, 1}), st({4, 5, 1}), st({5, 5, 0})};
  CHECK(r == expected);
  CHECK(reach_k(*m, 0).size() == 1);
  CHECK(reach_k(*m, 1).size() == 3);
}

TEST_CASE("breadth-first reachability agrees with a depth-first oracle") {
  for (const char* name : support::kCorpus) {
    CAPTURE(name);
    auto m = support::corpus(name);
    CHECK(reach_fixpoint(*m) == dfs_closure(*m));
  }
}

TEST_CASE("k-reach sets grow with k and end at the fixpoint") {
  auto m = support::corpus("peterson2");
  const StateSet full = reach_fixpoint(*m);
  std::size_t prev = 0;
  for (int k = 0; k <= 40; ++k) {
    const StateSet r = reach_k(*m, k);
    CHECK(r.size() >= prev);
    for (const ProgramState& s : r) CHECK(full.count(s));
    prev = r.size();
  }
  CHECK(prev == full.size());
}

TEST_CASE("peterson: mutual exclusion holds and the worked traces are reachable") {
  auto m = support::corpus("peterson2");
  const StateSet r = reach_fixpoint(*m);
  for (const ProgramState& s : r) CHECK(s[5] <= 1);
  const std::vector<ProgramState> first{st({7, 7, 0, 0, 0, 0}), st({8, 7, 1, 0, 0, 0}),
                                        st({9, 7, 1, 0, 0, 0}), st({11, 7, 1, 0, 0, 1}),
                                        st({13, 7, 1, 0, 0, 0})};
  const std::vector<ProgramState> second{st({7, 8, 0, 1, 0, 0}), st({7, 9, 0, 1, 1, 0}),
                                         st({7, 11, 0, 1, 1, 1}), st({7, 13, 0, 1, 1, 0}),
                                         st({7, 7, 0, 0, 1, 0})};
  for (const auto& s : first) CHECK(r.count(s));
  for (const auto& s : second) CHECK(r.count(s));
}

TEST_CASE("enabled transitions and blocking guards") {
  auto m = support::corpus("peterson2");
  const auto init = enabled_transitions(*m, m->initial_state());
  REQUIRE(init.size() == 2);
  CHECK(init[0].label == TransitionLabel{0, 7});
  CHECK(init[1].label == TransitionLabel{1, 7});
  CHECK(init[0].dst == st({8, 7, 1, 0, 0, 0}));

  // process 0 waits: the other flag is up and turn is its own
  const ProgramState waiting = st({9, 9, 1, 1, 0, 0});
  CHECK_FALSE(step(*m, waiting, 0).has_value());
  CHECK(step(*m, waiting, 1).has_value());
  // goto moves back to the first statement
  CHECK(step(*m, st({14, 7, 0, 0, 0, 0}), 0) == st({7, 7, 0, 0, 0, 0}));
}

TEST_CASE("terminated processes have no transitions") {
  auto m = support::corpus("toggle");
  CHECK(enabled_transitions(*m, st({5, 5, 0})).empty());
  CHECK(enabled_transitions(*m, st({5, 4, 1})).size() == 1);
}

TEST_CASE("leaving a domain is a runtime error") {
  auto m = parse("byte x = 255;\nproc {\n  x = x + 1;\n}\n");
  CHECK_THROWS_AS(enabled_transitions(*m, m->initial_state()), RuntimeDomainError);
  auto a = parse("bool b[2];\nbyte i = 2;\nproc {\n  b[i] = 1;\n}\n");
  try {
    step(*a, a->initial_state(), 0);
    FAIL("expected a runtime error");
  } catch (const RuntimeDomainError& e) {
    CHECK(e.line() == 4);
    CHECK(e.pid() == 0);
  }
}

TEST_CASE("traces are seed-deterministic and follow enabled transitions") {
  for (const char* name : support::kCorpus) {
    CAPTURE(name);
    auto m = support::corpus(name);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const Trace a = sample_trace(*m, 30, SchedulerPolicy::uniform(), seed);
      const Trace b = sample_trace(*m, 30, SchedulerPolicy::uniform(), seed);
      CHECK(a.states == b.states);
      CHECK(a.states.front() == m->initial_state());
      for (std::size_t i = 0; i + 1 < a.states.size(); ++i) {
        bool found = false;
        for (const Transition& t : enabled_transitions(*m, a.states[i]))
          found = found || t.dst == a.states[i + 1];
        CHECK(found);
      }
    }
  }
}

TEST_CASE("traces stop at deadlock") {
  auto m = support::corpus("toggle");
  const Trace t = sample_trace(*m, 10, SchedulerPolicy::uniform(), 3);
  CHECK(t.states.size() == 3);
  CHECK(t.states.back() == st({5, 5, 0}));
  CHECK(sample_trace(*m, 0, SchedulerPolicy::uniform(), 3).states.size() == 1);
  CHECK_THROWS_AS(sample_trace(*m, -1, SchedulerPolicy::uniform(), 3), std::invalid_argument);
}

TEST_CASE("scheduler frequencies") {
  auto m = support::corpus("toggle");
  Rng rng(42);
  int first = 0;
  const int n = 10000;
  for (int i = 0; i < n; ++i)
    first += sample_step(*m, m->initial_state(), SchedulerPolicy::uniform(), rng)->label.pid == 0;
  CHECK(first > n * 45 / 100);
  CHECK(first < n * 55 / 100);

  first = 0;
  const auto weighted = SchedulerPolicy::weighted({3.0, 1.0});
  for (int i = 0; i < n; ++i) first += sample_step(*m, m->initial_state(), weighted, rng)->label.pid == 0;
  CHECK(first > n * 70 / 100);
  CHECK(first < n * 80 / 100);

  CHECK_THROWS_AS(SchedulerPolicy::weighted({1.0, 0.0}), std::invalid_argument);
  const auto wrong = SchedulerPolicy::weighted({1.0});
  CHECK_THROWS_AS(sample_step(*m, m->initial_state(), wrong, rng), std::invalid_argument);
}

TEST_CASE("trace dump format") {
  auto m = support::corpus("toggle");
  std::ostringstream out;
  write_trace(out, Trace{{st({4, 4, 0}), st({5, 4, 1})}, 0});
  CHECK(out.str() == "4\t4\t0\n5\t4\t1\n");
}

TEST_CASE("state ceiling") {
  auto m = support::corpus("peterson2");
  CHECK_THROWS_AS(reach_fixpoint(*m, 10), StateExplosion);
  const Exploration e = explore(*m, std::nullopt, 10);
  CHECK_FALSE(e.complete);
  CHECK(e.states.size() == 11);
}

TEST_CASE("domain enumeration and sampling") {
  auto m = support::corpus("peterson2");
  std::uint64_t count = 0;
  for_each_domain_state(*m, [&](const ProgramState& s) {
    ++count;
    return m->is_valid(s);
  });
  CHECK(count == *state_space_size(*m));

  std::uint64_t stopped = 0;
  for_each_domain_state(*m, [&](const ProgramState&) { return ++stopped < 5; });
  CHECK(stopped == 5);

  Rng rng(1);
  std::set<Value> pcs;
  for (int i = 0; i < 2000; ++i) {
    const ProgramState s = random_domain_state(*m, rng);
    CHECK(m->is_valid(s));
    pcs.insert(s[0]);
  }
  CHECK(pcs.size() == 9);
}
