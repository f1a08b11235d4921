#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "invmine/cli.hpp"
#include "invmine/report.hpp"
#include "support.hpp"

using namespace invmine;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  Run r;
  r.code = run_cli(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "invmine-test-cli";
  fs::create_directories(dir);
  return dir / name;
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream(p) << text;
}

bool contains(const std::string& hay, const std::string& needle) {
  return hay.find(needle) != std::string::npos;
}

}  // namespace

TEST_CASE("usage errors exit 1") {
  CHECK(cli({}).code == kExitUsage);
  CHECK(cli({"frobnicate"}).code == kExitUsage);
  CHECK(cli({"mine", support::corpus_path("toggle"), "--no-such-flag"}).code == kExitUsage);

  const Run missing = cli({"reach", "/nonexistent/model.mpl"});
  CHECK(missing.code == kExitUsage);
  CHECK(contains(missing.err, "cannot read"));

  const fs::path bad = scratch("bad.mpl");
  write_file(bad, "int[0..1] x;\nproc p {\n  y = 1;\n}\n");
  const Run diag = cli({"reach", bad.string()});
  CHECK(diag.code == kExitUsage);
  CHECK(contains(diag.err, "3:"));

  const Run inv = cli({"verify", support::corpus_path("peterson2"), "count > 0"});
  CHECK(inv.code == kExitUsage);
  CHECK(contains(inv.err, "count"));

  CHECK(cli({"mine", support::corpus_path("toggle"), "--delta", "0"}).code == kExitUsage);
  CHECK(cli({"mine", support::corpus_path("toggle"), "--alphabet", "nope"}).code == kExitUsage);
  CHECK(cli({"verify", support::corpus_path("toggle")}).code == kExitUsage);
}

TEST_CASE("reach") {
  const std::string toggle = support::corpus_path("toggle");
  CHECK(cli({"reach", toggle}).out == "4\n");
  CHECK(cli({"reach", toggle, "--fixpoint"}).out == "4\n");
  CHECK(cli({"reach", toggle, "--k", "0"}).out == "1\n");
  CHECK(cli({"reach", toggle, "--k", "1"}).out == "3\n");
  CHECK(cli({"reach", support::corpus_path("peterson2")}).out == "58\n");

  const Run boom = cli({"reach", support::corpus_path("peterson2"), "--state-ceiling", "10"});
  CHECK(boom.code == kExitExplosion);
  CHECK(contains(boom.err, "state explosion"));

  const fs::path dump = scratch("toggle-reach.tsv");
  CHECK(cli({"reach", toggle, "--dump", dump.string()}).code == kExitOk);
  std::ifstream in(dump);
  std::string line;
  int lines = 0;
  while (std::getline(in, line))
    if (!line.empty() && line[0] != '#') ++lines;
  CHECK(lines == 4);
}

TEST_CASE("verify") {
  const std::string peterson = support::corpus_path("peterson2");
  auto m = support::corpus("peterson2");

  SUBCASE("unsound invariant has a witness with ncrit = 1") {
    const Run r = cli({"verify", peterson, "ncrit == 0"});
    CHECK(r.code == kExitOk);
    CHECK(r.out.rfind("UNSOUND\n", 0) == 0);
    CHECK(contains(r.out, "counterexample:"));
    CHECK(contains(r.out, "ncrit=1"));
  }

  SUBCASE("true admits every unreachable state") {
    std::uint64_t domain = 0;
    for_each_domain_state(*m, [&](const ProgramState&) { ++domain; return true; });
    const Run r = cli({"verify", peterson, "true"});
    CHECK(r.code == kExitOk);
    CHECK(r.out.rfind("SOUND\n", 0) == 0);
    CHECK(contains(r.out, "reachable states: 58\n"));
    CHECK(contains(r.out, "tightness: " + std::to_string(domain - 58) +
                              " unreachable states satisfy the invariant (exhaustive over " +
                              std::to_string(domain) + " states)"));
  }

  SUBCASE("tightness agrees with a direct count") {
    const StateSet reach = reach_fixpoint(*m);
    const ExprPtr e = parse_condition(*m, "ncrit <= 1");
    std::uint64_t excess = 0;
    for_each_domain_state(*m, [&](const ProgramState& s) {
      if (evaluate(*m, *e, s, 0) != 0 && !reach.count(s)) ++excess;
      return true;
    });
    const Verdict v = check_invariant(*m, [&](const ProgramState& s) { return evaluate(*m, *e, s, 0) != 0; });
    CHECK(v.sound);
    CHECK(v.tightness_exhaustive);
    CHECK(v.excess == excess);
    CHECK(v.tightness_checked == v.domain_size);
  }

  SUBCASE("sampled tightness when the domain is too large") {
    const Verdict v = check_invariant(*m, [](const ProgramState&) { return true; },
                                      kDefaultStateCeiling, 100, 5000, 1);
    CHECK_FALSE(v.tightness_exhaustive);
    CHECK(v.tightness_checked == 5000);
    CHECK(v.excess <= 5000);
    CHECK(v.excess > 4900);  // 58 of 165888 states are reachable
  }

  SUBCASE("counterexamples are capped") {
    const Verdict v = check_invariant(*m, [](const ProgramState&) { return false; },
                                      kDefaultStateCeiling, 20'000'000, 100, 0, 3);
    CHECK_FALSE(v.sound);
    CHECK(v.counterexamples.size() == 3);
    CHECK(v.excess == 0);
  }

  SUBCASE("explosion") {
    CHECK(cli({"verify", peterson, "true", "--state-ceiling", "10"}).code == kExitExplosion);
  }
}

TEST_CASE("mine writes a report that verify can read") {
  const std::string peterson = support::corpus_path("peterson2");
  const fs::path report = scratch("peterson-report.json");
  const Run r = cli({"mine", peterson, "--seed", "3", "--certify", "--budget", "5", "--report",
                     report.string()});
  REQUIRE(r.code == kExitOk);
  CHECK(contains(r.out, "invariant: "));

  std::ifstream in(report);
  const nlohmann::json j = nlohmann::json::parse(in);
  CHECK(j.at("config").at("effective_budget") == 72);
  CHECK(j.at("config").at("trace_budget") == 5);
  CHECK(j.at("status") == "converged");
  CHECK(j.at("survival_rounds") == 72);
  CHECK(j.at("cp_lower_bound").get<double>() >= 0.95);
  CHECK(j.at("reachable_states") == 58);
  const double ratio = j.at("visited_ratio").get<double>();
  CHECK(ratio == doctest::Approx(j.at("visited_states").get<double>() / 58.0));

  const Report parsed = j.get<Report>();
  CHECK(nlohmann::json(parsed) == j);
  CHECK(parsed.revisions.size() >= 1);
  CHECK(parsed.revisions.back().formula == parsed.final_invariant);

  const Run v = cli({"verify", peterson, "--from-report", report.string()});
  CHECK(v.code == kExitOk);
  CHECK(v.out.rfind("SOUND\n", 0) == 0);

  const Run again = cli({"mine", peterson, "--seed", "3", "--certify", "--budget", "5"});
  CHECK(contains(again.out, "invariant: " + parsed.final_invariant));
}

TEST_CASE("report round trip without oracle fields") {
  Report r;
  r.model = "m.mpl";
  r.seed = 9;
  r.status = "round_limit";
  r.rounds = 3;
  r.revisions = {RevisionEntry{1, "missedPos", "(x <= 1)", 0.5, 4, 2}};
  r.final_invariant = "(x <= 1)";
  r.cp_lower_bound = 0.25;
  const nlohmann::json j = r;
  CHECK(j.at("reachable_states").is_null());
  CHECK(j.at("visited_ratio").is_null());
  CHECK(j.get<Report>() == r);
}

TEST_CASE("mine exit codes") {
  const std::string peterson = support::corpus_path("peterson2");

  const Run literal = cli({"mine", peterson, "--literal-revise", "--max-rounds", "30"});
  CHECK(literal.code == kExitLearner);
  CHECK(contains(literal.out, "round_limit"));

  const fs::path atoms = scratch("eq-varvar.txt");
  write_file(atoms, "# one var-var atom\nEQ_VARVAR turn ncrit\n");
  const Run fail = cli({"mine", peterson, "--atoms", atoms.string(), "--alphabet", "turn,ncrit",
                        "--delta", "1", "--negatives", "20"});
  CHECK(fail.code == kExitLearner);
  CHECK(contains(fail.out, "learner_failure"));

  CHECK(cli({"mine", peterson, "--lazy-revise", "--literal-revise"}).code == kExitUsage);
}

TEST_CASE("sample") {
  const std::string peterson = support::corpus_path("peterson2");
  const Run a = cli({"sample", peterson, "--trace-len", "6", "--seed", "4"});
  const Run b = cli({"sample", peterson, "--trace-len", "6", "--seed", "4"});
  CHECK(a.code == kExitOk);
  CHECK(a.out == b.out);
  int lines = 0;
  for (char c : a.out) lines += c == '\n';
  CHECK(lines >= 7);  // states, plus any header
  CHECK(cli({"sample", peterson, "--weights", "1,0,3"}).code == kExitUsage);
}

TEST_CASE("alphabet lists") {
  auto m = support::corpus("peterson2");
  CHECK(parse_alphabet(*m, "flag") == std::vector<int>{2, 3});
  CHECK(parse_alphabet(*m, "ncrit,flag[1]") == std::vector<int>{3, 5});  // sorted, deduplicated
  CHECK_THROWS_AS(parse_alphabet(*m, "flag[2]"), std::invalid_argument);
  CHECK_THROWS_AS(parse_alphabet(*m, "bogus"), std::invalid_argument);
}
