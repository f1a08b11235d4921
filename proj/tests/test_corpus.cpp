#include <doctest.h>

#include <filesystem>
#include <sstream>

#include "invmine/cli.hpp"
#include "support.hpp"

using namespace invmine;

namespace {

struct ModelRun {
  const char* name;
  int diameter;
  std::vector<std::string> extra;  // flags beyond --trace-len
};

// Trace length covers each model's diameter. Dining philosophers learns
// over the eating flags only; the full alphabet does not converge in
// reasonable time.
const ModelRun kRuns[] = {
    {"peterson2", 16, {}},
    {"toggle", 2, {}},
    {"producer-consumer", 29, {}},
    {"toy-leader-election-3", 38, {}},
    {"dining-philosophers-3", 37, {"--alphabet", "eating"}},
};

int run(std::vector<std::string> args, std::string& out) {
  std::ostringstream o, e;
  const int code = run_cli(args, o, e);
  out = o.str() + e.str();
  return code;
}

}  // namespace

TEST_CASE("diameters") {
  for (const ModelRun& r : kRuns) {
    CAPTURE(r.name);
    auto m = support::corpus(r.name);
    const std::size_t total = reach_fixpoint(*m).size();
    CHECK(reach_k(*m, r.diameter).size() == total);
    CHECK(reach_k(*m, r.diameter - 1).size() < total);
  }
}

TEST_CASE("mined invariants verify SOUND on every corpus model") {
  const auto dir = std::filesystem::temp_directory_path() / "invmine-test-corpus";
  std::filesystem::create_directories(dir);
  for (const ModelRun& r : kRuns) {
    for (int seed = 1; seed <= 3; ++seed) {
      CAPTURE(r.name);
      CAPTURE(seed);
      const std::string model = support::corpus_path(r.name);
      const std::string report = (dir / (std::string(r.name) + ".json")).string();
      std::vector<std::string> args = {"mine", model, "--seed", std::to_string(seed), "--trace-len",
                                       std::to_string(std::max(r.diameter, 10)), "--report", report};
      args.insert(args.end(), r.extra.begin(), r.extra.end());
      std::string out;
      REQUIRE(run(args, out) == kExitOk);
      CHECK(run({"verify", model, "--from-report", report}, out) == kExitOk);
      CHECK(out.rfind("SOUND\n", 0) == 0);
    }
  }
}
