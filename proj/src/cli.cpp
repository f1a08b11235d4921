#include "invmine/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>

#include "invmine/invgen.hpp"
#include "invmine/lang.hpp"
#include "invmine/report.hpp"

namespace invmine {

Verdict check_invariant(const ProgramModel& m, const StatePredicate& phi,
                        std::size_t state_ceiling, std::uint64_t domain_ceiling,
                        std::uint64_t samples, std::uint64_t seed,
                        std::size_t max_counterexamples) {
  const StateSet reach = reach_fixpoint(m, state_ceiling);
  Verdict v;
  v.reachable = reach.size();
  for (const ProgramState& s : sorted_states(reach)) {
    if (phi(s)) continue;
    v.sound = false;
    if (v.counterexamples.size() < max_counterexamples) v.counterexamples.push_back(s);
  }
  const auto size = state_space_size(m);
  v.domain_size = size.value_or(0);
  if (size && *size <= domain_ceiling) {
    v.tightness_exhaustive = true;
    for_each_domain_state(m, [&](const ProgramState& s) {
      ++v.tightness_checked;
      if (phi(s) && !reach.count(s)) ++v.excess;
      return true;
    });
  } else {
    v.tightness_exhaustive = false;
    Rng rng(seed);
    for (std::uint64_t i = 0; i < samples; ++i) {
      const ProgramState s = random_domain_state(m, rng);
      ++v.tightness_checked;
      if (phi(s) && !reach.count(s)) ++v.excess;
    }
  }
  return v;
}

std::vector<int> parse_alphabet(const ProgramModel& m, const std::string& list) {
  std::vector<int> out;
  std::stringstream in(list);
  std::string name;
  while (std::getline(in, name, ',')) {
    if (name.empty()) continue;
    if (auto slot = m.find_slot(name)) {
      out.push_back(*slot);
    } else if (auto decl = m.find_decl(name)) {
      const VarDecl& d = m.decls()[*decl];
      for (int e = 0; e < d.element_count(); ++e) out.push_back(m.data_slot(*decl, e));
    } else {
      throw std::invalid_argument("unknown variable '" + name + "' in alphabet");
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  if (out.empty()) throw std::invalid_argument("empty alphabet");
  return out;
}

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw UsageError("cannot write '" + path + "'");
  out << text;
}

std::string describe(const ProgramModel& m, const ProgramState& s) {
  std::string out;
  for (int i = 0; i < m.slot_count(); ++i) {
    if (i) out += ' ';
    out += m.slot(i).name + "=" + m.format_value(i, s[i]);
  }
  return out;
}

std::shared_ptr<const ProgramModel> load_model(const std::string& path) {
  const std::string text = read_file(path);
  try {
    return parse(text);
  } catch (const Diagnostic& d) {
    throw UsageError(d.format(path));
  }
}

StatePredicate condition_predicate(const ProgramModel& m, const std::string& text) {
  ExprPtr e;
  try {
    e = parse_condition(m, text);
  } catch (const Diagnostic& d) {
    throw UsageError(d.format("<invariant>"));
  }
  auto model = &m;
  return [model, e](const ProgramState& s) { return evaluate(*model, *e, s, 0) != 0; };
}

// Options shared by the mine subcommand.
struct MineOptions {
  std::string model;
  InvGenConfig cfg;
  std::string alphabet;
  bool with_pc = false;
  bool lazy = false;
  bool literal = false;
  std::string atoms_file;
  std::string report_file;
  std::string traces_dir;
  std::string stats_file;
  std::size_t oracle_ceiling = 1'000'000;
  std::uint64_t tightness_samples = 10'000;
};

int cmd_mine(const MineOptions& o, std::ostream& out, std::ostream& err) {
  auto model = load_model(o.model);
  const ProgramModel& m = *model;
  InvGenConfig cfg = o.cfg;
  if (o.lazy && o.literal) throw UsageError("--lazy-revise and --literal-revise are exclusive");
  if (o.literal) cfg.mode = RevisionMode::Literal;
  if (o.lazy) cfg.mode = RevisionMode::Lazy;
  try {
    cfg.alphabet = o.alphabet.empty() ? default_alphabet(m) : parse_alphabet(m, o.alphabet);
    if (o.with_pc)
      for (int p = 0; p < m.process_count(); ++p) cfg.alphabet.push_back(m.pc_slot(p));
    std::sort(cfg.alphabet.begin(), cfg.alphabet.end());
    cfg.alphabet.erase(std::unique(cfg.alphabet.begin(), cfg.alphabet.end()), cfg.alphabet.end());
    if (!o.atoms_file.empty()) cfg.templates = parse_templates(m, read_file(o.atoms_file));
    cfg.validate(m);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }

  if (!o.traces_dir.empty()) std::filesystem::create_directories(o.traces_dir);
  RoundObserver observer;
  if (!o.traces_dir.empty()) {
    observer = [&](const RoundEvent& ev, const InvGenState&) {
      std::ofstream f(o.traces_dir + "/trace-" + std::to_string(ev.round) + ".tsv");
      write_trace(f, *ev.trace);
    };
  }

  const InvGenResult run = run_invgen(m, cfg, observer);
  Report report = make_report(o.model, m, cfg, run);

  try {
    const StateSet reach = reach_fixpoint(m, o.oracle_ceiling);
    report.reachable_states = reach.size();
    report.visited_ratio = static_cast<double>(run.state.reached.size()) / reach.size();
  } catch (const StateExplosion&) {
  }

  {
    Rng rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);
    std::uint64_t drawn = 0, admitted = 0;
    const std::uint64_t cap = 100 * o.tightness_samples;
    for (std::uint64_t k = 0; k < cap && drawn < o.tightness_samples; ++k) {
      const ProgramState s = random_domain_state(m, rng);
      if (run.state.reached.count(s)) continue;
      ++drawn;
      if (run.invariant().eval(s)) ++admitted;
    }
    report.tightness_estimate = {
        {"samples", drawn},
        {"admitted", admitted},
        {"fraction", drawn ? static_cast<double>(admitted) / drawn : 0.0}};
  }

  const nlohmann::json j = report;
  if (!o.report_file.empty()) {
    if (o.report_file == "-")
      out << j.dump(2) << '\n';
    else
      write_file(o.report_file, j.dump(2) + "\n");
  }
  if (!o.stats_file.empty()) {
    nlohmann::json rounds = nlohmann::json::array();
    for (const Revision& r : run.state.revisions) {
      nlohmann::json entry = stats_to_json(m, r.stats);
      entry["round"] = r.round;
      rounds.push_back(std::move(entry));
    }
    write_file(o.stats_file, rounds.dump(2) + "\n");
  }

  if (o.report_file != "-") {
    out << "status: " << report.status << '\n';
    out << "rounds: " << report.rounds << ", revisions: " << report.revisions.size()
        << ", survival: " << report.survival_rounds << "/" << run.budget << '\n';
    out << "visited states: " << report.visited_states;
    if (report.reachable_states) out << " of " << *report.reachable_states << " reachable";
    out << '\n';
    out << "invariant: " << report.final_invariant << '\n';
  }
  if (run.status == InvGenStatus::LearnerFailure) {
    err << "learner failure: " << run.error << '\n';
    return kExitLearner;
  }
  if (run.status == InvGenStatus::RoundLimit) {
    err << "no convergence within " << cfg.max_rounds << " rounds\n";
    return kExitLearner;
  }
  return kExitOk;
}

int cmd_verify(const std::string& path, std::string invariant, const std::string& from_report,
               std::size_t ceiling, std::uint64_t seed, std::ostream& out) {
  auto model = load_model(path);
  const ProgramModel& m = *model;
  if (!from_report.empty()) {
    try {
      invariant = nlohmann::json::parse(read_file(from_report)).at("final_invariant");
    } catch (const nlohmann::json::exception& e) {
      throw UsageError(from_report + ": " + e.what());
    }
  }
  if (invariant.empty()) throw UsageError("no invariant given");
  const StatePredicate phi = condition_predicate(m, invariant);

  Verdict v;
  try {
    v = check_invariant(m, phi, ceiling, 20'000'000, 100'000, seed);
  } catch (const StateExplosion& e) {
    // Partial check over what fits.
    Exploration part = explore(m, std::nullopt, ceiling);
    std::size_t bad = 0;
    for (const ProgramState& s : sorted_states(part.states)) {
      if (phi(s)) continue;
      if (bad++ < 10) out << "counterexample: " << describe(m, s) << '\n';
    }
    out << (bad ? "UNSOUND" : "UNKNOWN") << " (partial: " << part.states.size()
        << " states explored before the ceiling)\n";
    return kExitExplosion;
  }
  out << (v.sound ? "SOUND" : "UNSOUND") << '\n';
  out << "reachable states: " << v.reachable << '\n';
  for (const ProgramState& s : v.counterexamples) out << "counterexample: " << describe(m, s) << '\n';
  if (v.tightness_exhaustive)
    out << "tightness: " << v.excess << " unreachable states satisfy the invariant (exhaustive over "
        << v.tightness_checked << " states)\n";
  else
    out << "tightness: " << v.excess << " of " << v.tightness_checked
        << " sampled states are unreachable and satisfy the invariant\n";
  return kExitOk;
}

int cmd_reach(const std::string& path, int k, const std::string& dump, std::size_t ceiling,
              std::ostream& out) {
  auto model = load_model(path);
  const StateSet states = k >= 0 ? reach_k(*model, k, ceiling) : reach_fixpoint(*model, ceiling);
  out << states.size() << '\n';
  if (!dump.empty()) {
    std::ostringstream text;
    for (const ProgramState& s : sorted_states(states)) text << s.to_tsv() << '\n';
    write_file(dump, text.str());
  }
  return kExitOk;
}

int cmd_sample(const std::string& path, int k, std::uint64_t seed, const std::string& weights,
               const std::string& dest, std::ostream& out) {
  auto model = load_model(path);
  SchedulerPolicy policy = SchedulerPolicy::uniform();
  if (!weights.empty()) {
    std::vector<double> w;
    std::stringstream in(weights);
    std::string item;
    try {
      while (std::getline(in, item, ',')) w.push_back(std::stod(item));
      if (static_cast<int>(w.size()) != model->process_count())
        throw std::invalid_argument("need one weight per process");
      policy = SchedulerPolicy::weighted(w);
    } catch (const std::exception& e) {
      throw UsageError(std::string("--weights: ") + e.what());
    }
  }
  const Trace t = sample_trace(*model, k, policy, seed);
  if (dest.empty()) {
    write_trace(out, t);
  } else {
    std::ostringstream text;
    write_trace(text, t);
    write_file(dest, text.str());
  }
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Invariant mining for finite-state concurrent models", "invmine"};
  app.require_subcommand(1);

  MineOptions mine;
  auto* mine_cmd = app.add_subcommand("mine", "learn an invariant from sampled traces");
  mine_cmd->add_option("model", mine.model, "model file")->required();
  mine_cmd->add_option("--seed", mine.cfg.seed, "master random seed");
  mine_cmd->add_option("--trace-len", mine.cfg.trace_len, "steps per sampled trace");
  mine_cmd->add_option("--budget", mine.cfg.trace_budget, "consecutive agreeing traces to stop");
  mine_cmd->add_option("--negatives", mine.cfg.negatives_per_round, "speculated states per round");
  mine_cmd->add_option("--delta", mine.cfg.learner.delta, "precision threshold");
  mine_cmd->add_option("--max-inv-len", mine.cfg.learner.max_inv_length, "formula length cap");
  mine_cmd->add_option("--leaf-bound", mine.cfg.learner.leaf_bound,
                       "largest example set learned without splitting");
  mine_cmd->add_option("--subsample", mine.cfg.learner.subsample_size, "sub-sample size");
  mine_cmd->add_option("--max-depth", mine.cfg.learner.max_tree_depth, "decision tree depth cap");
  mine_cmd->add_option("--alpha", mine.cfg.alpha, "significance level");
  mine_cmd->add_option("--epsilon", mine.cfg.epsilon, "tightness target (reported)");
  mine_cmd->add_flag("--certify", mine.cfg.certify, "raise the budget to the trial count for alpha");
  mine_cmd->add_option("--alphabet", mine.alphabet, "variables the invariant may mention");
  mine_cmd->add_flag("--with-pc", mine.with_pc, "let the invariant mention process counters");
  mine_cmd->add_option("--atoms", mine.atoms_file, "atom template file");
  mine_cmd->add_option("--report", mine.report_file, "write the JSON report here ('-' = stdout)");
  mine_cmd->add_option("--dump-traces", mine.traces_dir, "write every sampled trace here");
  mine_cmd->add_option("--learner-stats", mine.stats_file, "per-revision learner statistics");
  mine_cmd->add_flag("--lazy-revise", mine.lazy, "new negatives revise only when admitted (default)");
  mine_cmd->add_flag("--literal-revise", mine.literal, "any new negative forces a revision");
  mine_cmd->add_option("--max-rounds", mine.cfg.max_rounds, "loop iteration cap (0 = none)");
  mine_cmd->add_option("--oracle-ceiling", mine.oracle_ceiling,
                       "state ceiling for the reachable-set count in the report");

  std::string verify_model, verify_inv, verify_report;
  std::size_t ceiling = kDefaultStateCeiling;
  std::uint64_t verify_seed = 0;
  auto* verify_cmd = app.add_subcommand("verify", "check an invariant against all reachable states");
  verify_cmd->add_option("model", verify_model, "model file")->required();
  verify_cmd->add_option("invariant", verify_inv, "condition text");
  verify_cmd->add_option("--from-report", verify_report, "take the invariant from a mine report");
  verify_cmd->add_option("--state-ceiling", ceiling, "abort exploration beyond this many states");
  verify_cmd->add_option("--seed", verify_seed, "seed for sampled tightness");

  std::string reach_model, reach_dump;
  int reach_k_steps = -1;
  bool fixpoint = false;
  auto* reach_cmd = app.add_subcommand("reach", "count reachable states");
  reach_cmd->add_option("model", reach_model, "model file")->required();
  auto* k_opt = reach_cmd->add_option("--k", reach_k_steps, "at most k transitions");
  reach_cmd->add_flag("--fixpoint", fixpoint, "full reachable set (default)")->excludes(k_opt);
  reach_cmd->add_option("--dump", reach_dump, "write the states as TSV");
  reach_cmd->add_option("--state-ceiling", ceiling, "abort exploration beyond this many states");

  std::string sample_model, sample_weights, sample_out;
  int sample_len = 20;
  std::uint64_t sample_seed = 0;
  auto* sample_cmd = app.add_subcommand("sample", "print one random trace");
  sample_cmd->add_option("model", sample_model, "model file")->required();
  sample_cmd->add_option("--trace-len", sample_len, "steps");
  sample_cmd->add_option("--seed", sample_seed, "random seed");
  sample_cmd->add_option("--weights", sample_weights, "per-process scheduler weights");
  sample_cmd->add_option("--out", sample_out, "write the trace here instead of stdout");

  std::vector<std::string> argv_store{"invmine"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (std::string& a : argv_store) argv.push_back(a.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (mine_cmd->parsed()) return cmd_mine(mine, out, err);
    if (verify_cmd->parsed())
      return cmd_verify(verify_model, verify_inv, verify_report, ceiling, verify_seed, out);
    if (reach_cmd->parsed()) {
      if (reach_k_steps < -1 || (k_opt->count() && reach_k_steps < 0))
        throw UsageError("--k must be >= 0");
      return cmd_reach(reach_model, reach_k_steps, reach_dump, ceiling, out);
    }
    if (sample_cmd->parsed()) {
      if (sample_len < 0) throw UsageError("--trace-len must be >= 0");
      return cmd_sample(sample_model, sample_len, sample_seed, sample_weights, sample_out, out);
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const StateExplosion& e) {
    err << "error: " << e.what() << '\n';
    return kExitExplosion;
  } catch (const RuntimeDomainError& e) {
    err << "runtime error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace invmine
