#include <CLI11.hpp>
#include <iostream>

#include "polyheap/cli.hpp"

using namespace polyheap;

int main(int argc, char** argv) {
  CLI::App app{"polyheap: compositional symbolic execution over pluggable memory models"};
  app.require_subcommand(1);

  std::string model = "linear", mode, values, solver = "builtin", smtlib_out, format = "json";
  std::optional<size_t> cells, trials;
  std::optional<uint64_t> seed;
  std::optional<int> budget;
  bool sabotage = false;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--model", model, "memory model");
    sub->add_option("--mode", mode, "ox, ux or ex")->check(CLI::IsMember({"ox", "ux", "ex"}));
    sub->add_option("--bounds-values", values, "value domain: a count n for {0..n-1} or a literal list");
    sub->add_option("--bounds-cells", cells, "maximum cells per enumerated memory");
    sub->add_option("--trials", trials, "randomized trials per check");
    sub->add_option("--seed", seed, "seed; POLYHEAP_SEED is the fallback");
    sub->add_option("--budget", budget, "function-call nesting budget");
    sub->add_option("--solver", solver, "builtin or smtlib-dump")->check(CLI::IsMember({"builtin", "smtlib-dump"}));
    sub->add_option("--smtlib-out", smtlib_out, "directory for dumped solver queries");
    sub->add_option("--format", format, "json or human")->check(CLI::IsMember({"json", "human"}));
  };

  std::string file, entry, args;
  auto* run = app.add_subcommand("run", "run a function concretely from the empty memory");
  run->add_option("file", file)->required();
  run->add_option("function", entry)->required();
  run->add_option("args", args, "comma-separated argument values");
  common(run);

  auto* verify = app.add_subcommand("verify", "verify every SL/ESL spec in a file");
  verify->add_option("file", file)->required();
  common(verify);

  auto* bugs = app.add_subcommand("find-bugs", "bi-abductive bug finding over every function in a file");
  bugs->add_option("file", file)->required();
  common(bugs);

  std::string target;
  auto* check = app.add_subcommand("check-model", "run the conformance matrix of one model");
  check->add_option("name", target, "model to check")->required();
  check->add_flag("--sabotage", sabotage, "break linear composition (test hook)");
  common(check);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  RunConfig cfg;
  CmdResult res;
  try {
    cfg.model = model;
    if (!mode.empty()) cfg.mode = parse_mode(mode);
    if (!values.empty()) cfg.bounds.values = parse_value_domain(values);
    if (cells) {
      if (*cells == 0) throw ConfigError("--bounds-cells must be positive");
      cfg.bounds.max_cells = *cells;
    }
    if (trials) {
      if (*trials == 0) throw ConfigError("--trials must be positive");
      cfg.bounds.trials = *trials;
    }
    if (budget) cfg.bounds.budget = *budget;
    if (seed) cfg.bounds.seed = *seed;
    else if (auto s = env_seed()) cfg.bounds.seed = *s;
    cfg.solver = solver;
    cfg.smtlib_out = smtlib_out;
    cfg.format = format;
    cfg.sabotage = sabotage;

    if (*run) res = cmd_run(file, entry, args, cfg);
    else if (*verify) res = cmd_verify(file, cfg);
    else if (*bugs) res = cmd_findbugs(file, cfg);
    else res = cmd_checkmodel(target, cfg);
  } catch (const ConfigError& e) {
    res = {2, error_report(app.get_subcommands().front()->get_name(), "ConfigError", e.what())};
  } catch (const ParseError& e) {
    res = {2, error_report(app.get_subcommands().front()->get_name(), "ParseError", e.what())};
  }

  if (format == "human") {
    std::cout << render_human(res.report);
  } else {
    std::cout << res.report.dump(2) << "\n";
  }
  return res.code;
}
