#pragma once

#include <cstdlib>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "analyses.hpp"
#include "harness.hpp"
#include "parser.hpp"
#include "registry.hpp"

namespace polyheap {

struct RunConfig {
  std::string model = "linear";
  std::optional<Mode> mode;
  Bounds bounds;
  size_t refute_trials = 10000;
  std::string solver = "builtin";  // builtin | smtlib-dump
  std::string smtlib_out;
  std::string format = "json";  // json | human
  bool sabotage = false;
};

struct CmdResult {
  int code = 0;
  nlohmann::json report;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::optional<Mode> parse_mode(const std::string& s) {
  if (s == "ox") return Mode::OX;
  if (s == "ux") return Mode::UX;
  if (s == "ex") return Mode::EX;
  return std::nullopt;
}

// Values of a comma-separated literal list such as `7, [1, 2], "a"`.
inline std::vector<Value> parse_values(const std::string& s) {
  if (s.find_first_not_of(" \t") == std::string::npos) return {};
  Expr e = parse_expr("[" + s + "]");
  auto v = eval_ground(e);
  if (!v || !v->is_list()) throw ConfigError("not a list of values: " + s);
  return v->as_list();
}

// "4" means {0,1,2,3}; anything else is a comma-separated list of literals.
inline std::vector<Value> parse_value_domain(const std::string& s) {
  if (!s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; })) {
    auto n = std::stoull(s);
    if (n == 0) throw ConfigError("--bounds-values must be positive");
    return Bounds::nats(n);
  }
  std::vector<Value> out;
  for (const auto& v : parse_values(s)) add_value(out, v);
  if (out.empty()) throw ConfigError("--bounds-values is empty");
  return out;
}

inline std::string slurp_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot read " + path);
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

inline std::optional<uint64_t> env_seed() {
  const char* s = std::getenv("POLYHEAP_SEED");
  if (!s || !*s) return std::nullopt;
  char* end = nullptr;
  unsigned long long v = std::strtoull(s, &end, 10);
  if (*end) throw ConfigError("POLYHEAP_SEED is not a number");
  return v;
}

inline nlohmann::json error_report(const std::string& command, const std::string& kind, const std::string& msg) {
  return {{"command", command}, {"error", {{"kind", kind}, {"message", msg}}}};
}

inline Solver make_solver(const RunConfig& cfg) {
  Solver sv(cfg.bounds);
  if (cfg.solver == "smtlib-dump") {
    if (cfg.smtlib_out.empty()) throw ConfigError("--solver=smtlib-dump needs --smtlib-out");
    sv.set_dump_dir(cfg.smtlib_out);
  } else if (cfg.solver != "builtin") {
    throw ConfigError("unknown solver '" + cfg.solver + "'");
  }
  return sv;
}

namespace detail {

template <class F>
CmdResult guarded(const std::string& command, F&& f, int unsupported_code = 2) {
  try {
    return f();
  } catch (const UnsupportedCapability& e) {
    return {unsupported_code, error_report(command, "UnsupportedCapability", e.what())};
  } catch (const ParseError& e) {
    return {2, error_report(command, "ParseError", e.what())};
  } catch (const ShapeError& e) {
    return {2, error_report(command, "ShapeError", e.what())};
  } catch (const UnknownFunction& e) {
    return {2, error_report(command, "UnknownFunction", e.what())};
  } catch (const UnknownModel& e) {
    return {2, error_report(command, "UnknownModel", e.what())};
  } catch (const NotImplemented& e) {
    return {2, error_report(command, "NotImplemented", e.what())};
  } catch (const ConfigError& e) {
    return {2, error_report(command, "ConfigError", e.what())};
  }
}

inline void check_defs(const Program& p) {
  for (const auto& [fid, qs] : p.specs)
    if (!p.funcs.count(fid)) throw UnknownFunction("spec for unknown function " + fid);
}

}  // namespace detail

inline CmdResult cmd_run(const std::string& file, const std::string& entry, const std::string& args,
                         const RunConfig& cfg) {
  return detail::guarded("run", [&]() -> CmdResult {
    Program p = parse_program(slurp_file(file));
    if (!p.funcs.count(entry)) throw UnknownFunction("no function named " + entry);
    std::vector<Value> vs = parse_values(args);
    return with_model(cfg.model, false, [&](const auto& m) -> CmdResult {
      using M = std::decay_t<decltype(m)>;
      Interpreter<M> in(m, p.funcs, AllocCtx{cfg.bounds.max_addresses, {}});
      bool exhausted = false;
      auto rs = in.run_function(entry, vs, m.empty(), cfg.bounds.budget, &exhausted);
      std::vector<nlohmann::json> out;
      bool all_ok = true;
      for (const auto& r : rs) {
        all_ok = all_ok && r.o == Outcome::Ok;
        out.push_back({{"outcome", outcome_name(r.o)}, {"value", r.v.show()}, {"mem", m.to_json(r.mem)}});
      }
      std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.dump() < b.dump(); });
      out.erase(std::unique(out.begin(), out.end()), out.end());
      nlohmann::json rep{{"command", "run"},
                         {"model", m.name()},
                         {"function", entry},
                         {"args", values_json(vs)},
                         {"results", out},
                         {"budget_exhausted", exhausted}};
      return {all_ok && !exhausted ? 0 : 3, rep};
    });
  });
}

inline CmdResult cmd_verify(const std::string& file, const RunConfig& cfg) {
  return detail::guarded("verify", [&]() -> CmdResult {
    if (cfg.mode && *cfg.mode == Mode::UX) throw ConfigError("verify runs in OX mode");
    Program p = parse_program(slurp_file(file));
    detail::check_defs(p);
    Solver sv = make_solver(cfg);
    return with_model(cfg.model, false, [&](const auto& m) -> CmdResult {
      std::vector<nlohmann::json> specs;
      size_t verified = 0, failed = 0, inconclusive = 0, skipped = 0;
      for (const auto& [fid, i] : p.spec_order) {
        const Quadruple& q = p.specs.at(fid)[i];
        if (q.flavor == Flavor::ISL) {
          ++skipped;
          specs.push_back({{"spec", spec_label(q, i)}, {"function", fid}, {"flavor", "ISL"}, {"verdict", "Skipped"}, {"failing", nlohmann::json::array()}});
          continue;
        }
        auto r = verify_ox(m, p.funcs, p.specs, q, i, p.preds, sv);
        switch (r.verdict) {
          case VVerdict::Verified: ++verified; break;
          case VVerdict::Failed: ++failed; break;
          case VVerdict::Inconclusive: ++inconclusive; break;
        }
        specs.push_back(r.to_json());
      }
      std::sort(specs.begin(), specs.end(),
                [](const auto& a, const auto& b) { return a["spec"].template get<std::string>() < b["spec"].template get<std::string>(); });
      nlohmann::json rep{{"command", "verify"},
                         {"model", m.name()},
                         {"specs", specs},
                         {"summary",
                          {{"verified", verified}, {"failed", failed}, {"inconclusive", inconclusive}, {"skipped", skipped}}}};
      int code = failed ? 1 : inconclusive ? 4 : 0;
      return {code, rep};
    });
  });
}

inline CmdResult cmd_findbugs(const std::string& file, const RunConfig& cfg) {
  return detail::guarded(
      "find-bugs",
      [&]() -> CmdResult {
    if (cfg.mode && *cfg.mode == Mode::OX) throw ConfigError("find-bugs runs in UX mode");
    Program p = parse_program(slurp_file(file));
    detail::check_defs(p);
    Solver sv = make_solver(cfg);
    return with_model(cfg.model, false, [&](const auto& m) -> CmdResult {
      std::vector<nlohmann::json> bugs, summaries;
      for (const auto& fid : p.func_order)
        for (const auto& br : biabduct(m, p.funcs, p.specs, fid, p.preds, sv, cfg.bounds))
          (br.is_bug() ? bugs : summaries).push_back(br.to_json());
      nlohmann::json rep{{"command", "find-bugs"}, {"model", m.name()}, {"bugs", bugs}, {"summaries", summaries}};
      return {bugs.empty() ? 0 : 3, rep};
    });
      },
      5);
}

inline CmdResult cmd_checkmodel(const std::string& name, const RunConfig& cfg) {
  return detail::guarded("check-model", [&]() -> CmdResult {
    return with_model(name, cfg.sabotage, [&](const auto& m) -> CmdResult {
      Soundness d = m.declared();
      auto rs = check_model(m, cfg.bounds, cfg.refute_trials);
      bool ok = matrix_matches(rs, d);
      std::vector<nlohmann::json> checks;
      for (const auto& r : rs) checks.push_back(r.to_json());
      nlohmann::json rep{{"command", "check-model"},
                         {"model", name},
                         {"sabotage", cfg.sabotage},
                         {"declared", {{"ox", d.ox}, {"ux", d.ux}}},
                         {"seed", cfg.bounds.seed},
                         {"checks", checks},
                         {"verdict", ok ? "conforms" : "mismatch"}};
      return {ok ? 0 : 1, rep};
    });
  });
}

// Human output is a rendering of the JSON report.
inline std::string render_human(const nlohmann::json& rep) {
  std::ostringstream os;
  std::string cmd = rep.value("command", "");
  if (rep.contains("error")) {
    os << cmd << ": " << rep["error"]["kind"].get<std::string>() << ": " << rep["error"]["message"].get<std::string>()
       << "\n";
    return os.str();
  }
  if (cmd == "run") {
    for (const auto& r : rep["results"])
      os << r["outcome"].get<std::string>() << " " << r["value"].get<std::string>() << "  mem " << r["mem"].dump() << "\n";
    if (rep["budget_exhausted"].get<bool>()) os << "(call budget exhausted)\n";
  } else if (cmd == "verify") {
    for (const auto& s : rep["specs"]) {
      os << s["spec"].get<std::string>() << " [" << s["flavor"].get<std::string>() << "] "
         << s["verdict"].get<std::string>() << "\n";
      if (s.contains("failing"))
        for (const auto& f : s["failing"])
          os << "  " << f["outcome"].get<std::string>() << ": " << f["reason"].get<std::string>() << "\n    state "
             << f["state"].dump() << "\n";
      if (s.contains("note")) os << "  note: " << s["note"].get<std::string>() << "\n";
    }
    const auto& su = rep["summary"];
    os << su["verified"] << " verified, " << su["failed"] << " failed, " << su["inconclusive"] << " inconclusive, "
       << su["skipped"] << " skipped\n";
  } else if (cmd == "find-bugs") {
    for (const auto& b : rep["bugs"])
      os << "bug in " << b["function"].get<std::string>() << ": " << b["spec"]["post"].get<std::string>()
         << "\n  needs " << b["anti_heap"].get<std::string>() << "\n  replay " << b["replay"].get<std::string>()
         << ", isl " << b["isl"].get<std::string>() << "\n";
    os << rep["bugs"].size() << " bug(s), " << rep["summaries"].size() << " ok summary(ies)\n";
  } else if (cmd == "check-model") {
    for (const auto& c : rep["checks"]) {
      os << rep["model"].get<std::string>() << " " << c["check"].get<std::string>() << "/" << c["mode"].get<std::string>()
         << " " << c["verdict"].get<std::string>() << " (" << c["trials"] << " trials, " << c["applicable"]
         << " applicable)\n";
      if (c.contains("witness")) os << "  witness " << c["witness"].dump() << "\n";
    }
    os << rep["verdict"].get<std::string>() << "\n";
  } else {
    os << rep.dump(2) << "\n";
  }
  return os.str();
}

}  // namespace polyheap
