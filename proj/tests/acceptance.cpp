// Acceptance runner: one PASS/FAIL line per criterion, bounds pinned below.

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>

#include "polyheap/analyses.hpp"
#include "polyheap/cli.hpp"
#include "polyheap/harness.hpp"
#include "polyheap/registry.hpp"
#include "polyheap/solver_check.hpp"

#ifndef POLYHEAP_FIXTURES
#define POLYHEAP_FIXTURES "tests/fixtures"
#endif

using namespace polyheap;

namespace {

constexpr uint64_t kSeed = 20240611;
constexpr size_t kMatrixTrials = 1000;
constexpr size_t kRefuteTrials = 10000;
constexpr double kMatrixSecondsPerModel = 120.0;
constexpr size_t kCommandFramePrograms = 200;
constexpr size_t kCommandFrameRunsPerProgram = 20;
constexpr size_t kSoundnessTrials = 500;
constexpr size_t kSolverTrials = 10000;
constexpr size_t kMinVerifiedSpecs = 6;

const std::string kFixtures = POLYHEAP_FIXTURES;

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct Line {
  bool pass = true;
  std::ostringstream detail;
  void require(bool c, const std::string& what) {
    if (!c) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

Bounds small_bounds(size_t cells) {
  Bounds b;
  b.values = Bounds::nats(4);
  b.max_cells = cells;
  b.max_addresses = 3;
  b.seed = kSeed;
  return b;
}

Line criterion_1() {
  Line l;
  const std::vector<std::string> seven = {"linear",       "linear-unique", "linear-cut", "linear-ox",
                                          "frac",         "block-offset",  "objects"};
  Bounds b = small_bounds(3);
  b.trials = kMatrixTrials;
  for (const auto& name : seven) {
    auto t0 = std::chrono::steady_clock::now();
    with_model(name, false, [&](const auto& m) {
      auto rs = check_model(m, b, kRefuteTrials);
      Soundness d = m.declared();
      l.require(matrix_matches(rs, d), name + " matrix");
      for (const auto& r : rs) {
        bool declared = r.mode == "both" || (r.mode == "ox" ? d.ox : d.ux);
        if (declared) l.require(r.pass && r.trials >= kMatrixTrials, name + " " + r.check + "/" + r.mode);
      }
      auto refuted_in = [&](const std::string& mode) {
        for (const auto& r : rs)
          if (r.mode == mode && !r.pass && !r.witness.is_null() && r.trials <= kRefuteTrials) return true;
        return false;
      };
      if (name == "linear-cut") l.require(refuted_in("ox"), "linear-cut OX counterexample");
      if (name == "linear-ox") l.require(refuted_in("ux"), "linear-ox UX counterexample");
    });
    double s = seconds_since(t0);
    l.require(s < kMatrixSecondsPerModel, name + " runtime");
    l.detail << " " << name << "=" << static_cast<int>(s * 1000) << "ms";
  }
  return l;
}

Line criterion_2() {
  Line l;
  auto r = Conformance<Linear>(Linear(), small_bounds(3)).pcm(true, 0, 0);
  l.require(r.pass, "laws");
  // unit over every a, commutativity over every (a, b), associativity over
  // every (a, b, c)
  size_t n = Linear().enumerate(small_bounds(3)).size();
  l.require(r.trials == n * n * n + n * n + n, "exhaustive count");
  l.detail << " memories=" << n << " triples=" << r.trials;
  return l;
}

Line criterion_3() {
  Line l;
  Bounds b = small_bounds(2);
  for (Mode md : {Mode::OX, Mode::UX}) {
    auto lr = Conformance<Linear>(Linear(), b).frame(md, true, 0, 0);
    auto br = Conformance<BlockOffset>(BlockOffset(), b).frame(md, true, 0, 0);
    l.require(lr.pass && lr.applicable > 0, std::string("linear frame ") + mode_name(md));
    l.require(br.pass && br.applicable > 0, std::string("block-offset frame ") + mode_name(md));
    l.detail << " " << mode_name(md) << ":linear=" << lr.trials << ",block-offset=" << br.trials;
    Bounds b3 = small_bounds(3);
    auto lc = Conformance<Linear>(Linear(), b3).command_frame(md, kCommandFramePrograms, kCommandFrameRunsPerProgram, kSeed);
    auto bc = Conformance<BlockOffset>(BlockOffset(), b3)
                  .command_frame(md, kCommandFramePrograms, kCommandFrameRunsPerProgram, kSeed);
    l.require(lc.pass, std::string("linear command frame ") + mode_name(md));
    l.require(bc.pass, std::string("block-offset command frame ") + mode_name(md));
  }
  return l;
}

Line criterion_4() {
  Line l;
  Bounds b;
  b.values = Bounds::nats(4);
  Differential<Linear> d(Linear(), b);
  auto r = d.ox_soundness(kSoundnessTrials, kSeed);
  l.require(r.pass && r.trials == kSoundnessTrials, "ox soundness");
  l.detail << " trials=" << r.trials << " applicable=" << r.applicable << " inconclusive=" << r.inconclusive;
  return l;
}

Line criterion_5() {
  Line l;
  Bounds b;
  b.values = Bounds::nats(4);
  Differential<Linear> d(Linear(), b);
  auto r = d.ux_soundness(kSoundnessTrials, kSeed);
  l.require(r.pass && r.trials == kSoundnessTrials, "ux soundness");
  l.detail << " trials=" << r.trials << " applicable=" << r.applicable << " inconclusive=" << r.inconclusive;
  return l;
}

Line criterion_6() {
  Line l;
  auto f = foo_regression(Linear(), Bounds{});
  l.require(f.concrete == std::vector<Outcome>{Outcome::Ok}, "concrete ok only");
  l.require(f.symbolic == std::vector<Outcome>{Outcome::Miss}, "symbolic miss only");
  l.require(f.ox_excluded, "excluded in OX harness");
  l.require(f.ux_excluded, "excluded in UX harness");
  return l;
}

Line criterion_7() {
  Line l;
  auto counts = [](Linear::Variant v) {
    Linear m(v);
    SpecContext g;
    PredTable p;
    Solver sv;
    Engine<Linear> eng(m, g, p, sv, Mode::OX);
    SymState<Linear::SMem> st;
    st.mem[lit_nat(1)] = {false, lit_nat(1)};
    st.mem[lit_nat(2)] = {false, lit_nat(1)};
    Expr x = lvar("x");
    add_pc(st.pc, e_le(lit_nat(1), x));
    add_pc(st.pc, e_le(x, lit_nat(2)));
    st.store["x"] = x;
    st.store["y"] = lit(Value::nil());
    int lookups = 0, consumes = 0;
    for (const auto& r : eng.exec(Oracle{}, st, parse_cmd("y := lookup(x)")))
      if (r.o == Outcome::Ok && eng.feasible(r.st.pc) >= 0) ++lookups;
    for (const auto& c : eng.consume(Mode::OX, Oracle{}, a_res("points_to", {x}, {lit_nat(1)}), {{"x", x}}, st))
      if (c.o == Outcome::Ok && eng.feasible(c.st.pc) >= 0) ++consumes;
    return std::pair{lookups, consumes};
  };
  auto [ex_l, ex_c] = counts(Linear::Variant::Exact);
  auto [um_l, um_c] = counts(Linear::Variant::UniqueMatch);
  auto [cut_l, cut_c] = counts(Linear::Variant::Cut);
  l.require(ex_l == 2, "exact: 2 ok lookup branches");
  l.require(um_c == 0, "unique-match: 0 applicable consumptions");
  l.require(cut_l == 1, "cut: 1 lookup branch");
  l.detail << " exact=" << ex_l << "/" << ex_c << " unique=" << um_l << "/" << um_c << " cut=" << cut_l << "/" << cut_c;
  return l;
}

Line criterion_8() {
  Line l;
  Bounds cross = small_bounds(2);
  size_t verified = 0;
  std::set<std::string> models;
  auto suite = [&](const std::string& model, const std::string& file) {
    Program p = parse_program(slurp_file(kFixtures + "/" + file));
    with_model(model, false, [&](const auto& m) {
      using M = std::decay_t<decltype(m)>;
      Solver sv;
      BoundedChecker<M> bc(m, p.funcs, p.preds, cross);
      for (const auto& [fid, i] : p.spec_order) {
        const Quadruple& q = p.specs.at(fid)[i];
        auto r = verify_ox(m, p.funcs, p.specs, q, i, p.preds, sv);
        l.require(r.verdict == VVerdict::Verified, file + " " + r.spec + " verified");
        if (r.verdict != VVerdict::Verified) continue;
        auto c = bc.check(q);
        l.require(c.verdict == QVerdict::Valid && c.pre_models > 0, file + " " + r.spec + " bounded SL");
        if (c.verdict == QVerdict::Valid) ++verified, models.insert(model);
      }
    });
  };
  suite("linear", "verify_linear.ph");
  suite("frac", "verify_frac.ph");
  suite("block-offset", "verify_block.ph");
  suite("objects", "verify_objects.ph");
  suite("linear", "sample.ph");
  l.require(verified >= kMinVerifiedSpecs, "spec count");
  l.require(models.size() == 4, "four models");

  Program wp = parse_program(slurp_file(kFixtures + "/wrong_post.ph"));
  Solver sv;
  const auto& [fid, i] = wp.spec_order.at(0);
  auto r = verify_ox(Linear(), wp.funcs, wp.specs, wp.specs.at(fid)[i], i, wp.preds, sv);
  l.require(r.verdict == VVerdict::Failed, "wrong post fails");
  l.require(!r.failing.empty() && !r.failing[0].trace.empty(), "failing path has a trace");
  l.detail << " verified=" << verified << " wrong_post=" << vverdict_name(r.verdict);
  return l;
}

Line criterion_9() {
  Line l;
  Bounds b;
  b.seed = kSeed;
  size_t reports = 0, bugs = 0;
  auto run = [&](const std::string& file, size_t expect_bugs) {
    Program p = parse_program(slurp_file(kFixtures + "/" + file));
    Solver sv;
    size_t here = 0;
    for (const auto& fid : p.func_order)
      for (const auto& br : biabduct(Linear(), p.funcs, p.specs, fid, p.preds, sv, b)) {
        ++reports;
        l.require(br.replay == "replayed", file + " replay");
        l.require(br.isl == "Valid", file + " ISL bounded");
        if (br.is_bug()) ++here;
      }
    l.require(here == expect_bugs, file + " bug count");
    bugs += here;
  };
  run("uaf.ph", 1);
  run("missing_cell.ph", 0);
  run("skip.ph", 0);
  l.detail << " reports=" << reports << " bugs=" << bugs;
  return l;
}

Line criterion_10() {
  Line l;
  auto r = SolverCheck().run(kSolverTrials, kSeed);
  l.require(r.trials == kSolverTrials, "trial count");
  l.require(r.bad_witness == 0, "sat witnesses replay");
  l.require(r.contradicted_unsat == 0, "unsat never contradicted");
  l.require(r.nondeterministic_export == 0, "smt-lib export deterministic");
  l.detail << " sat=" << r.sat << " unsat=" << r.unsat << " unknown=" << r.unknown;
  return l;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::pair<int, std::function<Line()>>> all = {
      {1, criterion_1}, {2, criterion_2}, {3, criterion_3}, {4, criterion_4}, {5, criterion_5},
      {6, criterion_6}, {7, criterion_7}, {8, criterion_8}, {9, criterion_9}, {10, criterion_10}};
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  int failures = 0;
  for (auto& [n, f] : all) {
    if (!only.empty() && !only.count(n)) continue;
    auto t0 = std::chrono::steady_clock::now();
    Line l;
    try {
      l = f();
    } catch (const std::exception& e) {
      l.pass = false;
      l.detail << " [exception: " << e.what() << "]";
    }
    if (!l.pass) ++failures;
    std::printf("criterion %2d: %s (%.1fs)%s\n", n, l.pass ? "PASS" : "FAIL", seconds_since(t0), l.detail.str().c_str());
    std::fflush(stdout);
  }
  return failures ? 1 : 0;
}
