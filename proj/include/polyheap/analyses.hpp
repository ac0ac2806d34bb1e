#pragma once

#include <json.hpp>
#include <stdexcept>

#include "engine.hpp"
#include "interp.hpp"
#include "logic.hpp"
#include "pretty.hpp"

namespace polyheap {

class UnsupportedCapability : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UnknownFunction : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class VVerdict : uint8_t { Verified, Failed, Inconclusive };

inline const char* vverdict_name(VVerdict v) {
  switch (v) {
    case VVerdict::Verified: return "Verified";
    case VVerdict::Failed: return "Failed";
    case VVerdict::Inconclusive: return "Inconclusive";
  }
  return "?";
}

struct FailedPath {
  std::string outcome;
  std::string reason;
  nlohmann::json state;
  std::vector<nlohmann::json> trace;
};

struct VerifyReport {
  std::string spec;
  std::string function;
  std::string flavor;
  VVerdict verdict = VVerdict::Verified;
  std::string note;
  std::vector<FailedPath> failing;

  nlohmann::json to_json() const {
    nlohmann::json fs = nlohmann::json::array();
    for (const auto& f : failing) {
      nlohmann::json tr = nlohmann::json::array();
      for (const auto& t : f.trace) tr.push_back(t);
      fs.push_back({{"outcome", f.outcome}, {"reason", f.reason}, {"state", f.state}, {"trace", tr}});
    }
    nlohmann::json j{{"spec", spec}, {"function", function}, {"flavor", flavor}, {"verdict", vverdict_name(verdict)},
                     {"failing", fs}};
    if (!note.empty()) j["note"] = note;
    return j;
  }
};

inline std::string spec_label(const Quadruple& q, size_t index) {
  return q.fid + "#" + std::to_string(index);
}

// Splits a top-level ⋆ and drops True parts; reports whether one was seen.
inline Assertion drop_true(const Assertion& a, bool& had_true) {
  std::vector<Assertion> parts, keep;
  flatten_star(a, parts);
  for (auto& p : parts) {
    if (p->k == AK::True) had_true = true;
    else keep.push_back(p);
  }
  return a_star_all(keep);
}

// OX verification of one SL or ESL spec. Calls, recursive ones included, use
// the specs in `gamma_specs`.
template <class Model>
VerifyReport verify_ox(const Model& m, const ImplContext& g, const SpecContext& gamma_specs, const Quadruple& q,
                       size_t index, const PredTable& preds, Solver& solver, size_t path_cap = 4096) {
  if (!m.declared().ox) throw UnsupportedCapability("model " + m.name() + " is not OX-sound");
  auto fit = g.find(q.fid);
  if (fit == g.end()) throw UnknownFunction(q.fid);
  const FunctionDef& f = fit->second;
  VerifyReport rep;
  rep.spec = spec_label(q, index);
  rep.function = q.fid;
  rep.flavor = flavor_name(q.flavor);
  if (q.flavor == Flavor::ISL) throw ShapeError("verify_ox needs an SL or ESL spec");
  check_external_shape(q);
  if (q.pvars != f.params) throw ShapeError("spec parameters of " + q.fid + " differ from the definition");

  using Eng = Engine<Model>;
  using State = typename Eng::State;
  Eng eng(m, gamma_specs, preds, solver, Mode::OX);
  eng.set_path_cap(path_cap);
  std::vector<nlohmann::json> trace;
  eng.set_trace(&trace);

  State st0;
  st0.mem = m.sempty();
  Subst th0;
  for (size_t i = 0; i < f.params.size(); ++i) {
    st0.store[f.params[i]] = lvar(q.params[i]);
    th0[q.params[i]] = lvar(q.params[i]);
    add_pc(st0.pc, e_inval(lvar(q.params[i])));
  }
  for (const auto& z : f.locals()) st0.store[z] = lit(Value::nil());
  std::set<std::string> used = lvars_of(q.pre);
  for (const auto& a : {q.post_ok, q.post_err}) {
    auto l = lvars_of(a);
    used.insert(l.begin(), l.end());
  }
  eng.reserve(st0, used);

  bool inconclusive = false;
  auto fail = [&](Outcome o, const std::string& why, const State& st) {
    Verdict v = solver.check_sat(st.pc);
    if (v.k == SatKind::Unknown) {
      inconclusive = true;
      return;
    }
    rep.failing.push_back({outcome_name(o), why, eng.state_json(st), trace});
  };

  bool ok_true = false, err_true = false;
  Assertion post_ok = drop_true(q.post_ok, ok_true);
  Assertion post_err = drop_true(q.post_err, err_true);

  auto discharge = [&](const Assertion& post, bool framed, const Subst& th, const State& st, Outcome o,
                       const char* what) {
    for (auto& c : eng.consume(Mode::OX, Oracle(), post, th, st)) {
      if (eng.feasible(c.st.pc) < 0) continue;
      if (c.o != Outcome::Ok) {
        fail(o, std::string(what) + " not established: " + (c.payload.valid() ? show(c.payload) : "abort"), c.st);
        continue;
      }
      if (!framed && (m.to_assertion(c.st.mem)->k != AK::Emp || !c.st.preds.empty()))
        fail(o, std::string("resources left after ") + what, c.st);
    }
  };

  for (auto& pr : eng.produce(q.pre, th0, st0)) {
    for (auto& r : eng.exec(Oracle(), pr.st, f.body)) {
      if (eng.feasible(r.st.pc) < 0) continue;
      switch (r.o) {
        case Outcome::Abort: fail(r.o, "abort", r.st); break;
        case Outcome::Miss: fail(r.o, "missing resource", r.st); break;
        case Outcome::Err: {
          State s2 = r.st;
          Expr ev = s2.store.count("err") ? s2.store.at("err") : lit(Value::nil());
          discharge(subst_pvars(post_err, Subst{{"err", ev}}), err_true, pr.th, s2, r.o, "error postcondition");
          break;
        }
        case Outcome::Ok: {
          Expr e = sym_eval(f.ret, r.st.store);
          State bad = r.st;
          add_pc(bad.pc, e_notinval(e));
          if (eng.feasible(bad.pc) >= 0) {
            State s3 = bad;
            s3.store["err"] = lit_str("ExprEval");
            discharge(subst_pvars(post_err, Subst{{"err", lit_str("ExprEval")}}), err_true, pr.th, s3, Outcome::Err,
                      "error postcondition");
          }
          State good = r.st;
          add_pc(good.pc, e_inval(e));
          if (eng.feasible(good.pc) < 0) break;
          discharge(subst_pvars(post_ok, Subst{{"ret", e}}), ok_true, pr.th, good, r.o, "ok postcondition");
          break;
        }
      }
    }
  }
  if (!rep.failing.empty()) rep.verdict = VVerdict::Failed;
  else if (inconclusive || eng.truncated()) {
    rep.verdict = VVerdict::Inconclusive;
    rep.note = eng.truncated() ? "path cap reached" : "solver could not decide a failing path";
  }
  return rep;
}

// bi-abduction

struct BugReport {
  std::string function;
  Outcome outcome = Outcome::Ok;
  Quadruple spec;
  Assertion anti;
  nlohmann::json witness;
  std::vector<std::string> pc;
  std::string replay;  // replayed | inconclusive | failed
  std::string isl;     // Valid | CounterExample | Inconclusive | skipped
  std::string key;

  bool is_bug() const { return outcome == Outcome::Err; }

  nlohmann::json to_json() const {
    nlohmann::json j{{"function", function},
                     {"outcome", outcome_name(outcome)},
                     {"spec", {{"pre", show(spec.full_pre())}, {"post", show(outcome == Outcome::Ok ? spec.post_ok : spec.post_err)}}},
                     {"anti_heap", show(anti)},
                     {"witness", witness},
                     {"pc", pc},
                     {"replay", replay},
                     {"isl", isl}};
    return j;
  }
};

struct BiabductOptions {
  size_t path_cap = 4096;
  int max_fixes = 4;
  size_t replay_models = 64;
  bool isl_check = true;
};

inline bool eval_true_at(const Expr& e, const Interp& th) {
  auto v = eval(e, th, {});
  return v && v->is_true();
}

// Replay of a synthesized spec: every bounded model of the final state is reached by
// a concrete call from the fix memory with the same outcome, value and
// final memory.
template <class Model>
std::string replay_report(const Model& m, const ImplContext& g, const PredTable& preds, const Bounds& b,
                          const FunctionDef& f, const std::vector<std::string>& param_lvars,
                          const SymState<typename Model::SMem>& fin, Outcome o, const Expr& val, const Assertion& anti,
                          Solver& solver, size_t max_models) {
  if (!fin.preds.empty()) return "inconclusive";
  Satisfaction<Model> sat(m, preds, b);
  Engine<Model> eng(m, {}, preds, solver, Mode::UX);
  auto lv = eng.lvars(fin);
  collect_lvars(anti, lv);
  collect_lvars(val, lv);
  for (const auto& p : param_lvars) lv.insert(p);
  std::set<std::string> lv_anti = lvars_of(anti);
  std::vector<Interp> ths;
  Verdict v = solver.check_sat(fin.pc);
  if (v.k == SatKind::Sat) ths.push_back(v.model);
  auto all = all_interps({lv.begin(), lv.end()}, sat.base_domain(), kInterpCap, {});
  if (all)
    for (auto& t : *all) ths.push_back(std::move(t));
  AllocCtx alloc;
  for (uint64_t a = 0; a < b.max_addresses + 4; ++a) alloc.extra.push_back(a);
  Interpreter<Model> in(m, g, alloc);
  typename Engine<Model>::State empty;
  empty.mem = m.sempty();
  Subst ident;
  for (const auto& x : lv_anti) ident[x] = lvar(x);
  auto fixes = eng.produce(anti, ident, empty);
  size_t checked = 0;
  for (auto th : ths) {
    if (checked >= max_models) break;
    for (const auto& x : lv)
      if (!th.count(x)) th[x] = Value::nil();
    bool pc_ok = true;
    for (const auto& e : fin.pc) pc_ok = pc_ok && eval_true_at(e, th);
    auto want = eval(val, th, {});
    auto mu_fin = m.concretize(th, fin.mem);
    if (!pc_ok || !want || !mu_fin || !m.is_wf(*mu_fin)) continue;
    std::optional<typename Model::CMem> mu_fix;
    for (auto& pr : fixes) {
      bool ok = true;
      for (const auto& e : pr.st.pc) ok = ok && eval_true_at(e, th);
      auto mm = m.concretize(th, pr.st.mem);
      if (ok && mm && m.is_wf(*mm)) {
        mu_fix = mm;
        break;
      }
    }
    if (!mu_fix) return "failed";
    std::vector<Value> args;
    for (const auto& p : param_lvars) args.push_back(th.at(p));
    ++checked;
    bool exhausted = false;
    bool hit = false;
    for (const auto& r : in.run_function(f.id, args, *mu_fix, b.budget, &exhausted))
      if (r.o == o && r.v == *want && r.mem == *mu_fin) hit = true;
    if (!hit) return exhausted ? "inconclusive" : "failed";
  }
  return checked ? "replayed" : "inconclusive";
}

// UX bi-abductive analysis of one function from an empty memory.
template <class Model>
std::vector<BugReport> biabduct(const Model& m, const ImplContext& g, const SpecContext& specs, const std::string& fid,
                                const PredTable& preds, Solver& solver, const Bounds& b,
                                const BiabductOptions& opt = {}) {
  if (!m.declared().ux) throw UnsupportedCapability("model " + m.name() + " is not UX-sound");
  if (!m.has_fixes()) throw UnsupportedCapability("model " + m.name() + " has no fixes");
  auto fit = g.find(fid);
  if (fit == g.end()) throw UnknownFunction(fid);
  const FunctionDef& f = fit->second;

  using Eng = Engine<Model>;
  using State = typename Eng::State;
  Eng eng(m, specs, preds, solver, Mode::UX);
  eng.set_biabduct(true, opt.max_fixes);
  eng.set_path_cap(opt.path_cap);

  State st0;
  st0.mem = m.sempty();
  std::vector<std::string> ps;
  for (const auto& x : f.params) {
    std::string p = "p_" + x;
    ps.push_back(p);
    st0.store[x] = lvar(p);
    add_pc(st0.pc, e_inval(lvar(p)));
  }
  for (const auto& z : f.locals()) st0.store[z] = lit(Value::nil());
  eng.reserve(st0);

  std::vector<BugReport> out;
  std::set<std::string> seen;
  auto emit = [&](Outcome o, const State& st, const Expr& val) {
    BugReport br;
    br.function = fid;
    br.outcome = o;
    br.anti = a_star_all(st.anti);
    Quadruple q;
    q.flavor = Flavor::ISL;
    q.fid = fid;
    q.pvars = f.params;
    q.params = ps;
    q.pre = br.anti;
    std::vector<Assertion> post{m.to_assertion(st.mem)};
    for (const auto& p : st.preds) post.push_back(a_pred(p.name, p.ins, p.outs));
    for (const auto& e : st.pc) post.push_back(a_pure(e));
    Assertion res = a_star_all(post);
    if (o == Outcome::Ok) {
      q.post_ok = a_star(res, a_pure(e_eq(pvar("ret"), val)));
      q.post_err = a_false();
    } else {
      q.post_ok = a_false();
      q.post_err = a_star(res, a_pure(e_eq(pvar("err"), val)));
    }
    br.spec = q;
    for (const auto& e : st.pc) br.pc.push_back(show(e));
    br.witness = eng.state_json(st);
    br.key = std::string(outcome_name(o)) + "|" + show(q.full_pre()) + "|" + show(o == Outcome::Ok ? q.post_ok : q.post_err);
    if (!seen.insert(br.key).second) return;
    br.replay = replay_report(m, g, preds, b, f, ps, st, o, val, br.anti, solver, opt.replay_models);
    if (opt.isl_check) {
      BoundedChecker<Model> bc(m, g, preds, b);
      br.isl = qverdict_name(bc.check(q).verdict);
    } else {
      br.isl = "skipped";
    }
    out.push_back(std::move(br));
  };

  for (auto& r : eng.exec(Oracle(), st0, f.body)) {
    if (eng.feasible(r.st.pc) < 0) continue;
    if (r.o == Outcome::Abort) continue;
    if (r.o == Outcome::Miss) {
      BugReport br;
      br.function = fid;
      br.outcome = Outcome::Miss;
      br.anti = a_star_all(r.st.anti);
      br.spec = Quadruple{Flavor::ISL, fid, f.params, ps, br.anti, a_false(), a_false()};
      br.witness = eng.state_json(r.st);
      for (const auto& e : r.st.pc) br.pc.push_back(show(e));
      br.replay = "unrecoverable";
      br.isl = "skipped";
      br.key = "miss|" + br.witness.dump();
      if (seen.insert(br.key).second) out.push_back(std::move(br));
      continue;
    }
    if (r.o == Outcome::Err) {
      Expr ev = r.st.store.count("err") ? r.st.store.at("err") : lit(Value::nil());
      emit(Outcome::Err, r.st, ev);
      continue;
    }
    Expr e = sym_eval(f.ret, r.st.store);
    State bad = r.st;
    add_pc(bad.pc, e_notinval(e));
    if (eng.feasible(bad.pc) == 0) {
      bad.store["err"] = lit_str("ExprEval");
      emit(Outcome::Err, bad, lit_str("ExprEval"));
    }
    State good = r.st;
    add_pc(good.pc, e_inval(e));
    if (eng.feasible(good.pc) == 0) emit(Outcome::Ok, good, e);
  }
  std::sort(out.begin(), out.end(), [](const BugReport& a, const BugReport& b) { return a.key < b.key; });
  return out;
}

}  // namespace polyheap
