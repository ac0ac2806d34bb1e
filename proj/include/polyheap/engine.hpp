#pragma once

#include <json.hpp>

#include "logic.hpp"
#include "solver.hpp"

namespace polyheap {

struct SPred {
  std::string name;
  std::vector<Expr> ins, outs;
  friend bool operator==(const SPred& a, const SPred& b) {
    return a.name == b.name && a.ins == b.ins && a.outs == b.outs;
  }
};

template <class SMem>
struct SymState {
  Subst store;  // program variable -> logical expression
  SMem mem;
  std::vector<SPred> preds;
  std::vector<Expr> pc;
  std::vector<Assertion> anti;  // fixes produced so far (bi-abduction only)
};

// Conjoins `e` to the path condition, keeping the conjunct list flat and
// duplicate-free. Returns the conjuncts actually added.
inline std::vector<Expr> add_pc(std::vector<Expr>& pc, const Expr& e) {
  std::vector<Expr> parts, added;
  split_conj(fold(e), parts);
  for (auto& p : parts) {
    if (p->op == Op::Lit && p->lit.is_bool() && p->lit.as_bool()) continue;
    if (std::find(pc.begin(), pc.end(), p) != pc.end()) continue;
    pc.push_back(p);
    added.push_back(p);
  }
  return added;
}

inline Expr sym_eval(const Expr& e, const Subst& store) { return fold(subst_pvars(e, store, true)); }

inline Expr err_expr(const std::vector<Expr>& vals) {
  if (vals.size() == 1) return vals[0];
  return e_list(vals);
}

inline bool compatible(Flavor f, Mode m) {
  switch (m) {
    case Mode::OX: return f == Flavor::SL || f == Flavor::ESL;
    case Mode::UX: return f == Flavor::ISL || f == Flavor::ESL;
    case Mode::EX: return f == Flavor::ESL;
  }
  return false;
}

template <class Model>
class Engine {
 public:
  using SMem = typename Model::SMem;
  using State = SymState<SMem>;

  struct Result {
    Outcome o;
    Oracle oracle;
    State st;
  };
  struct CRes {
    Outcome o;  // Ok or Abort
    Oracle oracle;
    Subst th;
    State st;
    Expr payload;  // abort reason
  };
  struct PRes {
    Subst th;
    State st;
  };

  Engine(const Model& m, const SpecContext& specs, const PredTable& preds, Solver& solver, Mode mode)
      : m_(m), specs_(specs), preds_(preds), solver_(solver), mode_(mode) {}

  Mode mode() const { return mode_; }
  void set_mode(Mode m) { mode_ = m; }
  FreshGen& fresh() { return fresh_; }
  void set_trace(std::vector<nlohmann::json>* t) { trace_ = t; }
  void set_biabduct(bool on, int max_fixes = 4) {
    biabduct_ = on;
    max_fixes_ = max_fixes;
  }
  void set_path_cap(size_t n) { path_cap_ = n; }
  bool truncated() const { return truncated_; }
  const Model& model() const { return m_; }
  Solver& solver() { return solver_; }

  std::set<std::string> lvars(const State& st) const {
    std::set<std::string> r = m_.lvars(st.mem);
    for (const auto& [x, e] : st.store) collect_lvars(e, r);
    for (const auto& p : st.preds) {
      for (const auto& e : p.ins) collect_lvars(e, r);
      for (const auto& e : p.outs) collect_lvars(e, r);
    }
    for (const auto& e : st.pc) collect_lvars(e, r);
    for (const auto& a : st.anti) collect_lvars(a, r);
    return r;
  }

  // Makes fresh names avoid every lvar of `st` and of the extra set.
  void reserve(const State& st, const std::set<std::string>& extra = {}) {
    fresh_.bump_past(lvars(st));
    fresh_.bump_past(extra);
  }

  // satisfiability policy: -1 prune, 0 keep, 1 abort (solver gave up in EX)
  int feasible(const std::vector<Expr>& pc) {
    Verdict v = solver_.check_sat(pc);
    if (v.k == SatKind::Sat) return 0;
    if (v.k == SatKind::Unsat) return -1;
    switch (mode_) {
      case Mode::OX: return 0;
      case Mode::UX: return -1;
      case Mode::EX: return 1;
    }
    return -1;
  }

  bool entailed(const std::vector<Expr>& pc, const Expr& e) {
    Expr f = fold(e);
    if (f->op == Op::Lit && f->lit.is_bool() && f->lit.as_bool()) return true;
    return solver_.entails(pc, f) == Tri::Yes;
  }

  // commands

  std::vector<Result> exec(const Oracle& O, const State& st, const Cmd& c) {
    std::vector<Result> out;
    run(O, st, c, out);
    return out;
  }

  // consume

  std::vector<CRes> consume(Mode m, const Oracle& O, const Assertion& a, const Subst& th, const State& st) {
    std::vector<CRes> out;
    switch (a->k) {
      case AK::Emp: out.push_back({Outcome::Ok, O, th, st, Expr()}); break;
      case AK::Pure: consume_pure_a(m, O, a->e, th, st, out); break;
      case AK::Star:
        for (auto& r : consume(m, O, a->a, th, st)) {
          if (r.o != Outcome::Ok) {
            out.push_back(std::move(r));
            continue;
          }
          for (auto& r2 : consume(m, r.oracle, a->b, r.th, r.st)) out.push_back(std::move(r2));
        }
        break;
      case AK::Exists: {
        if (m == Mode::UX) {
          out.push_back(abort_c(O, th, st, "UnsupportedInMode"));
          break;
        }
        Subst inner = th;
        inner.erase(a->name);
        for (auto& r : consume(m, O, a->a, inner, st)) {
          r.th.erase(a->name);
          if (auto it = th.find(a->name); it != th.end()) r.th[a->name] = it->second;
          out.push_back(std::move(r));
        }
        break;
      }
      case AK::Res: consume_res(m, O, a, th, st, out); break;
      case AK::Pred: consume_pred(m, O, a, th, st, out); break;
      default: out.push_back(abort_c(O, th, st, "UnsupportedAssertion")); break;
    }
    return out;
  }

  // Pure consumption with no binding: OX needs entailment, UX/EX conjoin.
  std::vector<std::pair<Outcome, State>> consume_pure(Mode m, const Expr& e, const State& st) {
    std::vector<std::pair<Outcome, State>> out;
    if (m == Mode::OX) {
      if (entailed(st.pc, e)) out.push_back({Outcome::Ok, st});
      return out;
    }
    State s2 = st;
    add_pc(s2.pc, e);
    int f = feasible(s2.pc);
    if (f == 0) out.push_back({Outcome::Ok, std::move(s2)});
    else if (f == 1) out.push_back({Outcome::Abort, st});
    return out;
  }

  // produce

  std::vector<PRes> produce(const Assertion& a, const Subst& th, const State& st) {
    std::vector<PRes> out;
    switch (a->k) {
      case AK::Emp:
      case AK::True: out.push_back({th, st}); break;
      case AK::Pure: {
        Subst t = th;
        State s2 = st;
        bind_fresh(a->e, t, s2);
        add_pc(s2.pc, subst_lvars(a->e, t));
        if (feasible(s2.pc) == 0) out.push_back({std::move(t), std::move(s2)});
        break;
      }
      case AK::Star:
        for (auto& r : produce(a->a, th, st))
          for (auto& r2 : produce(a->b, r.th, r.st)) out.push_back(std::move(r2));
        break;
      case AK::Or:
        for (auto& r : produce(a->a, th, st)) out.push_back(std::move(r));
        for (auto& r : produce(a->b, th, st)) out.push_back(std::move(r));
        break;
      case AK::Exists: {
        Subst t = th;
        State s2 = st;
        Expr f = fresh_.var();
        t[a->name] = f;
        add_pc(s2.pc, e_inval(f));
        for (auto& r : produce(a->a, t, s2)) {
          r.th.erase(a->name);
          if (auto it = th.find(a->name); it != th.end()) r.th[a->name] = it->second;
          out.push_back(std::move(r));
        }
        break;
      }
      case AK::Res: {
        Subst t = th;
        State s2 = st;
        for (const auto& e : a->ins) bind_fresh(e, t, s2);
        for (const auto& e : a->outs) bind_fresh(e, t, s2);
        auto ins = subst_all(a->ins, t), outs = subst_all(a->outs, t);
        for (auto& pr : m_.produce_res(a->name, ins, outs, s2.mem)) {
          State s3 = s2;
          s3.mem = std::move(pr.mem);
          add_pc(s3.pc, e_and(e_and(all_inval(ins), all_inval(outs)), pr.pi));
          if (feasible(s3.pc) == 0) out.push_back({t, std::move(s3)});
        }
        break;
      }
      case AK::Pred: {
        Subst t = th;
        State s2 = st;
        for (const auto& e : a->ins) bind_fresh(e, t, s2);
        for (const auto& e : a->outs) bind_fresh(e, t, s2);
        auto ins = subst_all(a->ins, t), outs = subst_all(a->outs, t);
        s2.preds.push_back({a->name, ins, outs});
        add_pc(s2.pc, e_and(all_inval(ins), all_inval(outs)));
        if (feasible(s2.pc) == 0) out.push_back({std::move(t), std::move(s2)});
        break;
      }
      case AK::Implies: break;  // no symbolic counterpart
    }
    return out;
  }

  nlohmann::json state_json(const State& st) const {
    nlohmann::json j;
    nlohmann::json s = nlohmann::json::object();
    for (const auto& [x, e] : st.store) s[x] = show(e);
    j["store"] = s;
    j["mem"] = m_.to_json(st.mem);
    nlohmann::json ps = nlohmann::json::array();
    for (const auto& p : st.preds) ps.push_back(p.name + "(" + show_list(p.ins) + "; " + show_list(p.outs) + ")");
    j["preds"] = ps;
    nlohmann::json pc = nlohmann::json::array();
    for (const auto& e : st.pc) pc.push_back(show(e));
    j["pc"] = pc;
    return j;
  }

 private:
  static std::vector<Expr> subst_all(const std::vector<Expr>& es, const Subst& t) {
    std::vector<Expr> r;
    for (const auto& e : es) r.push_back(subst_lvars(e, t));
    return r;
  }

  static bool closed(const Expr& e, const Subst& th) {
    for (const auto& x : lvars_of(e))
      if (!th.count(x)) return false;
    return true;
  }

  void bind_fresh(const Expr& e, Subst& t, State& st) {
    for (const auto& x : lvars_of(e))
      if (!t.count(x)) {
        Expr f = fresh_.var();
        t[x] = f;
        add_pc(st.pc, e_inval(f));
      }
  }

  CRes abort_c(const Oracle& O, const Subst& th, const State& st, const std::string& why,
               std::vector<Expr> rest = {}) {
    return {Outcome::Abort, O, th, st, sym_payload(why, std::move(rest))};
  }

  void consume_pure_a(Mode m, const Oracle& O, const Expr& e, const Subst& th, const State& st,
                      std::vector<CRes>& out) {
    std::vector<Expr> todo;
    split_conj(e, todo);
    Subst t = th;
    // learn bindings from equations with one unbound variable side
    std::vector<Expr> facts;
    for (bool progress = true; progress;) {
      progress = false;
      for (auto it = todo.begin(); it != todo.end(); ++it) {
        const Expr& c = *it;
        if (c->op != Op::Eq) continue;
        for (int side = 0; side < 2; ++side) {
          const Expr& l = c->kids[side];
          const Expr& r = c->kids[1 - side];
          if (l->op == Op::LVar && !t.count(l->name) && closed(r, t)) {
            Expr rv = subst_lvars(r, t);
            t[l->name] = rv;
            facts.push_back(e_inval(rv));
            todo.erase(it);
            progress = true;
            break;
          }
        }
        if (progress) break;
      }
    }
    for (const auto& c : todo) {
      if (!closed(c, t)) {
        out.push_back(abort_c(O, th, st, "UnboundLVar", {lit_str(show(c))}));
        return;
      }
      facts.push_back(subst_lvars(c, t));
    }
    Expr goal = conj(facts);
    auto rs = consume_pure(m, goal, st);
    if (rs.empty() && m == Mode::OX) out.push_back(abort_c(O, th, st, "PureNotEntailed", {goal}));
    for (auto& [o, s2] : rs) {
      if (o == Outcome::Ok) out.push_back({Outcome::Ok, O, t, std::move(s2), Expr()});
      else out.push_back(abort_c(O, th, st, "SolverUnknown"));
    }
  }

  // Matches consumed out-values against the assertion's out-parameters.
  void bind_outs(Mode m, const Oracle& O, const std::vector<Expr>& pats, const std::vector<Expr>& vals,
                 const Subst& th, const State& st, std::vector<CRes>& out) {
    Subst t = th;
    std::vector<Expr> eqs;
    if (pats.size() != vals.size()) {
      out.push_back(abort_c(O, th, st, "OutArity"));
      return;
    }
    for (size_t j = 0; j < pats.size(); ++j) {
      const Expr& p = pats[j];
      if (p->op == Op::LVar && !t.count(p->name)) {
        t[p->name] = vals[j];
        continue;
      }
      if (!closed(p, t)) {
        out.push_back(abort_c(O, th, st, "UnboundOut", {lit_str(show(p))}));
        return;
      }
      eqs.push_back(e_eq(subst_lvars(p, t), vals[j]));
    }
    if (eqs.empty()) {
      out.push_back({Outcome::Ok, O, t, st, Expr()});
      return;
    }
    Expr goal = conj(eqs);
    auto rs = consume_pure(m, goal, st);
    if (rs.empty() && m == Mode::OX) out.push_back(abort_c(O, th, st, "OutMismatch", {goal}));
    for (auto& [o, s2] : rs) {
      if (o == Outcome::Ok) out.push_back({Outcome::Ok, O, t, std::move(s2), Expr()});
      else out.push_back(abort_c(O, th, st, "SolverUnknown"));
    }
  }

  void consume_res(Mode m, const Oracle& O, const Assertion& a, const Subst& th, const State& st,
                   std::vector<CRes>& out) {
    for (const auto& e : a->ins)
      if (!closed(e, th)) {
        out.push_back(abort_c(O, th, st, "UnboundIn", {lit_str(show(e))}));
        return;
      }
    auto ins = subst_all(a->ins, th);
    for (auto& r : m_.consume_res(m, O, a->name, ins, st.mem)) {
      State s2 = st;
      add_pc(s2.pc, r.pi);
      int f = feasible(s2.pc);
      if (f < 0) continue;
      if (f > 0) {
        out.push_back(abort_c(r.oracle, th, st, "SolverUnknown"));
        continue;
      }
      if (r.o != Outcome::Ok) {
        out.push_back({Outcome::Abort, r.oracle, th, s2, err_expr(r.outs)});
        continue;
      }
      if (!entailed(st.pc, r.pi_i)) {
        out.push_back(abort_c(r.oracle, th, s2, "NotEntailed", {r.pi_i}));
        continue;
      }
      s2.mem = std::move(r.frame);
      trace("consume-res", Outcome::Ok, {r.pi}, r.oracle);
      bind_outs(m, r.oracle, a->outs, r.outs, th, s2, out);
    }
  }

  void consume_pred(Mode m, const Oracle& O, const Assertion& a, const Subst& th, const State& st,
                    std::vector<CRes>& out) {
    for (const auto& e : a->ins)
      if (!closed(e, th)) {
        out.push_back(abort_c(O, th, st, "UnboundIn", {lit_str(show(e))}));
        return;
      }
    auto ins = subst_all(a->ins, th);
    for (size_t i = 0; i < st.preds.size(); ++i) {
      const SPred& p = st.preds[i];
      if (p.name != a->name || p.ins.size() != ins.size()) continue;
      std::vector<Expr> eqs;
      for (size_t k = 0; k < ins.size(); ++k) eqs.push_back(e_eq(ins[k], p.ins[k]));
      if (!entailed(st.pc, conj(eqs))) continue;
      State s2 = st;
      s2.preds.erase(s2.preds.begin() + static_cast<long>(i));
      bind_outs(m, O, a->outs, p.outs, th, s2, out);
      return;
    }
    out.push_back(abort_c(O, th, st, "MissingPredicate", {lit_str(a->name)}));
  }

  void trace(const char* rule, Outcome o, const std::vector<Expr>& delta, const Oracle& O) {
    if (!trace_) return;
    nlohmann::json d = nlohmann::json::array();
    for (const auto& e : delta) d.push_back(show(e));
    trace_->push_back({{"rule", rule}, {"outcome", outcome_name(o)}, {"pc-delta", d}, {"oracle-index", O.offset()}});
  }

  // Adds a result after the satisfiability check; returns false when pruned.
  bool emit(Outcome o, const Oracle& O, State st, const Expr& extra, const char* rule, std::vector<Result>& out) {
    auto delta = add_pc(st.pc, extra);
    int f = feasible(st.pc);
    if (f < 0) return false;
    if (f > 0) {
      st.store["err"] = sym_payload("SolverUnknown");
      o = Outcome::Abort;
    }
    if (out.size() >= path_cap_) {
      truncated_ = true;
      return false;
    }
    trace(rule, o, delta, O);
    out.push_back({o, O, std::move(st)});
    return true;
  }

  static State with_err(State st, Expr v) {
    st.store["err"] = std::move(v);
    return st;
  }

  void run(const Oracle& O, const State& st, const Cmd& c, std::vector<Result>& out) {
    switch (c->k) {
      case CK::Skip: emit(Outcome::Ok, O, st, e_true(), "skip", out); return;
      case CK::Assign: {
        Expr e = sym_eval(c->e, st.store);
        State s2 = st;
        s2.store[c->target] = e;
        emit(Outcome::Ok, O, std::move(s2), e_inval(e), "assign", out);
        emit(Outcome::Err, O, with_err(st, lit_str("ExprEval")), e_notinval(e), "assign-err-eval", out);
        return;
      }
      case CK::If: {
        Expr e = sym_eval(c->e, st.store);
        for (bool b : {true, false}) {
          State s2 = st;
          auto delta = add_pc(s2.pc, e_eq(e, lit_bool(b)));
          int f = feasible(s2.pc);
          if (f < 0) continue;
          if (f > 0) {
            emit(Outcome::Abort, O, with_err(s2, sym_payload("SolverUnknown")), e_true(), "if", out);
            continue;
          }
          trace(b ? "if-then" : "if-else", Outcome::Ok, delta, O);
          run(O, s2, b ? c->c1 : c->c2, out);
        }
        emit(Outcome::Err, O, with_err(st, lit_str("ExprEval")), e_notinval(e), "if-err-eval", out);
        emit(Outcome::Err, O, with_err(st, lit_str("Type")), e_and(e_not(e_intype(e, Kind::Bool)), e_inval(e)),
             "if-err-type", out);
        return;
      }
      case CK::Seq: {
        std::vector<Result> first;
        run(O, st, c->c1, first);
        for (auto& r : first) {
          if (r.o != Outcome::Ok) {
            if (out.size() < path_cap_) out.push_back(std::move(r));
            else truncated_ = true;
          } else {
            run(r.oracle, r.st, c->c2, out);
          }
        }
        return;
      }
      case CK::Action: run_action(O, st, c, 0, out); return;
      case CK::Call: run_call(O, st, c, out); return;
      case CK::Fold: run_fold(O, st, c, out); return;
      case CK::Unfold: run_unfold(O, st, c, out); return;
    }
  }

  void run_action(const Oracle& O, const State& st, const Cmd& c, int fixes_used, std::vector<Result>& out) {
    std::vector<Expr> args;
    for (const auto& e : c->args) args.push_back(sym_eval(e, st.store));
    emit(Outcome::Err, O, with_err(st, lit_str("ExprEval")), e_not(all_inval(args)), "action-err-eval", out);
    for (auto& r : m_.sym_action(st.mem, c->name, args, fresh_)) {
      State s2 = st;
      s2.mem = r.mem;
      if (r.o == Outcome::Ok && r.vals.size() == c->outs.size()) {
        for (size_t i = 0; i < c->outs.size(); ++i) s2.store[c->outs[i]] = r.vals[i];
        emit(Outcome::Ok, O, std::move(s2), e_and(e_and(all_inval(args), all_inval(r.vals)), r.pc), "action", out);
      } else if (r.o == Outcome::Ok) {
        emit(Outcome::Err, O, with_err(std::move(s2), lit_str("ActionArgsLength")),
             e_and(e_and(all_inval(args), all_inval(r.vals)), r.pc), "action-err-length", out);
      } else if (r.o == Outcome::Miss && biabduct_) {
        State s3 = with_err(std::move(s2), err_expr(r.vals));
        add_pc(s3.pc, e_and(all_inval(args), r.pc));
        int f = feasible(s3.pc);
        if (f < 0) continue;
        auto fs = m_.fixes(FixView{r.vals.size() == 1 ? payload_parts(r.vals[0]) : r.vals, c->name, args});
        if (fs.empty() || fixes_used >= max_fixes_) {
          emit(Outcome::Miss, O, std::move(s3), e_true(), "action-miss", out);
          continue;
        }
        for (const auto& fx : fs) {
          Assertion fixa = rename_fix(fx);
          State s4 = st;
          s4.pc = s3.pc;
          for (auto& pr : produce(fixa, {}, s4)) {
            pr.st.anti.push_back(subst_lvars(fixa, pr.th));
            trace("fix", Outcome::Ok, {}, O);
            run_action(O, pr.st, c, fixes_used + 1, out);
          }
        }
      } else {
        emit(r.o, O, with_err(std::move(s2), err_expr(r.vals)), e_and(all_inval(args), r.pc), "action-err", out);
      }
    }
  }

  // Fix assertions are closed by giving their variables fresh names.
  Assertion rename_fix(const Assertion& a) {
    Subst ren;
    for (const auto& x : lvars_of(a)) ren[x] = fresh_.var();
    return subst_lvars(a, ren);
  }

  void run_call(const Oracle& O, const State& st, const Cmd& c, std::vector<Result>& out) {
    std::vector<const Quadruple*> qs;
    if (auto it = specs_.find(c->name); it != specs_.end())
      for (const auto& q : it->second)
        if (compatible(q.flavor, mode_)) qs.push_back(&q);
    std::vector<Expr> args;
    for (const auto& e : c->args) args.push_back(sym_eval(e, st.store));
    emit(Outcome::Err, O, with_err(st, lit_str("ExprEval")), e_not(all_inval(args)), "call-err-eval", out);
    if (qs.empty()) {
      emit(Outcome::Abort, O, with_err(st, sym_payload("NoSpec", {lit_str(c->name)})), all_inval(args), "call", out);
      return;
    }
    auto [i, O1] = O.choose(qs.size());
    if (i >= qs.size()) return;
    const Quadruple& q = *qs[i];
    if (q.pvars.size() != args.size()) {
      emit(Outcome::Err, O1, with_err(st, lit_str("FuncArgsLength")), all_inval(args), "call-err-args", out);
      return;
    }
    State s1 = st;
    add_pc(s1.pc, all_inval(args));
    if (feasible(s1.pc) < 0) return;
    Subst th;
    for (size_t k = 0; k < args.size(); ++k) th[q.params[k]] = args[k];
    for (auto& cr : consume(mode_, O1, q.pre, th, s1)) {
      if (cr.o != Outcome::Ok) {
        emit(Outcome::Abort, cr.oracle, with_err(s1, cr.payload), e_true(), "call-pre", out);
        continue;
      }
      for (Outcome o : {Outcome::Ok, Outcome::Err}) {
        const Assertion& Q = o == Outcome::Ok ? q.post_ok : q.post_err;
        if (is_false_assertion(Q)) continue;
        Expr r = fresh_.var();
        State s2 = cr.st;
        add_pc(s2.pc, e_inval(r));
        Assertion Q2 = subst_pvars(Q, Subst{{o == Outcome::Ok ? "ret" : "err", r}});
        for (auto& pr : produce(Q2, cr.th, s2)) {
          State s3 = std::move(pr.st);
          if (o == Outcome::Ok) s3.store[c->target] = r;
          else s3.store["err"] = r;
          emit(o, cr.oracle, std::move(s3), e_true(), o == Outcome::Ok ? "call" : "call-err", out);
        }
      }
    }
  }

  void run_fold(const Oracle& O, const State& st, const Cmd& c, std::vector<Result>& out) {
    if (mode_ != Mode::OX) {
      emit(Outcome::Abort, O, with_err(st, sym_payload("UnsupportedInMode")), e_true(), "fold", out);
      return;
    }
    auto it = preds_.find(c->name);
    if (it == preds_.end() || it->second.ins.size() != c->args.size()) {
      emit(Outcome::Abort, O, with_err(st, sym_payload("UnknownPredicate", {lit_str(c->name)})), e_true(), "fold", out);
      return;
    }
    const PredDef& pd = it->second;
    std::vector<Expr> args;
    for (const auto& e : c->args) args.push_back(sym_eval(e, st.store));
    State s1 = st;
    add_pc(s1.pc, all_inval(args));
    if (feasible(s1.pc) < 0) return;
    auto ds = pd.disjuncts();
    auto [i, O1] = O.choose(ds.size());
    if (i >= ds.size()) return;
    Subst th;
    for (size_t k = 0; k < args.size(); ++k) th[pd.ins[k]] = args[k];
    for (auto& cr : consume(Mode::OX, O1, ds[i], th, s1)) {
      if (cr.o != Outcome::Ok) {
        emit(Outcome::Abort, cr.oracle, with_err(s1, cr.payload), e_true(), "fold", out);
        continue;
      }
      std::vector<Expr> outs;
      bool ok = true;
      for (const auto& x : pd.outs) {
        auto b = cr.th.find(x);
        if (b == cr.th.end()) ok = false;
        else outs.push_back(b->second);
      }
      if (!ok) {
        emit(Outcome::Abort, cr.oracle, with_err(s1, sym_payload("UnboundOut")), e_true(), "fold", out);
        continue;
      }
      State s2 = std::move(cr.st);
      s2.preds.push_back({pd.name, args, outs});
      emit(Outcome::Ok, cr.oracle, std::move(s2), all_inval(outs), "fold", out);
    }
  }

  void run_unfold(const Oracle& O, const State& st, const Cmd& c, std::vector<Result>& out) {
    if (mode_ != Mode::OX) {
      emit(Outcome::Abort, O, with_err(st, sym_payload("UnsupportedInMode")), e_true(), "unfold", out);
      return;
    }
    auto it = preds_.find(c->name);
    if (it == preds_.end() || it->second.ins.size() != c->args.size()) {
      emit(Outcome::Abort, O, with_err(st, sym_payload("UnknownPredicate", {lit_str(c->name)})), e_true(), "unfold",
           out);
      return;
    }
    const PredDef& pd = it->second;
    std::vector<Expr> args;
    for (const auto& e : c->args) args.push_back(sym_eval(e, st.store));
    State s1 = st;
    add_pc(s1.pc, all_inval(args));
    if (feasible(s1.pc) < 0) return;
    std::vector<size_t> cand;
    for (size_t k = 0; k < st.preds.size(); ++k)
      if (st.preds[k].name == pd.name) cand.push_back(k);
    if (cand.empty()) {
      emit(Outcome::Abort, O, with_err(s1, sym_payload("MissingPredicate", {lit_str(pd.name)})), e_true(), "unfold",
           out);
      return;
    }
    auto [i, O1] = O.choose(cand.size());
    if (i >= cand.size()) return;
    const SPred p = st.preds[cand[i]];
    std::vector<Expr> eqs;
    for (size_t k = 0; k < args.size(); ++k) eqs.push_back(e_eq(args[k], p.ins[k]));
    if (!entailed(s1.pc, conj(eqs))) {
      emit(Outcome::Abort, O1, with_err(s1, sym_payload("UnfoldMismatch")), e_true(), "unfold", out);
      return;
    }
    State s2 = s1;
    s2.preds.erase(s2.preds.begin() + static_cast<long>(cand[i]));
    Subst th;
    for (size_t k = 0; k < pd.ins.size(); ++k) th[pd.ins[k]] = p.ins[k];
    for (size_t k = 0; k < pd.outs.size(); ++k) th[pd.outs[k]] = p.outs[k];
    for (auto& pr : produce(pd.body, th, s2)) emit(Outcome::Ok, O1, std::move(pr.st), e_true(), "unfold", out);
  }

  Model m_;
  const SpecContext& specs_;
  const PredTable& preds_;
  Solver& solver_;
  Mode mode_;
  FreshGen fresh_;
  std::vector<nlohmann::json>* trace_ = nullptr;
  bool biabduct_ = false;
  int max_fixes_ = 4;
  size_t path_cap_ = 100000;
  bool truncated_ = false;
};

// models_of

template <class Model>
struct ConcreteModel {
  Interp th;
  Store s;
  typename Model::CMem mem;
};

// θ, (s, μ) |= σ̂ for a given θ, s and μ.
template <class Model>
bool state_holds(const Satisfaction<Model>& sat, const Interp& th, const Store& s, const typename Model::CMem& mu,
                 const SymState<typename Model::SMem>& st) {
  const Model& m = sat.model();
  for (const auto& e : st.pc) {
    auto v = eval(e, th, {});
    if (!v || !v->is_true()) return false;
  }
  for (const auto& [x, e] : st.store) {
    auto v = eval(e, th, {});
    auto it = s.find(x);
    if (!v || it == s.end() || !(it->second == *v)) return false;
  }
  auto m1 = m.concretize(th, st.mem);
  if (!m1) return false;
  auto m2 = m.subtract(mu, *m1);
  if (!m2) return false;
  std::vector<Assertion> ps;
  for (const auto& p : st.preds) ps.push_back(a_pred(p.name, p.ins, p.outs));
  return sat.holds(th, {}, *m2, a_star_all(ps)) == Holds::Yes;
}

// Bounded enumeration of the models of σ̂. `fixed` pins part of θ.
template <class Model>
std::vector<ConcreteModel<Model>> models_of(const Satisfaction<Model>& sat, const SymState<typename Model::SMem>& st,
                                            const std::set<std::string>& lvs, const Interp& fixed = {},
                                            size_t cap = kInterpCap) {
  using CMem = typename Model::CMem;
  const Model& m = sat.model();
  std::vector<std::string> free;
  for (const auto& x : lvs)
    if (!fixed.count(x)) free.push_back(x);
  std::vector<ConcreteModel<Model>> out;
  auto ths = all_interps(free, sat.base_domain(), cap, fixed);
  if (!ths) return out;
  std::vector<CMem> pred_heaps;
  if (!st.preds.empty()) pred_heaps = m.enumerate(sat.bounds());
  else pred_heaps.push_back(m.empty());
  std::vector<Assertion> ps;
  for (const auto& p : st.preds) ps.push_back(a_pred(p.name, p.ins, p.outs));
  Assertion pa = a_star_all(ps);
  for (const auto& th : *ths) {
    bool pc_ok = true;
    for (const auto& e : st.pc) {
      auto v = eval(e, th, {});
      if (!v || !v->is_true()) {
        pc_ok = false;
        break;
      }
    }
    if (!pc_ok) continue;
    Store s;
    bool st_ok = true;
    for (const auto& [x, e] : st.store) {
      auto v = eval(e, th, {});
      if (!v) {
        st_ok = false;
        break;
      }
      s[x] = *v;
    }
    if (!st_ok) continue;
    auto m1 = m.concretize(th, st.mem);
    if (!m1) continue;
    for (const auto& h2 : pred_heaps) {
      if (!st.preds.empty() && sat.holds(th, {}, h2, pa) != Holds::Yes) continue;
      auto mu = m.compose(*m1, h2);
      if (!mu || !m.is_wf(*mu)) continue;
      out.push_back({th, s, *mu});
    }
  }
  return out;
}

}  // namespace polyheap
