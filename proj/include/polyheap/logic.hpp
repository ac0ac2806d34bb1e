#pragma once

#include <json.hpp>
#include <stdexcept>

#include "interp.hpp"

namespace polyheap {

enum class Holds : uint8_t { No, Yes, DepthExceeded };

inline Holds h_and(Holds a, Holds b) {
  if (a == Holds::No || b == Holds::No) return Holds::No;
  if (a == Holds::Yes && b == Holds::Yes) return Holds::Yes;
  return Holds::DepthExceeded;
}
inline Holds h_or(Holds a, Holds b) {
  if (a == Holds::Yes || b == Holds::Yes) return Holds::Yes;
  if (a == Holds::No && b == Holds::No) return Holds::No;
  return Holds::DepthExceeded;
}

class ShapeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void add_value(std::vector<Value>& dom, const Value& v) {
  if (std::find(dom.begin(), dom.end(), v) == dom.end()) dom.push_back(v);
}

// Bounded value domain: the active bounds, the model's own constants and the
// values found in the state.
template <class Model>
std::vector<Value> value_domain(const Model& m, const Bounds& b) {
  std::vector<Value> d;
  for (const auto& v : b.values) add_value(d, v);
  for (const auto& v : m.extra_values()) add_value(d, v);
  return d;
}

// All maps `vars -> dom`, or nullopt past `cap`.
inline std::optional<std::vector<Interp>> all_interps(const std::vector<std::string>& vars,
                                                      const std::vector<Value>& dom, size_t cap,
                                                      const Interp& base = {}) {
  std::vector<Interp> out{base};
  for (const auto& x : vars) {
    if (out.size() * dom.size() > cap) return std::nullopt;
    std::vector<Interp> next;
    for (const auto& th : out)
      for (const auto& v : dom) {
        Interp t = th;
        t[x] = v;
        next.push_back(std::move(t));
      }
    out = std::move(next);
  }
  return out;
}

// θ, (s, h) |= A over a concrete model.
template <class Model>
class Satisfaction {
 public:
  using CMem = typename Model::CMem;

  Satisfaction(const Model& m, const PredTable& preds, Bounds b) : m_(m), preds_(preds), b_(std::move(b)) {
    base_dom_ = value_domain(m_, b_);
  }

  Holds holds(const Interp& th, const Store& s, const CMem& h, const Assertion& a) const {
    return holds(th, s, h, a, b_.depth);
  }

  Holds holds(const Interp& th, const Store& s, const CMem& h, const Assertion& a, int depth) const {
    switch (a->k) {
      case AK::Pure: {
        if (!(h == m_.empty())) return Holds::No;
        auto v = eval(a->e, th, s);
        return v && v->is_true() ? Holds::Yes : Holds::No;
      }
      case AK::True: return m_.is_wf(h) ? Holds::Yes : Holds::No;
      case AK::Emp: return h == m_.empty() ? Holds::Yes : Holds::No;
      case AK::Implies: {
        Holds l = holds(th, s, h, a->a, depth);
        if (l == Holds::No) return Holds::Yes;
        Holds r = holds(th, s, h, a->b, depth);
        if (r == Holds::Yes) return Holds::Yes;
        return l == Holds::Yes ? r : Holds::DepthExceeded;
      }
      case AK::Or: {
        Holds l = holds(th, s, h, a->a, depth);
        if (l == Holds::Yes) return l;
        return h_or(l, holds(th, s, h, a->b, depth));
      }
      case AK::Exists: {
        Holds r = Holds::No;
        for (const auto& v : domain(th, s)) {
          Interp t = th;
          t[a->name] = v;
          r = h_or(r, holds(t, s, h, a->a, depth));
          if (r == Holds::Yes) break;
        }
        return r;
      }
      case AK::Star: {
        Holds r = Holds::No;
        for (const auto& [h1, h2] : m_.splits(h)) {
          Holds l = holds(th, s, h1, a->a, depth);
          if (l == Holds::No) continue;
          r = h_or(r, h_and(l, holds(th, s, h2, a->b, depth)));
          if (r == Holds::Yes) break;
        }
        return r;
      }
      case AK::Res: {
        std::vector<Value> in, out;
        if (!eval_all(a->ins, th, s, in) || !eval_all(a->outs, th, s, out)) return Holds::No;
        return m_.holds_resource(h, a->name, in, out) ? Holds::Yes : Holds::No;
      }
      case AK::Pred: {
        auto it = preds_.find(a->name);
        if (it == preds_.end()) return Holds::No;
        const PredDef& pd = it->second;
        std::vector<Value> in, out;
        if (!eval_all(a->ins, th, s, in) || !eval_all(a->outs, th, s, out)) return Holds::No;
        if (in.size() != pd.ins.size() || out.size() != pd.outs.size()) return Holds::No;
        if (depth <= 0) return Holds::DepthExceeded;
        Interp t;
        for (size_t i = 0; i < in.size(); ++i) t[pd.ins[i]] = in[i];
        for (size_t i = 0; i < out.size(); ++i) t[pd.outs[i]] = out[i];
        return holds(t, {}, h, pd.body, depth - 1);
      }
    }
    return Holds::No;
  }

  std::vector<Value> domain(const Interp& th, const Store& s) const {
    std::vector<Value> d = base_dom_;
    for (const auto& [k, v] : th) add_value(d, v);
    for (const auto& [k, v] : s) add_value(d, v);
    return d;
  }

  const std::vector<Value>& base_domain() const { return base_dom_; }
  const Bounds& bounds() const { return b_; }
  const Model& model() const { return m_; }
  const PredTable& preds() const { return preds_; }

 private:
  static bool eval_all(const std::vector<Expr>& es, const Interp& th, const Store& s, std::vector<Value>& out) {
    for (const auto& e : es) {
      auto v = eval(e, th, s);
      if (!v) return false;
      out.push_back(*v);
    }
    return true;
  }

  Model m_;
  const PredTable& preds_;
  Bounds b_;
  std::vector<Value> base_dom_;
};

// internalisation

struct Implication {
  Assertion lhs, rhs;
};

struct InternalObligation {
  Assertion pre;  // external pre with locals = nil
  Cmd body;
  Expr ret;
  std::vector<std::string> locals;
  Assertion post_ok, post_err;  // internal posts
  std::vector<Implication> side;
};

inline void check_external_shape(const Quadruple& q) {
  std::set<std::string> xs(q.pvars.begin(), q.pvars.end()), ps(q.params.begin(), q.params.end());
  if (xs.size() != q.pvars.size()) throw ShapeError("duplicate parameter in spec of " + q.fid);
  if (ps.size() != q.params.size() || q.params.size() != q.pvars.size())
    throw ShapeError("parameter variables of spec of " + q.fid + " are not distinct");
  if (!pvars_of(q.pre).empty()) throw ShapeError("precondition of " + q.fid + " mentions program variables");
  auto only = [&](const Assertion& a, const std::string& x) {
    if (is_false_assertion(a)) return true;
    for (const auto& v : pvars_of(a))
      if (v != x) return false;
    return true;
  };
  if (!only(q.post_ok, "ret")) throw ShapeError("ok postcondition of " + q.fid + " mentions variables other than ret");
  if (!only(q.post_err, "err")) throw ShapeError("err postcondition of " + q.fid + " mentions variables other than err");
}

inline std::string fresh_for(const std::string& base, const std::set<std::string>& used) {
  std::string n = base;
  for (int i = 1; used.count(n); ++i) n = base + "_" + std::to_string(i);
  return n;
}

// Builds the internal obligation. The internal posts default to the external
// ones with ret replaced by the return expression.
inline InternalObligation internalize(const Quadruple& q, const FunctionDef& f, Mode mode,
                                      std::optional<Assertion> qok_int = std::nullopt,
                                      std::optional<Assertion> qerr_int = std::nullopt) {
  if (q.fid != f.id) throw ShapeError("spec names " + q.fid + " but function is " + f.id);
  check_external_shape(q);
  if (q.pvars != f.params) throw ShapeError("spec parameters of " + q.fid + " differ from the definition");
  InternalObligation io;
  io.body = f.body;
  io.ret = f.ret;
  io.locals = f.locals();
  std::vector<Assertion> pre{q.full_pre()};
  for (const auto& z : io.locals) pre.push_back(a_pure(e_eq(pvar(z), lit(Value::nil()))));
  io.pre = a_star_all(pre);
  io.post_ok = qok_int ? *qok_int : subst_pvars(q.post_ok, Subst{{"ret", f.ret}});
  io.post_err = qerr_int ? *qerr_int : q.post_err;

  std::vector<std::string> pv = f.params;
  pv.insert(pv.end(), io.locals.begin(), io.locals.end());
  std::set<std::string> used = lvars_of(io.post_ok);
  auto more = lvars_of(io.post_err);
  used.insert(more.begin(), more.end());
  Subst ren;
  std::vector<std::string> ps;
  for (const auto& x : pv) {
    std::string p = fresh_for("p_" + x, used);
    used.insert(p);
    ps.push_back(p);
    ren[x] = lvar(p);
  }
  auto close = [&](Assertion a) {
    for (auto it = ps.rbegin(); it != ps.rend(); ++it) a = a_exists(*it, a);
    return a;
  };
  Assertion ok_ext = close(a_star(subst_pvars(io.post_ok, ren), a_pure(e_eq(pvar("ret"), subst_pvars(f.ret, ren, false)))));
  Assertion err_ext = close(subst_pvars(io.post_err, ren));

  io.side.push_back({io.post_ok, a_star(a_pure(e_inval(f.ret)), a_true())});
  if (mode == Mode::UX || mode == Mode::EX) {
    io.side.push_back({q.post_ok, ok_ext});
    io.side.push_back({q.post_err, err_ext});
  }
  if (mode == Mode::OX || mode == Mode::EX) {
    io.side.push_back({ok_ext, q.post_ok});
    io.side.push_back({err_ext, q.post_err});
  }
  return io;
}

// bounded validity

enum class QVerdict : uint8_t { Valid, CounterExample, Inconclusive };

inline const char* qverdict_name(QVerdict v) {
  switch (v) {
    case QVerdict::Valid: return "Valid";
    case QVerdict::CounterExample: return "CounterExample";
    case QVerdict::Inconclusive: return "Inconclusive";
  }
  return "?";
}

struct QuadCheck {
  QVerdict verdict = QVerdict::Valid;
  std::string reason;
  nlohmann::json witness;
  size_t pre_models = 0;  // (θ, s, h) triples satisfying the precondition
};

inline nlohmann::json interp_json(const Interp& th) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [k, v] : th) j["#" + k] = v.show();
  return j;
}

constexpr size_t kInterpCap = 20000;

template <class Model>
class BoundedChecker {
 public:
  using CMem = typename Model::CMem;

  BoundedChecker(const Model& m, const ImplContext& g, const PredTable& preds, Bounds b)
      : m_(m), g_(g), sat_(m, preds, b), b_(std::move(b)), heaps_(m.enumerate(b_)) {}

  const std::vector<CMem>& heaps() const { return heaps_; }
  const Satisfaction<Model>& sat() const { return sat_; }

  // Function quadruple {x = #x * P} f(x) {ok: Qok} {err: Qerr}.
  QuadCheck check(const Quadruple& q) const {
    if (!g_.count(q.fid)) return {QVerdict::Inconclusive, "FuncMissing", {}};
    const Assertion pre = q.full_pre();
    auto runner = [&](const Store& s, const CMem& h, bool& ex) {
      std::vector<Value> args;
      for (const auto& x : q.pvars) args.push_back(s.at(x));
      std::vector<std::tuple<Outcome, Store, CMem>> out;
      Interpreter<Model> in(m_, g_, AllocCtx{b_.max_addresses, {}});
      for (auto& r : in.run_function(q.fid, args, h, b_.budget, &ex))
        out.push_back({r.o, Store{{r.o == Outcome::Ok ? "ret" : "err", r.v}}, std::move(r.mem)});
      return out;
    };
    auto pre_stores = [&](const Interp& th) {
      Store s;
      for (size_t i = 0; i < q.pvars.size(); ++i) {
        auto it = th.find(q.params[i]);
        if (it == th.end()) return std::vector<Store>{};
        s[q.pvars[i]] = it->second;
      }
      return std::vector<Store>{s};
    };
    auto post_stores = [&](const Interp& th, Outcome o, const Assertion& Q) {
      std::string x = o == Outcome::Ok ? "ret" : "err";
      std::vector<Store> r;
      for (const auto& v : candidates(th, Q)) r.push_back(Store{{x, v}});
      return r;
    };
    return run_check(q.flavor, pre, q.post_ok, q.post_err, runner, pre_stores, post_stores);
  }

  // Command quadruple over stores on the program variables involved.
  QuadCheck check_cmd(Flavor fl, const Assertion& P, const Cmd& c, const Assertion& Qok, const Assertion& Qerr) const {
    std::set<std::string> pv = prog_vars(c);
    for (const auto& a : {P, Qok, Qerr}) {
      auto more = pvars_of(a);
      pv.insert(more.begin(), more.end());
    }
    pv.erase("err");
    std::vector<std::string> xs(pv.begin(), pv.end());
    auto runner = [&](const Store& s, const CMem& h, bool& ex) {
      std::vector<std::tuple<Outcome, Store, CMem>> out;
      Interpreter<Model> in(m_, g_, AllocCtx{b_.max_addresses, {}});
      auto rr = in.run(s, h, c, b_.budget);
      ex = ex || rr.budget_exhausted;
      for (auto& r : rr.results) out.push_back({r.o, std::move(r.s), std::move(r.mem)});
      return out;
    };
    auto stores = [&](const Interp& th, const Assertion& A, bool with_err) {
      std::vector<Value> dom = candidates(th, A);
      auto all = all_interps(xs, dom, kInterpCap);
      std::vector<Store> r;
      if (!all) return r;
      for (auto& s : *all) {
        if (!with_err) {
          r.push_back(s);
          continue;
        }
        for (const auto& v : dom) {
          Store s2 = s;
          s2["err"] = v;
          r.push_back(s2);
        }
      }
      return r;
    };
    auto pre_stores = [&](const Interp& th) { return stores(th, P, false); };
    auto post_stores = [&](const Interp& th, Outcome o, const Assertion& Q) { return stores(th, Q, o != Outcome::Ok); };
    return run_check(fl, P, Qok, Qerr, runner, pre_stores, post_stores);
  }

  // |= lhs => rhs over bounded interpretations, stores on `pvs` and heaps.
  QuadCheck check_implication(const Assertion& lhs, const Assertion& rhs, const std::vector<std::string>& pvs) const {
    std::set<std::string> lv = lvars_of(lhs);
    auto more = lvars_of(rhs);
    lv.insert(more.begin(), more.end());
    auto ths = all_interps({lv.begin(), lv.end()}, sat_.base_domain(), kInterpCap);
    if (!ths) return {QVerdict::Inconclusive, "InterpretationCap", {}};
    bool unknown = false;
    for (const auto& th : *ths) {
      auto ss = all_interps(pvs, sat_.base_domain(), kInterpCap);
      if (!ss) return {QVerdict::Inconclusive, "StoreCap", {}};
      for (const auto& s : *ss)
        for (const auto& h : heaps_) {
          Holds l = sat_.holds(th, s, h, lhs);
          if (l == Holds::No) continue;
          Holds r = sat_.holds(th, s, h, rhs);
          if (l == Holds::Yes && r == Holds::No)
            return {QVerdict::CounterExample, "ImplicationFails",
                    {{"interp", interp_json(th)}, {"store", interp_json_store(s)}, {"mem", m_.to_json(h)}}};
          if (r != Holds::Yes) unknown = true;
        }
    }
    return unknown ? QuadCheck{QVerdict::Inconclusive, "DepthExceeded", {}} : QuadCheck{};
  }

 private:
  static nlohmann::json interp_json_store(const Store& s) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [k, v] : s) j[k] = v.show();
    return j;
  }

  // Values worth trying for a variable constrained by A under θ: the domain
  // plus every defined subexpression of A.
  std::vector<Value> candidates(const Interp& th, const Assertion& A) const {
    std::vector<Value> d = sat_.domain(th, {});
    std::function<void(const Expr&)> walk = [&](const Expr& e) {
      if (!e->has_pvar)
        if (auto v = eval(e, th, {})) add_value(d, *v);
      for (const auto& k : e->kids) walk(k);
    };
    map_exprs(A, [&](const Expr& e) {
      walk(e);
      return e;
    });
    return d;
  }

  template <class Runner, class PreStores, class PostStores>
  QuadCheck run_check(Flavor fl, const Assertion& P, const Assertion& Qok, const Assertion& Qerr, Runner runner,
                      PreStores pre_stores, PostStores post_stores) const {
    std::set<std::string> lv = lvars_of(P);
    for (const auto& a : {Qok, Qerr}) {
      auto more = lvars_of(a);
      lv.insert(more.begin(), more.end());
    }
    auto ths = all_interps({lv.begin(), lv.end()}, sat_.base_domain(), kInterpCap);
    if (!ths) return {QVerdict::Inconclusive, "InterpretationCap", {}};
    bool unknown = false;
    std::string why;
    size_t pre_models = 0;
    for (const auto& th : *ths) {
      // every execution from every pre-model
      std::vector<std::tuple<Outcome, Store, CMem>> reached;
      bool exhausted = false;
      for (const auto& s : pre_stores(th))
        for (const auto& h : heaps_) {
          Holds p = sat_.holds(th, s, h, P);
          if (p == Holds::DepthExceeded) unknown = true, why = "DepthExceeded";
          if (p != Holds::Yes) continue;
          ++pre_models;
          for (auto& [o, s2, h2] : runner(s, h, exhausted)) {
            auto wit = [&, o = o, &s2 = s2, &h2 = h2](const char* r) {
              return QuadCheck{QVerdict::CounterExample, r,
                               {{"interp", interp_json(th)},
                                {"store", interp_json_store(s)},
                                {"mem", m_.to_json(h)},
                                {"outcome", outcome_name(o)},
                                {"final_store", interp_json_store(s2)},
                                {"final_mem", m_.to_json(h2)}}};
            };
            if (fl != Flavor::ISL) {
              if (o == Outcome::Miss) return wit("MissOutcome");
              Holds q = sat_.holds(th, s2, h2, o == Outcome::Ok ? Qok : Qerr);
              if (q == Holds::No) return wit("PostconditionFails");
              if (q == Holds::DepthExceeded) unknown = true, why = "DepthExceeded";
            }
            reached.push_back({o, s2, h2});
          }
        }
      if (exhausted) unknown = true, why = "BudgetExhausted";
      if (fl == Flavor::SL) continue;
      // every post-model is reached
      for (Outcome o : {Outcome::Ok, Outcome::Err}) {
        const Assertion& Q = o == Outcome::Ok ? Qok : Qerr;
        if (is_false_assertion(Q)) continue;
        for (const auto& s2 : post_stores(th, o, Q))
          for (const auto& h2 : heaps_) {
            Holds q = sat_.holds(th, s2, h2, Q);
            if (q == Holds::DepthExceeded) unknown = true, why = "DepthExceeded";
            if (q != Holds::Yes || reached_match(reached, o, s2, h2)) continue;
            return {QVerdict::CounterExample, "Unreachable",
                    {{"interp", interp_json(th)},
                     {"outcome", outcome_name(o)},
                     {"final_store", interp_json_store(s2)},
                     {"final_mem", m_.to_json(h2)}}};
          }
      }
    }
    QuadCheck r = unknown ? QuadCheck{QVerdict::Inconclusive, why, {}} : QuadCheck{};
    r.pre_models = pre_models;
    return r;
  }

  // Reached final stores may bind more variables than the post store.
  static bool reached_match(const std::vector<std::tuple<Outcome, Store, CMem>>& reached, Outcome o, const Store& s2,
                            const CMem& h2) {
    for (const auto& [ro, rs, rh] : reached) {
      if (ro != o || !(rh == h2)) continue;
      bool ok = true;
      for (const auto& [k, v] : s2) {
        auto it = rs.find(k);
        if (it == rs.end() || !(it->second == v)) {
          ok = false;
          break;
        }
      }
      if (ok && rs.size() == s2.size()) return true;
    }
    return false;
  }

  Model m_;
  const ImplContext& g_;
  Satisfaction<Model> sat_;
  Bounds b_;
  std::vector<CMem> heaps_;
};

}  // namespace polyheap
