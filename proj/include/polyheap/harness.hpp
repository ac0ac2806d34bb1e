#pragma once

#include <functional>
#include <json.hpp>
#include <optional>

#include "engine.hpp"
#include "interp.hpp"
#include "logic.hpp"
#include "pretty.hpp"

namespace polyheap {

struct CheckReport {
  CheckReport(std::string m, std::string c, std::string md) : model(std::move(m)), check(std::move(c)), mode(std::move(md)) {}
  std::string model, check, mode;
  bool pass = true;
  size_t trials = 0;
  size_t applicable = 0;    // trials whose premises held
  size_t inconclusive = 0;  // trials where a bounded search ran out
  nlohmann::json witness;   // first counterexample, null on pass

  nlohmann::json to_json() const {
    nlohmann::json j{{"model", model},
                     {"check", check},
                     {"mode", mode},
                     {"verdict", pass ? "pass" : "refuted"},
                     {"trials", trials},
                     {"applicable", applicable}};
    if (!witness.is_null()) j["witness"] = witness;
    return j;
  }
};

inline nlohmann::json values_json(const std::vector<Value>& vs) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& v : vs) j.push_back(v.show());
  return j;
}

inline nlohmann::json store_json(const Store& s) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [x, v] : s) j[x] = v.show();
  return j;
}

// Enumerates extensions of th over `vars` and stops at the first one
// accepted by f. Sets *capped when the search was cut at `cap`.
template <class F>
bool any_extension(Interp th, const std::vector<std::string>& vars, const std::vector<Value>& dom, size_t cap,
                   F&& f, bool* capped = nullptr) {
  size_t seen = 0;
  std::function<bool(size_t)> go = [&](size_t i) -> bool {
    if (i == vars.size()) {
      if (++seen > cap) {
        if (capped) *capped = true;
        return false;
      }
      return f(th);
    }
    for (const auto& v : dom) {
      th[vars[i]] = v;
      if (go(i + 1)) return true;
      if (seen > cap) return false;
    }
    th.erase(vars[i]);
    return false;
  };
  return go(0);
}

inline std::vector<std::string> unbound(const std::set<std::string>& vs, const Interp& th) {
  std::vector<std::string> r;
  for (const auto& x : vs)
    if (!th.count(x)) r.push_back(x);
  return r;
}

inline bool eval_true(const Expr& e, const Interp& th) {
  auto v = eval(e, th, {});
  return v && v->is_true();
}

inline std::optional<std::vector<Value>> eval_all(const std::vector<Expr>& es, const Interp& th) {
  std::vector<Value> r;
  for (const auto& e : es) {
    auto v = eval(e, th, {});
    if (!v) return std::nullopt;
    r.push_back(*v);
  }
  return r;
}

inline std::set<std::string> expr_lvars(const std::vector<Expr>& es) {
  std::set<std::string> r;
  for (const auto& e : es) collect_lvars(e, r);
  return r;
}

// Conformance checks of a memory model: PCM laws, frame, action soundness,
// and consume/produce soundness, each in OX or UX form.
template <class Model>
class Conformance {
 public:
  using CMem = typename Model::CMem;
  using SMem = typename Model::SMem;

  static constexpr size_t kExtCap = 4096;

  Conformance(const Model& m, Bounds b) : m_(m), b_(std::move(b)) {
    for (const auto& v : b_.values) add_value(vals_, v);
    for (const auto& v : m_.extra_values()) add_value(vals_, v);
    uint64_t n_addr = b_.max_addresses + 2;
    for (const auto& v : vals_)
      if (v.is_nat()) n_addr = std::max<uint64_t>(n_addr, v.as_nat() + 1);
    dom_ = vals_;
    for (uint64_t a = 0; a < n_addr; ++a) {
      add_value(dom_, Value::nat(a));
      addrs_.push_back(Value::nat(a));
      alloc_.extra.push_back(a);
    }
    alloc_.k = 0;
    pool_ = {lvar("a"), lvar("b"), lvar("c")};
    for (const auto& v : vals_) pool_.push_back(lit(v));
  }

  const AllocCtx& alloc() const { return alloc_; }
  const std::vector<Value>& domain() const { return dom_; }

  // PCM

  CheckReport pcm(bool exhaustive, size_t trials, uint64_t seed) const {
    CheckReport rep{m_.name(), "pcm", "both"};
    if (exhaustive) {
      auto hs = m_.enumerate(b_);
      auto fail = [&](const CMem& a, const CMem& b, const CMem& c, const std::string& law) {
        auto [a2, b2, c2] = shrink3(a, b, c, law);
        rep.pass = false;
        rep.witness = pcm_witness(a2, b2, c2, law);
      };
      for (const auto& a : hs) {
        ++rep.trials;
        if (auto law = unit_law(a)) return fail(a, a, a, *law), rep;
      }
      for (const auto& a : hs)
        for (const auto& b : hs) {
          ++rep.trials;
          if (auto law = comm_law(a, b)) return fail(a, b, b, *law), rep;
        }
      for (const auto& a : hs)
        for (const auto& b : hs) {
          auto ab = m_.compose(a, b);
          for (const auto& c : hs) {
            ++rep.trials;
            if (!assoc_ok(a, b, c, ab)) return fail(a, b, c, "associativity"), rep;
          }
        }
      rep.applicable = rep.trials;
      return rep;
    }
    Rng rng(mix_seed(seed, "pcm"));
    for (size_t t = 0; t < trials; ++t) {
      ++rep.trials;
      ++rep.applicable;
      CMem a = m_.generate(rng, b_), b = m_.generate(rng, b_), c = m_.generate(rng, b_);
      if (coin(rng, 50)) {
        auto sp = m_.splits(a);
        auto& pr = sp[pick(rng, sp.size())];
        a = pr.first, b = pr.second;
      }
      if (auto law = pcm_violation(a, b, c)) {
        auto [a2, b2, c2] = shrink3(a, b, c, *law);
        rep.pass = false;
        rep.witness = pcm_witness(a2, b2, c2, *law);
        return rep;
      }
    }
    return rep;
  }

  // frame

  CheckReport frame(Mode mode, bool exhaustive, size_t trials, uint64_t seed) const {
    CheckReport rep{m_.name(), "frame", mode_name(mode)};
    auto try_one = [&](const CMem& mu, const CMem& mf, const ActionSig& a, const std::vector<Value>& args) {
      ++rep.trials;
      bool app = false;
      if (frame_ok(mode, mu, mf, a.name, args, app)) {
        rep.applicable += app;
        return true;
      }
      ++rep.applicable;
      auto [mu2, mf2] = shrink2(mu, mf, [&](const CMem& x, const CMem& y) {
        bool ap = false;
        return !frame_ok(mode, x, y, a.name, args, ap);
      });
      rep.pass = false;
      rep.witness = {{"mem", m_.to_json(mu2)}, {"frame", m_.to_json(mf2)}, {"action", a.name}, {"args", values_json(args)}};
      return false;
    };
    if (exhaustive) {
      auto hs = m_.enumerate(b_);
      for (const auto& a : m_.actions()) {
        auto tuples = arg_tuples(a.arity);
        for (const auto& mu : hs)
          for (const auto& mf : hs)
            for (const auto& args : tuples)
              if (!try_one(mu, mf, a, args)) return rep;
      }
      return rep;
    }
    Rng rng(mix_seed(seed, std::string("frame-") + mode_name(mode)));
    auto acts = m_.actions();
    for (size_t t = 0; t < trials; ++t) {
      auto [mu, mf] = gen_pair(rng);
      const auto& a = acts[pick(rng, acts.size())];
      std::vector<Value> args;
      for (size_t i = 0; i < a.arity; ++i) args.push_back(rand_arg(rng));
      if (!try_one(mu, mf, a, args)) return rep;
    }
    return rep;
  }

  // Frame for whole commands built from actions only.
  CheckReport command_frame(Mode mode, size_t programs, size_t per_program, uint64_t seed) const {
    CheckReport rep{m_.name(), "command-frame", mode_name(mode)};
    Rng rng(mix_seed(seed, std::string("cframe-") + mode_name(mode)));
    ImplContext none;
    Interpreter<Model> in(m_, none, alloc_);
    for (size_t p = 0; p < programs; ++p) {
      Cmd c = gen_action_program(rng);
      for (size_t k = 0; k < per_program; ++k) {
        ++rep.trials;
        Store s{{"x", rand_arg(rng)}, {"y", rand_arg(rng)}};
        auto [mu, mf] = gen_pair(rng);
        bool app = false;
        if (cmd_frame_ok(in, mode, s, mu, mf, c, app)) {
          rep.applicable += app;
          continue;
        }
        ++rep.applicable;
        rep.pass = false;
        rep.witness = {{"program", show(c)}, {"store", store_json(s)}, {"mem", m_.to_json(mu)}, {"frame", m_.to_json(mf)}};
        return rep;
      }
    }
    return rep;
  }

  // action soundness

  CheckReport action(Mode mode, size_t trials, uint64_t seed) const {
    CheckReport rep{m_.name(), "action", mode_name(mode)};
    Rng rng(mix_seed(seed, std::string("action-") + mode_name(mode)));
    auto acts = m_.actions();
    for (size_t t = 0; t < trials; ++t) {
      ++rep.trials;
      SMem sh = m_.gen_symbolic(rng, b_, pool_);
      const auto& a = acts[pick(rng, acts.size())];
      std::vector<Expr> args;
      for (size_t i = 0; i < a.arity; ++i) args.push_back(rand_sym_arg(rng));
      std::set<std::string> lv = m_.lvars(sh);
      collect_all(args, lv);
      Interp th = rand_theta(rng, lv);
      FreshGen fg;
      auto srs = m_.sym_action(sh, a.name, args, fg);
      nlohmann::json why;
      int r = mode == Mode::OX ? action_ox(sh, a.name, args, th, srs, why) : action_ux(sh, a.name, args, th, srs, why);
      if (r < 0) {
        ++rep.inconclusive;
        continue;
      }
      if (r == 0) continue;
      ++rep.applicable;
      if (r == 2) {
        rep.pass = false;
        why["sym_mem"] = m_.to_json(sh);
        why["action"] = a.name;
        why["args"] = exprs_json(args);
        why["theta"] = interp_json(th);
        rep.witness = why;
        return rep;
      }
    }
    return rep;
  }

  // consume / produce soundness

  CheckReport cp(Mode mode, size_t trials, uint64_t seed) const {
    CheckReport rep{m_.name(), "consume-produce", mode_name(mode)};
    Rng rng(mix_seed(seed, std::string("cp-") + mode_name(mode)));
    auto ress = m_.resources();
    for (size_t t = 0; t < trials; ++t) {
      ++rep.trials;
      SMem sh = m_.gen_symbolic(rng, b_, pool_);
      const auto& rs = ress[pick(rng, ress.size())];
      std::vector<Expr> ins, outs;
      for (size_t i = 0; i < rs.nin; ++i) ins.push_back(rand_sym_arg(rng));
      for (size_t i = 0; i < rs.nout; ++i) outs.push_back(pool_[pick(rng, pool_.size())]);
      std::set<std::string> lv = m_.lvars(sh);
      collect_all(ins, lv);
      collect_all(outs, lv);
      Interp th = rand_theta(rng, lv);
      bool consume = coin(rng, 50);
      nlohmann::json why;
      int r;
      if (consume) r = mode == Mode::OX ? consume_ox(rs.name, ins, sh, th, why) : consume_ux(rs.name, ins, sh, th, why);
      else r = mode == Mode::OX ? produce_ox(rs.name, ins, outs, sh, th, why) : produce_ux(rs.name, ins, outs, sh, th, why);
      if (r < 0) {
        ++rep.inconclusive;
        continue;
      }
      if (r == 0) continue;
      ++rep.applicable;
      if (r == 2) {
        rep.pass = false;
        why["op"] = consume ? "consume" : "produce";
        why["resource"] = rs.name;
        why["ins"] = exprs_json(ins);
        if (!consume) why["outs"] = exprs_json(outs);
        why["sym_mem"] = m_.to_json(sh);
        why["theta"] = interp_json(th);
        rep.witness = why;
        return rep;
      }
    }
    return rep;
  }

  // Random generators shared with the differential harness.

  Interp rand_theta(Rng& rng, const std::set<std::string>& vars) const {
    Interp th;
    for (const auto& x : vars) {
      if (coin(rng, 60)) th[x] = addrs_[pick(rng, std::min<size_t>(addrs_.size(), b_.max_addresses + 1))];
      else th[x] = dom_[pick(rng, dom_.size())];
    }
    return th;
  }
  const std::vector<Expr>& pool() const { return pool_; }
  Value rand_arg(Rng& rng) const {
    if (coin(rng, 60)) return addrs_[pick(rng, std::min<size_t>(addrs_.size(), b_.max_addresses + 1))];
    return dom_[pick(rng, dom_.size())];
  }

  std::pair<CMem, CMem> gen_pair(Rng& rng) const {
    if (coin(rng, 60)) {
      CMem h = m_.generate(rng, b_);
      auto sp = m_.splits(h);
      return sp[pick(rng, sp.size())];
    }
    return {m_.generate(rng, b_), m_.generate(rng, b_)};
  }

  Cmd gen_action_program(Rng& rng) const {
    auto acts = m_.actions();
    size_t n = 1 + pick(rng, 4);
    std::vector<Cmd> cs;
    static const char* vars[] = {"x", "y"};
    for (size_t i = 0; i < n; ++i) {
      const auto& a = acts[pick(rng, acts.size())];
      std::vector<Expr> args;
      for (size_t j = 0; j < a.arity; ++j) {
        if (coin(rng, 50)) args.push_back(pvar(vars[pick(rng, 2)]));
        else args.push_back(lit(rand_arg(rng)));
      }
      std::vector<std::string> outs;
      for (size_t j = 0; j < a.nout; ++j) outs.push_back(vars[pick(rng, 2)]);
      cs.push_back(c_action(outs, a.name, args));
    }
    return c_seq_all(cs);
  }

 private:
  static void collect_all(const std::vector<Expr>& es, std::set<std::string>& out) {
    for (const auto& e : es) collect_lvars(e, out);
  }
  static nlohmann::json exprs_json(const std::vector<Expr>& es) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& e : es) j.push_back(show(e));
    return j;
  }

  Expr rand_sym_arg(Rng& rng) const {
    if (coin(rng, 50)) return pool_[pick(rng, 3)];
    return lit(rand_arg(rng));
  }

  std::vector<std::vector<Value>> arg_tuples(size_t n) const {
    std::vector<std::vector<Value>> out{{}};
    for (size_t i = 0; i < n; ++i) {
      std::vector<std::vector<Value>> next;
      for (const auto& t : out)
        for (const auto& v : dom_) {
          auto t2 = t;
          t2.push_back(v);
          next.push_back(std::move(t2));
        }
      out = std::move(next);
    }
    return out;
  }

  bool defined(const std::optional<CMem>& h) const { return h && m_.is_wf(*h); }

  // PCM laws

  std::optional<std::string> unit_law(const CMem& a) const {
    CMem e = m_.empty();
    auto l = m_.compose(a, e), r = m_.compose(e, a);
    if (!l || !(*l == a) || !r || !(*r == a)) return "identity";
    return std::nullopt;
  }
  std::optional<std::string> comm_law(const CMem& a, const CMem& b) const {
    auto ab = m_.compose(a, b), ba = m_.compose(b, a);
    if (ab.has_value() != ba.has_value() || (ab && !(*ab == *ba))) return "commutativity";
    return std::nullopt;
  }
  bool assoc_ok(const CMem& a, const CMem& b, const CMem& c, const std::optional<CMem>& ab) const {
    std::optional<CMem> l, r;
    if (ab) l = m_.compose(*ab, c);
    auto bc = m_.compose(b, c);
    if (bc) r = m_.compose(a, *bc);
    return l.has_value() == r.has_value() && (!l || *l == *r);
  }
  std::optional<std::string> pcm_violation(const CMem& a, const CMem& b, const CMem& c) const {
    if (auto l = unit_law(a)) return l;
    if (auto l = comm_law(a, b)) return l;
    if (!assoc_ok(a, b, c, m_.compose(a, b))) return "associativity";
    return std::nullopt;
  }
  bool still_fails(const CMem& a, const CMem& b, const CMem& c, const std::string& law) const {
    if (law == "identity") return unit_law(a).has_value();
    if (law == "commutativity") return comm_law(a, b).has_value();
    return !assoc_ok(a, b, c, m_.compose(a, b));
  }
  nlohmann::json pcm_witness(const CMem& a, const CMem& b, const CMem& c, const std::string& law) const {
    nlohmann::json j{{"law", law}, {"a", m_.to_json(a)}};
    if (law != "identity") j["b"] = m_.to_json(b);
    if (law == "associativity") j["c"] = m_.to_json(c);
    return j;
  }

  // greedy shrinking

  std::tuple<CMem, CMem, CMem> shrink3(CMem a, CMem b, CMem c, const std::string& law) const {
    for (bool progress = true; progress;) {
      progress = false;
      for (int which = 0; which < 3 && !progress; ++which) {
        CMem& x = which == 0 ? a : which == 1 ? b : c;
        for (auto& cand : m_.shrink(x, b_)) {
          CMem old = x;
          x = cand;
          if (still_fails(a, b, c, law)) {
            progress = true;
            break;
          }
          x = old;
        }
      }
    }
    return {a, b, c};
  }

  template <class Fails>
  std::pair<CMem, CMem> shrink2(CMem a, CMem b, Fails&& fails) const {
    for (bool progress = true; progress;) {
      progress = false;
      for (int which = 0; which < 2 && !progress; ++which) {
        CMem& x = which == 0 ? a : b;
        for (auto& cand : m_.shrink(x, b_)) {
          CMem old = x;
          x = cand;
          if (fails(a, b)) {
            progress = true;
            break;
          }
          x = old;
        }
      }
    }
    return {a, b};
  }

  // frame

  bool frame_ok(Mode mode, const CMem& mu, const CMem& mf, const std::string& act, const std::vector<Value>& args,
                bool& applicable) const {
    if (!m_.is_wf(mu) || !m_.is_wf(mf)) return true;
    auto comp = m_.compose(mu, mf);
    if (mode == Mode::OX) {
      if (!defined(comp)) return true;
      auto small = m_.exec_action(mu, act, args, alloc_);
      for (const auto& s : small)
        if (s.o == Outcome::Miss) return true;
      applicable = true;
      for (const auto& r : m_.exec_action(*comp, act, args, alloc_)) {
        bool found = false;
        for (const auto& s : small) {
          if (s.o != r.o || !(s.vals == r.vals)) continue;
          auto lifted = m_.compose(s.mem, mf);
          if (lifted && *lifted == r.mem) {
            found = true;
            break;
          }
        }
        if (!found) return false;
      }
      return true;
    }
    std::optional<std::vector<CActResult<CMem>>> big;
    for (const auto& s : m_.exec_action(mu, act, args, alloc_)) {
      if (s.o == Outcome::Miss) continue;
      auto lifted = m_.compose(s.mem, mf);
      if (!defined(lifted)) continue;
      applicable = true;
      if (!defined(comp)) return false;
      if (!big) big = m_.exec_action(*comp, act, args, alloc_);
      bool found = false;
      for (const auto& r : *big)
        if (r.o == s.o && r.vals == s.vals && r.mem == *lifted) {
          found = true;
          break;
        }
      if (!found) return false;
    }
    return true;
  }

  bool cmd_frame_ok(const Interpreter<Model>& in, Mode mode, const Store& s, const CMem& mu, const CMem& mf,
                    const Cmd& c, bool& applicable) const {
    if (!m_.is_wf(mu) || !m_.is_wf(mf)) return true;
    auto comp = m_.compose(mu, mf);
    int budget = b_.budget;
    if (mode == Mode::OX) {
      if (!defined(comp)) return true;
      auto small = in.run(s, mu, c, budget).results;
      for (const auto& r : small)
        if (r.o == Outcome::Miss) return true;
      applicable = true;
      for (const auto& r : in.run(s, *comp, c, budget).results) {
        bool found = false;
        for (const auto& q : small) {
          if (q.o != r.o || q.s != r.s) continue;
          auto lifted = m_.compose(q.mem, mf);
          if (lifted && *lifted == r.mem) {
            found = true;
            break;
          }
        }
        if (!found) return false;
      }
      return true;
    }
    std::optional<std::vector<CResult<CMem>>> big;
    for (const auto& q : in.run(s, mu, c, budget).results) {
      if (q.o == Outcome::Miss) continue;
      auto lifted = m_.compose(q.mem, mf);
      if (!defined(lifted)) continue;
      applicable = true;
      if (!defined(comp)) return false;
      if (!big) big = in.run(s, *comp, c, budget).results;
      bool found = false;
      for (const auto& r : *big)
        if (r.o == q.o && r.s == q.s && r.mem == *lifted) {
          found = true;
          break;
        }
      if (!found) return false;
    }
    return true;
  }

  // Trial verdicts: -1 inconclusive, 0 premises fail, 1 holds, 2 refuted.

  std::vector<Value> ext_domain(const std::vector<Value>& extra) const {
    std::vector<Value> d = dom_;
    for (const auto& v : extra) add_value(d, v);
    return d;
  }

  int action_ox(const SMem& sh, const std::string& act, const std::vector<Expr>& args, const Interp& th,
                const std::vector<SActResult<SMem>>& srs, nlohmann::json& why) const {
    auto h = m_.concretize(th, sh);
    auto vs = eval_all(args, th);
    if (!defined(h) || !vs) return 0;
    bool capped = false;
    for (const auto& sr : srs) {
      if (sr.o != Outcome::Abort) continue;
      if (any_extension(th, unbound(expr_lvars({sr.pc}), th), dom_, kExtCap,
                        [&](const Interp& t) { return eval_true(sr.pc, t); }, &capped))
        return 0;
    }
    for (const auto& cr : m_.exec_action(*h, act, *vs, alloc_)) {
      auto dom = ext_domain(cr.vals);
      bool found = false;
      for (const auto& sr : srs) {
        if (sr.o != cr.o || sr.vals.size() != cr.vals.size()) continue;
        std::set<std::string> lv = m_.lvars(sr.mem);
        collect_lvars(sr.pc, lv);
        collect_all(sr.vals, lv);
        found = any_extension(th, unbound(lv, th), dom, kExtCap, [&](const Interp& t) {
          if (!eval_true(sr.pc, t)) return false;
          auto h2 = m_.concretize(t, sr.mem);
          auto v2 = eval_all(sr.vals, t);
          return h2 && *h2 == cr.mem && v2 && *v2 == cr.vals;
        }, &capped);
        if (found) break;
      }
      if (!found) {
        if (capped) return -1;
        why = {{"reason", "concrete result not covered"},
               {"outcome", outcome_name(cr.o)},
               {"mem", m_.to_json(*h)},
               {"result_mem", m_.to_json(cr.mem)},
               {"vals", values_json(cr.vals)}};
        return 2;
      }
    }
    return 1;
  }

  int action_ux(const SMem& sh, const std::string& act, const std::vector<Expr>& args, const Interp& th,
                const std::vector<SActResult<SMem>>& srs, nlohmann::json& why) const {
    int verdict = 0;
    bool capped = false;
    for (const auto& sr : srs) {
      if (sr.o == Outcome::Abort) continue;
      std::set<std::string> lv = m_.lvars(sr.mem);
      collect_lvars(sr.pc, lv);
      collect_all(sr.vals, lv);
      bool bad = any_extension(th, unbound(lv, th), dom_, kExtCap, [&](const Interp& t) {
        if (!eval_true(sr.pc, t)) return false;
        auto h2 = m_.concretize(t, sr.mem);
        auto v2 = eval_all(sr.vals, t);
        auto vs = eval_all(args, t);
        if (!defined(h2) || !v2 || !vs) return false;
        verdict = std::max(verdict, 1);
        auto h = m_.concretize(t, sh);
        bool ok = false;
        if (defined(h))
          for (const auto& cr : m_.exec_action(*h, act, *vs, alloc_))
            if (cr.o == sr.o && cr.mem == *h2 && cr.vals == *v2) ok = true;
        if (ok) return false;
        why = {{"reason", h ? "symbolic result not reachable" : "no pre-memory"},
               {"outcome", outcome_name(sr.o)},
               {"theta_ext", interp_json(t)},
               {"result_mem", m_.to_json(*h2)},
               {"vals", values_json(*v2)}};
        return true;
      }, &capped);
      if (bad) return 2;
    }
    if (verdict == 0 && capped) return -1;
    return verdict;
  }

  int consume_ox(const std::string& r, const std::vector<Expr>& ins, const SMem& sh, const Interp& th,
                 nlohmann::json& why) const {
    auto h = m_.concretize(th, sh);
    auto vin = eval_all(ins, th);
    if (!defined(h) || !vin) return 0;
    auto crs = m_.consume_res(Mode::OX, Oracle(), r, ins, sh);
    bool capped = false;
    for (const auto& c : crs) {
      if (c.o != Outcome::Abort) continue;
      std::set<std::string> lv = m_.lvars(c.frame);
      collect_lvars(c.pi, lv);
      collect_lvars(c.pi_i, lv);
      if (any_extension(th, unbound(lv, th), dom_, kExtCap, [&](const Interp& t) {
            if (!eval_true(c.pi_i, t)) return true;
            return eval_true(c.pi, t) && m_.concretize(t, c.frame).has_value();
          }, &capped))
        return 0;
    }
    for (const auto& c : crs) {
      if (c.o != Outcome::Ok) continue;
      std::set<std::string> lv = m_.lvars(c.frame);
      collect_lvars(c.pi, lv);
      collect_lvars(c.pi_i, lv);
      collect_all(c.outs, lv);
      if (any_extension(th, unbound(lv, th), dom_, kExtCap, [&](const Interp& t) {
            if (!eval_true(c.pi_i, t)) return true;
            auto vout = eval_all(c.outs, t);
            if (!vout || !eval_true(c.pi, t)) return false;
            auto hr = m_.resource_mem(r, *vin, *vout);
            auto hf = m_.concretize(t, c.frame);
            if (!hr || !hf) return false;
            auto comp = m_.compose(*hr, *hf);
            return comp && *comp == *h;
          }, &capped))
        return 1;
    }
    if (capped) return -1;
    why = {{"reason", "no consumption result matches"}, {"mem", m_.to_json(*h)}};
    return 2;
  }

  int consume_ux(const std::string& r, const std::vector<Expr>& ins, const SMem& sh, const Interp& th,
                 nlohmann::json& why) const {
    int verdict = 0;
    bool capped = false;
    for (const auto& c : m_.consume_res(Mode::UX, Oracle(), r, ins, sh)) {
      if (c.o != Outcome::Ok) continue;
      std::set<std::string> lv = m_.lvars(c.frame);
      collect_lvars(c.pi, lv);
      collect_lvars(c.pi_i, lv);
      collect_all(c.outs, lv);
      bool bad = any_extension(th, unbound(lv, th), dom_, kExtCap, [&](const Interp& t) {
        auto vin = eval_all(ins, t);
        auto vout = eval_all(c.outs, t);
        if (!vin || !vout || !eval_true(c.pi, t)) return false;
        auto hr = m_.resource_mem(r, *vin, *vout);
        auto hf = m_.concretize(t, c.frame);
        if (!hr || !hf) return false;
        auto comp = m_.compose(*hr, *hf);
        if (!defined(comp)) return false;
        verdict = std::max(verdict, 1);
        auto h = m_.concretize(t, sh);
        if (eval_true(c.pi_i, t) && h && *h == *comp) return false;
        why = {{"reason", eval_true(c.pi_i, t) ? "consumed memory differs" : "pi_i not implied"},
               {"theta_ext", interp_json(t)},
               {"concrete", m_.to_json(*comp)}};
        return true;
      }, &capped);
      if (bad) return 2;
    }
    if (verdict == 0 && capped) return -1;
    return verdict;
  }

  int produce_ox(const std::string& r, const std::vector<Expr>& ins, const std::vector<Expr>& outs, const SMem& sh,
                 const Interp& th, nlohmann::json& why) const {
    auto hf = m_.concretize(th, sh);
    auto vin = eval_all(ins, th);
    auto vout = eval_all(outs, th);
    if (!hf || !vin || !vout) return 0;
    auto hr = m_.resource_mem(r, *vin, *vout);
    if (!hr) return 0;
    auto comp = m_.compose(*hr, *hf);
    if (!defined(comp)) return 0;
    bool capped = false;
    for (const auto& p : m_.produce_res(r, ins, outs, sh)) {
      std::set<std::string> lv = m_.lvars(p.mem);
      collect_lvars(p.pi, lv);
      if (any_extension(th, unbound(lv, th), dom_, kExtCap, [&](const Interp& t) {
            auto h = m_.concretize(t, p.mem);
            return eval_true(p.pi, t) && h && *h == *comp;
          }, &capped))
        return 1;
    }
    if (capped) return -1;
    why = {{"reason", "composed memory not produced"}, {"concrete", m_.to_json(*comp)}};
    return 2;
  }

  int produce_ux(const std::string& r, const std::vector<Expr>& ins, const std::vector<Expr>& outs, const SMem& sh,
                 const Interp& th, nlohmann::json& why) const {
    int verdict = 0;
    bool capped = false;
    for (const auto& p : m_.produce_res(r, ins, outs, sh)) {
      std::set<std::string> lv = m_.lvars(p.mem);
      collect_lvars(p.pi, lv);
      bool bad = any_extension(th, unbound(lv, th), dom_, kExtCap, [&](const Interp& t) {
        auto h = m_.concretize(t, p.mem);
        auto vin = eval_all(ins, t);
        auto vout = eval_all(outs, t);
        if (!eval_true(p.pi, t) || !defined(h) || !vin || !vout) return false;
        verdict = std::max(verdict, 1);
        auto hr = m_.resource_mem(r, *vin, *vout);
        auto hf = m_.concretize(t, sh);
        if (hr && hf) {
          auto comp = m_.compose(*hr, *hf);
          if (comp && *comp == *h) return false;
        }
        why = {{"reason", "produced memory does not split"}, {"theta_ext", interp_json(t)}, {"concrete", m_.to_json(*h)}};
        return true;
      }, &capped);
      if (bad) return 2;
    }
    if (verdict == 0 && capped) return -1;
    return verdict;
  }

  Model m_;
  Bounds b_;
  std::vector<Value> vals_, dom_, addrs_;
  std::vector<Expr> pool_;
  AllocCtx alloc_;
};

// Runs the engine under every oracle prefix it asks about, up to max_runs.
template <class Model>
std::vector<typename Engine<Model>::Result> run_all_oracles(Engine<Model>& eng, const SymState<typename Model::SMem>& st,
                                                            const Cmd& c, size_t max_runs, bool* truncated = nullptr) {
  std::vector<typename Engine<Model>::Result> out;
  std::vector<std::vector<size_t>> todo{{}};
  size_t runs = 0;
  while (!todo.empty()) {
    if (runs++ >= max_runs) {
      if (truncated) *truncated = true;
      break;
    }
    auto p = todo.back();
    todo.pop_back();
    auto log = std::make_shared<OracleLog>();
    for (auto& r : eng.exec(Oracle(p, log), st, c)) out.push_back(std::move(r));
    for (const auto& [pos, n] : log->arity) {
      if (pos < p.size()) continue;
      for (size_t j = 1; j < n; ++j) {
        auto q = p;
        q.resize(pos, 0);
        q.push_back(j);
        todo.push_back(std::move(q));
      }
    }
  }
  return out;
}

// Differential checks of symbolic execution against concrete execution.
template <class Model>
class Differential {
 public:
  using CMem = typename Model::CMem;
  using SMem = typename Model::SMem;
  using State = SymState<SMem>;

  Differential(const Model& m, Bounds b, PredTable preds = {})
      : m_(m), b_(b), conf_(m, b), preds_(std::move(preds)), sat_(m, preds_, b), solver_(b) {}

  struct Trial {
    bool excluded = false;  // side condition fails
    bool applicable = false;
    bool ok = true;
    bool inconclusive = false;
    nlohmann::json witness;
  };

  // Over-approximation: every concrete result from a model of st is covered.
  Trial ox_trial(const State& st, const Interp& th, const Store& s, const CMem& mu, const Cmd& c) {
    Trial tr;
    Engine<Model> eng(m_, specs_, preds_, solver_, Mode::OX);
    eng.reserve(st);
    bool trunc = false;
    auto srs = run_all_oracles(eng, st, c, 64, &trunc);
    for (const auto& r : srs) {
      if (eng.feasible(r.st.pc) < 0) continue;
      if (r.o == Outcome::Abort || (r.o == Outcome::Miss && !r.st.preds.empty())) {
        tr.excluded = true;
        return tr;
      }
    }
    tr.applicable = true;
    ImplContext none;
    Interpreter<Model> in(m_, none, conf_.alloc());
    auto crs = in.run(s, mu, c, b_.budget);
    if (crs.budget_exhausted) {
      tr.inconclusive = true;
      return tr;
    }
    bool capped = false;
    for (const auto& cr : crs.results) {
      std::vector<Value> dom = conf_.domain();
      for (const auto& [x, v] : cr.s) add_value(dom, v);
      bool found = false;
      for (const auto& r : srs) {
        if (r.o != cr.o) continue;
        auto lv = eng.lvars(r.st);
        found = any_extension(th, unbound(lv, th), dom, 20000, [&](const Interp& t) {
          return state_holds(sat_, t, cr.s, cr.mem, r.st);
        }, &capped);
        if (found) break;
      }
      if (!found) {
        if (capped || trunc) {
          tr.inconclusive = true;
          return tr;
        }
        tr.ok = false;
        tr.witness = {{"program", show(c)},
                      {"initial", eng.state_json(st)},
                      {"theta", interp_json(th)},
                      {"concrete_outcome", outcome_name(cr.o)},
                      {"concrete_store", store_json(cr.s)},
                      {"concrete_mem", m_.to_json(cr.mem)}};
        return tr;
      }
    }
    return tr;
  }

  // Under-approximation: every model of a symbolic result is reached.
  Trial ux_trial(const State& st, const Cmd& c, Rng& rng, size_t samples = 16) {
    Trial tr;
    Engine<Model> eng(m_, specs_, preds_, solver_, Mode::UX);
    eng.reserve(st);
    auto srs = run_all_oracles(eng, st, c, 64);
    for (const auto& r : srs)
      if (r.o == Outcome::Miss && !r.st.preds.empty()) {
        tr.excluded = true;
        return tr;
      }
    ImplContext none;
    Interpreter<Model> in(m_, none, conf_.alloc());
    for (const auto& r : srs) {
      if (r.o == Outcome::Abort) continue;
      auto lv = eng.lvars(r.st);
      auto lv0 = eng.lvars(st);
      lv.insert(lv0.begin(), lv0.end());
      std::vector<Interp> ths;
      Verdict v = solver_.check_sat(r.st.pc);
      if (v.k == SatKind::Sat) ths.push_back(v.model);
      for (size_t i = 0; i < samples; ++i) ths.push_back(conf_.rand_theta(rng, lv));
      for (auto th : ths) {
        for (const auto& x : lv)
          if (!th.count(x)) th[x] = conf_.rand_arg(rng);
        auto post = concrete_of(th, r.st);
        if (!post) continue;
        tr.applicable = true;
        auto pre = concrete_of(th, st);
        bool reached = false;
        if (pre) {
          auto crs = in.run(pre->first, pre->second, c, b_.budget);
          if (crs.budget_exhausted) {
            tr.inconclusive = true;
            continue;
          }
          for (const auto& cr : crs.results)
            if (cr.o == r.o && cr.s == post->first && cr.mem == post->second) reached = true;
        }
        if (!reached) {
          tr.ok = false;
          tr.witness = {{"program", show(c)},
                        {"initial", eng.state_json(st)},
                        {"final", eng.state_json(r.st)},
                        {"outcome", outcome_name(r.o)},
                        {"theta", interp_json(th)},
                        {"reason", pre ? "final state not reached" : "theta is not a model of the initial state"}};
          return tr;
        }
      }
    }
    return tr;
  }

  CheckReport ox_soundness(size_t trials, uint64_t seed) {
    CheckReport rep{m_.name(), "symbolic-ox", "ox"};
    Rng rng(mix_seed(seed, "ox-soundness"));
    for (size_t t = 0; t < trials; ++t) {
      ++rep.trials;
      State st = gen_state(rng);
      Cmd c = gen_cmd(rng, 3);
      std::optional<std::pair<Interp, std::pair<Store, CMem>>> model;
      for (int k = 0; k < 16 && !model; ++k) {
        Interp th = conf_.rand_theta(rng, lvars_of(st));
        if (auto cs = concrete_of(th, st)) model = {th, *cs};
      }
      if (!model) continue;
      auto tr = ox_trial(st, model->first, model->second.first, model->second.second, c);
      if (tr.excluded) continue;
      if (tr.inconclusive) ++rep.inconclusive;
      rep.applicable += tr.applicable;
      if (!tr.ok) {
        rep.pass = false;
        rep.witness = tr.witness;
        return rep;
      }
    }
    return rep;
  }

  CheckReport ux_soundness(size_t trials, uint64_t seed) {
    CheckReport rep{m_.name(), "symbolic-ux", "ux"};
    Rng rng(mix_seed(seed, "ux-soundness"));
    for (size_t t = 0; t < trials; ++t) {
      ++rep.trials;
      State st = gen_state(rng);
      Cmd c = gen_cmd(rng, 3);
      auto tr = ux_trial(st, c, rng);
      if (tr.excluded) continue;
      if (tr.inconclusive) ++rep.inconclusive;
      rep.applicable += tr.applicable;
      if (!tr.ok) {
        rep.pass = false;
        rep.witness = tr.witness;
        return rep;
      }
    }
    return rep;
  }

  std::optional<std::pair<Store, CMem>> concrete_of(const Interp& th, const State& st) const {
    for (const auto& e : st.pc)
      if (!eval_true(e, th)) return std::nullopt;
    if (!st.preds.empty()) return std::nullopt;
    Store s;
    for (const auto& [x, e] : st.store) {
      auto v = eval(e, th, {});
      if (!v) return std::nullopt;
      s[x] = *v;
    }
    auto h = m_.concretize(th, st.mem);
    if (!h || !m_.is_wf(*h)) return std::nullopt;
    return std::make_pair(std::move(s), std::move(*h));
  }

  State gen_state(Rng& rng) const {
    State st;
    const auto& pool = conf_.pool();
    for (const char* x : {"x", "y", "z"}) st.store[x] = pool[pick(rng, pool.size())];
    st.mem = m_.gen_symbolic(rng, b_, pool);
    if (coin(rng, 30)) add_pc(st.pc, e_intype(lvar("a"), Kind::Nat));
    if (coin(rng, 20)) add_pc(st.pc, e_lt(lvar("b"), lit_nat(2)));
    return st;
  }

  Cmd gen_cmd(Rng& rng, int depth) const {
    static const char* vars[] = {"x", "y", "z"};
    auto var = [&] { return std::string(vars[pick(rng, 3)]); };
    auto atom = [&]() -> Expr {
      if (coin(rng, 50)) return pvar(var());
      return lit(conf_.rand_arg(rng));
    };
    auto expr = [&]() -> Expr {
      switch (pick(rng, 5)) {
        case 0: return e_add(atom(), lit_nat(1));
        case 1: return e_eq(atom(), atom());
        case 2: return e_lt(atom(), atom());
        default: return atom();
      }
    };
    size_t k = pick(rng, depth > 0 ? 6 : 3);
    if (k == 0) return c_assign(var(), expr());
    if (k <= 2 || k == 5) {
      auto acts = m_.actions();
      const auto& a = acts[pick(rng, acts.size())];
      std::vector<Expr> args;
      for (size_t i = 0; i < a.arity; ++i) args.push_back(atom());
      std::vector<std::string> outs;
      for (size_t i = 0; i < a.nout; ++i) outs.push_back(var());
      return c_action(outs, a.name, args);
    }
    if (k == 3) return c_if(coin(rng, 70) ? e_eq(atom(), atom()) : atom(), gen_cmd(rng, depth - 1), gen_cmd(rng, depth - 1));
    return c_seq(gen_cmd(rng, depth - 1), gen_cmd(rng, depth - 1));
  }

  std::set<std::string> lvars_of(const State& st) const {
    std::set<std::string> r = m_.lvars(st.mem);
    for (const auto& [x, e] : st.store) collect_lvars(e, r);
    for (const auto& e : st.pc) collect_lvars(e, r);
    return r;
  }

  Solver& solver() { return solver_; }
  const Satisfaction<Model>& sat() const { return sat_; }

 private:
  Model m_;
  Bounds b_;
  Conformance<Model> conf_;
  PredTable preds_;
  SpecContext specs_;
  Satisfaction<Model> sat_;
  Solver solver_;
};

// The predicate counterexample: pred foo() := 1 |-> 1 and x := lookup(1),
// started from the folded predicate against its unfolded concrete memory.
struct FooRegression {
  std::vector<Outcome> concrete;   // outcomes from ({x: nil}, {1 |-> 1})
  std::vector<Outcome> symbolic;   // satisfiable outcomes from foo()
  bool ox_excluded = false, ux_excluded = false;
  bool pass() const {
    return concrete == std::vector<Outcome>{Outcome::Ok} && symbolic == std::vector<Outcome>{Outcome::Miss} &&
           ox_excluded && ux_excluded;
  }
};

template <class Model>
FooRegression foo_regression(const Model& m, const Bounds& b) {
  PredTable preds;
  preds["foo"] = PredDef{"foo", {}, {}, a_res("points_to", {lit_nat(1)}, {lit_nat(1)})};
  Cmd c = c_action({"x"}, "lookup", {lit_nat(1)});
  FooRegression out;
  ImplContext none;
  Interpreter<Model> in(m, none);
  typename Model::CMem mu;
  {
    Satisfaction<Model> sat(m, preds, b);
    for (const auto& h : m.enumerate(b))
      if (sat.holds({}, {}, h, a_pred("foo", {}, {})) == Holds::Yes) mu = h;
  }
  for (const auto& r : in.run({{"x", Value::nil()}}, mu, c, b.budget).results) out.concrete.push_back(r.o);
  SymState<typename Model::SMem> st;
  st.store["x"] = lit(Value::nil());
  st.mem = m.sempty();
  st.preds.push_back({"foo", {}, {}});
  Differential<Model> d(m, b, preds);
  Solver sv(b);
  Engine<Model> eng(m, {}, preds, sv, Mode::OX);
  for (const auto& r : eng.exec(Oracle(), st, c))
    if (eng.feasible(r.st.pc) >= 0) out.symbolic.push_back(r.o);
  auto tox = d.ox_trial(st, {}, {{"x", Value::nil()}}, mu, c);
  Rng rng(b.seed);
  auto tux = d.ux_trial(st, c, rng);
  out.ox_excluded = tox.excluded;
  out.ux_excluded = tux.excluded;
  return out;
}

// The per-model conformance matrix.
template <class Model>
std::vector<CheckReport> check_model(const Model& m, const Bounds& b, size_t refute_trials) {
  Conformance<Model> cf(m, b);
  std::vector<CheckReport> out;
  out.push_back(cf.pcm(false, b.trials, b.seed));
  Soundness d = m.declared();
  for (Mode mode : {Mode::OX, Mode::UX}) {
    bool declared = mode == Mode::OX ? d.ox : d.ux;
    size_t n = declared ? b.trials : std::max(b.trials, refute_trials);
    out.push_back(cf.frame(mode, false, n, b.seed));
    out.push_back(cf.action(mode, n, b.seed));
    out.push_back(cf.cp(mode, n, b.seed));
  }
  return out;
}

// 0 when declared modes pass everything and each undeclared mode has at
// least one refuted check.
inline bool matrix_matches(const std::vector<CheckReport>& rs, Soundness d) {
  bool pcm_ok = true, ox_all = true, ux_all = true;
  for (const auto& r : rs) {
    if (r.check == "pcm") pcm_ok = pcm_ok && r.pass;
    else if (r.mode == "ox") ox_all = ox_all && r.pass;
    else if (r.mode == "ux") ux_all = ux_all && r.pass;
  }
  if (!pcm_ok) return false;
  if (d.ox != ox_all) return false;
  if (d.ux != ux_all) return false;
  return true;
}

}  // namespace polyheap
