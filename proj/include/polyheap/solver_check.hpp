#pragma once

#include <json.hpp>

#include "memmodel.hpp"
#include "parser.hpp"
#include "pretty.hpp"
#include "solver.hpp"

namespace polyheap {

// Randomized soundness check of the builtin solver. Sat answers must come
// with a replaying witness, Unsat answers must survive exhaustive search
// over a bounded domain, and the SMT-LIB text must not depend on anything
// but the path condition.
struct SolverCheckReport {
  size_t trials = 0, sat = 0, unsat = 0, unknown = 0;
  size_t bad_witness = 0, contradicted_unsat = 0, nondeterministic_export = 0;
  nlohmann::json witness;

  bool pass() const { return bad_witness == 0 && contradicted_unsat == 0 && nondeterministic_export == 0; }

  nlohmann::json to_json() const {
    nlohmann::json j{{"check", "solver"},
                     {"verdict", pass() ? "pass" : "refuted"},
                     {"trials", trials},
                     {"sat", sat},
                     {"unsat", unsat},
                     {"unknown", unknown},
                     {"bad_witness", bad_witness},
                     {"contradicted_unsat", contradicted_unsat},
                     {"nondeterministic_export", nondeterministic_export}};
    if (!witness.is_null()) j["witness"] = witness;
    return j;
  }
};

class SolverCheck {
 public:
  static inline const std::vector<std::string> kVars{"a", "b", "c"};

  explicit SolverCheck(Bounds b = {}) : bounds_(std::move(b)) {}

  Expr gen_term(Rng& r, int depth) const {
    size_t k = pick(r, depth > 0 ? 10 : 6);
    if (k < 3) return lvar(kVars[pick(r, kVars.size())]);
    if (k < 6) return lit(pool()[pick(r, pool().size())]);
    switch (k) {
      case 6: return e_add(gen_term(r, depth - 1), gen_term(r, depth - 1));
      case 7: return e_sub(gen_term(r, depth - 1), gen_term(r, depth - 1));
      case 8: return e_div(gen_term(r, depth - 1), gen_term(r, depth - 1));
      default: {
        std::vector<Expr> es;
        for (size_t i = 0, n = 1 + pick(r, 2); i < n; ++i) es.push_back(gen_term(r, depth - 1));
        return e_list(std::move(es));
      }
    }
  }

  Expr gen_atom(Rng& r, int depth) const {
    static const Kind kinds[] = {Kind::Nil, Kind::Bool, Kind::Nat, Kind::Rat, Kind::Str, Kind::List};
    size_t k = pick(r, depth > 0 ? 9 : 6);
    switch (k) {
      case 0:
      case 1: return e_eq(gen_term(r, 1), gen_term(r, 1));
      case 2: return e_lt(gen_term(r, 1), gen_term(r, 1));
      case 3: return e_le(gen_term(r, 1), gen_term(r, 1));
      case 4: return e_intype(gen_term(r, 1), kinds[pick(r, 6)]);
      case 5: return e_inval(gen_term(r, 1));
      case 6: return e_not(gen_atom(r, depth - 1));
      case 7: return e_or(gen_atom(r, depth - 1), gen_atom(r, depth - 1));
      default: return e_and(gen_atom(r, depth - 1), gen_atom(r, depth - 1));
    }
  }

  std::vector<Expr> gen_pc(Rng& r) const {
    std::vector<Expr> pc;
    for (size_t i = 0, n = 1 + pick(r, 5); i < n; ++i) pc.push_back(gen_atom(r, 2));
    return pc;
  }

  // Some interpretation over the bounded domain satisfies pc.
  std::optional<Interp> search(const std::vector<Expr>& pc) const {
    std::set<Value> lits(bounds_.values.begin(), bounds_.values.end());
    for (const auto& v : pool()) lits.insert(v);
    for (const auto& e : pc) detail::collect_literals(e, lits);
    // sums and differences of two literals reach values outside the pool
    std::set<Value> dom = lits;
    for (const auto& x : lits)
      for (const auto& y : lits)
        for (Op op : {Op::Add, Op::Sub})
          if (auto v = eval(e_bin(op, lit(x), lit(y)), {}, {})) dom.insert(*v);
    std::vector<std::optional<Value>> opts{std::nullopt};
    for (const auto& v : dom) opts.push_back(v);
    static const Store s;
    Interp th;
    std::function<bool(size_t)> go = [&](size_t i) -> bool {
      if (i == kVars.size()) {
        for (const auto& c : pc) {
          auto v = eval(c, th, s);
          if (!v || !v->is_true()) return false;
        }
        return true;
      }
      for (const auto& o : opts) {
        if (o) th[kVars[i]] = *o;
        else th.erase(kVars[i]);
        if (go(i + 1)) return true;
      }
      th.erase(kVars[i]);
      return false;
    };
    if (go(0)) return th;
    return std::nullopt;
  }

  SolverCheckReport run(size_t trials, uint64_t seed) const {
    SolverCheckReport rep;
    Rng rng(mix_seed(seed, "solver"));
    Solver sv(bounds_);
    static const Store s;
    for (size_t t = 0; t < trials; ++t) {
      auto pc = gen_pc(rng);
      ++rep.trials;
      auto show_pc = [&] {
        nlohmann::json j = nlohmann::json::array();
        for (const auto& e : pc) j.push_back(show(e));
        return j;
      };
      Verdict v = sv.check_sat(pc);
      if (v.k == SatKind::Sat) {
        ++rep.sat;
        for (const auto& c : pc) {
          auto x = eval(c, v.model, s);
          if (!x || !x->is_true()) {
            if (!rep.bad_witness++) rep.witness = {{"pc", show_pc()}, {"reason", "witness does not replay"}};
            break;
          }
        }
      } else if (v.k == SatKind::Unsat) {
        ++rep.unsat;
        if (auto th = search(pc)) {
          if (!rep.contradicted_unsat++) {
            nlohmann::json m = nlohmann::json::object();
            for (const auto& [k, x] : *th) m["#" + k] = x.show();
            rep.witness = {{"pc", show_pc()}, {"reason", "unsat contradicted"}, {"model", m}};
          }
        }
      } else {
        ++rep.unknown;
      }
      // a structurally equal copy built from the printed form
      std::vector<Expr> copy;
      for (const auto& e : pc) copy.push_back(parse_expr(show(e)));
      std::string a = export_smtlib(pc), b = export_smtlib(pc), c = export_smtlib(copy);
      bool same_term = std::equal(pc.begin(), pc.end(), copy.begin(), copy.end());
      if (a != b || (same_term && a != c)) {
        if (!rep.nondeterministic_export++) rep.witness = {{"pc", show_pc()}, {"reason", "export differs"}};
      }
    }
    return rep;
  }

 private:
  static const std::vector<Value>& pool() {
    static const std::vector<Value> p{Value::nil(),    Value::boolean(true), Value::boolean(false),
                                      Value::nat(0),   Value::nat(1),        Value::nat(2),
                                      Value::nat(3),   Value::str("a"),      Value::rat(Rat{1, 2}),
                                      Value::list({}), Value::list({Value::nat(1)})};
    return p;
  }

  Bounds bounds_;
};

}  // namespace polyheap
