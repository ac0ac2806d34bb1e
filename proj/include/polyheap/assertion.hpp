#pragma once

#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "lang.hpp"

namespace polyheap {

enum class AK : uint8_t { Pure, True, Implies, Or, Exists, Emp, Star, Res, Pred };

struct AssertionNode;
using Assertion = std::shared_ptr<const AssertionNode>;

struct AssertionNode {
  AK k = AK::Emp;
  Expr e;                      // Pure
  std::string name;            // Exists variable, resource or predicate name
  std::vector<Expr> ins, outs; // Res, Pred
  Assertion a, b;              // Implies, Or, Star, Exists body (a)
};

inline Assertion mk_a(AssertionNode n) { return std::make_shared<const AssertionNode>(std::move(n)); }
inline Assertion a_pure(Expr e) { AssertionNode n; n.k = AK::Pure; n.e = std::move(e); return mk_a(std::move(n)); }
inline Assertion a_true() { AssertionNode n; n.k = AK::True; return mk_a(std::move(n)); }
inline Assertion a_false() { return a_pure(e_false()); }
inline Assertion a_emp() { return mk_a({}); }
inline Assertion a_bin(AK k, Assertion x, Assertion y) {
  AssertionNode n; n.k = k; n.a = std::move(x); n.b = std::move(y);
  return mk_a(std::move(n));
}
inline Assertion a_star(Assertion x, Assertion y) { return a_bin(AK::Star, std::move(x), std::move(y)); }
inline Assertion a_or(Assertion x, Assertion y) { return a_bin(AK::Or, std::move(x), std::move(y)); }
inline Assertion a_implies(Assertion x, Assertion y) { return a_bin(AK::Implies, std::move(x), std::move(y)); }
inline Assertion a_exists(std::string x, Assertion body) {
  AssertionNode n; n.k = AK::Exists; n.name = std::move(x); n.a = std::move(body);
  return mk_a(std::move(n));
}
inline Assertion a_res(std::string r, std::vector<Expr> ins, std::vector<Expr> outs) {
  AssertionNode n; n.k = AK::Res; n.name = std::move(r); n.ins = std::move(ins); n.outs = std::move(outs);
  return mk_a(std::move(n));
}
inline Assertion a_pred(std::string p, std::vector<Expr> ins, std::vector<Expr> outs) {
  AssertionNode n; n.k = AK::Pred; n.name = std::move(p); n.ins = std::move(ins); n.outs = std::move(outs);
  return mk_a(std::move(n));
}

inline Assertion a_star_all(const std::vector<Assertion>& as) {
  if (as.empty()) return a_emp();
  Assertion r = as[0];
  for (size_t i = 1; i < as.size(); ++i) r = a_star(r, as[i]);
  return r;
}

inline bool is_false_assertion(const Assertion& a) {
  return a->k == AK::Pure && a->e->op == Op::Lit && a->e->lit == Value::boolean(false);
}

template <class F>
Assertion map_exprs(const Assertion& a, const F& f) {
  AssertionNode n = *a;
  switch (a->k) {
    case AK::Pure: n.e = f(a->e); break;
    case AK::Res:
    case AK::Pred:
      for (auto& x : n.ins) x = f(x);
      for (auto& x : n.outs) x = f(x);
      break;
    case AK::Implies:
    case AK::Or:
    case AK::Star:
      n.a = map_exprs(a->a, f);
      n.b = map_exprs(a->b, f);
      break;
    case AK::Exists: n.a = map_exprs(a->a, f); break;
    default: break;
  }
  return mk_a(std::move(n));
}

// Substitutes free logical variables, respecting binders.
inline Assertion subst_lvars(const Assertion& a, const Subst& m) {
  if (a->k == AK::Exists) {
    Subst inner = m;
    inner.erase(a->name);
    AssertionNode n = *a;
    n.a = subst_lvars(a->a, inner);
    return mk_a(std::move(n));
  }
  if (a->k == AK::Implies || a->k == AK::Or || a->k == AK::Star) {
    AssertionNode n = *a;
    n.a = subst_lvars(a->a, m);
    n.b = subst_lvars(a->b, m);
    return mk_a(std::move(n));
  }
  return map_exprs(a, [&](const Expr& e) { return subst_lvars(e, m); });
}

inline Assertion subst_pvars(const Assertion& a, const Subst& m) {
  return map_exprs(a, [&](const Expr& e) { return subst_pvars(e, m, false); });
}

inline void collect_lvars(const Assertion& a, std::set<std::string>& out) {
  switch (a->k) {
    case AK::Pure: collect_lvars(a->e, out); break;
    case AK::Res:
    case AK::Pred:
      for (const auto& x : a->ins) collect_lvars(x, out);
      for (const auto& x : a->outs) collect_lvars(x, out);
      break;
    case AK::Implies:
    case AK::Or:
    case AK::Star:
      collect_lvars(a->a, out);
      collect_lvars(a->b, out);
      break;
    case AK::Exists: {
      std::set<std::string> inner;
      collect_lvars(a->a, inner);
      inner.erase(a->name);
      out.insert(inner.begin(), inner.end());
      break;
    }
    default: break;
  }
}

inline std::set<std::string> lvars_of(const Assertion& a) {
  std::set<std::string> r;
  collect_lvars(a, r);
  return r;
}

inline void collect_pvars(const Assertion& a, std::set<std::string>& out) {
  switch (a->k) {
    case AK::Pure: collect_pvars(a->e, out); break;
    case AK::Res:
    case AK::Pred:
      for (const auto& x : a->ins) collect_pvars(x, out);
      for (const auto& x : a->outs) collect_pvars(x, out);
      break;
    case AK::Implies:
    case AK::Or:
    case AK::Star:
      collect_pvars(a->a, out);
      collect_pvars(a->b, out);
      break;
    case AK::Exists: collect_pvars(a->a, out); break;
    default: break;
  }
}

inline std::set<std::string> pvars_of(const Assertion& a) {
  std::set<std::string> r;
  collect_pvars(a, r);
  return r;
}

inline void flatten_star(const Assertion& a, std::vector<Assertion>& out) {
  if (a->k == AK::Star) {
    flatten_star(a->a, out);
    flatten_star(a->b, out);
  } else if (a->k != AK::Emp) {
    out.push_back(a);
  }
}

inline void flatten_or(const Assertion& a, std::vector<Assertion>& out) {
  if (a->k == AK::Or) {
    flatten_or(a->a, out);
    flatten_or(a->b, out);
  } else {
    out.push_back(a);
  }
}

struct PredDef {
  std::string name;
  std::vector<std::string> ins, outs;  // logical variable names
  Assertion body;

  std::vector<Assertion> disjuncts() const {
    std::vector<Assertion> r;
    flatten_or(body, r);
    return r;
  }
};

using PredTable = std::map<std::string, PredDef>;

enum class Flavor : uint8_t { SL, ISL, ESL };

inline const char* flavor_name(Flavor f) {
  switch (f) {
    case Flavor::SL: return "SL";
    case Flavor::ISL: return "ISL";
    case Flavor::ESL: return "ESL";
  }
  return "?";
}

// External function specification. The program-variable part of the
// precondition, x = #x for every parameter, is implicit: `params` holds the
// logical variables and `pre` the remaining assertion P.
struct Quadruple {
  Flavor flavor = Flavor::SL;
  std::string fid;
  std::vector<std::string> pvars;   // x
  std::vector<std::string> params;  // #x
  Assertion pre;
  Assertion post_ok;
  Assertion post_err;

  Assertion full_pre() const {
    std::vector<Assertion> parts;
    for (size_t i = 0; i < pvars.size(); ++i) parts.push_back(a_pure(e_eq(pvar(pvars[i]), lvar(params[i]))));
    parts.push_back(pre);
    return a_star_all(parts);
  }
};

using SpecContext = std::map<std::string, std::vector<Quadruple>>;  // Γ

struct Program {
  ImplContext funcs;
  PredTable preds;
  SpecContext specs;
  std::vector<std::string> func_order, pred_order;
  std::vector<std::pair<std::string, size_t>> spec_order;  // (fid, index)
};

}  // namespace polyheap
