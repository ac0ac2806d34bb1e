#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "value.hpp"

namespace polyheap {

// One AST for program and logical expressions. Program expressions are the
// subset without LVar / InVal / InType.
enum class Op : uint8_t {
  Lit, PVar, LVar, Not, And, Or, Eq, Lt, Le, Add, Sub, Div, List, InVal, InType
};

struct ExprNode;

class Expr {
 public:
  Expr() = default;
  explicit Expr(std::shared_ptr<const ExprNode> p) : p_(std::move(p)) {}

  const ExprNode* operator->() const { return p_.get(); }
  const ExprNode& operator*() const { return *p_; }
  bool valid() const { return p_ != nullptr; }
  const ExprNode* get() const { return p_.get(); }

  friend bool operator==(const Expr& a, const Expr& b);
  friend std::strong_ordering operator<=>(const Expr& a, const Expr& b);

 private:
  std::shared_ptr<const ExprNode> p_;
};

struct ExprNode {
  Op op;
  Value lit;
  std::string name;
  Kind tag = Kind::Nil;
  std::vector<Expr> kids;
  size_t hash = 0;
  bool has_lvar = false;
  bool has_pvar = false;
};

int compare(const Expr& a, const Expr& b);

inline bool operator==(const Expr& a, const Expr& b) {
  if (a.p_ == b.p_) return true;
  if (!a.p_ || !b.p_) return false;
  if (a->hash != b->hash) return false;
  return compare(a, b) == 0;
}

inline std::strong_ordering operator<=>(const Expr& a, const Expr& b) {
  int c = compare(a, b);
  return c < 0 ? std::strong_ordering::less
               : (c > 0 ? std::strong_ordering::greater : std::strong_ordering::equal);
}

inline size_t hash_value(const Value& v) {
  std::hash<std::string> hs;
  switch (v.kind()) {
    case Kind::Nil: return 17;
    case Kind::Bool: return v.as_bool() ? 31 : 37;
    case Kind::Nat: return std::hash<uint64_t>{}(v.as_nat()) * 3 + 1;
    case Kind::Rat: return std::hash<int64_t>{}(v.as_rat().num) * 7 + std::hash<int64_t>{}(v.as_rat().den);
    case Kind::Str: return hs(v.as_str()) * 5 + 2;
    case Kind::List: {
      size_t h = 91;
      for (const auto& e : v.as_list()) h = h * 1000003u ^ hash_value(e);
      return h;
    }
  }
  return 0;
}

inline Expr make_node(Op op, Value lit, std::string name, Kind tag, std::vector<Expr> kids) {
  auto n = std::make_shared<ExprNode>();
  n->op = op;
  n->lit = std::move(lit);
  n->name = std::move(name);
  n->tag = tag;
  n->kids = std::move(kids);
  size_t h = static_cast<size_t>(op) * 0x9e3779b97f4a7c15ull;
  if (op == Op::Lit) h ^= hash_value(n->lit);
  if (op == Op::PVar || op == Op::LVar) h ^= std::hash<std::string>{}(n->name) + (op == Op::LVar ? 7 : 0);
  if (op == Op::InType) h ^= static_cast<size_t>(tag) * 131;
  for (const auto& k : n->kids) {
    h = h * 1000003u ^ k->hash;
    n->has_lvar |= k->has_lvar;
    n->has_pvar |= k->has_pvar;
  }
  n->has_lvar |= (op == Op::LVar);
  n->has_pvar |= (op == Op::PVar);
  n->hash = h;
  return Expr(std::move(n));
}

inline int compare(const Expr& a, const Expr& b) {
  if (a.get() == b.get()) return 0;
  if (a->op != b->op) return a->op < b->op ? -1 : 1;
  switch (a->op) {
    case Op::Lit: return Value::compare(a->lit, b->lit);
    case Op::PVar:
    case Op::LVar: return a->name < b->name ? -1 : (a->name == b->name ? 0 : 1);
    case Op::InType:
      if (a->tag != b->tag) return a->tag < b->tag ? -1 : 1;
      break;
    default: break;
  }
  if (a->kids.size() != b->kids.size()) return a->kids.size() < b->kids.size() ? -1 : 1;
  for (size_t i = 0; i < a->kids.size(); ++i) {
    int c = compare(a->kids[i], b->kids[i]);
    if (c) return c;
  }
  return 0;
}

// builders

inline Expr lit(Value v) { return make_node(Op::Lit, std::move(v), "", Kind::Nil, {}); }
inline Expr lit_nat(uint64_t n) { return lit(Value::nat(n)); }
inline Expr lit_bool(bool b) { return lit(Value::boolean(b)); }
inline Expr lit_str(std::string s) { return lit(Value::str(std::move(s))); }
inline Expr e_true() { return lit_bool(true); }
inline Expr e_false() { return lit_bool(false); }
inline Expr pvar(std::string x) { return make_node(Op::PVar, {}, std::move(x), Kind::Nil, {}); }
inline Expr lvar(std::string x) { return make_node(Op::LVar, {}, std::move(x), Kind::Nil, {}); }
inline Expr e_not(Expr a) { return make_node(Op::Not, {}, "", Kind::Nil, {std::move(a)}); }
inline Expr e_bin(Op op, Expr a, Expr b) { return make_node(op, {}, "", Kind::Nil, {std::move(a), std::move(b)}); }
inline Expr e_and(Expr a, Expr b) { return e_bin(Op::And, std::move(a), std::move(b)); }
inline Expr e_or(Expr a, Expr b) { return e_bin(Op::Or, std::move(a), std::move(b)); }
inline Expr e_eq(Expr a, Expr b) { return e_bin(Op::Eq, std::move(a), std::move(b)); }
inline Expr e_lt(Expr a, Expr b) { return e_bin(Op::Lt, std::move(a), std::move(b)); }
inline Expr e_le(Expr a, Expr b) { return e_bin(Op::Le, std::move(a), std::move(b)); }
inline Expr e_add(Expr a, Expr b) { return e_bin(Op::Add, std::move(a), std::move(b)); }
inline Expr e_sub(Expr a, Expr b) { return e_bin(Op::Sub, std::move(a), std::move(b)); }
inline Expr e_div(Expr a, Expr b) { return e_bin(Op::Div, std::move(a), std::move(b)); }
inline Expr e_inval(Expr a) { return make_node(Op::InVal, {}, "", Kind::Nil, {std::move(a)}); }
inline Expr e_notinval(Expr a) { return e_not(e_inval(std::move(a))); }
inline Expr e_intype(Expr a, Kind t) { return make_node(Op::InType, {}, "", t, {std::move(a)}); }

// A list constructor folds to a literal when every element is a literal, so
// that `[1, 2]` has a single representation.
inline Expr e_list(std::vector<Expr> es) {
  bool all_lit = true;
  for (const auto& e : es) all_lit &= (e->op == Op::Lit);
  if (all_lit) {
    Value::ListT l;
    for (const auto& e : es) l.push_back(e->lit);
    return lit(Value::list(std::move(l)));
  }
  return make_node(Op::List, {}, "", Kind::Nil, std::move(es));
}

// An always-undefined ground expression; used for unbound program variables.
inline Expr e_undef() { return e_div(lit_nat(0), lit_nat(0)); }

inline Expr conj(const std::vector<Expr>& es) {
  if (es.empty()) return e_true();
  Expr r = es[0];
  for (size_t i = 1; i < es.size(); ++i) r = e_and(r, es[i]);
  return r;
}

inline Expr all_inval(const std::vector<Expr>& es) {
  std::vector<Expr> g;
  for (const auto& e : es) g.push_back(e_inval(e));
  return conj(g);
}

using Interp = std::map<std::string, Value>;  // θ
using Store = std::map<std::string, Value>;   // s

// Three-valued evaluation: nullopt is the undefined result.
inline std::optional<Value> eval(const Expr& e, const Interp& th, const Store& s) {
  switch (e->op) {
    case Op::Lit: return e->lit;
    case Op::PVar: {
      auto it = s.find(e->name);
      if (it == s.end()) return std::nullopt;
      return it->second;
    }
    case Op::LVar: {
      auto it = th.find(e->name);
      if (it == th.end()) return std::nullopt;
      return it->second;
    }
    case Op::InVal: return Value::boolean(eval(e->kids[0], th, s).has_value());
    case Op::InType: {
      auto v = eval(e->kids[0], th, s);
      return Value::boolean(v && v->kind() == e->tag);
    }
    case Op::Not: {
      auto v = eval(e->kids[0], th, s);
      if (!v || !v->is_bool()) return std::nullopt;
      return Value::boolean(!v->as_bool());
    }
    case Op::List: {
      Value::ListT l;
      for (const auto& k : e->kids) {
        auto v = eval(k, th, s);
        if (!v) return std::nullopt;
        l.push_back(std::move(*v));
      }
      return Value::list(std::move(l));
    }
    default: break;
  }
  auto a = eval(e->kids[0], th, s);
  if (!a) return std::nullopt;
  auto b = eval(e->kids[1], th, s);
  if (!b) return std::nullopt;
  switch (e->op) {
    case Op::Eq: return Value::boolean(*a == *b);
    case Op::And:
    case Op::Or:
      if (!a->is_bool() || !b->is_bool()) return std::nullopt;
      return Value::boolean(e->op == Op::And ? (a->as_bool() && b->as_bool()) : (a->as_bool() || b->as_bool()));
    case Op::Lt:
    case Op::Le: {
      if (a->is_nat() && b->is_nat())
        return Value::boolean(e->op == Op::Lt ? a->as_nat() < b->as_nat() : a->as_nat() <= b->as_nat());
      if (a->is_rat() && b->is_rat())
        return Value::boolean(e->op == Op::Lt ? a->as_rat() < b->as_rat() : a->as_rat() <= b->as_rat());
      return std::nullopt;
    }
    case Op::Add:
    case Op::Sub:
    case Op::Div: {
      if (a->is_nat() && b->is_nat()) {
        uint64_t x = a->as_nat(), y = b->as_nat();
        if (e->op == Op::Add) {
          if (x + y < x) return std::nullopt;
          return Value::nat(x + y);
        }
        if (e->op == Op::Sub) {
          if (x < y) return std::nullopt;
          return Value::nat(x - y);
        }
        if (y == 0 || x % y != 0) return std::nullopt;
        return Value::nat(x / y);
      }
      if (a->is_rat() && b->is_rat()) {
        const Rat& x = a->as_rat();
        const Rat& y = b->as_rat();
        std::optional<Rat> r;
        if (e->op == Op::Add) r = Rat::make((__int128)x.num * y.den + (__int128)y.num * x.den, (__int128)x.den * y.den);
        else if (e->op == Op::Sub) r = Rat::make((__int128)x.num * y.den - (__int128)y.num * x.den, (__int128)x.den * y.den);
        else r = Rat::make((__int128)x.num * y.den, (__int128)x.den * y.num);
        if (!r) return std::nullopt;
        return Value::rat(*r);
      }
      return std::nullopt;
    }
    default: return std::nullopt;
  }
}

inline std::optional<Value> eval_ground(const Expr& e) {
  static const Interp th;
  static const Store s;
  return eval(e, th, s);
}

inline bool is_ground(const Expr& e) { return !e->has_lvar && !e->has_pvar; }

inline void collect_lvars(const Expr& e, std::set<std::string>& out) {
  if (!e->has_lvar) return;
  if (e->op == Op::LVar) { out.insert(e->name); return; }
  for (const auto& k : e->kids) collect_lvars(k, out);
}

inline void collect_pvars(const Expr& e, std::set<std::string>& out) {
  if (!e->has_pvar) return;
  if (e->op == Op::PVar) { out.insert(e->name); return; }
  for (const auto& k : e->kids) collect_pvars(k, out);
}

inline std::set<std::string> lvars_of(const Expr& e) {
  std::set<std::string> r;
  collect_lvars(e, r);
  return r;
}

inline std::set<std::string> pvars_of(const Expr& e) {
  std::set<std::string> r;
  collect_pvars(e, r);
  return r;
}

inline Expr rebuild(const Expr& e, std::vector<Expr> kids) {
  if (e->op == Op::List) return e_list(std::move(kids));
  return make_node(e->op, e->lit, e->name, e->tag, std::move(kids));
}

using Subst = std::map<std::string, Expr>;  // θ̂ and store-substitutions

inline Expr subst_lvars(const Expr& e, const Subst& m) {
  if (!e->has_lvar) return e;
  if (e->op == Op::LVar) {
    auto it = m.find(e->name);
    return it == m.end() ? e : it->second;
  }
  std::vector<Expr> ks;
  ks.reserve(e->kids.size());
  for (const auto& k : e->kids) ks.push_back(subst_lvars(k, m));
  return rebuild(e, std::move(ks));
}

// Replaces program variables; unbound ones become the undefined expression
// when `undef_missing` is set.
inline Expr subst_pvars(const Expr& e, const Subst& m, bool undef_missing) {
  if (!e->has_pvar) return e;
  if (e->op == Op::PVar) {
    auto it = m.find(e->name);
    if (it != m.end()) return it->second;
    return undef_missing ? e_undef() : e;
  }
  std::vector<Expr> ks;
  ks.reserve(e->kids.size());
  for (const auto& k : e->kids) ks.push_back(subst_pvars(k, m, undef_missing));
  return rebuild(e, std::move(ks));
}

inline Expr rename_lvar(const Expr& e, const std::string& from, const std::string& to) {
  return subst_lvars(e, Subst{{from, lvar(to)}});
}

// Evaluates to a boolean whenever it is defined.
inline bool bool_valued(const Expr& e) {
  switch (e->op) {
    case Op::Lit: return e->lit.is_bool();
    case Op::Not: case Op::And: case Op::Or: case Op::Eq: case Op::Lt: case Op::Le: case Op::InVal:
    case Op::InType: return true;
    default: return false;
  }
}

// Always evaluates to a boolean.
inline bool bool_total(const Expr& e) {
  switch (e->op) {
    case Op::Lit: return e->lit.is_bool();
    case Op::InVal:
    case Op::InType: return true;
    case Op::Not:
    case Op::And:
    case Op::Or:
      for (const auto& k : e->kids)
        if (!bool_total(k)) return false;
      return true;
    default: return false;
  }
}

// Constant-folds ground subterms plus a few rewrites that are exact under
// the strict three-valued operators.
inline Expr fold(const Expr& e) {
  if (e->op == Op::Lit || e->op == Op::LVar || e->op == Op::PVar) return e;
  if (is_ground(e)) {
    auto v = eval_ground(e);
    if (v) return lit(*v);
    return e;
  }
  std::vector<Expr> ks;
  bool changed = false;
  for (const auto& k : e->kids) {
    ks.push_back(fold(k));
    changed |= ks.back().get() != k.get();
  }
  if (e->op == Op::InVal) {
    // a literal child is always defined
    if (ks[0]->op == Op::Lit) return e_true();
  }
  if (e->op == Op::InType && ks[0]->op == Op::Lit) return lit_bool(ks[0]->lit.kind() == e->tag);
  if (e->op == Op::InVal && ks[0]->op == Op::List) {
    std::vector<Expr> ds;
    for (const auto& k : ks[0]->kids) ds.push_back(e_inval(k));
    return fold(conj(ds));
  }
  if (e->op == Op::Eq) {
    if (ks[0] == ks[1]) return fold(e_inval(ks[0]));
    auto parts = [](const Expr& x) -> std::optional<std::vector<Expr>> {
      if (x->op == Op::List) return x->kids;
      if (x->op == Op::Lit && x->lit.is_list()) {
        std::vector<Expr> r;
        for (const auto& v : x->lit.as_list()) r.push_back(lit(v));
        return r;
      }
      return std::nullopt;
    };
    auto l = parts(ks[0]), r = parts(ks[1]);
    if (l && r && l->size() == r->size() && !l->empty()) {
      std::vector<Expr> eqs;
      for (size_t i = 0; i < l->size(); ++i) eqs.push_back(e_eq((*l)[i], (*r)[i]));
      return fold(conj(eqs));
    }
  }
  if (e->op == Op::And || e->op == Op::Or) {
    bool unit = e->op == Op::And;
    for (int i = 0; i < 2; ++i) {
      const Expr& c = ks[i];
      const Expr& o = ks[1 - i];
      if (c->op != Op::Lit || !c->lit.is_bool()) continue;
      // the unit keeps the other side, defined or not; the zero wins only
      // over a side that is always defined
      if (c->lit.is_true() == unit && bool_valued(o)) return o;
      if (c->lit.is_true() != unit && bool_total(o)) return c;
    }
  }
  if (!changed) return e;
  return rebuild(e, std::move(ks));
}

// Splits strict conjunctions: (a && b) is true iff a and b are both true.
inline void split_conj(const Expr& e, std::vector<Expr>& out) {
  if (e->op == Op::And) {
    split_conj(e->kids[0], out);
    split_conj(e->kids[1], out);
  } else {
    out.push_back(e);
  }
}

// printing

inline int prec(const Expr& e) {
  switch (e->op) {
    case Op::Or: return 1;
    case Op::And: return 2;
    case Op::Eq: case Op::Lt: case Op::Le: case Op::InVal: case Op::InType: return 3;
    case Op::Add: case Op::Sub: return 4;
    case Op::Div: return 5;
    case Op::Not:
      if (e->kids[0]->op == Op::Eq) return 3;
      return 6;
    default: return 7;
  }
}

inline void print_expr(std::ostream& os, const Expr& e, int ctx = 0);

inline void print_child(std::ostream& os, const Expr& e, int need) {
  if (prec(e) < need) {
    os << "(";
    print_expr(os, e, 0);
    os << ")";
  } else {
    print_expr(os, e, need);
  }
}

inline void print_expr(std::ostream& os, const Expr& e, int) {
  switch (e->op) {
    case Op::Lit: e->lit.print(os); return;
    case Op::PVar: os << e->name; return;
    case Op::LVar: os << "#" << e->name; return;
    case Op::Not:
      if (e->kids[0]->op == Op::Eq) {
        print_child(os, e->kids[0]->kids[0], 4);
        os << " != ";
        print_child(os, e->kids[0]->kids[1], 4);
        return;
      }
      os << "!";
      print_child(os, e->kids[0], 7);
      return;
    case Op::List: {
      os << "[";
      for (size_t i = 0; i < e->kids.size(); ++i) {
        if (i) os << ", ";
        print_expr(os, e->kids[i], 0);
      }
      os << "]";
      return;
    }
    case Op::InVal:
      print_child(os, e->kids[0], 4);
      os << " in Val";
      return;
    case Op::InType:
      print_child(os, e->kids[0], 4);
      os << " in " << kind_name(e->tag);
      return;
    default: break;
  }
  const char* sym = "?";
  switch (e->op) {
    case Op::Or: sym = " || "; break;
    case Op::And: sym = " && "; break;
    case Op::Eq: sym = " = "; break;
    case Op::Lt: sym = " < "; break;
    case Op::Le: sym = " <= "; break;
    case Op::Add: sym = " + "; break;
    case Op::Sub: sym = " - "; break;
    case Op::Div: sym = " / "; break;
    default: break;
  }
  int p = prec(e);
  if (p == 3) {
    print_child(os, e->kids[0], 4);
    os << sym;
    print_child(os, e->kids[1], 4);
  } else {
    print_child(os, e->kids[0], p);
    os << sym;
    print_child(os, e->kids[1], p + 1);
  }
}

inline std::string show(const Expr& e) {
  std::ostringstream os;
  print_expr(os, e);
  return os.str();
}

inline std::ostream& operator<<(std::ostream& os, const Expr& e) {
  print_expr(os, e);
  return os;
}

inline std::string show_list(const std::vector<Expr>& es) {
  std::string r;
  for (size_t i = 0; i < es.size(); ++i) {
    if (i) r += ", ";
    r += show(es[i]);
  }
  return r;
}

}  // namespace polyheap
