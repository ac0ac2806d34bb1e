#pragma once

#include <algorithm>
#include <bit>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "memmodel.hpp"

namespace polyheap {

enum class SatKind : uint8_t { Sat, Unsat, Unknown };

inline const char* sat_name(SatKind k) {
  switch (k) {
    case SatKind::Sat: return "sat";
    case SatKind::Unsat: return "unsat";
    case SatKind::Unknown: return "unknown";
  }
  return "?";
}

struct Verdict {
  SatKind k = SatKind::Unknown;
  Interp model;  // Sat only
};

enum class Tri : uint8_t { Yes, No, Unknown };

struct SolverStats {
  size_t queries = 0, cache_hits = 0, core_unsat = 0, enum_sat = 0, enum_unsat = 0, unknown = 0;
};

struct EncodingUnsupported : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

struct VarInfo {
  std::optional<Kind> kind;
  std::set<Kind> not_kinds;
  bool defined = false, undefined = false;
  __int128 lo = 0;
  std::optional<__int128> hi;
  std::set<uint64_t> ne;
  bool shape_ok = true;  // only equality-like occurrences
  bool clash = false;
};

inline bool is_lv(const Expr& e) { return e->op == Op::LVar; }
inline bool is_natlit(const Expr& e) { return e->op == Op::Lit && e->lit.is_nat(); }

inline void collect_literals(const Expr& e, std::set<Value>& out) {
  if (e->op == Op::Lit) {
    out.insert(e->lit);
    if (e->lit.is_list())
      for (const auto& v : e->lit.as_list()) out.insert(v);
    return;
  }
  for (const auto& k : e->kids) collect_literals(k, out);
}

// Marks the variable occurrences that fit the equality-logic fragment; any
// other occurrence clears shape_ok.
inline void scan_shape(const Expr& c, std::map<std::string, VarInfo>& info) {
  std::function<void(const Expr&)> taint = [&](const Expr& e) {
    if (e->op == Op::LVar) {
      info[e->name].shape_ok = false;
      return;
    }
    for (const auto& k : e->kids) taint(k);
  };
  Expr a = c;
  if (a->op == Op::Not) a = a->kids[0];
  switch (a->op) {
    case Op::LVar: info[a->name].shape_ok = false; return;
    case Op::InVal:
    case Op::InType:
      if (is_lv(a->kids[0])) return;
      taint(a);
      return;
    case Op::Eq: {
      bool ok0 = is_lv(a->kids[0]) || a->kids[0]->op == Op::Lit;
      bool ok1 = is_lv(a->kids[1]) || a->kids[1]->op == Op::Lit;
      if (ok0 && ok1) return;
      taint(a);
      return;
    }
    case Op::Lt:
    case Op::Le:
      // var against a nat literal is tracked by the interval analysis
      if ((is_lv(a->kids[0]) && is_natlit(a->kids[1])) || (is_natlit(a->kids[0]) && is_lv(a->kids[1]))) return;
      taint(a);
      return;
    default: taint(a); return;
  }
}

inline void bound_atom(const Expr& c, std::map<std::string, VarInfo>& info) {
  bool neg = c->op == Op::Not;
  const Expr& a = neg ? c->kids[0] : c;
  auto set_kind = [&](VarInfo& vi, Kind k) {
    if (vi.kind && *vi.kind != k) vi.clash = true;
    else vi.kind = k;
    vi.defined = true;
  };
  if (a->op == Op::InType && is_lv(a->kids[0])) {
    auto& vi = info[a->kids[0]->name];
    if (neg) vi.not_kinds.insert(a->tag);
    else set_kind(vi, a->tag);
    return;
  }
  if (a->op == Op::InVal && is_lv(a->kids[0])) {
    auto& vi = info[a->kids[0]->name];
    if (neg) vi.undefined = true;
    else vi.defined = true;
    return;
  }
  if (a->op == Op::Eq && neg) {
    for (int s = 0; s < 2; ++s) {
      const Expr& x = a->kids[s];
      const Expr& y = a->kids[1 - s];
      if (is_lv(x)) info[x->name].defined = true;
      if (is_lv(x) && is_natlit(y)) info[x->name].ne.insert(y->lit.as_nat());
    }
    return;
  }
  if (a->op == Op::Lt || a->op == Op::Le) {
    const Expr& l = a->kids[0];
    const Expr& r = a->kids[1];
    bool strict = a->op == Op::Lt;
    auto tighten_hi = [](VarInfo& vi, __int128 h) { vi.hi = vi.hi ? std::min(*vi.hi, h) : h; };
    if (is_lv(l) && r->op == Op::Lit) {
      auto& vi = info[l->name];
      if (r->lit.is_nat()) {
        set_kind(vi, Kind::Nat);
        __int128 n = r->lit.as_nat();
        // l < n, l <= n, or negated: l >= n, l > n
        if (!neg) tighten_hi(vi, strict ? n - 1 : n);
        else vi.lo = std::max(vi.lo, strict ? n : n + 1);
      } else if (r->lit.is_rat()) {
        set_kind(vi, Kind::Rat);
      }
    } else if (l->op == Op::Lit && is_lv(r)) {
      auto& vi = info[r->name];
      if (l->lit.is_nat()) {
        set_kind(vi, Kind::Nat);
        __int128 n = l->lit.as_nat();
        // n < r, n <= r, or negated: r <= n, r < n
        if (!neg) vi.lo = std::max(vi.lo, strict ? n + 1 : n);
        else tighten_hi(vi, strict ? n : n - 1);
      } else if (l->lit.is_rat()) {
        set_kind(vi, Kind::Rat);
      }
    } else if (!neg) {
      for (const auto& e : {l, r})
        if (is_lv(e)) info[e->name].defined = true;
    }
  }
}

// Kind masks: bit k set when kind k is possible.
using KindMask = unsigned;
constexpr KindMask kAllKinds = 0x3f;
constexpr KindMask kind_bit(Kind k) { return 1u << static_cast<unsigned>(k); }
constexpr KindMask kNumKinds = kind_bit(Kind::Nat) | kind_bit(Kind::Rat);

// Kinds e may have when it is defined.
inline KindMask kinds_of(const Expr& e, const std::map<std::string, KindMask>& vm) {
  switch (e->op) {
    case Op::Lit: return kind_bit(e->lit.kind());
    case Op::LVar: {
      auto it = vm.find(e->name);
      return it == vm.end() ? kAllKinds : it->second;
    }
    case Op::PVar: return kAllKinds;
    case Op::List: return kind_bit(Kind::List);
    case Op::Add:
    case Op::Sub:
    case Op::Div: return kinds_of(e->kids[0], vm) & kinds_of(e->kids[1], vm) & kNumKinds;
    default: return kind_bit(Kind::Bool);
  }
}

// Records that e must be defined with a kind in `mask`. Every operator but
// the two membership tests is strict, so the requirement reaches the
// operands. Returns false on a contradiction.
inline bool require_kind(const Expr& e, KindMask mask, std::map<std::string, KindMask>& vm, bool& changed) {
  KindMask own = kinds_of(e, vm) & mask;
  if (!own) return false;
  switch (e->op) {
    case Op::Lit:
    case Op::PVar: return true;
    case Op::LVar: {
      auto [it, fresh] = vm.emplace(e->name, kAllKinds);
      if ((it->second & own) != it->second || fresh) changed = true;
      it->second &= own;
      return true;
    }
    case Op::InVal:
    case Op::InType: return true;
    case Op::Not:
    case Op::And:
    case Op::Or:
      for (const auto& k : e->kids)
        if (!require_kind(k, kind_bit(Kind::Bool), vm, changed)) return false;
      return true;
    case Op::Eq:
    case Op::List:
      for (const auto& k : e->kids)
        if (!require_kind(k, kAllKinds, vm, changed)) return false;
      return true;
    case Op::Lt:
    case Op::Le:
    case Op::Add:
    case Op::Sub:
    case Op::Div: {
      KindMask m = kinds_of(e->kids[0], vm) & kinds_of(e->kids[1], vm) & kNumKinds;
      if (e->op != Op::Lt && e->op != Op::Le) m &= own;
      for (const auto& k : e->kids)
        if (!require_kind(k, m, vm, changed)) return false;
      return true;
    }
  }
  return true;
}

// Kind constraints implied by the conjuncts, merged into info. Returns false
// when some conjunct can never evaluate to true.
inline bool infer_kinds(const std::vector<Expr>& cs, std::map<std::string, VarInfo>& info) {
  std::map<std::string, KindMask> vm;
  for (int round = 0; round < 8; ++round) {
    bool changed = false;
    for (const auto& c : cs)
      if (!require_kind(c, kind_bit(Kind::Bool), vm, changed)) return false;
    if (!changed) break;
  }
  for (const auto& [x, m] : vm) {
    auto& vi = info[x];
    vi.defined = true;
    for (unsigned k = 0; k < 6; ++k)
      if (!(m & (1u << k))) vi.not_kinds.insert(static_cast<Kind>(k));
    if (std::popcount(m) == 1) {
      Kind k = static_cast<Kind>(std::countr_zero(m));
      if (vi.kind && *vi.kind != k) vi.clash = true;
      else vi.kind = k;
    }
  }
  return true;
}

inline bool info_conflict(const VarInfo& vi) {
  if (vi.clash) return true;
  if (vi.undefined && (vi.defined || vi.kind)) return true;
  if (vi.kind && vi.not_kinds.count(*vi.kind)) return true;
  if (vi.kind == Kind::Nat) {
    if (vi.hi && *vi.hi < vi.lo) return true;
    if (vi.hi && *vi.hi - vi.lo < 4096) {
      bool any = false;
      for (__int128 n = vi.lo; n <= *vi.hi && !any; ++n)
        if (!vi.ne.count(static_cast<uint64_t>(n))) any = true;
      if (!any) return true;
    }
  }
  if (!vi.kind) {
    // all six kinds excluded
    if (vi.not_kinds.size() == 6 && vi.defined) return true;
  }
  return false;
}

}  // namespace detail

class Solver {
 public:
  explicit Solver(Bounds b = {}) : bounds_(std::move(b)) {}

  size_t node_budget = 200000;
  size_t max_finite_range = 64;
  int max_splits = 10;

  const Bounds& bounds() const { return bounds_; }
  void set_bounds(Bounds b) {
    bounds_ = std::move(b);
    cache_.clear();
  }
  const SolverStats& stats() const { return stats_; }
  void set_dump_dir(std::string d) { dump_dir_ = std::move(d); }

  Verdict check_sat(const std::vector<Expr>& pc) {
    ++stats_.queries;
    auto key = cache_key(pc);
    if (auto it = cache_.find(key); it != cache_.end()) {
      ++stats_.cache_hits;
      return it->second;
    }
    if (dump_dir_) dump(pc);
    Verdict v = solve(pc);
    if (v.k == SatKind::Sat && !replays(pc, v.model)) v = Verdict{SatKind::Unknown, {}};
    if (v.k == SatKind::Unknown) ++stats_.unknown;
    if (cache_.size() > 200000) cache_.clear();
    cache_.emplace(std::move(key), v);
    return v;
  }

  // pc |= e: every model of pc makes e true.
  Tri entails(const std::vector<Expr>& pc, const Expr& e) {
    Expr g = fold(e);
    if (g->op == Op::Lit && g->lit.is_true()) return Tri::Yes;
    std::set<Expr> have;
    for (const auto& c : pc) {
      std::vector<Expr> parts;
      split_conj(fold(c), parts);
      have.insert(parts.begin(), parts.end());
    }
    std::vector<Expr> goals;
    split_conj(g, goals);
    if (std::all_of(goals.begin(), goals.end(), [&](const Expr& x) { return have.count(x) > 0; })) return Tri::Yes;
    bool unknown = false;
    for (const auto& d : not_true(g)) {
      std::vector<Expr> q = pc;
      q.insert(q.end(), d.begin(), d.end());
      auto v = check_sat(q);
      if (v.k == SatKind::Sat) return Tri::No;
      if (v.k == SatKind::Unknown) unknown = true;
    }
    return unknown ? Tri::Unknown : Tri::Yes;
  }

  // Cases under which `e` fails to evaluate to true, each a conjunct list.
  static std::vector<std::vector<Expr>> not_true(const Expr& e) {
    if (e->op == Op::Lit) {
      if (e->lit.is_true()) return {};
      return {{}};
    }
    switch (e->op) {
      case Op::And: {
        auto a = not_true(e->kids[0]);
        auto b = not_true(e->kids[1]);
        a.insert(a.end(), b.begin(), b.end());
        return a;
      }
      case Op::Eq:
        return {{e_notinval(e->kids[0])}, {e_notinval(e->kids[1])}, {e_not(e)}};
      case Op::InVal:
      case Op::InType: return {{e_not(e)}};
      case Op::Not: return {{e_not(e_intype(e->kids[0], Kind::Bool))}, {e->kids[0]}};
      default: return {{e_not(e_intype(e, Kind::Bool))}, {e_not(e)}};
    }
  }

 private:
  struct Simplified {
    bool unsat = false;
    std::vector<Expr> cs;
    std::vector<std::pair<std::string, Expr>> solved;
    std::map<std::string, detail::VarInfo> info;
  };

  static std::string cache_key(const std::vector<Expr>& pc) {
    std::set<Expr> s(pc.begin(), pc.end());
    std::string k;
    for (const auto& e : s) {
      k += show(e);
      k += '\x1f';
    }
    return k;
  }

  static bool replays(const std::vector<Expr>& pc, const Interp& th) {
    static const Store s;
    for (const auto& c : pc) {
      auto v = eval(c, th, s);
      if (!v || !v->is_true()) return false;
    }
    return true;
  }

  static bool occurs(const std::string& x, const Expr& t) {
    if (!t->has_lvar) return false;
    if (t->op == Op::LVar) return t->name == x;
    for (const auto& k : t->kids)
      if (occurs(x, k)) return true;
    return false;
  }

  Simplified simplify(const std::vector<Expr>& pc) const {
    Simplified r;
    std::vector<Expr> work = pc;
    for (int iter = 0; iter < 256; ++iter) {
      std::set<Expr> set;
      for (const auto& c : work) {
        std::vector<Expr> parts;
        split_conj(fold(c), parts);
        for (auto& p : parts) {
          if (p->op == Op::Lit) {
            if (p->lit.is_true()) continue;
            r.unsat = true;
            return r;
          }
          if (is_ground(p)) {  // ground but not foldable: undefined
            r.unsat = true;
            return r;
          }
          set.insert(p);
        }
      }
      for (const auto& c : set)
        if (set.count(e_not(c))) {
          r.unsat = true;
          return r;
        }
      // pick an equation x = t to eliminate; prefer literals, then variables
      std::optional<std::pair<std::string, Expr>> pick_eq;
      Expr used;
      int best = 99;
      for (const auto& c : set) {
        if (c->op != Op::Eq) continue;
        for (int s = 0; s < 2; ++s) {
          const Expr& x = c->kids[s];
          const Expr& t = c->kids[1 - s];
          if (!detail::is_lv(x) || occurs(x->name, t)) continue;
          int score = t->op == Op::Lit ? 0 : (detail::is_lv(t) ? 1 : 2);
          if (score < best) {
            best = score;
            pick_eq = {x->name, t};
            used = c;
          }
        }
      }
      work.assign(set.begin(), set.end());
      if (!pick_eq) break;
      Subst sub{{pick_eq->first, pick_eq->second}};
      std::vector<Expr> next;
      for (const auto& c : work)
        if (!(c == used)) next.push_back(subst_lvars(c, sub));
      if (pick_eq->second->op != Op::Lit) next.push_back(e_inval(pick_eq->second));
      r.solved.push_back(*pick_eq);
      work = std::move(next);
    }
    r.cs = work;
    for (const auto& c : r.cs) {
      std::set<std::string> vs;
      collect_lvars(c, vs);
      for (const auto& v : vs) r.info[v];
      detail::bound_atom(c, r.info);
      detail::scan_shape(c, r.info);
    }
    if (!detail::infer_kinds(r.cs, r.info)) {
      r.unsat = true;
      return r;
    }
    for (const auto& [x, vi] : r.info)
      if (detail::info_conflict(vi)) {
        r.unsat = true;
        break;
      }
    return r;
  }

  struct Component {
    std::vector<std::string> vars;
    std::vector<Expr> cs;
  };

  static std::vector<Component> components(const std::vector<Expr>& cs) {
    std::map<std::string, std::string> parent;
    std::function<std::string(const std::string&)> find = [&](const std::string& x) -> std::string {
      auto& p = parent[x];
      if (p.empty() || p == x) {
        p = x;
        return x;
      }
      p = find(p);
      return p;
    };
    std::vector<std::set<std::string>> vs(cs.size());
    for (size_t i = 0; i < cs.size(); ++i) {
      collect_lvars(cs[i], vs[i]);
      std::string first;
      for (const auto& v : vs[i]) {
        find(v);
        if (first.empty()) first = v;
        else parent[find(v)] = find(first);
      }
    }
    std::map<std::string, Component> by_root;
    for (size_t i = 0; i < cs.size(); ++i) by_root[find(*vs[i].begin())].cs.push_back(cs[i]);
    for (auto& [x, p] : parent) by_root[find(x)].vars.push_back(x);
    std::vector<Component> out;
    for (auto& [root, c] : by_root)
      if (!c.cs.empty()) out.push_back(std::move(c));
    return out;
  }

  // Values that are different from every literal in `used`, per kind.
  static std::vector<Value> fresh_values(Kind k, size_t n, const std::set<Value>& used) {
    std::vector<Value> out;
    for (uint64_t i = 0; out.size() < n && i < 100000; ++i) {
      Value v;
      switch (k) {
        case Kind::Nat: v = Value::nat(i); break;
        case Kind::Rat: v = Value::rat(*Rat::make(1, static_cast<__int128>(i) + 7)); break;
        case Kind::Str: v = Value::str("#fresh" + std::to_string(i)); break;
        case Kind::List: v = Value::list({Value::nat(i)}); break;
        default: return out;
      }
      if (!used.count(v)) out.push_back(v);
    }
    return out;
  }

  SatKind solve_component(const Component& comp, const std::map<std::string, detail::VarInfo>& info, Interp& model,
                          size_t& nodes) const {
    using Cand = std::optional<Value>;  // nullopt: variable left unbound
    std::set<Value> pool;
    for (const auto& c : comp.cs) detail::collect_literals(c, pool);
    for (const auto& v : comp.vars) {
      const auto& vi = info.at(v);
      if (vi.kind == Kind::Nat && vi.hi && *vi.hi - vi.lo <= static_cast<__int128>(max_finite_range))
        for (__int128 n = vi.lo; n <= *vi.hi; ++n) pool.insert(Value::nat(static_cast<uint64_t>(n)));
    }
    // neighbours of nat literals so strict comparisons have witnesses
    std::set<Value> near;
    for (const auto& v : pool)
      if (v.is_nat()) {
        near.insert(Value::nat(v.as_nat() + 1));
        if (v.as_nat() > 0) near.insert(Value::nat(v.as_nat() - 1));
      }
    size_t nv = comp.vars.size();
    std::vector<Value> extra;
    for (Kind k : {Kind::Nat, Kind::Rat, Kind::Str, Kind::List}) {
      auto f = fresh_values(k, nv, pool);
      extra.insert(extra.end(), f.begin(), f.end());
    }
    std::vector<Value> base(pool.begin(), pool.end());
    base.push_back(Value::nil());
    base.push_back(Value::boolean(true));
    base.push_back(Value::boolean(false));
    for (const auto& v : extra) base.push_back(v);
    // bounded extras for vars outside the equality fragment
    std::vector<Value> wide = base;
    for (const auto& v : near) wide.push_back(v);
    for (const auto& v : bounds_.values) wide.push_back(v);
    wide.push_back(Value::rat(Rat{1, 2}));
    wide.push_back(Value::rat(Rat{1, 1}));
    wide.push_back(Value::rat(Rat{1, 4}));
    wide.push_back(Value::rat(Rat{3, 4}));

    bool complete = true;
    std::vector<std::pair<std::string, std::vector<Cand>>> vars;
    for (const auto& x : comp.vars) {
      const auto& vi = info.at(x);
      std::vector<Cand> cs;
      std::set<Value> seen;
      auto admit = [&](const Value& v) {
        if (!seen.insert(v).second) return;
        if (vi.kind && v.kind() != *vi.kind) return;
        if (vi.not_kinds.count(v.kind())) return;
        if (v.is_nat() && vi.kind == Kind::Nat) {
          __int128 n = v.as_nat();
          if (n < vi.lo || (vi.hi && n > *vi.hi) || vi.ne.count(v.as_nat())) return;
        }
        cs.push_back(v);
      };
      bool finite_nat = vi.kind == Kind::Nat && vi.hi && *vi.hi - vi.lo <= static_cast<__int128>(max_finite_range);
      if (finite_nat) {
        for (__int128 n = vi.lo; n <= *vi.hi; ++n) admit(Value::nat(static_cast<uint64_t>(n)));
      } else if (vi.kind == Kind::Bool) {
        admit(Value::boolean(true));
        admit(Value::boolean(false));
      } else if (vi.kind == Kind::Nil) {
        admit(Value::nil());
      } else {
        const auto& from = vi.shape_ok ? base : wide;
        for (const auto& v : from) admit(v);
        if (!vi.shape_ok) complete = false;
        if (vi.kind == Kind::Nat && vi.shape_ok) {
          // unbounded nat range with literal bounds: fresh values above lo
          for (uint64_t n = static_cast<uint64_t>(vi.lo), added = 0; added < nv + 1 && n < vi.lo + 100000; ++n)
            if (!pool.count(Value::nat(n)) && !vi.ne.count(n)) {
              admit(Value::nat(n));
              ++added;
            }
        }
      }
      if (!vi.defined && !vi.kind) cs.insert(cs.begin(), std::nullopt);
      vars.push_back({x, std::move(cs)});
    }
    std::sort(vars.begin(), vars.end(), [](const auto& a, const auto& b) { return a.second.size() < b.second.size(); });
    std::map<std::string, size_t> pos;
    for (size_t i = 0; i < vars.size(); ++i) pos[vars[i].first] = i;
    std::vector<std::vector<Expr>> check_at(vars.size());
    for (const auto& c : comp.cs) {
      std::set<std::string> vs;
      collect_lvars(c, vs);
      size_t last = 0;
      for (const auto& v : vs) last = std::max(last, pos.at(v));
      check_at[last].push_back(c);
    }
    Interp th;
    static const Store s;
    bool budget_hit = false;
    std::function<bool(size_t)> rec = [&](size_t i) -> bool {
      if (i == vars.size()) return true;
      for (const auto& cand : vars[i].second) {
        if (++nodes > node_budget) {
          budget_hit = true;
          return false;
        }
        if (cand) th[vars[i].first] = *cand;
        else th.erase(vars[i].first);
        bool ok = true;
        for (const auto& c : check_at[i]) {
          auto v = eval(c, th, s);
          if (!v || !v->is_true()) {
            ok = false;
            break;
          }
        }
        if (ok && rec(i + 1)) return true;
        if (budget_hit) return false;
      }
      th.erase(vars[i].first);
      return false;
    };
    if (rec(0)) {
      for (const auto& [k, v] : th) model[k] = v;
      return SatKind::Sat;
    }
    if (budget_hit || !complete) return SatKind::Unknown;
    return SatKind::Unsat;
  }

  // Splits on disjunctions, negated conjunctions included, then solves each
  // conjunctive branch. `l || r` holds iff one side holds and the other is
  // a boolean.
  Verdict solve(const std::vector<Expr>& pc, int depth = 0) {
    std::vector<Expr> flat;
    std::function<void(const Expr&)> add = [&](const Expr& c) {
      if (c->op == Op::And) {
        add(c->kids[0]);
        add(c->kids[1]);
      } else if (c->op == Op::Not && c->kids[0]->op == Op::Or) {
        add(fold(e_not(c->kids[0]->kids[0])));
        add(fold(e_not(c->kids[0]->kids[1])));
      } else if (c->op == Op::Not && c->kids[0]->op == Op::Not) {
        add(c->kids[0]->kids[0]);
      } else {
        flat.push_back(c);
      }
    };
    for (const auto& c : pc) add(fold(c));
    for (size_t i = 0; i < flat.size() && depth < max_splits; ++i) {
      const Expr& c = flat[i];
      Expr l, r;
      if (c->op == Op::Or) l = c->kids[0], r = c->kids[1];
      else if (c->op == Op::Not && c->kids[0]->op == Op::And)
        l = e_not(c->kids[0]->kids[0]), r = e_not(c->kids[0]->kids[1]);
      else continue;
      auto is_bool = [](const Expr& x) { return bool_total(x) ? e_true() : e_intype(x, Kind::Bool); };
      bool unknown = false;
      for (const auto& [side, other] : {std::pair{l, r}, std::pair{r, l}}) {
        std::vector<Expr> q = flat;
        q[i] = fold(side);
        q.push_back(fold(is_bool(c->op == Op::Or ? other : other->kids[0])));
        Verdict v = solve(q, depth + 1);
        if (v.k == SatKind::Sat) return v;
        if (v.k == SatKind::Unknown) unknown = true;
      }
      return unknown ? Verdict{SatKind::Unknown, {}} : Verdict{SatKind::Unsat, {}};
    }
    return solve_conj(flat);
  }

  Verdict solve_conj(const std::vector<Expr>& pc) {
    Simplified sp = simplify(pc);
    if (sp.unsat) {
      ++stats_.core_unsat;
      return {SatKind::Unsat, {}};
    }
    Interp model;
    bool unknown = false;
    size_t nodes = 0;
    for (const auto& comp : components(sp.cs)) {
      SatKind k = solve_component(comp, sp.info, model, nodes);
      if (k == SatKind::Unsat) {
        ++stats_.enum_unsat;
        return {SatKind::Unsat, {}};
      }
      if (k == SatKind::Unknown) unknown = true;
    }
    if (unknown) return {SatKind::Unknown, {}};
    static const Store s;
    for (auto it = sp.solved.rbegin(); it != sp.solved.rend(); ++it) {
      auto v = eval(it->second, model, s);
      if (v) model[it->first] = *v;
    }
    ++stats_.enum_sat;
    return {SatKind::Sat, model};
  }

  void dump(const std::vector<Expr>& pc);

  Bounds bounds_;
  SolverStats stats_;
  std::unordered_map<std::string, Verdict> cache_;
  std::optional<std::string> dump_dir_;
  size_t dumped_ = 0;
};

// SMT-LIB2 export. Every term denotes an optional value: `undef` for the
// undefined result, `(def v)` otherwise.

namespace detail {

inline std::string smt_string(const std::string& s) {
  std::string r = "\"";
  for (unsigned char c : s) {
    if (c == '"') r += "\"\"";
    else if (c >= 32 && c < 127) r += static_cast<char>(c);
    else {
      char buf[16];
      std::snprintf(buf, sizeof buf, "\\u{%x}", c);
      r += buf;
    }
  }
  return r + "\"";
}

inline std::string smt_value(const Value& v) {
  switch (v.kind()) {
    case Kind::Nil: return "vnil";
    case Kind::Bool: return v.as_bool() ? "(vbool true)" : "(vbool false)";
    case Kind::Nat: return "(vnat " + std::to_string(v.as_nat()) + ")";
    case Kind::Rat: return "(vrat (/ " + std::to_string(v.as_rat().num) + ".0 " + std::to_string(v.as_rat().den) + ".0))";
    case Kind::Str: return "(vstr " + smt_string(v.as_str()) + ")";
    case Kind::List: {
      std::string r = "lnil";
      const auto& l = v.as_list();
      for (auto it = l.rbegin(); it != l.rend(); ++it) r = "(lcons " + smt_value(*it) + " " + r + ")";
      return "(vlist " + r + ")";
    }
  }
  return "vnil";
}

inline const char* smt_tester(Kind k) {
  switch (k) {
    case Kind::Nil: return "is-vnil";
    case Kind::Bool: return "is-vbool";
    case Kind::Nat: return "is-vnat";
    case Kind::Rat: return "is-vrat";
    case Kind::Str: return "is-vstr";
    case Kind::List: return "is-vlist";
  }
  return "is-vnil";
}

inline std::string smt_term(const Expr& e) {
  switch (e->op) {
    case Op::Lit: return "(def " + smt_value(e->lit) + ")";
    case Op::LVar: return "|lv_" + e->name + "|";
    case Op::PVar: throw EncodingUnsupported("program variable " + e->name + " in path condition");
    case Op::Not: return "(ph_not " + smt_term(e->kids[0]) + ")";
    case Op::And: return "(ph_and " + smt_term(e->kids[0]) + " " + smt_term(e->kids[1]) + ")";
    case Op::Or: return "(ph_or " + smt_term(e->kids[0]) + " " + smt_term(e->kids[1]) + ")";
    case Op::Eq: return "(ph_eq " + smt_term(e->kids[0]) + " " + smt_term(e->kids[1]) + ")";
    case Op::Lt: return "(ph_lt " + smt_term(e->kids[0]) + " " + smt_term(e->kids[1]) + ")";
    case Op::Le: return "(ph_le " + smt_term(e->kids[0]) + " " + smt_term(e->kids[1]) + ")";
    case Op::Add: return "(ph_add " + smt_term(e->kids[0]) + " " + smt_term(e->kids[1]) + ")";
    case Op::Sub: return "(ph_sub " + smt_term(e->kids[0]) + " " + smt_term(e->kids[1]) + ")";
    case Op::Div: return "(ph_div " + smt_term(e->kids[0]) + " " + smt_term(e->kids[1]) + ")";
    case Op::InVal: return "(def (vbool (is-def " + smt_term(e->kids[0]) + ")))";
    case Op::InType: {
      std::string t = smt_term(e->kids[0]);
      return std::string("(def (vbool (and (is-def ") + t + ") (" + smt_tester(e->tag) + " (val " + t + ")))))";
    }
    case Op::List: {
      std::string defined = "true", body = "lnil";
      for (auto it = e->kids.rbegin(); it != e->kids.rend(); ++it) {
        std::string t = smt_term(*it);
        defined = "(and (is-def " + t + ") " + defined + ")";
        body = "(lcons (val " + t + ") " + body + ")";
      }
      return "(ite " + defined + " (def (vlist " + body + ")) undef)";
    }
  }
  throw EncodingUnsupported("unknown operator");
}

inline const char* smt_preamble() {
  return R"((set-logic ALL)
(declare-datatypes ((Val 0) (Lst 0))
  (((vnil) (vbool (gb Bool)) (vnat (gn Int)) (vrat (gr Real)) (vstr (gs String)) (vlist (gl Lst)))
   ((lnil) (lcons (hd Val) (tl Lst)))))
(declare-datatypes ((OV 0)) (((undef) (def (val Val)))))
(define-fun ph_wf ((a OV)) Bool
  (or (is-undef a) (and (=> (is-vnat (val a)) (>= (gn (val a)) 0)) (=> (is-vrat (val a)) (> (gr (val a)) 0.0)))))
(define-fun ph_bool2 ((a OV) (b OV)) Bool
  (and (is-def a) (is-def b) (is-vbool (val a)) (is-vbool (val b))))
(define-fun ph_nat2 ((a OV) (b OV)) Bool
  (and (is-def a) (is-def b) (is-vnat (val a)) (is-vnat (val b))))
(define-fun ph_rat2 ((a OV) (b OV)) Bool
  (and (is-def a) (is-def b) (is-vrat (val a)) (is-vrat (val b))))
(define-fun ph_not ((a OV)) OV
  (ite (and (is-def a) (is-vbool (val a))) (def (vbool (not (gb (val a))))) undef))
(define-fun ph_and ((a OV) (b OV)) OV
  (ite (ph_bool2 a b) (def (vbool (and (gb (val a)) (gb (val b))))) undef))
(define-fun ph_or ((a OV) (b OV)) OV
  (ite (ph_bool2 a b) (def (vbool (or (gb (val a)) (gb (val b))))) undef))
(define-fun ph_eq ((a OV) (b OV)) OV
  (ite (and (is-def a) (is-def b)) (def (vbool (= (val a) (val b)))) undef))
(define-fun ph_lt ((a OV) (b OV)) OV
  (ite (ph_nat2 a b) (def (vbool (< (gn (val a)) (gn (val b)))))
  (ite (ph_rat2 a b) (def (vbool (< (gr (val a)) (gr (val b))))) undef)))
(define-fun ph_le ((a OV) (b OV)) OV
  (ite (ph_nat2 a b) (def (vbool (<= (gn (val a)) (gn (val b)))))
  (ite (ph_rat2 a b) (def (vbool (<= (gr (val a)) (gr (val b))))) undef)))
(define-fun ph_add ((a OV) (b OV)) OV
  (ite (ph_nat2 a b) (def (vnat (+ (gn (val a)) (gn (val b)))))
  (ite (ph_rat2 a b) (def (vrat (+ (gr (val a)) (gr (val b))))) undef)))
(define-fun ph_sub ((a OV) (b OV)) OV
  (ite (and (ph_nat2 a b) (>= (gn (val a)) (gn (val b)))) (def (vnat (- (gn (val a)) (gn (val b)))))
  (ite (and (ph_rat2 a b) (> (gr (val a)) (gr (val b)))) (def (vrat (- (gr (val a)) (gr (val b))))) undef)))
(define-fun ph_div ((a OV) (b OV)) OV
  (ite (and (ph_nat2 a b) (not (= (gn (val b)) 0)) (= (mod (gn (val a)) (gn (val b))) 0))
       (def (vnat (div (gn (val a)) (gn (val b)))))
  (ite (ph_rat2 a b) (def (vrat (/ (gr (val a)) (gr (val b))))) undef)))
)";
}

}  // namespace detail

// Deterministic: conjuncts are emitted in canonical order.
inline std::string export_smtlib(const std::vector<Expr>& pc) {
  std::set<Expr> cs(pc.begin(), pc.end());
  std::set<std::string> vars;
  for (const auto& c : cs) collect_lvars(c, vars);
  std::ostringstream os;
  os << detail::smt_preamble();
  for (const auto& v : vars) os << "(declare-const |lv_" << v << "| OV)\n(assert (ph_wf |lv_" << v << "|))\n";
  for (const auto& c : cs) os << "(assert (= " << detail::smt_term(c) << " (def (vbool true))))\n";
  os << "(check-sat)\n";
  return os.str();
}

inline void Solver::dump(const std::vector<Expr>& pc) {
  std::filesystem::create_directories(*dump_dir_);
  std::ostringstream name;
  name << "query_" << dumped_++ << ".smt2";
  std::ofstream f(std::filesystem::path(*dump_dir_) / name.str());
  try {
    f << export_smtlib(pc);
  } catch (const EncodingUnsupported& e) {
    f << "; EncodingUnsupported: " << e.what() << "\n";
  }
}

}  // namespace polyheap
