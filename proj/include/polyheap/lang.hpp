#pragma once

#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "expr.hpp"

namespace polyheap {

enum class Outcome : uint8_t { Ok, Err, Miss, Abort };

inline const char* outcome_name(Outcome o) {
  switch (o) {
    case Outcome::Ok: return "ok";
    case Outcome::Err: return "err";
    case Outcome::Miss: return "miss";
    case Outcome::Abort: return "abort";
  }
  return "?";
}

enum class CK : uint8_t { Skip, Assign, If, Seq, Call, Action, Fold, Unfold };

struct CmdNode;
using Cmd = std::shared_ptr<const CmdNode>;

struct CmdNode {
  CK k = CK::Skip;
  std::string target;             // Assign, Call
  std::string name;               // function, action, or predicate name
  std::vector<std::string> outs;  // Action
  Expr e;                         // Assign value, If guard
  std::vector<Expr> args;         // Call, Action, Fold, Unfold
  Cmd c1, c2;                     // If branches, Seq parts
};

inline Cmd mk_cmd(CmdNode n) { return std::make_shared<const CmdNode>(std::move(n)); }
inline Cmd c_skip() { return mk_cmd({}); }
inline Cmd c_assign(std::string x, Expr e) {
  CmdNode n; n.k = CK::Assign; n.target = std::move(x); n.e = std::move(e);
  return mk_cmd(std::move(n));
}
inline Cmd c_if(Expr g, Cmd a, Cmd b) {
  CmdNode n; n.k = CK::If; n.e = std::move(g); n.c1 = std::move(a); n.c2 = std::move(b);
  return mk_cmd(std::move(n));
}
inline Cmd c_seq(Cmd a, Cmd b) {
  CmdNode n; n.k = CK::Seq; n.c1 = std::move(a); n.c2 = std::move(b);
  return mk_cmd(std::move(n));
}
inline Cmd c_call(std::string y, std::string f, std::vector<Expr> args) {
  CmdNode n; n.k = CK::Call; n.target = std::move(y); n.name = std::move(f); n.args = std::move(args);
  return mk_cmd(std::move(n));
}
inline Cmd c_action(std::vector<std::string> outs, std::string act, std::vector<Expr> args) {
  CmdNode n; n.k = CK::Action; n.outs = std::move(outs); n.name = std::move(act); n.args = std::move(args);
  return mk_cmd(std::move(n));
}
inline Cmd c_fold(std::string p, std::vector<Expr> args) {
  CmdNode n; n.k = CK::Fold; n.name = std::move(p); n.args = std::move(args);
  return mk_cmd(std::move(n));
}
inline Cmd c_unfold(std::string p, std::vector<Expr> args) {
  CmdNode n; n.k = CK::Unfold; n.name = std::move(p); n.args = std::move(args);
  return mk_cmd(std::move(n));
}

inline Cmd c_seq_all(const std::vector<Cmd>& cs) {
  if (cs.empty()) return c_skip();
  Cmd r = cs.back();
  for (size_t i = cs.size() - 1; i-- > 0;) r = c_seq(cs[i], r);
  return r;
}

inline void collect_pvars(const Cmd& c, std::set<std::string>& out) {
  switch (c->k) {
    case CK::Skip: break;
    case CK::Assign: out.insert(c->target); collect_pvars(c->e, out); break;
    case CK::If: collect_pvars(c->e, out); collect_pvars(c->c1, out); collect_pvars(c->c2, out); break;
    case CK::Seq: collect_pvars(c->c1, out); collect_pvars(c->c2, out); break;
    case CK::Call:
      out.insert(c->target);
      for (const auto& a : c->args) collect_pvars(a, out);
      break;
    case CK::Action:
      for (const auto& x : c->outs) out.insert(x);
      for (const auto& a : c->args) collect_pvars(a, out);
      break;
    case CK::Fold:
    case CK::Unfold:
      for (const auto& a : c->args) collect_pvars(a, out);
      break;
  }
}

inline std::set<std::string> prog_vars(const Cmd& c) {
  std::set<std::string> r;
  collect_pvars(c, r);
  return r;
}

inline bool cmd_equal(const Cmd& a, const Cmd& b) {
  if (a.get() == b.get()) return true;
  if (a->k != b->k || a->target != b->target || a->name != b->name || a->outs != b->outs) return false;
  if (a->e.valid() != b->e.valid() || (a->e.valid() && !(a->e == b->e))) return false;
  if (a->args != b->args) return false;
  if ((a->c1 == nullptr) != (b->c1 == nullptr) || (a->c1 && !cmd_equal(a->c1, b->c1))) return false;
  if ((a->c2 == nullptr) != (b->c2 == nullptr) || (a->c2 && !cmd_equal(a->c2, b->c2))) return false;
  return true;
}

struct FunctionDef {
  std::string id;
  std::vector<std::string> params;
  Cmd body;
  Expr ret;

  std::vector<std::string> locals() const {
    std::vector<std::string> z;
    std::set<std::string> ps(params.begin(), params.end());
    for (const auto& x : prog_vars(body))
      if (!ps.count(x)) z.push_back(x);
    return z;
  }
};

using ImplContext = std::map<std::string, FunctionDef>;  // γ

}  // namespace polyheap
