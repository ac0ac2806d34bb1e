#pragma once

#include <sstream>
#include <string>

#include "assertion.hpp"

namespace polyheap {

inline void print_assertion(std::ostream& os, const Assertion& a, int ctx = 0);

// 0: implication, 1: disjunction, 2: star, 3: atom
inline int aprec(const Assertion& a) {
  switch (a->k) {
    case AK::Implies: return 0;
    case AK::Or: return 1;
    case AK::Star: return 2;
    default: return 3;
  }
}

inline void print_achild(std::ostream& os, const Assertion& a, int need) {
  if (aprec(a) < need) {
    os << "(";
    print_assertion(os, a, 0);
    os << ")";
  } else {
    print_assertion(os, a, need);
  }
}

inline void print_args(std::ostream& os, const std::vector<Expr>& ins, const std::vector<Expr>& outs) {
  os << "(";
  for (size_t i = 0; i < ins.size(); ++i) {
    if (i) os << ", ";
    print_expr(os, ins[i]);
  }
  os << ";";
  for (size_t i = 0; i < outs.size(); ++i) {
    os << (i ? ", " : " ");
    print_expr(os, outs[i]);
  }
  os << ")";
}

inline void print_assertion(std::ostream& os, const Assertion& a, int) {
  switch (a->k) {
    case AK::Pure: print_expr(os, a->e); return;
    case AK::True: os << "TRUE"; return;
    case AK::Emp: os << "emp"; return;
    case AK::Implies:
      print_achild(os, a->a, 1);
      os << " ==> ";
      print_achild(os, a->b, 0);
      return;
    case AK::Or:
      print_achild(os, a->a, 1);
      os << " \\/ ";
      print_achild(os, a->b, 2);
      return;
    case AK::Star:
      print_achild(os, a->a, 2);
      os << " * ";
      print_achild(os, a->b, 3);
      return;
    case AK::Exists:
      os << "(exists #" << a->name << ". ";
      print_assertion(os, a->a, 0);
      os << ")";
      return;
    case AK::Res:
      if (a->name == "points_to" && a->ins.size() == 1 && a->outs.size() == 1) {
        print_child(os, a->ins[0], 4);
        os << " |-> ";
        print_child(os, a->outs[0], 4);
        return;
      }
      if (a->name == "freed" && a->ins.size() == 1 && a->outs.empty()) {
        print_child(os, a->ins[0], 4);
        os << " |-> FREED";
        return;
      }
      os << a->name;
      print_args(os, a->ins, a->outs);
      return;
    case AK::Pred:
      os << a->name;
      print_args(os, a->ins, a->outs);
      return;
  }
}

inline std::string show(const Assertion& a) {
  std::ostringstream os;
  print_assertion(os, a);
  return os.str();
}

inline void print_cmd(std::ostream& os, const Cmd& c, int indent);

inline void print_seq(std::ostream& os, const Cmd& c, int indent) {
  if (c->k == CK::Seq) {
    print_seq(os, c->c1, indent);
    os << ";\n";
    print_seq(os, c->c2, indent);
  } else {
    print_cmd(os, c, indent);
  }
}

inline void print_cmd(std::ostream& os, const Cmd& c, int indent) {
  std::string pad(static_cast<size_t>(indent), ' ');
  switch (c->k) {
    case CK::Skip: os << pad << "skip"; return;
    case CK::Assign: os << pad << c->target << " := " << c->e; return;
    case CK::If:
      os << pad << "if (" << c->e << ") {\n";
      print_seq(os, c->c1, indent + 2);
      os << "\n" << pad << "} else {\n";
      print_seq(os, c->c2, indent + 2);
      os << "\n" << pad << "}";
      return;
    case CK::Seq: print_seq(os, c, indent); return;
    case CK::Call:
    case CK::Action:
      os << pad;
      if (c->k == CK::Call) {
        os << c->target << " := ";
      } else if (!c->outs.empty()) {
        for (size_t i = 0; i < c->outs.size(); ++i) os << (i ? ", " : "") << c->outs[i];
        os << " := ";
      }
      os << c->name << "(" << show_list(c->args) << ")";
      return;
    case CK::Fold: os << pad << "fold " << c->name << "(" << show_list(c->args) << ")"; return;
    case CK::Unfold: os << pad << "unfold " << c->name << "(" << show_list(c->args) << ")"; return;
  }
}

inline std::string show(const Cmd& c) {
  std::ostringstream os;
  print_seq(os, c, 0);
  return os.str();
}

inline std::string show_inline(const Cmd& c) {
  std::string s = show(c);
  std::string r;
  bool space = false;
  for (char ch : s) {
    if (ch == '\n' || ch == ' ') {
      space = true;
      continue;
    }
    if (space && !r.empty()) r += ' ';
    space = false;
    r += ch;
  }
  return r;
}

inline void print_function(std::ostream& os, const FunctionDef& f) {
  os << "func " << f.id << "(";
  for (size_t i = 0; i < f.params.size(); ++i) os << (i ? ", " : "") << f.params[i];
  os << ") {\n";
  print_seq(os, f.body, 2);
  os << ";\n  return " << f.ret << "\n}\n";
}

inline void print_pred(std::ostream& os, const PredDef& p) {
  os << "pred " << p.name << "(";
  for (size_t i = 0; i < p.ins.size(); ++i) os << (i ? ", " : "") << "+#" << p.ins[i];
  if (!p.outs.empty()) {
    os << (p.ins.empty() ? "" : "; ");
    for (size_t i = 0; i < p.outs.size(); ++i) os << (i ? ", " : "") << "#" << p.outs[i];
  }
  os << ") {\n  " << show(p.body) << "\n}\n";
}

inline void print_spec(std::ostream& os, const Quadruple& q) {
  os << "spec " << flavor_name(q.flavor) << " " << q.fid << "(";
  for (size_t i = 0; i < q.pvars.size(); ++i) os << (i ? ", " : "") << q.pvars[i];
  os << ") {\n  requires: " << show(q.pre) << ";\n  ensures_ok: " << show(q.post_ok)
     << ";\n  ensures_err: " << show(q.post_err) << "\n}\n";
}

inline std::string show(const Quadruple& q) {
  std::ostringstream os;
  print_spec(os, q);
  return os.str();
}

inline std::string show_program(const Program& p) {
  std::ostringstream os;
  for (const auto& n : p.pred_order) {
    print_pred(os, p.preds.at(n));
    os << "\n";
  }
  for (const auto& n : p.func_order) {
    print_function(os, p.funcs.at(n));
    os << "\n";
  }
  for (const auto& [fid, i] : p.spec_order) {
    print_spec(os, p.specs.at(fid)[i]);
    os << "\n";
  }
  return os.str();
}

}  // namespace polyheap
