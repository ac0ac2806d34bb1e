#pragma once

#include <cctype>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "assertion.hpp"

namespace polyheap {

struct ParseError : std::runtime_error {
  int line = 0, col = 0;
  std::set<std::string> expected;
  std::string found;

  ParseError(int l, int c, std::set<std::string> exp, std::string fnd, const std::string& msg)
      : std::runtime_error(format(l, c, exp, fnd, msg)), line(l), col(c), expected(std::move(exp)), found(std::move(fnd)) {}

  static std::string format(int l, int c, const std::set<std::string>& exp, const std::string& fnd,
                            const std::string& msg) {
    std::string s = std::to_string(l) + ":" + std::to_string(c) + ": ";
    if (!msg.empty()) s += msg;
    else s += "unexpected " + (fnd.empty() ? std::string("end of input") : "'" + fnd + "'");
    if (!exp.empty()) {
      s += "; expected one of:";
      for (const auto& e : exp) s += " " + e;
    }
    return s;
  }
};

namespace detail {

enum class Tok { Ident, LVar, Nat, Str, Sym, End };

struct Token {
  Tok kind;
  std::string text;
  int line, col;
};

inline std::vector<Token> lex(const std::string& src) {
  std::vector<Token> out;
  int line = 1, col = 1;
  size_t i = 0;
  auto adv = [&](size_t n) {
    for (size_t k = 0; k < n; ++k) {
      if (src[i] == '\n') { ++line; col = 1; } else { ++col; }
      ++i;
    }
  };
  static const char* syms[] = {"==>", "|->", ":=", "!=", "<=", ">=", "&&", "||", "\\/", "(", ")", "{", "}",
                               "[", "]", ",", ";", ":", "=", "<", ">", "+", "-", "/", "!", "*", "."};
  while (i < src.size()) {
    char c = src[i];
    if (std::isspace(static_cast<unsigned char>(c))) { adv(1); continue; }
    if (c == '/' && i + 1 < src.size() && src[i + 1] == '/') {
      while (i < src.size() && src[i] != '\n') adv(1);
      continue;
    }
    int l = line, co = col;
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      size_t j = i;
      while (j < src.size() && (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_')) ++j;
      out.push_back({Tok::Ident, src.substr(i, j - i), l, co});
      adv(j - i);
      continue;
    }
    if (c == '#') {
      size_t j = i + 1;
      while (j < src.size() && (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_')) ++j;
      if (j == i + 1) throw ParseError(l, co, {"logical variable name"}, "#", "empty logical variable");
      out.push_back({Tok::LVar, src.substr(i + 1, j - i - 1), l, co});
      adv(j - i);
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      size_t j = i;
      while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
      out.push_back({Tok::Nat, src.substr(i, j - i), l, co});
      adv(j - i);
      continue;
    }
    if (c == '"') {
      std::string s;
      size_t j = i + 1;
      while (j < src.size() && src[j] != '"') {
        if (src[j] == '\\' && j + 1 < src.size()) {
          ++j;
          s += (src[j] == 'n') ? '\n' : src[j];
        } else {
          s += src[j];
        }
        ++j;
      }
      if (j >= src.size()) throw ParseError(l, co, {"\""}, "", "unterminated string");
      out.push_back({Tok::Str, s, l, co});
      adv(j + 1 - i);
      continue;
    }
    bool matched = false;
    for (const char* sym : syms) {
      size_t n = std::char_traits<char>::length(sym);
      if (src.compare(i, n, sym) == 0) {
        out.push_back({Tok::Sym, sym, l, co});
        adv(n);
        matched = true;
        break;
      }
    }
    if (!matched) throw ParseError(l, co, {}, std::string(1, c), "unexpected character '" + std::string(1, c) + "'");
  }
  out.push_back({Tok::End, "", line, col});
  return out;
}

inline const std::set<std::string>& keywords() {
  static const std::set<std::string> k = {"func", "pred", "spec", "return", "skip", "if", "else", "fold",
                                          "unfold", "nil", "true", "false", "in", "emp", "TRUE", "exists",
                                          "FREED", "rat", "Val"};
  return k;
}

class Parser {
 public:
  explicit Parser(const std::string& src) : toks_(lex(src)) {}

  Program program() {
    Program p;
    while (!at_end()) {
      if (is_kw("func")) {
        auto f = function();
        if (p.funcs.count(f.id)) fail_at(last_start_, "duplicate function '" + f.id + "'");
        p.func_order.push_back(f.id);
        p.funcs[f.id] = std::move(f);
      } else if (is_kw("pred")) {
        auto d = preddef();
        if (p.preds.count(d.name)) fail_at(last_start_, "duplicate predicate '" + d.name + "'");
        p.pred_order.push_back(d.name);
        p.preds[d.name] = std::move(d);
      } else if (is_kw("spec")) {
        auto q = specdef();
        auto& v = p.specs[q.fid];
        p.spec_order.push_back({q.fid, v.size()});
        v.push_back(std::move(q));
      } else {
        expect_fail({"func", "pred", "spec"});
      }
    }
    resolve(p);
    return p;
  }

  Expr expr_only() {
    Expr e = expr();
    if (!at_end()) expect_fail({"end of input"});
    return e;
  }

  Assertion assertion_only() {
    Assertion a = assertion();
    if (!at_end()) expect_fail({"end of input"});
    return a;
  }

  Cmd cmd_only() {
    Cmd c = cmdseq();
    if (!at_end()) expect_fail({"end of input", ";"});
    return c;
  }

  // Resolves call nodes into function calls or actions and resource nodes into
  // predicate instances, then checks well-formedness.
  static void resolve(Program& p) {
    for (auto& [name, f] : p.funcs) {
      f.body = resolve_cmd(f.body, p);
      std::set<std::string> known(f.params.begin(), f.params.end());
      for (const auto& x : prog_vars(f.body)) known.insert(x);
      for (const auto& x : pvars_of(f.ret))
        if (!known.count(x)) throw ParseError(0, 0, {}, x, "return expression of '" + name + "' uses unknown variable '" + x + "'");
      if (f.ret->has_lvar) throw ParseError(0, 0, {}, "", "return expression of '" + name + "' mentions a logical variable");
    }
    for (auto& [name, d] : p.preds) {
      d.body = resolve_assertion(d.body, p);
      check_preddef(d);
    }
    for (auto& [fid, qs] : p.specs)
      for (auto& q : qs) {
        q.pre = resolve_assertion(q.pre, p);
        q.post_ok = resolve_assertion(q.post_ok, p);
        q.post_err = resolve_assertion(q.post_err, p);
        check_spec_shape(q);
      }
  }

  static void check_preddef(const PredDef& d) {
    std::set<std::string> ins(d.ins.begin(), d.ins.end()), outs(d.outs.begin(), d.outs.end());
    for (const auto& x : ins)
      if (outs.count(x)) throw ParseError(0, 0, {}, x, "predicate '" + d.name + "': #" + x + " is both in and out");
    if (!pvars_of(d.body).empty()) throw ParseError(0, 0, {}, "", "predicate '" + d.name + "' mentions program variables");
    for (const auto& x : lvars_of(d.body))
      if (!ins.count(x) && !outs.count(x))
        throw ParseError(0, 0, {}, x, "predicate '" + d.name + "' mentions #" + x + " which is not a parameter");
    for (const auto& disj : d.disjuncts()) {
      auto lv = lvars_of(disj);
      for (const auto& o : outs)
        if (!lv.count(o)) throw ParseError(0, 0, {}, o, "predicate '" + d.name + "': a disjunct does not mention #" + o);
    }
  }

  static void check_spec_shape(const Quadruple& q) {
    if (!pvars_of(q.pre).empty()) throw ParseError(0, 0, {}, "", "spec for '" + q.fid + "': requires mentions program variables");
    auto ok = pvars_of(q.post_ok);
    for (const auto& x : ok)
      if (x != "ret") throw ParseError(0, 0, {}, x, "spec for '" + q.fid + "': ensures_ok may only mention ret");
    auto er = pvars_of(q.post_err);
    for (const auto& x : er)
      if (x != "err") throw ParseError(0, 0, {}, x, "spec for '" + q.fid + "': ensures_err may only mention err");
  }

 private:
  std::vector<Token> toks_;
  size_t pos_ = 0;
  size_t last_start_ = 0;

  const Token& cur() const { return toks_[pos_]; }
  bool at_end() const { return cur().kind == Tok::End; }
  bool is_sym(const char* s) const { return cur().kind == Tok::Sym && cur().text == s; }
  bool is_kw(const char* s) const { return cur().kind == Tok::Ident && cur().text == s; }
  bool peek_sym(size_t k, const char* s) const {
    return pos_ + k < toks_.size() && toks_[pos_ + k].kind == Tok::Sym && toks_[pos_ + k].text == s;
  }

  [[noreturn]] void expect_fail(std::set<std::string> exp) const {
    throw ParseError(cur().line, cur().col, std::move(exp), cur().text, "");
  }
  [[noreturn]] void fail_at(size_t p, const std::string& msg) const {
    throw ParseError(toks_[p].line, toks_[p].col, {}, toks_[p].text, msg);
  }

  void sym(const char* s) {
    if (!is_sym(s)) expect_fail({std::string("'") + s + "'"});
    ++pos_;
  }
  void kw(const char* s) {
    if (!is_kw(s)) expect_fail({s});
    ++pos_;
  }
  std::string ident(const char* what = "identifier") {
    if (cur().kind != Tok::Ident || keywords().count(cur().text)) expect_fail({what});
    return toks_[pos_++].text;
  }
  std::string lvar_name() {
    if (cur().kind != Tok::LVar) expect_fail({"logical variable"});
    return toks_[pos_++].text;
  }

  FunctionDef function() {
    last_start_ = pos_;
    kw("func");
    FunctionDef f;
    f.id = ident("function name");
    sym("(");
    std::set<std::string> seen;
    if (!is_sym(")")) {
      for (;;) {
        size_t at = pos_;
        auto x = ident("parameter");
        if (!seen.insert(x).second) fail_at(at, "duplicate parameter '" + x + "'");
        if (x == "ret" || x == "err") fail_at(at, "'" + x + "' is reserved");
        f.params.push_back(x);
        if (is_sym(",")) { ++pos_; continue; }
        break;
      }
    }
    sym(")");
    sym("{");
    if (is_kw("return")) {
      f.body = c_skip();
    } else {
      f.body = cmdseq();
      sym(";");
    }
    kw("return");
    f.ret = expr();
    sym("}");
    return f;
  }

  PredDef preddef() {
    last_start_ = pos_;
    kw("pred");
    PredDef d;
    d.name = ident("predicate name");
    sym("(");
    std::set<std::string> seen;
    if (!is_sym(")")) {
      for (;;) {
        bool in = false;
        if (is_sym("+")) { in = true; ++pos_; }
        size_t at = pos_;
        std::string x = cur().kind == Tok::LVar ? lvar_name() : ident("parameter");
        if (!seen.insert(x).second) fail_at(at, "duplicate parameter '#" + x + "'");
        (in ? d.ins : d.outs).push_back(x);
        if (is_sym(",") || is_sym(";")) { ++pos_; continue; }
        break;
      }
    }
    sym(")");
    sym("{");
    d.body = assertion();
    sym("}");
    return d;
  }

  Quadruple specdef() {
    last_start_ = pos_;
    kw("spec");
    Quadruple q;
    if (is_kw("SL")) q.flavor = Flavor::SL;
    else if (is_kw("ISL")) q.flavor = Flavor::ISL;
    else if (is_kw("ESL")) q.flavor = Flavor::ESL;
    else expect_fail({"SL", "ISL", "ESL"});
    ++pos_;
    q.fid = ident("function name");
    sym("(");
    std::set<std::string> seen;
    if (!is_sym(")")) {
      for (;;) {
        size_t at = pos_;
        auto x = ident("parameter");
        if (!seen.insert(x).second) fail_at(at, "duplicate parameter '" + x + "'");
        q.pvars.push_back(x);
        q.params.push_back(x);
        if (is_sym(",")) { ++pos_; continue; }
        break;
      }
    }
    sym(")");
    sym("{");
    q.pre = a_emp();
    q.post_ok = a_false();
    q.post_err = a_false();
    std::set<std::string> fields;
    for (;;) {
      size_t at = pos_;
      if (is_sym("}")) break;
      std::string field = cur().kind == Tok::Ident ? cur().text : "";
      if (field != "requires" && field != "ensures_ok" && field != "ensures_err")
        expect_fail({"requires", "ensures_ok", "ensures_err", "'}'"});
      if (!fields.insert(field).second) fail_at(at, "duplicate field '" + field + "'");
      ++pos_;
      sym(":");
      Assertion a = assertion();
      if (field == "requires") q.pre = a;
      else if (field == "ensures_ok") q.post_ok = a;
      else q.post_err = a;
      if (is_sym(";")) { ++pos_; continue; }
      break;
    }
    sym("}");
    return q;
  }

  // commands

  Cmd cmdseq() {
    std::vector<Cmd> cs;
    cs.push_back(cmd());
    while (is_sym(";") && !(pos_ + 1 < toks_.size() && toks_[pos_ + 1].kind == Tok::Ident &&
                            toks_[pos_ + 1].text == "return") &&
           !peek_sym(1, "}")) {
      ++pos_;
      cs.push_back(cmd());
    }
    return c_seq_all(cs);
  }

  Cmd block() {
    sym("{");
    Cmd c = cmdseq();
    if (is_sym(";")) ++pos_;
    sym("}");
    return c;
  }

  Cmd cmd() {
    if (is_kw("skip")) { ++pos_; return c_skip(); }
    if (is_kw("if")) {
      ++pos_;
      sym("(");
      Expr g = expr();
      sym(")");
      Cmd a = block();
      Cmd b = c_skip();
      if (is_kw("else")) {
        ++pos_;
        b = block();
      }
      return c_if(g, a, b);
    }
    if (is_kw("fold") || is_kw("unfold")) {
      bool f = is_kw("fold");
      ++pos_;
      auto p = ident("predicate name");
      sym("(");
      auto args = expr_list(")");
      sym(")");
      return f ? c_fold(p, args) : c_unfold(p, args);
    }
    if (cur().kind != Tok::Ident || keywords().count(cur().text))
      expect_fail({"skip", "if", "fold", "unfold", "variable", "action"});
    // act(args)
    if (peek_sym(1, "(")) {
      auto a = ident();
      sym("(");
      auto args = expr_list(")");
      sym(")");
      return c_action({}, a, args);
    }
    std::vector<std::string> outs;
    outs.push_back(ident("variable"));
    while (is_sym(",")) {
      ++pos_;
      outs.push_back(ident("variable"));
    }
    for (const auto& x : outs)
      if (x == "ret" || x == "err") fail_at(pos_ - 1, "'" + x + "' is reserved");
    sym(":=");
    bool call = cur().kind == Tok::Ident && !keywords().count(cur().text) && peek_sym(1, "(");
    if (call) {
      auto name = ident();
      sym("(");
      auto args = expr_list(")");
      sym(")");
      // Stored as an action; resolve() turns it into a call when `name` is a
      // function of the program.
      return c_action(outs, name, args);
    }
    if (outs.size() != 1) expect_fail({"action call"});
    return c_assign(outs[0], expr());
  }

  static Cmd resolve_cmd(const Cmd& c, const Program& p) {
    switch (c->k) {
      case CK::If: return c_if(c->e, resolve_cmd(c->c1, p), resolve_cmd(c->c2, p));
      case CK::Seq: return c_seq(resolve_cmd(c->c1, p), resolve_cmd(c->c2, p));
      case CK::Action:
        if (p.funcs.count(c->name)) {
          if (c->outs.size() != 1)
            throw ParseError(0, 0, {}, c->name, "call to function '" + c->name + "' needs exactly one target variable");
          return c_call(c->outs[0], c->name, c->args);
        }
        for (const auto& a : c->args)
          if (a->has_lvar) throw ParseError(0, 0, {}, c->name, "logical variable in program expression");
        return c;
      case CK::Assign:
        if (c->e->has_lvar) throw ParseError(0, 0, {}, c->target, "logical variable in program expression");
        return c;
      default: break;
    }
    if ((c->k == CK::Fold || c->k == CK::Unfold) && !p.preds.count(c->name))
      throw ParseError(0, 0, {}, c->name, "unknown predicate '" + c->name + "'");
    return c;
  }

  static Assertion resolve_assertion(const Assertion& a, const Program& p) {
    switch (a->k) {
      case AK::Res:
        if (p.preds.count(a->name)) return a_pred(a->name, a->ins, a->outs);
        return a;
      case AK::Implies:
      case AK::Or:
      case AK::Star: return a_bin(a->k, resolve_assertion(a->a, p), resolve_assertion(a->b, p));
      case AK::Exists: return a_exists(a->name, resolve_assertion(a->a, p));
      default: return a;
    }
  }

  // assertions

  Assertion assertion() {
    Assertion l = a_or_level();
    if (is_sym("==>")) {
      ++pos_;
      return a_implies(l, assertion());
    }
    return l;
  }

  Assertion a_or_level() {
    Assertion l = a_star_level();
    while (is_sym("\\/")) {
      ++pos_;
      l = a_or(l, a_star_level());
    }
    return l;
  }

  Assertion a_star_level() {
    Assertion l = a_atom();
    while (is_sym("*")) {
      ++pos_;
      l = a_star(l, a_atom());
    }
    return l;
  }

  Assertion a_atom() {
    if (is_kw("emp")) { ++pos_; return a_emp(); }
    if (is_kw("TRUE")) { ++pos_; return a_true(); }
    if (is_kw("exists")) {
      ++pos_;
      auto x = lvar_name();
      sym(".");
      return a_exists(x, assertion());
    }
    if (cur().kind == Tok::Ident && !keywords().count(cur().text) && peek_sym(1, "(")) {
      auto name = ident();
      sym("(");
      auto ins = expr_list_until({";", ")"});
      std::vector<Expr> outs;
      if (is_sym(";")) {
        ++pos_;
        outs = expr_list(")");
      }
      sym(")");
      return a_res(name, ins, outs);
    }
    if (is_sym("(")) {
      // either a parenthesized expression or a grouped assertion
      size_t save = pos_;
      try {
        return pure_or_points_to();
      } catch (const ParseError&) {
        pos_ = save;
      }
      ++pos_;
      Assertion a = assertion();
      sym(")");
      return a;
    }
    return pure_or_points_to();
  }

  Assertion pure_or_points_to() {
    Expr e = expr();
    if (is_sym("|->")) {
      ++pos_;
      if (is_kw("FREED")) {
        ++pos_;
        return a_res("freed", {e}, {});
      }
      Expr v = additive();
      return a_res("points_to", {e}, {v});
    }
    return a_pure(e);
  }

  // expressions

  std::vector<Expr> expr_list(const char* close) {
    std::vector<Expr> r;
    if (is_sym(close)) return r;
    r.push_back(expr());
    while (is_sym(",")) {
      ++pos_;
      r.push_back(expr());
    }
    return r;
  }

  std::vector<Expr> expr_list_until(std::initializer_list<const char*> closes) {
    std::vector<Expr> r;
    for (const char* c : closes)
      if (is_sym(c)) return r;
    r.push_back(expr());
    while (is_sym(",")) {
      ++pos_;
      r.push_back(expr());
    }
    return r;
  }

  Expr expr() {
    Expr l = and_level();
    while (is_sym("||")) {
      ++pos_;
      l = e_or(l, and_level());
    }
    return l;
  }

  Expr and_level() {
    Expr l = cmp_level();
    while (is_sym("&&")) {
      ++pos_;
      l = e_and(l, cmp_level());
    }
    return l;
  }

  Expr cmp_level() {
    Expr l = additive();
    if (is_kw("in")) {
      ++pos_;
      if (is_kw("Val")) { ++pos_; return e_inval(l); }
      static const std::pair<const char*, Kind> kinds[] = {{"nil", Kind::Nil}, {"bool", Kind::Bool},
                                                           {"nat", Kind::Nat}, {"rat", Kind::Rat},
                                                           {"str", Kind::Str}, {"list", Kind::List}};
      for (auto [n, k] : kinds)
        if (cur().kind == Tok::Ident && cur().text == n) {
          ++pos_;
          return e_intype(l, k);
        }
      expect_fail({"Val", "nil", "bool", "nat", "rat", "str", "list"});
    }
    if (is_sym("=")) { ++pos_; return e_eq(l, additive()); }
    if (is_sym("!=")) { ++pos_; return e_not(e_eq(l, additive())); }
    if (is_sym("<")) { ++pos_; return e_lt(l, additive()); }
    if (is_sym("<=")) { ++pos_; return e_le(l, additive()); }
    if (is_sym(">")) { ++pos_; return e_lt(additive(), l); }
    if (is_sym(">=")) { ++pos_; return e_le(additive(), l); }
    return l;
  }

  Expr additive() {
    Expr l = multiplicative();
    for (;;) {
      if (is_sym("+") ) { ++pos_; l = e_add(l, multiplicative()); }
      else if (is_sym("-")) { ++pos_; l = e_sub(l, multiplicative()); }
      else return l;
    }
  }

  Expr multiplicative() {
    Expr l = unary();
    while (is_sym("/")) {
      ++pos_;
      l = e_div(l, unary());
    }
    return l;
  }

  Expr unary() {
    if (is_sym("!")) {
      ++pos_;
      return e_not(unary());
    }
    return atom();
  }

  uint64_t nat_text(const Token& t) {
    try {
      size_t idx = 0;
      unsigned long long v = std::stoull(t.text, &idx);
      return v;
    } catch (...) {
      throw ParseError(t.line, t.col, {}, t.text, "number out of range");
    }
  }

  Expr atom() {
    const Token& t = cur();
    switch (t.kind) {
      case Tok::Nat: ++pos_; return lit_nat(nat_text(t));
      case Tok::Str: ++pos_; return lit_str(t.text);
      case Tok::LVar: ++pos_; return lvar(t.text);
      case Tok::Ident:
        if (t.text == "nil") { ++pos_; return lit(Value::nil()); }
        if (t.text == "true") { ++pos_; return e_true(); }
        if (t.text == "false") { ++pos_; return e_false(); }
        if (t.text == "rat") {
          ++pos_;
          sym("(");
          if (cur().kind != Tok::Nat) expect_fail({"number"});
          uint64_t n = nat_text(cur());
          ++pos_;
          uint64_t d = 1;
          if (is_sym(",")) {
            ++pos_;
            if (cur().kind != Tok::Nat) expect_fail({"number"});
            d = nat_text(cur());
            ++pos_;
          }
          sym(")");
          auto r = Rat::make(n, d);
          if (!r) throw ParseError(t.line, t.col, {}, "rat", "rationals must be strictly positive");
          return lit(Value::rat(*r));
        }
        if (keywords().count(t.text)) break;
        ++pos_;
        return pvar(t.text);
      case Tok::Sym:
        if (t.text == "(") {
          ++pos_;
          Expr e = expr();
          sym(")");
          return e;
        }
        if (t.text == "[") {
          ++pos_;
          auto es = expr_list("]");
          sym("]");
          return e_list(es);
        }
        break;
      default: break;
    }
    expect_fail({"expression"});
  }
};

}  // namespace detail

inline Program parse_program(const std::string& text) { return detail::Parser(text).program(); }
inline Expr parse_expr(const std::string& text) { return detail::Parser(text).expr_only(); }
inline Assertion parse_assertion(const std::string& text) { return detail::Parser(text).assertion_only(); }

// Parses a command against an optional program so that calls resolve.
inline Cmd parse_cmd(const std::string& text, const Program& ctx = {}) {
  Cmd c = detail::Parser(text).cmd_only();
  Program p = ctx;
  FunctionDef tmp{"__cmd", {}, c, lit(Value::nil())};
  p.funcs["__cmd"] = tmp;
  detail::Parser::resolve(p);
  return p.funcs["__cmd"].body;
}

}  // namespace polyheap
