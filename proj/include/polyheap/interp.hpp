#pragma once

#include <vector>

#include "memmodel.hpp"

namespace polyheap {

template <class CMem>
struct CState {
  Store s;
  CMem mem;
};

template <class CMem>
struct CResult {
  Outcome o;
  Store s;
  CMem mem;
};

template <class CMem>
struct RunResult {
  std::vector<CResult<CMem>> results;
  bool budget_exhausted = false;
};

template <class CMem>
struct FuncResult {
  Outcome o;
  Value v;  // return value on ok, err payload otherwise
  CMem mem;
};

// Outputs of a faulting action become the err value; a single output is
// stored directly.
inline Value err_value(const std::vector<Value>& vals) {
  if (vals.size() == 1) return vals[0];
  return Value::list(vals);
}

inline Store with(Store s, const std::string& x, Value v) {
  s[x] = std::move(v);
  return s;
}

// Big-step concrete semantics, all derivable results.
template <class Model>
class Interpreter {
 public:
  using CMem = typename Model::CMem;
  using R = CResult<CMem>;

  Interpreter(const Model& m, const ImplContext& g, AllocCtx alloc = {}) : m_(m), g_(g), alloc_(std::move(alloc)) {}

  RunResult<CMem> run(const Store& s, const CMem& mem, const Cmd& c, int budget) const {
    RunResult<CMem> rr;
    exec(s, mem, c, budget, rr.results, rr.budget_exhausted);
    return rr;
  }

  std::vector<FuncResult<CMem>> run_function(const std::string& f, const std::vector<Value>& args, const CMem& mem,
                                             int budget, bool* exhausted = nullptr) const {
    std::vector<FuncResult<CMem>> out;
    auto it = g_.find(f);
    if (it == g_.end()) {
      out.push_back({Outcome::Err, Value::str("FuncMissing"), mem});
      return out;
    }
    const FunctionDef& fd = it->second;
    if (args.size() != fd.params.size()) {
      out.push_back({Outcome::Err, Value::str("FuncArgsLength"), mem});
      return out;
    }
    bool ex = false;
    std::vector<R> rs;
    body(fd, args, mem, budget, rs, ex);
    if (exhausted) *exhausted = ex;
    for (auto& r : rs) {
      if (r.o != Outcome::Ok) {
        auto e = r.s.find("err");
        out.push_back({r.o, e == r.s.end() ? Value::nil() : e->second, std::move(r.mem)});
        continue;
      }
      auto v = eval(fd.ret, {}, r.s);
      if (!v) out.push_back({Outcome::Err, Value::str("ExprEval"), std::move(r.mem)});
      else out.push_back({Outcome::Ok, *v, std::move(r.mem)});
    }
    return out;
  }

 private:
  void body(const FunctionDef& fd, const std::vector<Value>& args, const CMem& mem, int budget, std::vector<R>& out,
            bool& exhausted) const {
    if (budget <= 0) {
      exhausted = true;
      return;
    }
    Store sp;
    for (size_t i = 0; i < args.size(); ++i) sp[fd.params[i]] = args[i];
    for (const auto& z : fd.locals()) sp[z] = Value::nil();
    exec(sp, mem, fd.body, budget - 1, out, exhausted);
  }

  void exec(const Store& s, const CMem& mem, const Cmd& c, int budget, std::vector<R>& out, bool& exhausted) const {
    static const Interp no_lvars;
    switch (c->k) {
      case CK::Skip:
      case CK::Fold:
      case CK::Unfold: out.push_back({Outcome::Ok, s, mem}); return;
      case CK::Assign: {
        auto v = eval(c->e, no_lvars, s);
        if (!v) out.push_back({Outcome::Err, with(s, "err", Value::str("ExprEval")), mem});
        else out.push_back({Outcome::Ok, with(s, c->target, *v), mem});
        return;
      }
      case CK::If: {
        auto v = eval(c->e, no_lvars, s);
        if (!v) out.push_back({Outcome::Err, with(s, "err", Value::str("ExprEval")), mem});
        else if (!v->is_bool()) out.push_back({Outcome::Err, with(s, "err", Value::str("Type")), mem});
        else exec(s, mem, v->as_bool() ? c->c1 : c->c2, budget, out, exhausted);
        return;
      }
      case CK::Seq: {
        std::vector<R> first;
        exec(s, mem, c->c1, budget, first, exhausted);
        for (auto& r : first) {
          if (r.o != Outcome::Ok) out.push_back(std::move(r));
          else exec(r.s, r.mem, c->c2, budget, out, exhausted);
        }
        return;
      }
      case CK::Action: {
        std::vector<Value> args;
        for (const auto& e : c->args) {
          auto v = eval(e, no_lvars, s);
          if (!v) {
            out.push_back({Outcome::Err, with(s, "err", Value::str("ExprEval")), mem});
            return;
          }
          args.push_back(*v);
        }
        for (auto& ar : m_.exec_action(mem, c->name, args, alloc_)) {
          if (ar.o != Outcome::Ok) {
            out.push_back({ar.o, with(s, "err", err_value(ar.vals)), std::move(ar.mem)});
          } else if (ar.vals.size() != c->outs.size()) {
            out.push_back({Outcome::Err, with(s, "err", Value::str("ActionArgsLength")), std::move(ar.mem)});
          } else {
            Store s2 = s;
            for (size_t i = 0; i < c->outs.size(); ++i) s2[c->outs[i]] = ar.vals[i];
            out.push_back({Outcome::Ok, std::move(s2), std::move(ar.mem)});
          }
        }
        return;
      }
      case CK::Call: {
        auto it = g_.find(c->name);
        if (it == g_.end()) {
          out.push_back({Outcome::Err, with(s, "err", Value::str("FuncMissing")), mem});
          return;
        }
        const FunctionDef& fd = it->second;
        if (c->args.size() != fd.params.size()) {
          out.push_back({Outcome::Err, with(s, "err", Value::str("FuncArgsLength")), mem});
          return;
        }
        std::vector<Value> args;
        for (const auto& e : c->args) {
          auto v = eval(e, no_lvars, s);
          if (!v) {
            out.push_back({Outcome::Err, with(s, "err", Value::str("ExprEval")), mem});
            return;
          }
          args.push_back(*v);
        }
        std::vector<R> rs;
        body(fd, args, mem, budget, rs, exhausted);
        for (auto& r : rs) {
          if (r.o != Outcome::Ok) {
            auto e = r.s.find("err");
            out.push_back({r.o, with(s, "err", e == r.s.end() ? Value::nil() : e->second), std::move(r.mem)});
            continue;
          }
          auto v = eval(fd.ret, no_lvars, r.s);
          if (!v) out.push_back({Outcome::Err, with(s, "err", Value::str("ExprEval")), std::move(r.mem)});
          else out.push_back({Outcome::Ok, with(s, c->target, *v), std::move(r.mem)});
        }
        return;
      }
    }
  }

  Model m_;
  const ImplContext& g_;
  AllocCtx alloc_;
};

}  // namespace polyheap
