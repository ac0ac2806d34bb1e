#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "assertion.hpp"

namespace polyheap {

struct Bounds {
  std::vector<Value> values = default_values();
  size_t max_cells = 3;
  size_t max_addresses = 3;
  size_t trials = 1000;
  uint64_t seed = 0;
  int depth = 4;
  int budget = 8;

  static std::vector<Value> default_values() {
    return {Value::nil(), Value::boolean(true), Value::boolean(false), Value::nat(0), Value::nat(1),
            Value::nat(2), Value::nat(3), Value::str("a")};
  }
  static std::vector<Value> nats(uint64_t n) {
    std::vector<Value> r;
    for (uint64_t i = 0; i < n; ++i) r.push_back(Value::nat(i));
    return r;
  }
};

using Rng = std::mt19937_64;

inline size_t pick(Rng& r, size_t n) { return n == 0 ? 0 : static_cast<size_t>(r() % n); }
inline bool coin(Rng& r, unsigned pct) { return static_cast<unsigned>(r() % 100) < pct; }

// Derives an independent stream per check from one user seed.
inline uint64_t mix_seed(uint64_t seed, const std::string& tag) {
  uint64_t h = seed ^ 0x9e3779b97f4a7c15ULL;
  for (char c : tag) h = (h ^ static_cast<unsigned char>(c)) * 0x100000001b3ULL;
  return h;
}

struct Soundness {
  bool ox = false;
  bool ux = false;
};

// Concrete allocation: the least `k` free addresses plus any free address in
// `extra`.
struct AllocCtx {
  size_t k = 3;
  std::vector<uint64_t> extra;

  template <class InUse>
  std::vector<uint64_t> candidates(const InUse& in_use) const {
    std::set<uint64_t> r;
    for (uint64_t n = 0; r.size() < k; ++n)
      if (!in_use(n)) r.insert(n);
    for (auto n : extra)
      if (!in_use(n)) r.insert(n);
    return {r.begin(), r.end()};
  }
};

struct ActionSig {
  std::string name;
  size_t arity;
  size_t nout = 0;
};

struct ResourceSig {
  std::string name;
  size_t nin, nout;
};

struct OracleLog {
  std::map<size_t, size_t> arity;  // position -> largest choice set seen
  size_t queries = 0;
};

// Choice stream O : N -> N. A prefix vector with 0 as the default choice.
class Oracle {
 public:
  Oracle() : prefix_(std::make_shared<const std::vector<size_t>>()) {}
  explicit Oracle(std::vector<size_t> prefix, std::shared_ptr<OracleLog> log = nullptr)
      : prefix_(std::make_shared<const std::vector<size_t>>(std::move(prefix))), log_(std::move(log)) {}

  size_t query(size_t n) const {
    size_t i = off_ + n;
    return i < prefix_->size() ? (*prefix_)[i] : 0;
  }

  Oracle shift(size_t k) const {
    Oracle o = *this;
    o.off_ += k;
    return o;
  }

  size_t offset() const { return off_; }

  // One angelic choice out of `n` options. An index >= n means the choice
  // yields no result.
  std::pair<size_t, Oracle> choose(size_t n) const {
    if (log_) {
      auto& a = log_->arity[off_];
      a = std::max(a, n);
      ++log_->queries;
    }
    return {query(0), shift(1)};
  }

 private:
  std::shared_ptr<const std::vector<size_t>> prefix_;
  size_t off_ = 0;
  std::shared_ptr<OracleLog> log_;
};

class FreshGen {
 public:
  explicit FreshGen(size_t start = 0) : next_(start) {}
  std::string name() { return "fresh_" + std::to_string(next_++); }
  Expr var() { return lvar(name()); }
  size_t peek() const { return next_; }
  void bump_past(const std::set<std::string>& used) {
    for (const auto& x : used)
      if (x.rfind("fresh_", 0) == 0) {
        try {
          size_t n = std::stoull(x.substr(6));
          if (n >= next_) next_ = n + 1;
        } catch (...) {
        }
      }
  }

 private:
  size_t next_;
};

template <class CMem>
struct CActResult {
  Outcome o;
  CMem mem;
  std::vector<Value> vals;
};

template <class SMem>
struct SActResult {
  Outcome o;
  SMem mem;
  Expr pc;
  std::vector<Expr> vals;
};

template <class SMem>
struct ConsumeResult {
  Outcome o;  // Ok or Abort
  Oracle oracle;
  std::vector<Expr> outs;  // out-values on ok, payload on abort
  SMem frame;
  Expr pi_i;  // must be entailed by the state
  Expr pi;    // conjoined to the path condition
};

template <class SMem>
struct ProduceResult {
  SMem mem;
  Expr pi;
};

enum class Mode : uint8_t { OX, UX, EX };

inline const char* mode_name(Mode m) {
  switch (m) {
    case Mode::OX: return "ox";
    case Mode::UX: return "ux";
    case Mode::EX: return "ex";
  }
  return "?";
}

// What a model may look at when proposing fixes for a missing resource.
struct FixView {
  std::vector<Expr> payload;
  std::string action;
  std::vector<Expr> args;
};

inline std::string payload_tag(const std::vector<Expr>& p) {
  if (p.empty() || p[0]->op != Op::Lit || !p[0]->lit.is_str()) return "";
  return p[0]->lit.as_str();
}

// Splits a symbolic payload expression (a list) into its components.
inline std::vector<Expr> payload_parts(const Expr& e) {
  if (e->op == Op::List) return e->kids;
  if (e->op == Op::Lit && e->lit.is_list()) {
    std::vector<Expr> r;
    for (const auto& v : e->lit.as_list()) r.push_back(lit(v));
    return r;
  }
  return {e};
}

inline Expr sym_payload(const std::string& tag, std::vector<Expr> rest = {}) {
  std::vector<Expr> es{lit_str(tag)};
  for (auto& e : rest) es.push_back(std::move(e));
  return e_list(std::move(es));
}

inline Expr e_ne(Expr a, Expr b) { return e_not(e_eq(std::move(a), std::move(b))); }

// e equals one of `keys`; false for no keys
inline Expr in_keys(const Expr& e, const std::vector<Expr>& keys) {
  if (keys.empty()) return e_false();
  Expr r = e_eq(e, keys[0]);
  for (size_t i = 1; i < keys.size(); ++i) r = e_or(r, e_eq(e, keys[i]));
  return r;
}

inline Expr not_in_keys(const Expr& e, const std::vector<Expr>& keys) {
  std::vector<Expr> cs;
  for (const auto& k : keys) cs.push_back(e_ne(e, k));
  return conj(cs);
}

}  // namespace polyheap
