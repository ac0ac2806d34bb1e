#pragma once

#include <json.hpp>

#include "../memmodel.hpp"

namespace polyheap {

inline Value rat_value(int64_t n, int64_t d = 1) { return Value::rat(*Rat::make(n, d)); }
inline Expr lit_rat(int64_t n, int64_t d = 1) { return lit(rat_value(n, d)); }

// Linear heap with fractional permissions. Reads need any permission, writes
// and free need the full permission 1.
class Frac {
 public:
  struct Cell {
    bool freed = false;
    Value v;
    Rat q;
    friend bool operator==(const Cell& a, const Cell& b) {
      return a.freed == b.freed && (a.freed || (a.v == b.v && a.q == b.q));
    }
  };
  using CMem = std::map<uint64_t, Cell>;

  struct SCell {
    bool freed = false;
    Expr v, q;
    friend bool operator==(const SCell& a, const SCell& b) {
      return a.freed == b.freed && (a.freed || (a.v == b.v && a.q == b.q));
    }
  };
  using SMem = std::map<Expr, SCell>;

  std::string name() const { return "frac"; }
  Soundness declared() const { return {true, true}; }
  bool has_fixes() const { return true; }
  std::vector<Value> extra_values() const { return {rat_value(1), rat_value(1, 2)}; }

  std::vector<ActionSig> actions() const { return {{"lookup", 1, 1}, {"mutate", 2}, {"new", 0, 1}, {"free", 1}}; }
  std::vector<ResourceSig> resources() const { return {{"points_to", 2, 1}, {"freed", 1, 0}}; }

  static bool full(const Rat& q) { return q.num == 1 && q.den == 1; }

  bool is_wf(const CMem& h) const {
    for (const auto& [k, c] : h)
      if (!c.freed && Rat{1, 1} < c.q) return false;
    return true;
  }
  CMem empty() const { return {}; }

  std::optional<CMem> compose(const CMem& a, const CMem& b) const {
    CMem r = a;
    for (const auto& [k, c] : b) {
      auto it = r.find(k);
      if (it == r.end()) {
        r[k] = c;
        continue;
      }
      if (it->second.freed || c.freed || !(it->second.v == c.v)) return std::nullopt;
      auto s = Rat::make((__int128)it->second.q.num * c.q.den + (__int128)c.q.num * it->second.q.den,
                         (__int128)it->second.q.den * c.q.den);
      if (!s || Rat{1, 1} < *s) return std::nullopt;
      it->second.q = *s;
    }
    return r;
  }

  std::vector<CActResult<CMem>> exec_action(const CMem& h, const std::string& act, const std::vector<Value>& args,
                                            const AllocCtx& alloc) const {
    using R = CActResult<CMem>;
    auto type_err = R{Outcome::Err, h, {payload("Type")}};
    if (act == "new") {
      if (!args.empty()) return {type_err};
      std::vector<R> out;
      for (auto n : alloc.candidates([&](uint64_t a) { return h.count(a) > 0; })) {
        CMem h2 = h;
        h2[n] = Cell{false, Value::nil(), Rat{1, 1}};
        out.push_back({Outcome::Ok, h2, {Value::nat(n)}});
      }
      return out;
    }
    bool known = act == "lookup" || act == "mutate" || act == "free";
    if (!known) return {{Outcome::Err, h, {payload("UnknownAction")}}};
    size_t arity = act == "mutate" ? 2 : 1;
    if (args.size() != arity || !args[0].is_nat()) return {type_err};
    uint64_t n = args[0].as_nat();
    auto it = h.find(n);
    if (it == h.end()) return {{Outcome::Miss, h, {payload("MissingCell", {args[0]})}}};
    if (it->second.freed) return {{Outcome::Err, h, {payload("UseAfterFree", {args[0]})}}};
    if (act == "lookup") return {{Outcome::Ok, h, {it->second.v}}};
    if (!full(it->second.q)) return {{Outcome::Miss, h, {payload("InsufficientPermission", {args[0]})}}};
    CMem h2 = h;
    if (act == "mutate") h2[n] = Cell{false, args[1], Rat{1, 1}};
    else h2[n] = Cell{true, Value::nil(), Rat{1, 1}};
    return {{Outcome::Ok, h2, {}}};
  }

  // Splits also divide permissions in half.
  std::vector<std::pair<CMem, CMem>> splits(const CMem& h) const {
    std::vector<std::pair<CMem, CMem>> out;
    std::vector<std::pair<uint64_t, Cell>> cells(h.begin(), h.end());
    size_t n = cells.size();
    size_t total = 1;
    for (size_t i = 0; i < n; ++i) total *= cells[i].second.freed ? 2 : 3;
    for (size_t code = 0; code < total; ++code) {
      CMem a, b;
      size_t c = code;
      for (size_t i = 0; i < n; ++i) {
        size_t base = cells[i].second.freed ? 2 : 3;
        size_t d = c % base;
        c /= base;
        const auto& [k, cell] = cells[i];
        if (d == 0) a[k] = cell;
        else if (d == 1) b[k] = cell;
        else {
          auto half = Rat::make(cell.q.num, (__int128)cell.q.den * 2);
          a[k] = Cell{false, cell.v, *half};
          b[k] = Cell{false, cell.v, *half};
        }
      }
      out.push_back({a, b});
    }
    return out;
  }

  std::optional<CMem> subtract(const CMem& h, const CMem& part) const {
    CMem r = h;
    for (const auto& [k, c] : part) {
      auto it = r.find(k);
      if (it == r.end()) return std::nullopt;
      if (c.freed || it->second.freed) {
        if (!(c == it->second)) return std::nullopt;
        r.erase(it);
        continue;
      }
      if (!(c.v == it->second.v) || it->second.q < c.q) return std::nullopt;
      if (it->second.q == c.q) {
        r.erase(it);
      } else {
        auto d = Rat::make((__int128)it->second.q.num * c.q.den - (__int128)c.q.num * it->second.q.den,
                           (__int128)it->second.q.den * c.q.den);
        it->second.q = *d;
      }
    }
    return r;
  }

  std::optional<CMem> resource_mem(const std::string& r, const std::vector<Value>& in,
                                   const std::vector<Value>& out) const {
    if (r == "points_to" && in.size() == 2 && out.size() == 1 && in[0].is_nat() && in[1].is_rat() &&
        !(Rat{1, 1} < in[1].as_rat()))
      return CMem{{in[0].as_nat(), Cell{false, out[0], in[1].as_rat()}}};
    if (r == "freed" && in.size() == 1 && out.empty() && in[0].is_nat())
      return CMem{{in[0].as_nat(), Cell{true, Value::nil(), Rat{1, 1}}}};
    return std::nullopt;
  }

  bool holds_resource(const CMem& h, const std::string& r, const std::vector<Value>& in,
                      const std::vector<Value>& out) const {
    auto m = resource_mem(r, in, out);
    return m && *m == h;
  }

  std::vector<Cell> cell_choices(const Bounds& b) const {
    std::vector<Cell> cs;
    for (const auto& v : b.values) {
      cs.push_back(Cell{false, v, Rat{1, 1}});
      cs.push_back(Cell{false, v, Rat{1, 2}});
    }
    cs.push_back(Cell{true, Value::nil(), Rat{1, 1}});
    return cs;
  }

  std::vector<CMem> enumerate(const Bounds& b) const {
    std::vector<CMem> out{CMem{}};
    auto choices = cell_choices(b);
    for (uint64_t a = 0; a < b.max_addresses; ++a) {
      std::vector<CMem> next = out;
      for (const auto& h : out) {
        if (h.size() >= b.max_cells) continue;
        for (const auto& c : choices) {
          CMem h2 = h;
          h2[a] = c;
          next.push_back(h2);
        }
      }
      out = std::move(next);
    }
    return out;
  }

  CMem generate(Rng& rng, const Bounds& b) const {
    CMem h;
    auto choices = cell_choices(b);
    size_t n = pick(rng, b.max_cells + 1);
    for (size_t i = 0; i < n; ++i) h[pick(rng, std::max<size_t>(b.max_addresses, 1))] = choices[pick(rng, choices.size())];
    return h;
  }

  std::vector<CMem> shrink(const CMem& h, const Bounds& b) const {
    std::vector<CMem> out;
    for (const auto& [k, c] : h) {
      CMem h2 = h;
      h2.erase(k);
      out.push_back(h2);
    }
    for (const auto& [k, c] : h) {
      if (c.freed || b.values.empty() || c.v == b.values[0]) continue;
      CMem h2 = h;
      h2[k].v = b.values[0];
      out.push_back(h2);
    }
    return out;
  }

  static std::string show_cell(const Cell& c) {
    if (c.freed) return "FREED";
    return c.v.show() + " @ " + Value::rat(c.q).show();
  }
  nlohmann::json to_json(const CMem& h) const {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [k, c] : h) j[std::to_string(k)] = show_cell(c);
    return j;
  }
  std::string show(const CMem& h) const {
    std::string s = "{";
    bool first = true;
    for (const auto& [k, c] : h) {
      s += (first ? "" : ", ") + std::to_string(k) + " |-> " + show_cell(c);
      first = false;
    }
    return s + "}";
  }

  // symbolic

  SMem sempty() const { return {}; }

  std::optional<CMem> concretize(const Interp& th, const SMem& sh) const {
    static const Store s;
    CMem h;
    for (const auto& [k, c] : sh) {
      auto kv = eval(k, th, s);
      if (!kv || !kv->is_nat() || h.count(kv->as_nat())) return std::nullopt;
      if (c.freed) {
        h[kv->as_nat()] = Cell{true, Value::nil(), Rat{1, 1}};
        continue;
      }
      auto vv = eval(c.v, th, s);
      auto qv = eval(c.q, th, s);
      if (!vv || !qv || !qv->is_rat() || Rat{1, 1} < qv->as_rat()) return std::nullopt;
      h[kv->as_nat()] = Cell{false, *vv, qv->as_rat()};
    }
    return h;
  }

  std::vector<SActResult<SMem>> sym_action(const SMem& sh, const std::string& act, const std::vector<Expr>& args,
                                           FreshGen& fresh) const {
    using R = SActResult<SMem>;
    if (act == "new") {
      if (!args.empty()) return {{Outcome::Err, sh, e_true(), {sym_payload("Type")}}};
      Expr l = fresh.var();
      SMem h2 = sh;
      h2[l] = SCell{false, lit(Value::nil()), lit_rat(1)};
      return {{Outcome::Ok, h2, e_inval(l), {l}}};
    }
    bool known = act == "lookup" || act == "mutate" || act == "free";
    if (!known) return {{Outcome::Err, sh, e_true(), {sym_payload("UnknownAction")}}};
    size_t arity = act == "mutate" ? 2 : 1;
    if (args.size() != arity) return {{Outcome::Err, sh, e_true(), {sym_payload("Type")}}};
    const Expr& el = args[0];
    std::vector<R> out;
    std::vector<Expr> keys;
    for (const auto& [k, c] : sh) {
      keys.push_back(k);
      Expr hit = e_eq(el, k);
      if (c.freed) {
        out.push_back({Outcome::Err, sh, hit, {sym_payload("UseAfterFree", {el})}});
        continue;
      }
      if (act == "lookup") {
        out.push_back({Outcome::Ok, sh, hit, {c.v}});
        continue;
      }
      Expr is_full = e_eq(c.q, lit_rat(1));
      SMem h2 = sh;
      if (act == "mutate") h2[k] = SCell{false, args[1], lit_rat(1)};
      else h2[k] = SCell{true, Expr(), Expr()};
      out.push_back({Outcome::Ok, h2, conj({hit, is_full, e_inval(c.v)}), {}});
      out.push_back({Outcome::Miss, sh, e_and(hit, e_lt(c.q, lit_rat(1))),
                     {sym_payload("InsufficientPermission", {el})}});
    }
    out.push_back({Outcome::Err, sh, e_not(e_intype(el, Kind::Nat)), {sym_payload("Type")}});
    out.push_back({Outcome::Miss, sh, e_and(e_intype(el, Kind::Nat), not_in_keys(el, keys)),
                   {sym_payload("MissingCell", {el})}});
    return out;
  }

  std::vector<ConsumeResult<SMem>> consume_res(Mode, const Oracle& O, const std::string& r,
                                               const std::vector<Expr>& ins, const SMem& sh) const {
    using R = ConsumeResult<SMem>;
    std::vector<R> out;
    std::vector<Expr> keys;
    for (const auto& [k, c] : sh) keys.push_back(k);
    if (r == "points_to" && ins.size() == 2) {
      const Expr& el = ins[0];
      const Expr& eq = ins[1];
      out.push_back({Outcome::Abort, O, {lit_str("InvalidPermission"), eq}, sh, e_true(), e_not(e_intype(eq, Kind::Rat))});
      for (const auto& [k, c] : sh) {
        Expr hit = e_eq(el, k);
        if (c.freed) {
          out.push_back({Outcome::Abort, O, {}, sh, e_true(), hit});
          continue;
        }
        SMem frame = sh;
        frame.erase(k);
        std::vector<Expr> others;
        for (const auto& [k2, c2] : frame) others.push_back(k2);
        out.push_back({Outcome::Ok, O, {c.v}, frame, e_true(), conj({hit, e_eq(eq, c.q), not_in_keys(k, others)})});
        SMem part = sh;
        part[k] = SCell{false, c.v, e_sub(c.q, eq)};
        out.push_back({Outcome::Ok, O, {c.v}, part, e_true(), e_and(hit, e_lt(eq, c.q))});
        out.push_back({Outcome::Abort, O, {lit_str("InsufficientPermission"), el}, sh, e_true(),
                       e_and(hit, e_lt(c.q, eq))});
      }
      out.push_back({Outcome::Abort, O, {lit_str("MissingCell"), el}, sh, e_true(), not_in_keys(el, keys)});
      return out;
    }
    if (r == "freed" && ins.size() == 1) {
      const Expr& el = ins[0];
      for (const auto& [k, c] : sh) {
        Expr hit = e_eq(el, k);
        if (!c.freed) {
          out.push_back({Outcome::Abort, O, {}, sh, e_true(), hit});
          continue;
        }
        SMem frame = sh;
        frame.erase(k);
        std::vector<Expr> others;
        for (const auto& [k2, c2] : frame) others.push_back(k2);
        out.push_back({Outcome::Ok, O, {}, frame, e_true(), e_and(hit, not_in_keys(k, others))});
      }
      out.push_back({Outcome::Abort, O, {lit_str("MissingCell"), el}, sh, e_true(), not_in_keys(el, keys)});
      return out;
    }
    return {{Outcome::Abort, O, {}, sh, e_true(), e_true()}};
  }

  // Producing a permission either adds a fresh cell or merges with an
  // existing one holding the same value.
  static std::vector<Expr> keys_of(const SMem& sh) {
    std::vector<Expr> ks;
    for (const auto& [k, c] : sh) ks.push_back(k);
    return ks;
  }

  std::vector<ProduceResult<SMem>> produce_res(const std::string& r, const std::vector<Expr>& ins,
                                               const std::vector<Expr>& outs, const SMem& sh) const {
    std::vector<ProduceResult<SMem>> res;
    if (r == "points_to" && ins.size() == 2 && outs.size() == 1) {
      const Expr& el = ins[0];
      const Expr& eq = ins[1];
      Expr qok = e_and(e_intype(eq, Kind::Rat), e_le(eq, lit_rat(1)));
      for (const auto& [k, c] : sh) {
        if (c.freed) continue;
        SMem h2 = sh;
        Expr sum = e_add(c.q, eq);
        h2[k] = SCell{false, c.v, sum};
        res.push_back({h2, conj({e_eq(el, k), e_eq(outs[0], c.v), e_le(sum, lit_rat(1))})});
      }
      if (!sh.count(el)) {
        SMem h2 = sh;
        h2[el] = SCell{false, outs[0], eq};
        res.push_back({h2, conj({qok, e_intype(el, Kind::Nat), not_in_keys(el, keys_of(sh))})});
      }
      return res;
    }
    if (r == "freed" && ins.size() == 1 && outs.empty() && !sh.count(ins[0])) {
      SMem h2 = sh;
      h2[ins[0]] = SCell{true, Expr(), Expr()};
      res.push_back({h2, e_and(e_intype(ins[0], Kind::Nat), not_in_keys(ins[0], keys_of(sh)))});
    }
    return res;
  }

  std::vector<Assertion> fixes(const FixView& v) const {
    if (payload_tag(v.payload) == "MissingCell" && v.payload.size() == 2) {
      // reads are satisfied with any share; writes need all of it
      bool read = v.action == "lookup";
      return {a_res("points_to", {v.payload[1], read ? lvar("fix_q") : lit_rat(1)}, {lvar("fix_v")})};
    }
    return {};
  }

  Assertion to_assertion(const SMem& sh) const {
    std::vector<Assertion> parts;
    for (const auto& [k, c] : sh)
      parts.push_back(c.freed ? a_res("freed", {k}, {}) : a_res("points_to", {k, c.q}, {c.v}));
    return a_star_all(parts);
  }

  std::set<std::string> lvars(const SMem& sh) const {
    std::set<std::string> r;
    for (const auto& [k, c] : sh) {
      collect_lvars(k, r);
      if (!c.freed) {
        collect_lvars(c.v, r);
        collect_lvars(c.q, r);
      }
    }
    return r;
  }

  SMem gen_symbolic(Rng& rng, const Bounds& b, const std::vector<Expr>& pool) const {
    SMem sh;
    size_t n = pick(rng, b.max_cells + 1);
    for (size_t i = 0; i < n; ++i) {
      Expr k = coin(rng, 50) ? lit_nat(pick(rng, std::max<size_t>(b.max_addresses, 1))) : pool[pick(rng, pool.size())];
      if (sh.count(k)) continue;
      if (coin(rng, 20)) {
        sh[k] = SCell{true, Expr(), Expr()};
        continue;
      }
      Expr q = coin(rng, 40) ? lit_rat(1) : (coin(rng, 50) ? lit_rat(1, 2) : pool[pick(rng, pool.size())]);
      sh[k] = SCell{false, pool[pick(rng, pool.size())], q};
    }
    return sh;
  }

  nlohmann::json to_json(const SMem& sh) const {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& [k, c] : sh) {
      if (c.freed) j.push_back({{"addr", polyheap::show(k)}, {"value", "FREED"}});
      else j.push_back({{"addr", polyheap::show(k)}, {"value", polyheap::show(c.v)}, {"perm", polyheap::show(c.q)}});
    }
    return j;
  }
};

}  // namespace polyheap
