#pragma once

#include <json.hpp>

#include "../memmodel.hpp"

namespace polyheap {

// Linear heap: addresses to values, with a freed marker.
//
// Exact       all-matches branching for actions and consumption
// UniqueMatch consumption applies only where the match is entailed
// Cut         actions take the first match, consumption an oracle-picked one
// NoNeg       no freed marker; free removes the cell
class Linear {
 public:
  enum class Variant { Exact, UniqueMatch, Cut, NoNeg };

  struct Cell {
    bool freed = false;
    Value v;
    friend bool operator==(const Cell&, const Cell&) = default;
    friend auto operator<=>(const Cell& a, const Cell& b) {
      if (a.freed != b.freed) return a.freed ? std::strong_ordering::greater : std::strong_ordering::less;
      return a.v <=> b.v;
    }
  };
  using CMem = std::map<uint64_t, Cell>;

  struct SCell {
    bool freed = false;
    Expr v;
    friend bool operator==(const SCell& a, const SCell& b) {
      return a.freed == b.freed && (a.freed || a.v == b.v);
    }
  };
  using SMem = std::map<Expr, SCell>;

  explicit Linear(Variant v = Variant::Exact, bool sabotage = false) : var_(v), sabotage_(sabotage) {}

  Variant variant() const { return var_; }
  std::string name() const {
    switch (var_) {
      case Variant::Exact: return "linear";
      case Variant::UniqueMatch: return "linear-unique";
      case Variant::Cut: return "linear-cut";
      case Variant::NoNeg: return "linear-ox";
    }
    return "linear";
  }
  Soundness declared() const {
    if (sabotage_) return {true, true};
    switch (var_) {
      case Variant::Cut: return {false, true};
      case Variant::NoNeg: return {true, false};
      default: return {true, true};
    }
  }
  bool has_fixes() const { return var_ != Variant::NoNeg; }
  std::vector<Value> extra_values() const { return {}; }

  std::vector<ActionSig> actions() const { return {{"lookup", 1, 1}, {"mutate", 2}, {"new", 0, 1}, {"free", 1}}; }
  std::vector<ResourceSig> resources() const {
    if (var_ == Variant::NoNeg) return {{"points_to", 1, 1}};
    return {{"points_to", 1, 1}, {"freed", 1, 0}};
  }

  // concrete

  bool is_wf(const CMem& h) const {
    if (var_ == Variant::NoNeg)
      for (const auto& [k, c] : h)
        if (c.freed) return false;
    return true;
  }
  CMem empty() const { return {}; }

  std::optional<CMem> compose(const CMem& a, const CMem& b) const {
    CMem r = a;
    for (const auto& [k, c] : b) {
      if (r.count(k)) {
        if (sabotage_) continue;
        return std::nullopt;
      }
      r[k] = c;
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
        h2[n] = Cell{false, Value::nil()};
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
    CMem h2 = h;
    if (act == "mutate") {
      h2[n] = Cell{false, args[1]};
    } else if (var_ == Variant::NoNeg) {
      h2.erase(n);
    } else {
      h2[n] = Cell{true, Value::nil()};
    }
    return {{Outcome::Ok, h2, {}}};
  }

  std::vector<std::pair<CMem, CMem>> splits(const CMem& h) const {
    std::vector<std::pair<CMem, CMem>> out;
    std::vector<std::pair<uint64_t, Cell>> cells(h.begin(), h.end());
    size_t n = cells.size();
    for (size_t mask = 0; mask < (size_t{1} << n); ++mask) {
      CMem a, b;
      for (size_t i = 0; i < n; ++i) ((mask >> i) & 1 ? a : b).insert(cells[i]);
      out.push_back({a, b});
    }
    return out;
  }

  // h = part . rest
  std::optional<CMem> subtract(const CMem& h, const CMem& part) const {
    CMem r = h;
    for (const auto& [k, c] : part) {
      auto it = r.find(k);
      if (it == r.end() || !(it->second == c)) return std::nullopt;
      r.erase(it);
    }
    return r;
  }

  std::optional<CMem> resource_mem(const std::string& r, const std::vector<Value>& in,
                                   const std::vector<Value>& out) const {
    if (in.size() != 1 || !in[0].is_nat()) return std::nullopt;
    if (r == "points_to" && out.size() == 1) return CMem{{in[0].as_nat(), Cell{false, out[0]}}};
    if (r == "freed" && out.empty() && var_ != Variant::NoNeg) return CMem{{in[0].as_nat(), Cell{true, Value::nil()}}};
    return std::nullopt;
  }

  bool holds_resource(const CMem& h, const std::string& r, const std::vector<Value>& in,
                      const std::vector<Value>& out) const {
    auto m = resource_mem(r, in, out);
    return m && *m == h;
  }

  std::vector<CMem> enumerate(const Bounds& b) const {
    std::vector<CMem> out{CMem{}};
    std::vector<Cell> choices;
    for (const auto& v : b.values) choices.push_back(Cell{false, v});
    if (var_ != Variant::NoNeg) choices.push_back(Cell{true, Value::nil()});
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
    size_t n = pick(rng, b.max_cells + 1);
    for (size_t i = 0; i < n; ++i) {
      uint64_t a = pick(rng, std::max<size_t>(b.max_addresses, 1));
      if (var_ != Variant::NoNeg && coin(rng, 20)) h[a] = Cell{true, Value::nil()};
      else h[a] = Cell{false, b.values[pick(rng, b.values.size())]};
    }
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

  nlohmann::json to_json(const CMem& h) const {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [k, c] : h) j[std::to_string(k)] = c.freed ? "FREED" : c.v.show();
    return j;
  }
  std::string show(const CMem& h) const {
    std::string s = "{";
    bool first = true;
    for (const auto& [k, c] : h) {
      s += (first ? "" : ", ") + std::to_string(k) + " |-> " + (c.freed ? std::string("FREED") : c.v.show());
      first = false;
    }
    return s + "}";
  }

  // symbolic

  SMem sempty() const { return {}; }

  std::optional<CMem> concretize(const Interp& th, const SMem& sh) const {
    CMem h;
    static const Store s;
    for (const auto& [k, c] : sh) {
      auto kv = eval(k, th, s);
      if (!kv || !kv->is_nat() || h.count(kv->as_nat())) return std::nullopt;
      if (c.freed) {
        if (var_ == Variant::NoNeg) return std::nullopt;
        h[kv->as_nat()] = Cell{true, Value::nil()};
        continue;
      }
      auto vv = eval(c.v, th, s);
      if (!vv) return std::nullopt;
      h[kv->as_nat()] = Cell{false, *vv};
    }
    return h;
  }

  std::vector<SActResult<SMem>> sym_action(const SMem& sh, const std::string& act, const std::vector<Expr>& args,
                                           FreshGen& fresh) const {
    using R = SActResult<SMem>;
    std::vector<R> out;
    if (act == "new") {
      if (!args.empty()) return {{Outcome::Err, sh, e_true(), {sym_payload("Type")}}};
      Expr l = fresh.var();
      SMem h2 = sh;
      h2[l] = SCell{false, lit(Value::nil())};
      return {{Outcome::Ok, h2, e_inval(l), {l}}};
    }
    bool known = act == "lookup" || act == "mutate" || act == "free";
    if (!known) return {{Outcome::Err, sh, e_true(), {sym_payload("UnknownAction")}}};
    size_t arity = act == "mutate" ? 2 : 1;
    if (args.size() != arity) return {{Outcome::Err, sh, e_true(), {sym_payload("Type")}}};
    const Expr& el = args[0];
    std::vector<Expr> keys;
    bool took_ok = false, took_uaf = false;
    for (const auto& [k, c] : sh) {
      keys.push_back(k);
      Expr hit = e_eq(el, k);
      if (c.freed) {
        if (var_ == Variant::Cut && took_uaf) continue;
        took_uaf = true;
        out.push_back({Outcome::Err, sh, hit, {sym_payload("UseAfterFree", {el})}});
        continue;
      }
      if (var_ == Variant::Cut && took_ok) continue;
      took_ok = true;
      if (act == "lookup") {
        out.push_back({Outcome::Ok, sh, hit, {c.v}});
      } else if (act == "mutate") {
        SMem h2 = sh;
        h2[k] = SCell{false, args[1]};
        out.push_back({Outcome::Ok, h2, e_and(hit, e_inval(c.v)), {}});
      } else {
        SMem h2 = sh;
        if (var_ == Variant::NoNeg) h2.erase(k);
        else h2[k] = SCell{true, Expr()};
        out.push_back({Outcome::Ok, h2, e_and(hit, e_inval(c.v)), {}});
      }
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
    bool want_freed = r == "freed";
    if (ins.size() != 1 || (r != "points_to" && !(want_freed && var_ != Variant::NoNeg)))
      return {{Outcome::Abort, O, {}, sh, e_true(), e_true()}};
    const Expr& e = ins[0];
    std::vector<Expr> keys;
    std::vector<std::pair<Expr, SCell>> matches;
    for (const auto& [k, c] : sh) {
      keys.push_back(k);
      if (c.freed == want_freed) matches.push_back({k, c});
      else out.push_back({Outcome::Abort, O, {}, sh, e_true(), e_eq(e, k)});
    }
    auto ok_for = [&](const std::pair<Expr, SCell>& m, const Oracle& o) {
      SMem frame = sh;
      frame.erase(m.first);
      Expr hit = e_eq(e, m.first);
      std::vector<Expr> outs;
      if (!want_freed) outs.push_back(m.second.v);
      Expr pi_i = var_ == Variant::UniqueMatch ? hit : e_true();
      return R{Outcome::Ok, o, outs, frame, pi_i, hit};
    };
    if (var_ == Variant::Cut) {
      auto [i, O2] = O.choose(matches.size());
      if (i < matches.size()) out.push_back(ok_for(matches[i], O2));
    } else {
      for (const auto& m : matches) out.push_back(ok_for(m, O));
    }
    out.push_back({Outcome::Abort, O, {lit_str("MissingCell"), e}, sh, e_true(), not_in_keys(e, keys)});
    return out;
  }

  std::vector<ProduceResult<SMem>> produce_res(const std::string& r, const std::vector<Expr>& ins,
                                               const std::vector<Expr>& outs, const SMem& sh) const {
    if (ins.size() != 1 || sh.count(ins[0])) return {};
    std::vector<Expr> keys;
    for (const auto& [k, c] : sh) keys.push_back(k);
    Expr pi = e_and(e_intype(ins[0], Kind::Nat), not_in_keys(ins[0], keys));
    SMem h2 = sh;
    if (r == "points_to" && outs.size() == 1) {
      h2[ins[0]] = SCell{false, outs[0]};
    } else if (r == "freed" && outs.empty() && var_ != Variant::NoNeg) {
      h2[ins[0]] = SCell{true, Expr()};
    } else {
      return {};
    }
    return {{h2, pi}};
  }

  std::vector<Assertion> fixes(const FixView& v) const {
    if (var_ == Variant::NoNeg) return {};
    if (payload_tag(v.payload) == "MissingCell" && v.payload.size() == 2)
      return {a_res("points_to", {v.payload[1]}, {lvar("fix_v")})};
    return {};
  }

  Assertion to_assertion(const SMem& sh) const {
    std::vector<Assertion> parts;
    for (const auto& [k, c] : sh)
      parts.push_back(c.freed ? a_res("freed", {k}, {}) : a_res("points_to", {k}, {c.v}));
    return a_star_all(parts);
  }

  std::set<std::string> lvars(const SMem& sh) const {
    std::set<std::string> r;
    for (const auto& [k, c] : sh) {
      collect_lvars(k, r);
      if (!c.freed) collect_lvars(c.v, r);
    }
    return r;
  }

  SMem gen_symbolic(Rng& rng, const Bounds& b, const std::vector<Expr>& pool) const {
    SMem sh;
    size_t n = pick(rng, b.max_cells + 1);
    for (size_t i = 0; i < n; ++i) {
      Expr k = coin(rng, 50) ? lit_nat(pick(rng, std::max<size_t>(b.max_addresses, 1))) : pool[pick(rng, pool.size())];
      if (sh.count(k)) continue;
      if (var_ != Variant::NoNeg && coin(rng, 20)) sh[k] = SCell{true, Expr()};
      else sh[k] = SCell{false, pool[pick(rng, pool.size())]};
    }
    return sh;
  }

  nlohmann::json to_json(const SMem& sh) const {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& [k, c] : sh) j.push_back({{"addr", polyheap::show(k)}, {"value", c.freed ? "FREED" : polyheap::show(c.v)}});
    return j;
  }

 private:
  Variant var_;
  bool sabotage_;
};

}  // namespace polyheap
