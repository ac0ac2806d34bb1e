#pragma once

#include <functional>

#include <json.hpp>

#include "../memmodel.hpp"

namespace polyheap {

// Heap as a bag of chunks, points_to(l; v) and malloc_block(l; size), with
// at most one chunk of each kind per address. No freed tracking.
class Chunks {
 public:
  struct CMem {
    std::map<uint64_t, Value> pts;
    std::map<uint64_t, uint64_t> mbs;
    friend bool operator==(const CMem&, const CMem&) = default;
  };
  struct SMem {
    std::map<Expr, Expr> pts;
    std::map<Expr, Expr> mbs;
    friend bool operator==(const SMem&, const SMem&) = default;
  };

  std::string name() const { return "chunks"; }
  Soundness declared() const { return {true, false}; }
  bool has_fixes() const { return false; }
  std::vector<Value> extra_values() const { return {}; }

  std::vector<ActionSig> actions() const { return {{"lookup", 1, 1}, {"mutate", 2}, {"new", 0, 1}, {"free", 1}}; }
  std::vector<ResourceSig> resources() const { return {{"points_to", 1, 1}, {"malloc_block", 1, 1}}; }

  bool is_wf(const CMem&) const { return true; }
  CMem empty() const { return {}; }

  std::optional<CMem> compose(const CMem& a, const CMem& b) const {
    CMem r = a;
    for (const auto& [k, v] : b.pts)
      if (!r.pts.emplace(k, v).second) return std::nullopt;
    for (const auto& [k, n] : b.mbs)
      if (!r.mbs.emplace(k, n).second) return std::nullopt;
    return r;
  }

  // Each action is consume followed by produce of the chunks it touches.
  std::vector<CActResult<CMem>> exec_action(const CMem& h, const std::string& act, const std::vector<Value>& args,
                                            const AllocCtx& alloc) const {
    using R = CActResult<CMem>;
    auto type_err = R{Outcome::Err, h, {payload("Type")}};
    if (act == "new") {
      if (!args.empty()) return {type_err};
      std::vector<R> out;
      for (auto n : alloc.candidates([&](uint64_t a) { return h.pts.count(a) > 0 || h.mbs.count(a) > 0; })) {
        CMem h2 = h;
        h2.pts[n] = Value::nil();
        h2.mbs[n] = 1;
        out.push_back({Outcome::Ok, h2, {Value::nat(n)}});
      }
      return out;
    }
    if (act != "lookup" && act != "mutate" && act != "free") return {{Outcome::Err, h, {payload("UnknownAction")}}};
    size_t arity = act == "mutate" ? 2 : 1;
    if (args.size() != arity || !args[0].is_nat()) return {type_err};
    uint64_t l = args[0].as_nat();
    auto p = h.pts.find(l);
    if (act == "free") {
      auto m = h.mbs.find(l);
      if (p == h.pts.end() || m == h.mbs.end() || m->second != 1)
        return {{Outcome::Miss, h, {payload("MissingChunk", {args[0]})}}};
      CMem h2 = h;
      h2.pts.erase(l);
      h2.mbs.erase(l);
      return {{Outcome::Ok, h2, {}}};
    }
    if (p == h.pts.end()) return {{Outcome::Miss, h, {payload("MissingCell", {args[0]})}}};
    if (act == "lookup") return {{Outcome::Ok, h, {p->second}}};
    CMem h2 = h;
    h2.pts[l] = args[1];
    return {{Outcome::Ok, h2, {}}};
  }

  std::vector<std::pair<CMem, CMem>> splits(const CMem& h) const {
    std::vector<std::pair<bool, uint64_t>> parts;
    for (const auto& [k, v] : h.pts) parts.push_back({false, k});
    for (const auto& [k, n] : h.mbs) parts.push_back({true, k});
    std::vector<std::pair<CMem, CMem>> out;
    size_t n = parts.size();
    if (n > 16) return out;
    for (size_t mask = 0; mask < (size_t{1} << n); ++mask) {
      CMem a, b;
      for (size_t i = 0; i < n; ++i) {
        CMem& side = (mask >> i) & 1 ? a : b;
        auto [mb, k] = parts[i];
        if (mb) side.mbs[k] = h.mbs.at(k);
        else side.pts[k] = h.pts.at(k);
      }
      out.push_back({a, b});
    }
    return out;
  }

  std::optional<CMem> subtract(const CMem& h, const CMem& part) const {
    CMem r = h;
    for (const auto& [k, v] : part.pts) {
      auto it = r.pts.find(k);
      if (it == r.pts.end() || !(it->second == v)) return std::nullopt;
      r.pts.erase(it);
    }
    for (const auto& [k, n] : part.mbs) {
      auto it = r.mbs.find(k);
      if (it == r.mbs.end() || it->second != n) return std::nullopt;
      r.mbs.erase(it);
    }
    return r;
  }

  std::optional<CMem> resource_mem(const std::string& r, const std::vector<Value>& in,
                                   const std::vector<Value>& out) const {
    if (in.size() != 1 || !in[0].is_nat() || out.size() != 1) return std::nullopt;
    CMem h;
    if (r == "points_to") h.pts[in[0].as_nat()] = out[0];
    else if (r == "malloc_block" && out[0].is_nat()) h.mbs[in[0].as_nat()] = out[0].as_nat();
    else return std::nullopt;
    return h;
  }

  bool holds_resource(const CMem& h, const std::string& r, const std::vector<Value>& in,
                      const std::vector<Value>& out) const {
    auto m = resource_mem(r, in, out);
    return m && *m == h;
  }

  std::vector<CMem> enumerate(const Bounds& b) const {
    std::vector<std::tuple<bool, uint64_t, Value>> slots;
    for (uint64_t a = 0; a < b.max_addresses; ++a) {
      for (const auto& v : b.values) slots.push_back({false, a, v});
      for (uint64_t n = 1; n <= 2; ++n) slots.push_back({true, a, Value::nat(n)});
    }
    std::vector<CMem> out;
    std::function<void(size_t, CMem, size_t)> rec = [&](size_t i, CMem h, size_t used) {
      if (i == slots.size()) {
        out.push_back(h);
        return;
      }
      rec(i + 1, h, used);
      if (used >= b.max_cells) return;
      const auto& [mb, a, v] = slots[i];
      if (mb) {
        if (h.mbs.count(a)) return;
        h.mbs[a] = v.as_nat();
      } else {
        if (h.pts.count(a)) return;
        h.pts[a] = v;
      }
      rec(i + 1, h, used + 1);
    };
    rec(0, CMem{}, 0);
    return out;
  }

  CMem generate(Rng& rng, const Bounds& b) const {
    CMem h;
    size_t n = pick(rng, b.max_cells + 1);
    for (size_t i = 0; i < n; ++i) {
      uint64_t a = pick(rng, std::max<size_t>(b.max_addresses, 1));
      if (coin(rng, 30)) h.mbs[a] = 1 + pick(rng, 2);
      else h.pts[a] = b.values[pick(rng, b.values.size())];
    }
    return h;
  }

  std::vector<CMem> shrink(const CMem& h, const Bounds& b) const {
    std::vector<CMem> out;
    for (const auto& [k, v] : h.pts) {
      CMem h2 = h;
      h2.pts.erase(k);
      out.push_back(h2);
      if (!b.values.empty() && !(v == b.values[0])) {
        CMem h3 = h;
        h3.pts[k] = b.values[0];
        out.push_back(h3);
      }
    }
    for (const auto& [k, n] : h.mbs) {
      CMem h2 = h;
      h2.mbs.erase(k);
      out.push_back(h2);
    }
    return out;
  }

  nlohmann::json to_json(const CMem& h) const {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& [k, v] : h.pts) j.push_back("points_to(" + std::to_string(k) + "; " + v.show() + ")");
    for (const auto& [k, n] : h.mbs)
      j.push_back("malloc_block(" + std::to_string(k) + "; " + std::to_string(n) + ")");
    return j;
  }
  std::string show(const CMem& h) const {
    std::string s = "[";
    bool first = true;
    for (const auto& item : to_json(h)) {
      s += (first ? "" : ", ") + item.get<std::string>();
      first = false;
    }
    return s + "]";
  }

  // symbolic

  SMem sempty() const { return {}; }

  std::optional<CMem> concretize(const Interp& th, const SMem& sh) const {
    static const Store s;
    CMem h;
    for (const auto& [k, v] : sh.pts) {
      auto kv = eval(k, th, s);
      auto vv = eval(v, th, s);
      if (!kv || !kv->is_nat() || !vv || h.pts.count(kv->as_nat())) return std::nullopt;
      h.pts[kv->as_nat()] = *vv;
    }
    for (const auto& [k, n] : sh.mbs) {
      auto kv = eval(k, th, s);
      auto nv = eval(n, th, s);
      if (!kv || !kv->is_nat() || !nv || !nv->is_nat() || h.mbs.count(kv->as_nat())) return std::nullopt;
      h.mbs[kv->as_nat()] = nv->as_nat();
    }
    return h;
  }

  static std::vector<Expr> pt_keys(const SMem& sh) {
    std::vector<Expr> ks;
    for (const auto& [k, v] : sh.pts) ks.push_back(k);
    return ks;
  }

  std::vector<SActResult<SMem>> sym_action(const SMem& sh, const std::string& act, const std::vector<Expr>& args,
                                           FreshGen& fresh) const {
    using R = SActResult<SMem>;
    std::vector<R> out;
    if (act == "new") {
      if (!args.empty()) return {{Outcome::Err, sh, e_true(), {sym_payload("Type")}}};
      Expr l = fresh.var();
      SMem h2 = sh;
      h2.pts[l] = lit(Value::nil());
      h2.mbs[l] = lit_nat(1);
      return {{Outcome::Ok, h2, e_inval(l), {l}}};
    }
    if (act != "lookup" && act != "mutate" && act != "free")
      return {{Outcome::Err, sh, e_true(), {sym_payload("UnknownAction")}}};
    size_t arity = act == "mutate" ? 2 : 1;
    if (args.size() != arity) return {{Outcome::Err, sh, e_true(), {sym_payload("Type")}}};
    const Expr& el = args[0];
    Expr isnat = e_intype(el, Kind::Nat);
    out.push_back({Outcome::Err, sh, e_not(isnat), {sym_payload("Type")}});
    if (act == "free") {
      std::vector<Expr> hits;
      for (const auto& [k, v] : sh.pts)
        for (const auto& [m, n] : sh.mbs) {
          Expr hit = conj({e_eq(el, k), e_eq(el, m), e_eq(n, lit_nat(1))});
          hits.push_back(hit);
          SMem h2 = sh;
          h2.pts.erase(k);
          h2.mbs.erase(m);
          out.push_back({Outcome::Ok, h2, e_and(hit, e_inval(v)), {}});
        }
      Expr none = hits.empty() ? e_true() : e_not(hits.size() == 1 ? hits[0] : [&] {
        Expr r = hits[0];
        for (size_t i = 1; i < hits.size(); ++i) r = e_or(r, hits[i]);
        return r;
      }());
      out.push_back({Outcome::Miss, sh, e_and(isnat, none), {sym_payload("MissingChunk", {el})}});
      return out;
    }
    for (const auto& [k, v] : sh.pts) {
      Expr hit = e_eq(el, k);
      if (act == "lookup") {
        out.push_back({Outcome::Ok, sh, hit, {v}});
      } else {
        SMem h2 = sh;
        h2.pts[k] = args[1];
        out.push_back({Outcome::Ok, h2, e_and(hit, e_inval(v)), {}});
      }
    }
    out.push_back({Outcome::Miss, sh, e_and(isnat, not_in_keys(el, pt_keys(sh))), {sym_payload("MissingCell", {el})}});
    return out;
  }

  // Unique-match: a candidate chunk applies only when the state entails the
  // address equality.
  std::vector<ConsumeResult<SMem>> consume_res(Mode, const Oracle& O, const std::string& r,
                                               const std::vector<Expr>& ins, const SMem& sh) const {
    using R = ConsumeResult<SMem>;
    if (ins.size() != 1 || (r != "points_to" && r != "malloc_block"))
      return {{Outcome::Abort, O, {}, sh, e_true(), e_true()}};
    const Expr& e = ins[0];
    const auto& bag = r == "points_to" ? sh.pts : sh.mbs;
    std::vector<R> out;
    std::vector<Expr> keys;
    for (const auto& [k, v] : bag) {
      keys.push_back(k);
      SMem frame = sh;
      (r == "points_to" ? frame.pts : frame.mbs).erase(k);
      Expr hit = e_eq(e, k);
      out.push_back({Outcome::Ok, O, {v}, frame, hit, hit});
    }
    out.push_back({Outcome::Abort, O, {lit_str("MissingChunk"), e}, sh, e_true(), not_in_keys(e, keys)});
    return out;
  }

  std::vector<ProduceResult<SMem>> produce_res(const std::string& r, const std::vector<Expr>& ins,
                                               const std::vector<Expr>& outs, const SMem& sh) const {
    if (ins.size() != 1 || outs.size() != 1 || (r != "points_to" && r != "malloc_block")) return {};
    SMem h2 = sh;
    auto& bag = r == "points_to" ? h2.pts : h2.mbs;
    if (bag.count(ins[0])) return {};
    std::vector<Expr> keys;
    for (const auto& [k, v] : bag) keys.push_back(k);
    bag[ins[0]] = outs[0];
    return {{h2, e_and(e_intype(ins[0], Kind::Nat), not_in_keys(ins[0], keys))}};
  }

  std::vector<Assertion> fixes(const FixView&) const { return {}; }

  Assertion to_assertion(const SMem& sh) const {
    std::vector<Assertion> parts;
    for (const auto& [k, v] : sh.pts) parts.push_back(a_res("points_to", {k}, {v}));
    for (const auto& [k, n] : sh.mbs) parts.push_back(a_res("malloc_block", {k}, {n}));
    return a_star_all(parts);
  }

  std::set<std::string> lvars(const SMem& sh) const {
    std::set<std::string> r;
    for (const auto& [k, v] : sh.pts) {
      collect_lvars(k, r);
      collect_lvars(v, r);
    }
    for (const auto& [k, n] : sh.mbs) {
      collect_lvars(k, r);
      collect_lvars(n, r);
    }
    return r;
  }

  SMem gen_symbolic(Rng& rng, const Bounds& b, const std::vector<Expr>& pool) const {
    SMem sh;
    auto any = [&]() { return pool[pick(rng, pool.size())]; };
    size_t n = pick(rng, b.max_cells + 1);
    for (size_t i = 0; i < n; ++i) {
      Expr k = coin(rng, 50) ? lit_nat(pick(rng, std::max<size_t>(b.max_addresses, 1))) : any();
      if (coin(rng, 30)) sh.mbs[k] = lit_nat(1);
      else sh.pts[k] = any();
    }
    return sh;
  }

  nlohmann::json to_json(const SMem& sh) const {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& [k, v] : sh.pts) j.push_back("points_to(" + polyheap::show(k) + "; " + polyheap::show(v) + ")");
    for (const auto& [k, n] : sh.mbs) j.push_back("malloc_block(" + polyheap::show(k) + "; " + polyheap::show(n) + ")");
    return j;
  }
};

}  // namespace polyheap
