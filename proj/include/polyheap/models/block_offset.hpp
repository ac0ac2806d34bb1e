#pragma once

#include <functional>

#include <json.hpp>

#include "../memmodel.hpp"

namespace polyheap {

// C-style memory: block id -> (offset -> value, optional bound), or freed.
class BlockOffset {
 public:
  struct Block {
    bool freed = false;
    std::map<uint64_t, Value> cells;
    std::optional<uint64_t> bound;
    friend bool operator==(const Block&, const Block&) = default;
  };
  using CMem = std::map<uint64_t, Block>;

  struct SBlock {
    bool freed = false;
    std::map<Expr, Expr> cells;
    std::optional<Expr> bound;
    friend bool operator==(const SBlock&, const SBlock&) = default;
  };
  using SMem = std::map<Expr, SBlock>;

  static constexpr uint64_t kMaxConstNew = 16;

  std::string name() const { return "block-offset"; }
  Soundness declared() const { return {true, true}; }
  bool has_fixes() const { return true; }
  std::vector<Value> extra_values() const { return {}; }

  std::vector<ActionSig> actions() const { return {{"lookup", 2, 1}, {"mutate", 3}, {"new", 1, 1}, {"free", 1}}; }
  std::vector<ResourceSig> resources() const { return {{"cell", 2, 1}, {"bound", 1, 1}, {"freed", 1, 0}}; }

  static bool block_wf(const Block& b) {
    if (b.freed) return b.cells.empty() && !b.bound;
    if (b.cells.empty() && !b.bound) return false;
    if (b.bound && !b.cells.empty() && b.cells.rbegin()->first >= *b.bound) return false;
    return true;
  }
  bool is_wf(const CMem& h) const {
    for (const auto& [k, b] : h)
      if (!block_wf(b)) return false;
    return true;
  }
  CMem empty() const { return {}; }

  std::optional<CMem> compose(const CMem& a, const CMem& b) const {
    CMem r = a;
    for (const auto& [k, blk] : b) {
      auto it = r.find(k);
      if (it == r.end()) {
        r[k] = blk;
        continue;
      }
      Block& x = it->second;
      if (x.freed || blk.freed) return std::nullopt;
      if (x.bound && blk.bound) return std::nullopt;
      for (const auto& [o, v] : blk.cells)
        if (!x.cells.emplace(o, v).second) return std::nullopt;
      if (blk.bound) x.bound = blk.bound;
      if (!block_wf(x)) return std::nullopt;
    }
    return r;
  }

  std::vector<CActResult<CMem>> exec_action(const CMem& h, const std::string& act, const std::vector<Value>& args,
                                            const AllocCtx& alloc) const {
    using R = CActResult<CMem>;
    auto type_err = R{Outcome::Err, h, {payload("Type")}};
    if (act == "new") {
      if (args.size() != 1 || !args[0].is_nat()) return {type_err};
      uint64_t n = args[0].as_nat();
      Block blk;
      for (uint64_t i = 0; i < n; ++i) blk.cells[i] = Value::nil();
      blk.bound = n;
      std::vector<R> out;
      for (auto b : alloc.candidates([&](uint64_t a) { return h.count(a) > 0; })) {
        CMem h2 = h;
        h2[b] = blk;
        out.push_back({Outcome::Ok, h2, {Value::nat(b)}});
      }
      return out;
    }
    if (act == "free") {
      if (args.size() != 1 || !args[0].is_nat()) return {type_err};
      auto it = h.find(args[0].as_nat());
      if (it == h.end()) return {{Outcome::Miss, h, {payload("MissingBlock", {args[0]})}}};
      const Block& blk = it->second;
      if (blk.freed) return {{Outcome::Err, h, {payload("UseAfterFree", {args[0]})}}};
      if (!blk.bound) return {{Outcome::Miss, h, {payload("MissingBound", {args[0]})}}};
      if (blk.cells.size() != *blk.bound) return {{Outcome::Miss, h, {payload("MissingCells", {args[0]})}}};
      CMem h2 = h;
      h2[it->first] = Block{true, {}, std::nullopt};
      return {{Outcome::Ok, h2, {}}};
    }
    if (act != "lookup" && act != "mutate") return {{Outcome::Err, h, {payload("UnknownAction")}}};
    size_t arity = act == "mutate" ? 3 : 2;
    if (args.size() != arity || !args[0].is_nat() || !args[1].is_nat()) return {type_err};
    auto it = h.find(args[0].as_nat());
    if (it == h.end()) return {{Outcome::Miss, h, {payload("MissingBlock", {args[0]})}}};
    const Block& blk = it->second;
    if (blk.freed) return {{Outcome::Err, h, {payload("UseAfterFree", {args[0]})}}};
    uint64_t o = args[1].as_nat();
    auto c = blk.cells.find(o);
    if (c == blk.cells.end()) {
      if (blk.bound && o >= *blk.bound) return {{Outcome::Err, h, {payload("OutOfBounds", {args[0], args[1]})}}};
      return {{Outcome::Miss, h, {payload("MissingCell", {args[0], args[1]})}}};
    }
    if (act == "lookup") return {{Outcome::Ok, h, {c->second}}};
    CMem h2 = h;
    h2[it->first].cells[o] = args[2];
    return {{Outcome::Ok, h2, {}}};
  }

  // Components of a block that can be split independently: each cell and the
  // bound. Freed blocks move as a unit.
  std::vector<std::pair<CMem, CMem>> splits(const CMem& h) const {
    struct Part {
      uint64_t b;
      int kind;  // 0 cell, 1 bound, 2 freed
      uint64_t o;
    };
    std::vector<Part> parts;
    for (const auto& [k, blk] : h) {
      if (blk.freed) {
        parts.push_back({k, 2, 0});
        continue;
      }
      for (const auto& [o, v] : blk.cells) parts.push_back({k, 0, o});
      if (blk.bound) parts.push_back({k, 1, 0});
    }
    std::vector<std::pair<CMem, CMem>> out;
    size_t n = parts.size();
    if (n > 16) return out;
    for (size_t mask = 0; mask < (size_t{1} << n); ++mask) {
      CMem a, b;
      for (size_t i = 0; i < n; ++i) {
        CMem& side = (mask >> i) & 1 ? a : b;
        const Part& p = parts[i];
        const Block& src = h.at(p.b);
        if (p.kind == 2) side[p.b] = src;
        else if (p.kind == 1) side[p.b].bound = src.bound;
        else side[p.b].cells[p.o] = src.cells.at(p.o);
      }
      if (is_wf(a) && is_wf(b)) out.push_back({a, b});
    }
    return out;
  }

  std::optional<CMem> subtract(const CMem& h, const CMem& part) const {
    CMem r = h;
    for (const auto& [k, pb] : part) {
      auto it = r.find(k);
      if (it == r.end()) return std::nullopt;
      Block& x = it->second;
      if (pb.freed || x.freed) {
        if (!(pb == x)) return std::nullopt;
        r.erase(it);
        continue;
      }
      for (const auto& [o, v] : pb.cells) {
        auto c = x.cells.find(o);
        if (c == x.cells.end() || !(c->second == v)) return std::nullopt;
        x.cells.erase(c);
      }
      if (pb.bound) {
        if (x.bound != pb.bound) return std::nullopt;
        x.bound.reset();
      }
      if (x.cells.empty() && !x.bound) r.erase(it);
    }
    if (!is_wf(r)) return std::nullopt;
    return r;
  }

  std::optional<CMem> resource_mem(const std::string& r, const std::vector<Value>& in,
                                   const std::vector<Value>& out) const {
    if (in.empty() || !in[0].is_nat()) return std::nullopt;
    uint64_t b = in[0].as_nat();
    if (r == "cell" && in.size() == 2 && out.size() == 1 && in[1].is_nat())
      return CMem{{b, Block{false, {{in[1].as_nat(), out[0]}}, std::nullopt}}};
    if (r == "bound" && in.size() == 1 && out.size() == 1 && out[0].is_nat())
      return CMem{{b, Block{false, {}, out[0].as_nat()}}};
    if (r == "freed" && in.size() == 1 && out.empty()) return CMem{{b, Block{true, {}, std::nullopt}}};
    return std::nullopt;
  }

  bool holds_resource(const CMem& h, const std::string& r, const std::vector<Value>& in,
                      const std::vector<Value>& out) const {
    auto m = resource_mem(r, in, out);
    return m && *m == h;
  }

  // Block ids and offsets range over 0..max_addresses-1 and 0..1; every cell,
  // bound, or freed block counts toward max_cells.
  std::vector<CMem> enumerate(const Bounds& b) const {
    struct Part {
      int kind;
      uint64_t o;
      Value v;
    };
    std::vector<Part> choices;
    for (uint64_t o = 0; o < 2; ++o)
      for (const auto& v : b.values) choices.push_back({0, o, v});
    for (uint64_t n = 0; n <= 2; ++n) choices.push_back({1, n, Value::nil()});
    std::vector<CMem> out;
    // walk components in a fixed order so each memory is produced once
    std::vector<std::pair<uint64_t, size_t>> slots;
    for (uint64_t blk = 0; blk < b.max_addresses; ++blk) {
      slots.push_back({blk, choices.size()});  // freed
      for (size_t i = 0; i < choices.size(); ++i) slots.push_back({blk, i});
    }
    std::function<void(size_t, CMem, size_t)> rec = [&](size_t i, CMem h, size_t used) {
      if (i == slots.size()) {
        if (is_wf(h)) out.push_back(h);
        return;
      }
      rec(i + 1, h, used);
      if (used >= b.max_cells) return;
      auto [blk, ci] = slots[i];
      auto it = h.find(blk);
      if (ci == choices.size()) {
        if (it != h.end()) return;
        h[blk] = Block{true, {}, std::nullopt};
        rec(i + 1, h, used + 1);
        return;
      }
      if (it != h.end() && it->second.freed) return;
      const Part& p = choices[ci];
      Block& x = h[blk];
      if (p.kind == 0) {
        if (x.cells.count(p.o)) return;
        x.cells[p.o] = p.v;
      } else {
        if (x.bound) return;
        x.bound = p.o;
      }
      rec(i + 1, h, used + 1);
    };
    rec(0, CMem{}, 0);
    return out;
  }

  CMem generate(Rng& rng, const Bounds& b) const {
    for (;;) {
      CMem h;
      size_t n = pick(rng, b.max_cells + 1);
      for (size_t i = 0; i < n; ++i) {
        uint64_t blk = pick(rng, std::max<size_t>(b.max_addresses, 1));
        unsigned r = static_cast<unsigned>(pick(rng, 10));
        if (r == 0) {
          h[blk] = Block{true, {}, std::nullopt};
          continue;
        }
        if (h.count(blk) && h[blk].freed) continue;
        if (r <= 2) h[blk].bound = pick(rng, 3);
        else h[blk].cells[pick(rng, 2)] = b.values[pick(rng, b.values.size())];
      }
      if (is_wf(h)) return h;
    }
  }

  std::vector<CMem> shrink(const CMem& h, const Bounds& b) const {
    std::vector<CMem> out;
    for (const auto& [k, blk] : h) {
      CMem h2 = h;
      h2.erase(k);
      out.push_back(h2);
      for (const auto& [o, v] : blk.cells) {
        CMem h3 = h;
        h3[k].cells.erase(o);
        if (is_wf(h3)) out.push_back(h3);
        if (!b.values.empty() && !(v == b.values[0])) {
          CMem h4 = h;
          h4[k].cells[o] = b.values[0];
          out.push_back(h4);
        }
      }
      if (blk.bound) {
        CMem h3 = h;
        h3[k].bound.reset();
        if (is_wf(h3)) out.push_back(h3);
      }
    }
    return out;
  }

  nlohmann::json to_json(const CMem& h) const {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [k, blk] : h) {
      if (blk.freed) {
        j[std::to_string(k)] = "FREED";
        continue;
      }
      nlohmann::json cells = nlohmann::json::object();
      for (const auto& [o, v] : blk.cells) cells[std::to_string(o)] = v.show();
      j[std::to_string(k)] = {{"cells", cells}, {"bound", blk.bound ? nlohmann::json(*blk.bound) : nlohmann::json()}};
    }
    return j;
  }
  std::string show(const CMem& h) const {
    std::string s = "{";
    bool first = true;
    for (const auto& [k, blk] : h) {
      s += (first ? "" : ", ") + std::to_string(k) + " |-> ";
      first = false;
      if (blk.freed) {
        s += "FREED";
        continue;
      }
      s += "({";
      bool f2 = true;
      for (const auto& [o, v] : blk.cells) {
        s += (f2 ? "" : ", ") + std::to_string(o) + " |-> " + v.show();
        f2 = false;
      }
      s += "}, " + (blk.bound ? "Some " + std::to_string(*blk.bound) : std::string("None")) + ")";
    }
    return s + "}";
  }

  // symbolic

  SMem sempty() const { return {}; }

  std::optional<CMem> concretize(const Interp& th, const SMem& sh) const {
    static const Store s;
    CMem h;
    for (const auto& [k, sb] : sh) {
      auto kv = eval(k, th, s);
      if (!kv || !kv->is_nat() || h.count(kv->as_nat())) return std::nullopt;
      Block blk;
      blk.freed = sb.freed;
      for (const auto& [o, v] : sb.cells) {
        auto ov = eval(o, th, s);
        auto vv = eval(v, th, s);
        if (!ov || !ov->is_nat() || !vv || blk.cells.count(ov->as_nat())) return std::nullopt;
        blk.cells[ov->as_nat()] = *vv;
      }
      if (sb.bound) {
        auto nv = eval(*sb.bound, th, s);
        if (!nv || !nv->is_nat()) return std::nullopt;
        blk.bound = nv->as_nat();
      }
      if (!block_wf(blk)) return std::nullopt;
      h[kv->as_nat()] = std::move(blk);
    }
    return h;
  }

  static std::vector<Expr> keys_of(const SMem& sh) {
    std::vector<Expr> ks;
    for (const auto& [k, b] : sh) ks.push_back(k);
    return ks;
  }
  static std::vector<Expr> offsets_of(const SBlock& b) {
    std::vector<Expr> os;
    for (const auto& [o, v] : b.cells) os.push_back(o);
    return os;
  }
  static std::vector<Expr> others(const SMem& sh, const Expr& k) {
    std::vector<Expr> os;
    for (const auto& [k2, b] : sh)
      if (!(k2 == k)) os.push_back(k2);
    return os;
  }

  std::vector<SActResult<SMem>> sym_action(const SMem& sh, const std::string& act, const std::vector<Expr>& args,
                                           FreshGen& fresh) const {
    using R = SActResult<SMem>;
    std::vector<R> out;
    auto type_err = [&](Expr pc) { return R{Outcome::Err, sh, std::move(pc), {sym_payload("Type")}}; };
    std::vector<Expr> keys = keys_of(sh);
    if (act == "new") {
      if (args.size() != 1) return {type_err(e_true())};
      auto n = eval_ground(args[0]);
      if (n && !n->is_nat()) return {type_err(e_true())};
      if (!n || n->as_nat() > kMaxConstNew) return {{Outcome::Abort, sh, e_true(), {sym_payload("NonConstantSize")}}};
      Expr b = fresh.var();
      SBlock blk;
      for (uint64_t i = 0; i < n->as_nat(); ++i) blk.cells[lit_nat(i)] = lit(Value::nil());
      blk.bound = lit_nat(n->as_nat());
      SMem h2 = sh;
      h2[b] = blk;
      return {{Outcome::Ok, h2, e_inval(b), {b}}};
    }
    if (act == "free") {
      if (args.size() != 1) return {type_err(e_true())};
      const Expr& eb = args[0];
      Expr isnat = e_intype(eb, Kind::Nat);
      out.push_back(type_err(e_not(isnat)));
      out.push_back({Outcome::Miss, sh, e_and(isnat, not_in_keys(eb, keys)), {sym_payload("MissingBlock", {eb})}});
      for (const auto& [k, blk] : sh) {
        Expr hit = e_eq(eb, k);
        if (blk.freed) {
          out.push_back({Outcome::Err, sh, hit, {sym_payload("UseAfterFree", {eb})}});
          continue;
        }
        if (!blk.bound) {
          out.push_back({Outcome::Miss, sh, hit, {sym_payload("MissingBound", {eb})}});
          continue;
        }
        Expr full = e_eq(*blk.bound, lit_nat(blk.cells.size()));
        // the dropped cells were well formed: values defined, offsets
        // distinct and below the bound
        std::vector<Expr> vals, wf;
        std::vector<Expr> offs = offsets_of(blk);
        for (const auto& [o, v] : blk.cells) vals.push_back(v);
        for (size_t i = 0; i < offs.size(); ++i) {
          wf.push_back(e_lt(offs[i], *blk.bound));
          for (size_t j = i + 1; j < offs.size(); ++j) wf.push_back(e_not(e_eq(offs[i], offs[j])));
        }
        SMem h2 = sh;
        h2[k] = SBlock{true, {}, std::nullopt};
        out.push_back({Outcome::Ok, h2, conj({hit, full, all_inval(vals), conj(wf)}), {}});
        out.push_back({Outcome::Miss, sh, e_and(hit, e_not(full)), {sym_payload("MissingCells", {eb})}});
      }
      return out;
    }
    if (act != "lookup" && act != "mutate") return {{Outcome::Err, sh, e_true(), {sym_payload("UnknownAction")}}};
    size_t arity = act == "mutate" ? 3 : 2;
    if (args.size() != arity) return {type_err(e_true())};
    const Expr& eb = args[0];
    const Expr& eo = args[1];
    Expr nats = e_and(e_intype(eb, Kind::Nat), e_intype(eo, Kind::Nat));
    out.push_back(type_err(e_not(nats)));
    out.push_back({Outcome::Miss, sh, e_and(nats, not_in_keys(eb, keys)), {sym_payload("MissingBlock", {eb})}});
    for (const auto& [k, blk] : sh) {
      Expr hit = e_and(e_eq(eb, k), e_intype(eo, Kind::Nat));
      if (blk.freed) {
        out.push_back({Outcome::Err, sh, hit, {sym_payload("UseAfterFree", {eb})}});
        continue;
      }
      for (const auto& [o, v] : blk.cells) {
        Expr at = e_and(hit, e_eq(eo, o));
        if (act == "lookup") {
          out.push_back({Outcome::Ok, sh, at, {v}});
        } else {
          SMem h2 = sh;
          h2[k].cells[o] = args[2];
          out.push_back({Outcome::Ok, h2, e_and(at, e_inval(v)), {}});
        }
      }
      Expr absent = e_and(hit, not_in_keys(eo, offsets_of(blk)));
      if (blk.bound) {
        out.push_back({Outcome::Err, sh, e_and(absent, e_le(*blk.bound, eo)), {sym_payload("OutOfBounds", {eb, eo})}});
        out.push_back({Outcome::Miss, sh, e_and(absent, e_lt(eo, *blk.bound)), {sym_payload("MissingCell", {eb, eo})}});
      } else {
        out.push_back({Outcome::Miss, sh, absent, {sym_payload("MissingCell", {eb, eo})}});
      }
    }
    return out;
  }

  // Drops a block left with no cells and no bound. Its key then no longer
  // witnesses disjointness, so the distinctness facts are returned as pc.
  static Expr tidy(SMem& frame, const Expr& k) {
    auto it = frame.find(k);
    if (it == frame.end() || it->second.freed || !it->second.cells.empty() || it->second.bound) return e_true();
    frame.erase(it);
    return not_in_keys(k, keys_of(frame));
  }

  std::vector<ConsumeResult<SMem>> consume_res(Mode, const Oracle& O, const std::string& r,
                                               const std::vector<Expr>& ins, const SMem& sh) const {
    using R = ConsumeResult<SMem>;
    std::vector<R> out;
    if (ins.empty() || (r == "cell" && ins.size() != 2) || (r != "cell" && ins.size() != 1) ||
        (r != "cell" && r != "bound" && r != "freed"))
      return {{Outcome::Abort, O, {}, sh, e_true(), e_true()}};
    const Expr& eb = ins[0];
    std::vector<Expr> keys = keys_of(sh);
    for (const auto& [k, blk] : sh) {
      Expr hit = e_eq(eb, k);
      if (r == "freed") {
        if (!blk.freed) {
          out.push_back({Outcome::Abort, O, {}, sh, e_true(), hit});
          continue;
        }
        SMem frame = sh;
        frame.erase(k);
        out.push_back({Outcome::Ok, O, {}, frame, e_true(), e_and(hit, not_in_keys(k, keys_of(frame)))});
        continue;
      }
      if (blk.freed) {
        out.push_back({Outcome::Abort, O, {lit_str("UseAfterFree"), eb}, sh, e_true(), hit});
        continue;
      }
      if (r == "bound") {
        if (!blk.bound) {
          out.push_back({Outcome::Abort, O, {lit_str("MissingBound"), eb}, sh, e_true(), hit});
          continue;
        }
        SMem frame = sh;
        frame[k].bound.reset();
        Expr extra = tidy(frame, k);
        out.push_back({Outcome::Ok, O, {*blk.bound}, frame, e_true(), e_and(hit, extra)});
        continue;
      }
      const Expr& eo = ins[1];
      for (const auto& [o, v] : blk.cells) {
        SMem frame = sh;
        frame[k].cells.erase(o);
        Expr extra = tidy(frame, k);
        out.push_back({Outcome::Ok, O, {v}, frame, e_true(), conj({hit, e_eq(eo, o), extra})});
      }
      out.push_back({Outcome::Abort, O, {lit_str("MissingCell"), eb, eo}, sh, e_true(),
                     e_and(hit, not_in_keys(eo, offsets_of(blk)))});
    }
    out.push_back({Outcome::Abort, O, {lit_str("MissingBlock"), eb}, sh, e_true(), not_in_keys(eb, keys)});
    return out;
  }

  std::vector<ProduceResult<SMem>> produce_res(const std::string& r, const std::vector<Expr>& ins,
                                               const std::vector<Expr>& outs, const SMem& sh) const {
    std::vector<ProduceResult<SMem>> res;
    if (ins.empty()) return res;
    const Expr& eb = ins[0];
    std::vector<Expr> keys;
    for (const auto& [k, blk] : sh) keys.push_back(k);
    Expr fresh_block = e_and(e_intype(eb, Kind::Nat), not_in_keys(eb, keys));
    if (r == "freed") {
      if (ins.size() != 1 || !outs.empty() || sh.count(eb)) return res;
      SMem h2 = sh;
      h2[eb] = SBlock{true, {}, std::nullopt};
      res.push_back({h2, fresh_block});
      return res;
    }
    if (r == "cell" && ins.size() == 2 && outs.size() == 1) {
      const Expr& eo = ins[1];
      for (const auto& [k, blk] : sh) {
        if (blk.freed || blk.cells.count(eo)) continue;
        SMem h2 = sh;
        h2[k].cells[eo] = outs[0];
        Expr pc = conj({e_eq(eb, k), e_intype(eo, Kind::Nat), not_in_keys(eo, offsets_of(blk))});
        if (blk.bound) pc = e_and(pc, e_lt(eo, *blk.bound));
        res.push_back({h2, pc});
      }
      if (!sh.count(eb)) {
        SMem h2 = sh;
        h2[eb] = SBlock{false, {{eo, outs[0]}}, std::nullopt};
        res.push_back({h2, e_and(fresh_block, e_intype(eo, Kind::Nat))});
      }
      return res;
    }
    if (r == "bound" && ins.size() == 1 && outs.size() == 1) {
      const Expr& n = outs[0];
      for (const auto& [k, blk] : sh) {
        if (blk.freed || blk.bound) continue;
        SMem h2 = sh;
        h2[k].bound = n;
        std::vector<Expr> pc{e_eq(eb, k), e_intype(n, Kind::Nat)};
        for (const auto& [o, v] : blk.cells) pc.push_back(e_lt(o, n));
        res.push_back({h2, conj(pc)});
      }
      if (!sh.count(eb)) {
        SMem h2 = sh;
        h2[eb] = SBlock{false, {}, n};
        res.push_back({h2, e_and(fresh_block, e_intype(n, Kind::Nat))});
      }
    }
    return res;
  }

  std::vector<Assertion> fixes(const FixView& v) const {
    std::string tag = payload_tag(v.payload);
    if (tag == "MissingCell" && v.payload.size() == 3)
      return {a_res("cell", {v.payload[1], v.payload[2]}, {lvar("fix_v")})};
    if (tag == "MissingBlock" && v.payload.size() == 2 && (v.action == "lookup" || v.action == "mutate") &&
        v.args.size() >= 2)
      return {a_res("cell", {v.payload[1], v.args[1]}, {lvar("fix_v")})};
    return {};
  }

  Assertion to_assertion(const SMem& sh) const {
    std::vector<Assertion> parts;
    for (const auto& [k, blk] : sh) {
      if (blk.freed) {
        parts.push_back(a_res("freed", {k}, {}));
        continue;
      }
      for (const auto& [o, v] : blk.cells) parts.push_back(a_res("cell", {k, o}, {v}));
      if (blk.bound) parts.push_back(a_res("bound", {k}, {*blk.bound}));
    }
    return a_star_all(parts);
  }

  std::set<std::string> lvars(const SMem& sh) const {
    std::set<std::string> r;
    for (const auto& [k, blk] : sh) {
      collect_lvars(k, r);
      for (const auto& [o, v] : blk.cells) {
        collect_lvars(o, r);
        collect_lvars(v, r);
      }
      if (blk.bound) collect_lvars(*blk.bound, r);
    }
    return r;
  }

  SMem gen_symbolic(Rng& rng, const Bounds& b, const std::vector<Expr>& pool) const {
    SMem sh;
    size_t n = pick(rng, b.max_cells + 1);
    auto any = [&]() { return pool[pick(rng, pool.size())]; };
    for (size_t i = 0; i < n; ++i) {
      Expr k = coin(rng, 50) ? lit_nat(pick(rng, std::max<size_t>(b.max_addresses, 1))) : any();
      unsigned r = static_cast<unsigned>(pick(rng, 10));
      if (r == 0) {
        if (!sh.count(k)) sh[k] = SBlock{true, {}, std::nullopt};
        continue;
      }
      if (sh.count(k) && sh[k].freed) continue;
      SBlock& blk = sh[k];
      if (r <= 2 && !blk.bound) blk.bound = coin(rng, 60) ? lit_nat(1 + pick(rng, 2)) : any();
      else blk.cells[coin(rng, 60) ? lit_nat(pick(rng, 2)) : any()] = any();
      if (blk.cells.empty() && !blk.bound) blk.bound = lit_nat(1);
    }
    return sh;
  }

  nlohmann::json to_json(const SMem& sh) const {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& [k, blk] : sh) {
      if (blk.freed) {
        j.push_back({{"block", polyheap::show(k)}, {"value", "FREED"}});
        continue;
      }
      nlohmann::json cells = nlohmann::json::array();
      for (const auto& [o, v] : blk.cells) cells.push_back({polyheap::show(o), polyheap::show(v)});
      j.push_back({{"block", polyheap::show(k)},
                   {"cells", cells},
                   {"bound", blk.bound ? nlohmann::json(polyheap::show(*blk.bound)) : nlohmann::json()}});
    }
    return j;
  }
};

}  // namespace polyheap
