#pragma once

#include <algorithm>
#include <functional>

#include <json.hpp>

#include "../memmodel.hpp"

namespace polyheap {

// JS-style objects: object id -> (field -> value or unset, optional domain).
// A domain lists every field the object may have; fields outside it are
// known to be absent.
class Objects {
 public:
  struct Obj {
    std::map<std::string, std::optional<Value>> props;  // nullopt: unset
    std::optional<std::set<std::string>> dom;
    friend bool operator==(const Obj&, const Obj&) = default;
  };
  using CMem = std::map<uint64_t, Obj>;

  struct SProp {
    bool unset = false;
    Expr v;
    friend bool operator==(const SProp& a, const SProp& b) {
      return a.unset == b.unset && (a.unset || a.v == b.v);
    }
  };
  struct SObj {
    std::map<Expr, SProp> props;
    std::optional<std::vector<Expr>> dom;
    friend bool operator==(const SObj&, const SObj&) = default;
  };
  using SMem = std::map<Expr, SObj>;

  std::string name() const { return "objects"; }
  Soundness declared() const { return {true, true}; }
  bool has_fixes() const { return true; }
  std::vector<Value> extra_values() const { return {Value::str("f"), Value::str("g")}; }

  std::vector<ActionSig> actions() const {
    return {{"newObj", 0, 1}, {"lookup", 2, 1}, {"mutate", 3}, {"deleteField", 2}};
  }
  std::vector<ResourceSig> resources() const { return {{"prop", 2, 1}, {"unset", 2, 0}, {"domain", 1, 1}}; }

  static bool obj_wf(const Obj& o) {
    if (o.props.empty() && !o.dom) return false;
    if (o.dom)
      for (const auto& [f, v] : o.props)
        if (!o.dom->count(f)) return false;
    return true;
  }
  bool is_wf(const CMem& h) const {
    for (const auto& [k, o] : h)
      if (!obj_wf(o)) return false;
    return true;
  }
  CMem empty() const { return {}; }

  std::optional<CMem> compose(const CMem& a, const CMem& b) const {
    CMem r = a;
    for (const auto& [k, ob] : b) {
      auto it = r.find(k);
      if (it == r.end()) {
        r[k] = ob;
        continue;
      }
      Obj& x = it->second;
      if (x.dom && ob.dom) return std::nullopt;
      for (const auto& [f, v] : ob.props)
        if (!x.props.emplace(f, v).second) return std::nullopt;
      if (ob.dom) x.dom = ob.dom;
      if (!obj_wf(x)) return std::nullopt;
    }
    return r;
  }

  std::vector<CActResult<CMem>> exec_action(const CMem& h, const std::string& act, const std::vector<Value>& args,
                                            const AllocCtx& alloc) const {
    using R = CActResult<CMem>;
    auto type_err = R{Outcome::Err, h, {payload("Type")}};
    if (act == "newObj") {
      if (!args.empty()) return {type_err};
      std::vector<R> out;
      for (auto n : alloc.candidates([&](uint64_t a) { return h.count(a) > 0; })) {
        CMem h2 = h;
        h2[n] = Obj{{}, std::set<std::string>{}};
        out.push_back({Outcome::Ok, h2, {Value::nat(n)}});
      }
      return out;
    }
    if (act != "lookup" && act != "mutate" && act != "deleteField")
      return {{Outcome::Err, h, {payload("UnknownAction")}}};
    size_t arity = act == "mutate" ? 3 : 2;
    if (args.size() != arity || !args[0].is_nat() || !args[1].is_str()) return {type_err};
    auto it = h.find(args[0].as_nat());
    if (it == h.end()) return {{Outcome::Miss, h, {payload("MissingObject", {args[0]})}}};
    const Obj& ob = it->second;
    const std::string& f = args[1].as_str();
    auto p = ob.props.find(f);
    bool known_absent = p == ob.props.end() && ob.dom && !ob.dom->count(f);
    if (p == ob.props.end() && !known_absent)
      return {{Outcome::Miss, h, {payload("MissingField", {args[0], args[1]})}}};
    if (act == "lookup") {
      if (known_absent || !p->second) return {{Outcome::Ok, h, {Value::nil()}}};
      return {{Outcome::Ok, h, {*p->second}}};
    }
    CMem h2 = h;
    Obj& o2 = h2[it->first];
    if (act == "mutate") {
      o2.props[f] = args[2];
      if (known_absent) o2.dom->insert(f);
    } else if (!known_absent) {
      o2.props[f] = std::nullopt;
    }
    return {{Outcome::Ok, h2, {}}};
  }

  std::vector<std::pair<CMem, CMem>> splits(const CMem& h) const {
    struct Part {
      uint64_t o;
      bool dom;
      std::string f;
    };
    std::vector<Part> parts;
    for (const auto& [k, ob] : h) {
      for (const auto& [f, v] : ob.props) parts.push_back({k, false, f});
      if (ob.dom) parts.push_back({k, true, ""});
    }
    std::vector<std::pair<CMem, CMem>> out;
    size_t n = parts.size();
    if (n > 16) return out;
    for (size_t mask = 0; mask < (size_t{1} << n); ++mask) {
      CMem a, b;
      for (size_t i = 0; i < n; ++i) {
        CMem& side = (mask >> i) & 1 ? a : b;
        const Part& p = parts[i];
        const Obj& src = h.at(p.o);
        if (p.dom) side[p.o].dom = src.dom;
        else side[p.o].props[p.f] = src.props.at(p.f);
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
      Obj& x = it->second;
      for (const auto& [f, v] : pb.props) {
        auto p = x.props.find(f);
        if (p == x.props.end() || !(p->second == v)) return std::nullopt;
        x.props.erase(p);
      }
      if (pb.dom) {
        if (x.dom != pb.dom) return std::nullopt;
        x.dom.reset();
      }
      if (x.props.empty() && !x.dom) r.erase(it);
    }
    if (!is_wf(r)) return std::nullopt;
    return r;
  }

  static std::optional<std::set<std::string>> as_field_set(const Value& d) {
    if (!d.is_list()) return std::nullopt;
    std::set<std::string> s;
    for (const auto& x : d.as_list()) {
      if (!x.is_str() || !s.insert(x.as_str()).second) return std::nullopt;
    }
    return s;
  }
  static Value field_list(const std::set<std::string>& s) {
    Value::ListT l;
    for (const auto& f : s) l.push_back(Value::str(f));
    return Value::list(std::move(l));
  }

  std::optional<CMem> resource_mem(const std::string& r, const std::vector<Value>& in,
                                   const std::vector<Value>& out) const {
    if (in.empty() || !in[0].is_nat()) return std::nullopt;
    uint64_t o = in[0].as_nat();
    if (r == "prop" && in.size() == 2 && in[1].is_str() && out.size() == 1)
      return CMem{{o, Obj{{{in[1].as_str(), out[0]}}, std::nullopt}}};
    if (r == "unset" && in.size() == 2 && in[1].is_str() && out.empty())
      return CMem{{o, Obj{{{in[1].as_str(), std::nullopt}}, std::nullopt}}};
    if (r == "domain" && in.size() == 1 && out.size() == 1) {
      auto d = as_field_set(out[0]);
      if (!d) return std::nullopt;
      return CMem{{o, Obj{{}, *d}}};
    }
    return std::nullopt;
  }

  bool holds_resource(const CMem& h, const std::string& r, const std::vector<Value>& in,
                      const std::vector<Value>& out) const {
    auto m = resource_mem(r, in, out);
    return m && *m == h;
  }

  static std::vector<std::string> fields() { return {"f", "g"}; }

  // Objects 0..max_addresses-1 over fields f and g; every property and
  // domain counts toward max_cells.
  std::vector<CMem> enumerate(const Bounds& b) const {
    struct Choice {
      int kind;  // 0 prop, 1 unset, 2 domain
      std::string f;
      Value v;
      std::set<std::string> d;
    };
    std::vector<Choice> choices;
    for (const auto& f : fields()) {
      for (const auto& v : b.values) choices.push_back({0, f, v, {}});
      choices.push_back({1, f, Value::nil(), {}});
    }
    for (const auto& d : std::vector<std::set<std::string>>{{}, {"f"}, {"g"}, {"f", "g"}})
      choices.push_back({2, "", Value::nil(), d});
    std::vector<std::pair<uint64_t, size_t>> slots;
    for (uint64_t o = 0; o < b.max_addresses; ++o)
      for (size_t i = 0; i < choices.size(); ++i) slots.push_back({o, i});
    std::vector<CMem> out;
    std::function<void(size_t, CMem, size_t)> rec = [&](size_t i, CMem h, size_t used) {
      if (i == slots.size()) {
        if (is_wf(h)) out.push_back(h);
        return;
      }
      rec(i + 1, h, used);
      if (used >= b.max_cells) return;
      auto [o, ci] = slots[i];
      const Choice& c = choices[ci];
      Obj& x = h[o];
      if (c.kind == 2) {
        if (x.dom) return;
        x.dom = c.d;
      } else {
        if (x.props.count(c.f)) return;
        x.props[c.f] = c.kind == 0 ? std::optional<Value>(c.v) : std::nullopt;
      }
      rec(i + 1, h, used + 1);
    };
    rec(0, CMem{}, 0);
    return out;
  }

  CMem generate(Rng& rng, const Bounds& b) const {
    auto fs = fields();
    for (;;) {
      CMem h;
      size_t n = pick(rng, b.max_cells + 1);
      for (size_t i = 0; i < n; ++i) {
        Obj& x = h[pick(rng, std::max<size_t>(b.max_addresses, 1))];
        unsigned r = static_cast<unsigned>(pick(rng, 10));
        if (r <= 1) {
          std::set<std::string> d;
          for (const auto& f : fs)
            if (coin(rng, 50)) d.insert(f);
          x.dom = d;
        } else if (r == 2) {
          x.props[fs[pick(rng, fs.size())]] = std::nullopt;
        } else {
          x.props[fs[pick(rng, fs.size())]] = b.values[pick(rng, b.values.size())];
        }
      }
      if (is_wf(h)) return h;
    }
  }

  std::vector<CMem> shrink(const CMem& h, const Bounds& b) const {
    std::vector<CMem> out;
    for (const auto& [k, ob] : h) {
      CMem h2 = h;
      h2.erase(k);
      out.push_back(h2);
      for (const auto& [f, v] : ob.props) {
        CMem h3 = h;
        h3[k].props.erase(f);
        if (is_wf(h3)) out.push_back(h3);
        if (v && !b.values.empty() && !(*v == b.values[0])) {
          CMem h4 = h;
          h4[k].props[f] = b.values[0];
          out.push_back(h4);
        }
      }
      if (ob.dom) {
        CMem h3 = h;
        h3[k].dom.reset();
        if (is_wf(h3)) out.push_back(h3);
      }
    }
    return out;
  }

  nlohmann::json to_json(const CMem& h) const {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [k, ob] : h) {
      nlohmann::json props = nlohmann::json::object();
      for (const auto& [f, v] : ob.props) props[f] = v ? v->show() : "UNSET";
      j[std::to_string(k)] = {{"props", props}, {"domain", ob.dom ? nlohmann::json(*ob.dom) : nlohmann::json()}};
    }
    return j;
  }
  std::string show(const CMem& h) const {
    std::string s = "{";
    bool first = true;
    for (const auto& [k, ob] : h) {
      s += (first ? "" : ", ") + std::to_string(k) + " |-> ({";
      first = false;
      bool f2 = true;
      for (const auto& [f, v] : ob.props) {
        s += (f2 ? "" : ", ") + f + ": " + (v ? v->show() : std::string("UNSET"));
        f2 = false;
      }
      s += "}, ";
      if (ob.dom) s += "Some " + field_list(*ob.dom).show();
      else s += "None";
      s += ")";
    }
    return s + "}";
  }

  // symbolic

  SMem sempty() const { return {}; }

  // Literal field lists are kept sorted so equal sets compare equal.
  static std::vector<Expr> canon_dom(std::vector<Expr> d) {
    bool all_lit = std::all_of(d.begin(), d.end(), [](const Expr& e) { return e->op == Op::Lit; });
    if (all_lit) std::sort(d.begin(), d.end(), [](const Expr& a, const Expr& b) { return compare(a, b) < 0; });
    return d;
  }

  static std::optional<std::vector<Expr>> list_parts(const Expr& e) {
    if (e->op == Op::List) return e->kids;
    if (e->op == Op::Lit && e->lit.is_list()) {
      std::vector<Expr> r;
      for (const auto& v : e->lit.as_list()) r.push_back(lit(v));
      return r;
    }
    return std::nullopt;
  }

  std::optional<CMem> concretize(const Interp& th, const SMem& sh) const {
    static const Store s;
    CMem h;
    for (const auto& [k, so] : sh) {
      auto kv = eval(k, th, s);
      if (!kv || !kv->is_nat() || h.count(kv->as_nat())) return std::nullopt;
      Obj ob;
      for (const auto& [f, p] : so.props) {
        auto fv = eval(f, th, s);
        if (!fv || !fv->is_str() || ob.props.count(fv->as_str())) return std::nullopt;
        if (p.unset) {
          ob.props[fv->as_str()] = std::nullopt;
          continue;
        }
        auto vv = eval(p.v, th, s);
        if (!vv) return std::nullopt;
        ob.props[fv->as_str()] = *vv;
      }
      if (so.dom) {
        std::set<std::string> d;
        for (const auto& f : *so.dom) {
          auto fv = eval(f, th, s);
          if (!fv || !fv->is_str() || !d.insert(fv->as_str()).second) return std::nullopt;
        }
        ob.dom = d;
      }
      if (!obj_wf(ob)) return std::nullopt;
      h[kv->as_nat()] = std::move(ob);
    }
    return h;
  }

  static std::vector<Expr> keys_of(const SMem& sh) {
    std::vector<Expr> ks;
    for (const auto& [k, o] : sh) ks.push_back(k);
    return ks;
  }
  static std::vector<Expr> fields_of(const SObj& o) {
    std::vector<Expr> fs;
    for (const auto& [f, p] : o.props) fs.push_back(f);
    return fs;
  }

  std::vector<SActResult<SMem>> sym_action(const SMem& sh, const std::string& act, const std::vector<Expr>& args,
                                           FreshGen& fresh) const {
    using R = SActResult<SMem>;
    std::vector<R> out;
    if (act == "newObj") {
      if (!args.empty()) return {{Outcome::Err, sh, e_true(), {sym_payload("Type")}}};
      Expr l = fresh.var();
      SMem h2 = sh;
      h2[l] = SObj{{}, std::vector<Expr>{}};
      return {{Outcome::Ok, h2, e_inval(l), {l}}};
    }
    if (act != "lookup" && act != "mutate" && act != "deleteField")
      return {{Outcome::Err, sh, e_true(), {sym_payload("UnknownAction")}}};
    size_t arity = act == "mutate" ? 3 : 2;
    if (args.size() != arity) return {{Outcome::Err, sh, e_true(), {sym_payload("Type")}}};
    const Expr& eo = args[0];
    const Expr& ef = args[1];
    Expr typed = e_and(e_intype(eo, Kind::Nat), e_intype(ef, Kind::Str));
    out.push_back({Outcome::Err, sh, e_not(typed), {sym_payload("Type")}});
    out.push_back({Outcome::Miss, sh, e_and(typed, not_in_keys(eo, keys_of(sh))), {sym_payload("MissingObject", {eo})}});
    for (const auto& [k, ob] : sh) {
      Expr hit = e_and(e_eq(eo, k), e_intype(ef, Kind::Str));
      for (const auto& [f, p] : ob.props) {
        Expr at = e_and(hit, e_eq(ef, f));
        if (act == "lookup") {
          out.push_back({Outcome::Ok, sh, at, {p.unset ? lit(Value::nil()) : p.v}});
          continue;
        }
        SMem h2 = sh;
        h2[k].props[f] = act == "mutate" ? SProp{false, args[2]} : SProp{true, Expr()};
        out.push_back({Outcome::Ok, h2, p.unset ? at : e_and(at, e_inval(p.v)), {}});
      }
      Expr absent = e_and(hit, not_in_keys(ef, fields_of(ob)));
      Expr missing = absent;
      if (ob.dom) {
        Expr outside = e_and(absent, not_in_keys(ef, *ob.dom));
        missing = e_and(absent, in_keys(ef, *ob.dom));
        if (act == "lookup") {
          out.push_back({Outcome::Ok, sh, outside, {lit(Value::nil())}});
        } else if (act == "mutate") {
          SMem h2 = sh;
          h2[k].props[ef] = SProp{false, args[2]};
          auto d = *ob.dom;
          d.push_back(ef);
          h2[k].dom = canon_dom(std::move(d));
          out.push_back({Outcome::Ok, h2, outside, {}});
        } else {
          out.push_back({Outcome::Ok, sh, outside, {}});
        }
      }
      out.push_back({Outcome::Miss, sh, missing, {sym_payload("MissingField", {eo, ef})}});
    }
    return out;
  }

  static Expr tidy(SMem& frame, const Expr& k) {
    auto it = frame.find(k);
    if (it == frame.end() || !it->second.props.empty() || it->second.dom) return e_true();
    frame.erase(it);
    return not_in_keys(k, keys_of(frame));
  }

  std::vector<ConsumeResult<SMem>> consume_res(Mode, const Oracle& O, const std::string& r,
                                               const std::vector<Expr>& ins, const SMem& sh) const {
    using R = ConsumeResult<SMem>;
    std::vector<R> out;
    bool field_res = r == "prop" || r == "unset";
    if (ins.empty() || (field_res && ins.size() != 2) || (r == "domain" && ins.size() != 1) || (!field_res && r != "domain"))
      return {{Outcome::Abort, O, {}, sh, e_true(), e_true()}};
    const Expr& eo = ins[0];
    for (const auto& [k, ob] : sh) {
      Expr hit = e_eq(eo, k);
      if (r == "domain") {
        if (!ob.dom) {
          out.push_back({Outcome::Abort, O, {}, sh, e_true(), hit});
          continue;
        }
        SMem frame = sh;
        frame[k].dom.reset();
        Expr extra = tidy(frame, k);
        out.push_back({Outcome::Ok, O, {e_list(*ob.dom)}, frame, e_true(), e_and(hit, extra)});
        continue;
      }
      const Expr& ef = ins[1];
      bool want_unset = r == "unset";
      for (const auto& [f, p] : ob.props) {
        Expr at = e_and(hit, e_eq(ef, f));
        if (p.unset != want_unset) {
          out.push_back({Outcome::Abort, O, {}, sh, e_true(), at});
          continue;
        }
        SMem frame = sh;
        frame[k].props.erase(f);
        Expr extra = tidy(frame, k);
        std::vector<Expr> outs;
        if (!want_unset) outs.push_back(p.v);
        out.push_back({Outcome::Ok, O, outs, frame, e_true(), e_and(at, extra)});
      }
      out.push_back({Outcome::Abort, O, {lit_str("MissingField"), eo, ef}, sh, e_true(),
                     e_and(hit, not_in_keys(ef, fields_of(ob)))});
    }
    out.push_back({Outcome::Abort, O, {lit_str("MissingObject"), eo}, sh, e_true(), not_in_keys(eo, keys_of(sh))});
    return out;
  }

  std::vector<ProduceResult<SMem>> produce_res(const std::string& r, const std::vector<Expr>& ins,
                                               const std::vector<Expr>& outs, const SMem& sh) const {
    std::vector<ProduceResult<SMem>> res;
    if (ins.empty()) return res;
    const Expr& eo = ins[0];
    std::vector<Expr> keys;
    for (const auto& [k, ob] : sh) keys.push_back(k);
    Expr fresh_obj = e_and(e_intype(eo, Kind::Nat), not_in_keys(eo, keys));
    if ((r == "prop" && ins.size() == 2 && outs.size() == 1) || (r == "unset" && ins.size() == 2 && outs.empty())) {
      const Expr& ef = ins[1];
      SProp p = r == "prop" ? SProp{false, outs[0]} : SProp{true, Expr()};
      for (const auto& [k, ob] : sh) {
        if (ob.props.count(ef)) continue;
        SMem h2 = sh;
        h2[k].props[ef] = p;
        Expr pc = conj({e_eq(eo, k), e_intype(ef, Kind::Str), not_in_keys(ef, fields_of(ob))});
        if (ob.dom) pc = e_and(pc, in_keys(ef, *ob.dom));
        res.push_back({h2, pc});
      }
      if (!sh.count(eo)) {
        SMem h2 = sh;
        h2[eo] = SObj{{{ef, p}}, std::nullopt};
        res.push_back({h2, e_and(fresh_obj, e_intype(ef, Kind::Str))});
      }
      return res;
    }
    if (r == "domain" && ins.size() == 1 && outs.size() == 1) {
      auto d = list_parts(outs[0]);
      if (!d) return res;
      std::vector<Expr> dom = canon_dom(*d);
      for (const auto& [k, ob] : sh) {
        if (ob.dom) continue;
        SMem h2 = sh;
        h2[k].dom = dom;
        std::vector<Expr> pc{e_eq(eo, k)};
        for (const auto& [f, p] : ob.props) pc.push_back(in_keys(f, dom));
        res.push_back({h2, conj(pc)});
      }
      if (!sh.count(eo)) {
        SMem h2 = sh;
        h2[eo] = SObj{{}, dom};
        res.push_back({h2, fresh_obj});
      }
    }
    return res;
  }

  std::vector<Assertion> fixes(const FixView& v) const {
    std::string tag = payload_tag(v.payload);
    Expr o, f;
    if (tag == "MissingField" && v.payload.size() == 3) {
      o = v.payload[1];
      f = v.payload[2];
    } else if (tag == "MissingObject" && v.payload.size() == 2 && v.args.size() >= 2) {
      o = v.payload[1];
      f = v.args[1];
    } else {
      return {};
    }
    return {a_res("prop", {o, f}, {lvar("fix_v")}), a_res("unset", {o, f}, {})};
  }

  Assertion to_assertion(const SMem& sh) const {
    std::vector<Assertion> parts;
    for (const auto& [k, ob] : sh) {
      for (const auto& [f, p] : ob.props)
        parts.push_back(p.unset ? a_res("unset", {k, f}, {}) : a_res("prop", {k, f}, {p.v}));
      if (ob.dom) parts.push_back(a_res("domain", {k}, {e_list(*ob.dom)}));
    }
    return a_star_all(parts);
  }

  std::set<std::string> lvars(const SMem& sh) const {
    std::set<std::string> r;
    for (const auto& [k, ob] : sh) {
      collect_lvars(k, r);
      for (const auto& [f, p] : ob.props) {
        collect_lvars(f, r);
        if (!p.unset) collect_lvars(p.v, r);
      }
      if (ob.dom)
        for (const auto& f : *ob.dom) collect_lvars(f, r);
    }
    return r;
  }

  SMem gen_symbolic(Rng& rng, const Bounds& b, const std::vector<Expr>& pool) const {
    SMem sh;
    auto fs = fields();
    auto any = [&]() { return pool[pick(rng, pool.size())]; };
    size_t n = pick(rng, b.max_cells + 1);
    for (size_t i = 0; i < n; ++i) {
      Expr k = coin(rng, 50) ? lit_nat(pick(rng, std::max<size_t>(b.max_addresses, 1))) : any();
      SObj& ob = sh[k];
      unsigned r = static_cast<unsigned>(pick(rng, 10));
      if (r <= 1 && !ob.dom) {
        std::vector<Expr> d;
        for (const auto& f : fs)
          if (coin(rng, 50)) d.push_back(lit_str(f));
        ob.dom = canon_dom(d);
      } else {
        Expr f = coin(rng, 70) ? lit_str(fs[pick(rng, fs.size())]) : any();
        ob.props[f] = r == 2 ? SProp{true, Expr()} : SProp{false, any()};
      }
    }
    return sh;
  }

  nlohmann::json to_json(const SMem& sh) const {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& [k, ob] : sh) {
      nlohmann::json props = nlohmann::json::array();
      for (const auto& [f, p] : ob.props) props.push_back({polyheap::show(f), p.unset ? "UNSET" : polyheap::show(p.v)});
      nlohmann::json dom;
      if (ob.dom) {
        dom = nlohmann::json::array();
        for (const auto& f : *ob.dom) dom.push_back(polyheap::show(f));
      }
      j.push_back({{"object", polyheap::show(k)}, {"props", props}, {"domain", dom}});
    }
    return j;
  }
};

}  // namespace polyheap
