#include "common.hpp"

using namespace polyheap;
using namespace polyheap::test;

namespace {

template <class M>
struct Sym {
  M m;
  SpecContext specs;
  PredTable preds;
  Solver sv;
  Engine<M> eng;
  explicit Sym(Mode mode, M model = M()) : m(std::move(model)), eng(m, specs, preds, sv, mode) {}

  template <class Rs>
  auto feasible_ok(const Rs& rs) {
    std::vector<typename Rs::value_type> out;
    for (const auto& r : rs)
      if (r.o == Outcome::Ok && eng.feasible(r.st.pc) >= 0) out.push_back(r);
    return out;
  }
};

template <class M>
Bounds tiny() {
  Bounds b;
  b.values = Bounds::nats(3);
  b.max_cells = 2;
  b.max_addresses = 2;
  b.seed = 11;
  return b;
}

}  // namespace

TEST_CASE("registry") {
  CHECK(model_names().size() == 8);
  for (const auto& n : model_names()) CHECK(with_model(n, false, [](const auto& m) { return m.name(); }) == n);
  CHECK_THROWS_AS(with_model("cheri", false, [](const auto&) { return 0; }), NotImplemented);
  CHECK_THROWS_AS(with_model("nope", false, [](const auto&) { return 0; }), UnknownModel);
  CHECK_THROWS_AS(with_model("frac", true, [](const auto&) { return 0; }), UnknownModel);
}

TEST_CASE("declared soundness per model") {
  auto d = [](const char* n) { return with_model(n, false, [](const auto& m) { return m.declared(); }); };
  CHECK((d("linear").ox && d("linear").ux));
  CHECK((d("linear-unique").ox && d("linear-unique").ux));
  CHECK((!d("linear-cut").ox && d("linear-cut").ux));
  CHECK((d("linear-ox").ox && !d("linear-ox").ux));
  CHECK((d("frac").ox && d("frac").ux));
  CHECK((d("block-offset").ox && d("block-offset").ux));
  CHECK((d("objects").ox && d("objects").ux));
  CHECK((d("chunks").ox && !d("chunks").ux));
}

TEST_CASE("pcm laws: linear passes, sabotaged linear fails") {
  Bounds b = tiny<Linear>();
  CHECK(Conformance<Linear>(Linear(), b).pcm(true, 0, b.seed).pass);
  auto bad = Conformance<Linear>(Linear(Linear::Variant::Exact, true), b).pcm(true, 0, b.seed);
  CHECK_FALSE(bad.pass);
  CHECK_FALSE(bad.witness.is_null());
}

TEST_CASE("frame: linear both modes, linear without freed tracking fails UX") {
  Bounds b = tiny<Linear>();
  Conformance<Linear> lin(Linear(), b);
  CHECK(lin.frame(Mode::OX, true, 0, b.seed).pass);
  CHECK(lin.frame(Mode::UX, true, 0, b.seed).pass);
  Conformance<Linear> noneg(Linear(Linear::Variant::NoNeg), b);
  CHECK(noneg.frame(Mode::OX, true, 0, b.seed).pass);
  // Refuting needs a frame holding the address that free released, so use
  // the default bounds.
  Bounds d;
  d.seed = 11;
  auto ux = Conformance<Linear>(Linear(Linear::Variant::NoNeg), d).frame(Mode::UX, false, 10000, d.seed);
  CHECK_FALSE(ux.pass);
  CHECK_FALSE(ux.witness.is_null());
}

TEST_CASE("action soundness: cut fails OX only") {
  Bounds b;
  b.seed = 11;
  Conformance<Linear> cut(Linear(Linear::Variant::Cut), b);
  CHECK_FALSE(cut.action(Mode::OX, 10000, b.seed).pass);
  CHECK(cut.action(Mode::UX, 2000, b.seed).pass);
  Conformance<Linear> lin(Linear(), b);
  CHECK(lin.action(Mode::OX, 2000, b.seed).pass);
  CHECK(lin.action(Mode::UX, 2000, b.seed).pass);
  CHECK(lin.cp(Mode::OX, 2000, b.seed).pass);
  CHECK(lin.cp(Mode::UX, 2000, b.seed).pass);
}

TEST_CASE("linear: lookup on {1 -> 5}") {
  Linear m;
  Linear::CMem h{{1, Linear::Cell{false, Value::nat(5)}}};
  auto rs = m.exec_action(h, "lookup", {Value::nat(1)}, {});
  REQUIRE(rs.size() == 1);
  CHECK(rs[0].o == Outcome::Ok);
  CHECK(rs[0].vals == std::vector<Value>{Value::nat(5)});

  Linear::SMem sh;
  sh[lit_nat(1)] = {false, lit_nat(5)};
  FreshGen fg;
  auto ss = m.sym_action(sh, "lookup", {lit_nat(1)}, fg);
  size_t ok = 0;
  for (const auto& r : ss)
    if (r.o == Outcome::Ok) {
      ++ok;
      CHECK(r.vals == std::vector<Expr>{lit_nat(5)});
      CHECK(fold(r.pc) == e_true());
    }
  CHECK(ok == 1);
}

TEST_CASE("linear variants: counts of lookup and consume branches") {
  for (auto v : {Linear::Variant::Exact, Linear::Variant::UniqueMatch, Linear::Variant::Cut}) {
    Sym<Linear> s(Mode::OX, Linear(v));
    SymState<Linear::SMem> st;
    st.mem[lit_nat(1)] = {false, lit_nat(1)};
    st.mem[lit_nat(2)] = {false, lit_nat(1)};
    add_pc(st.pc, E("1 <= #x"));
    add_pc(st.pc, E("#x <= 2"));
    st.store["x"] = lvar("x");
    st.store["y"] = lit(Value::nil());
    auto look = s.feasible_ok(s.eng.exec(Oracle(), st, parse_cmd("y := lookup(x)")));
    auto cons = s.feasible_ok(s.eng.consume(Mode::OX, Oracle(), a_res("points_to", {lvar("x")}, {lit_nat(1)}),
                                              {{"x", lvar("x")}}, st));
    CAPTURE(s.m.name());
    switch (v) {
      case Linear::Variant::Exact: CHECK(look.size() == 2); CHECK(cons.size() == 2); break;
      case Linear::Variant::UniqueMatch: CHECK(look.size() == 2); CHECK(cons.size() == 0); break;
      default: CHECK(look.size() == 1); CHECK(cons.size() == 1); break;
    }
  }
}

TEST_CASE("frac: partial consume leaves the remainder") {
  Sym<Frac> s(Mode::OX);
  SymState<Frac::SMem> st;
  st.mem[lit_nat(1)] = {false, lvar("v"), lit_rat(1)};
  auto rs = s.feasible_ok(
      s.eng.consume(Mode::OX, Oracle(), a_res("points_to", {lit_nat(1), lit_rat(1, 2)}, {lvar("o")}), {}, st));
  REQUIRE(rs.size() == 1);
  REQUIRE(rs[0].st.mem.size() == 1);
  const auto& c = rs[0].st.mem.at(lit_nat(1));
  CHECK(fold(c.q) == lit_rat(1, 2));
  CHECK(c.v == lvar("v"));
  CHECK(rs[0].th.at("o") == lvar("v"));
}

TEST_CASE("frac: writes need the full permission") {
  Frac m;
  Frac::CMem half{{1, Frac::Cell{false, Value::nat(5), *Rat::make(1, 2)}}};
  auto rs = m.exec_action(half, "mutate", {Value::nat(1), Value::nat(7)}, {});
  REQUIRE(rs.size() == 1);
  // A missing rights fragment is a miss so that frame composition can supply it.
  CHECK(rs[0].o == Outcome::Miss);
  CHECK(rs[0].vals[0] == payload("InsufficientPermission", {Value::nat(1)}));

  Frac::CMem full{{1, Frac::Cell{false, Value::nat(5), *Rat::make(1, 1)}}};
  auto ok = m.exec_action(full, "mutate", {Value::nat(1), Value::nat(7)}, {});
  REQUIRE(ok.size() == 1);
  CHECK(ok[0].o == Outcome::Ok);
  CHECK(ok[0].mem.at(1).v == Value::nat(7));
}

TEST_CASE("frac: two halves compose to a writable cell") {
  Frac m;
  Frac::CMem h1{{1, Frac::Cell{false, Value::nat(5), *Rat::make(1, 2)}}};
  auto h = m.compose(h1, h1);
  REQUIRE(h.has_value());
  CHECK(h->at(1).q == *Rat::make(1, 1));
  CHECK(m.exec_action(*h, "mutate", {Value::nat(1), Value::nat(7)}, {})[0].o == Outcome::Ok);
  Frac::CMem h3{{1, Frac::Cell{false, Value::nat(5), *Rat::make(2, 3)}}};
  CHECK_FALSE(m.compose(h1, h3).has_value());

  Sym<Frac> s(Mode::OX);
  SymState<Frac::SMem> st;
  st.store["r"] = lit(Value::nil());
  auto ps = s.eng.produce(A("points_to(1, rat(1, 2); 5) * points_to(1, rat(1, 2); 5)"), {}, st);
  REQUIRE(ps.size() == 1);
  auto rs = s.feasible_ok(s.eng.exec(Oracle(), ps[0].st, parse_cmd("mutate(1, 7)")));
  CHECK(rs.size() == 1);
}

TEST_CASE("frac: total permission never exceeds 1") {
  Frac m;
  Bounds b = tiny<Frac>();
  auto hs = m.enumerate(b);
  for (const auto& a : hs)
    for (const auto& c : hs)
      if (auto h = m.compose(a, c))
        for (const auto& [k, cell] : *h)
          if (!cell.freed) CHECK(cell.q <= *Rat::make(1, 1));
}

TEST_CASE("block-offset: new, well-formedness and composition") {
  BlockOffset m;
  auto rs = m.exec_action(m.empty(), "new", {Value::nat(2)}, AllocCtx{1, {}});
  REQUIRE(rs.size() == 1);
  CHECK(rs[0].o == Outcome::Ok);
  uint64_t n = rs[0].vals[0].as_nat();
  const auto& blk = rs[0].mem.at(n);
  CHECK(blk.cells == std::map<uint64_t, Value>{{0, Value::nil()}, {1, Value::nil()}});
  CHECK(blk.bound == std::optional<uint64_t>(2));

  BlockOffset::CMem emptyblk{{0, BlockOffset::Block{false, {}, std::nullopt}}};
  CHECK_FALSE(m.is_wf(emptyblk));

  BlockOffset::CMem a{{0, BlockOffset::Block{false, {{0, Value::nat(1)}, {1, Value::nat(3)}}, std::nullopt}}};
  BlockOffset::CMem c{{0, BlockOffset::Block{false, {{2, Value::boolean(false)}, {3, Value::nat(0)}}, 4}}};
  auto h = m.compose(a, c);
  REQUIRE(h.has_value());
  BlockOffset::Block want{false, {{0, Value::nat(1)}, {1, Value::nat(3)}, {2, Value::boolean(false)}, {3, Value::nat(0)}}, 4};
  CHECK(h->at(0) == want);
}

TEST_CASE("block-offset: lookup outcomes") {
  BlockOffset m;
  BlockOffset::CMem h{{0, BlockOffset::Block{false, {{0, Value::nat(1)}}, 2}}};
  CHECK(m.exec_action(h, "lookup", {Value::nat(0), Value::nat(0)}, {})[0].o == Outcome::Ok);
  CHECK(m.exec_action(h, "lookup", {Value::nat(0), Value::nat(3)}, {})[0].o == Outcome::Err);
  CHECK(m.exec_action(h, "lookup", {Value::nat(0), Value::nat(1)}, {})[0].o == Outcome::Miss);
  CHECK(m.exec_action(h, "lookup", {Value::nat(1), Value::nat(0)}, {})[0].o == Outcome::Miss);
}

TEST_CASE("block-offset: freeing a whole block is framed by an empty-block memory only if wf") {
  BlockOffset m;
  BlockOffset::CMem whole{{0, BlockOffset::Block{false, {{0, Value::nat(1)}}, 1}}};
  BlockOffset::CMem frame{{0, BlockOffset::Block{false, {}, std::nullopt}}};
  CHECK_FALSE(m.is_wf(frame));
  auto fr = m.exec_action(whole, "free", {Value::nat(0)}, {});
  REQUIRE(fr.size() == 1);
  CHECK(fr[0].o == Outcome::Ok);
}

TEST_CASE("objects: fresh objects, deleted fields and partial objects") {
  Objects m;
  auto rs = m.exec_action(m.empty(), "newObj", {}, AllocCtx{1, {}});
  REQUIRE(rs.size() == 1);
  Value o = rs[0].vals[0];
  auto lk = m.exec_action(rs[0].mem, "lookup", {o, Value::str("foo")}, {});
  REQUIRE(lk.size() == 1);
  CHECK(lk[0].o == Outcome::Ok);
  CHECK(lk[0].vals[0] == Value::nil());

  Objects::CMem h{{0, Objects::Obj{{{"foo", Value::nat(1)}}, std::nullopt}}};
  auto del = m.exec_action(h, "deleteField", {Value::nat(0), Value::str("foo")}, {});
  REQUIRE(del.size() == 1);
  CHECK(del[0].o == Outcome::Ok);
  auto after = m.exec_action(del[0].mem, "lookup", {Value::nat(0), Value::str("foo")}, {});
  CHECK(after[0].o == Outcome::Ok);
  CHECK(after[0].vals[0] == Value::nil());

  auto partial = m.exec_action(h, "lookup", {Value::nat(0), Value::str("bar")}, {});
  CHECK(partial[0].o == Outcome::Miss);
}

TEST_CASE("chunks: unique-match consumption") {
  Sym<Chunks> s(Mode::OX);
  SymState<Chunks::SMem> one;
  one.mem.pts[lvar("a")] = lit_nat(5);
  add_pc(one.pc, E("#a = 1"));
  auto r1 = s.eng.consume(Mode::OX, Oracle(), A("points_to(1; #o)"), {}, one);
  auto ok1 = s.feasible_ok(r1);
  REQUIRE(ok1.size() == 1);
  CHECK(ok1[0].st.mem.pts.empty());
  CHECK(ok1[0].th.at("o") == lit_nat(5));

  SymState<Chunks::SMem> two;
  two.mem.pts[lvar("a")] = lit_nat(5);
  two.mem.pts[lvar("b")] = lit_nat(6);
  add_pc(two.pc, E("#a in nat"));
  add_pc(two.pc, E("#b in nat"));
  auto r2 = s.eng.consume(Mode::OX, Oracle(), A("points_to(1; #o)"), {}, two);
  CHECK(s.feasible_ok(r2).empty());
  CHECK(count_outcome(r2, Outcome::Abort) >= 1);
}

TEST_CASE("chunks: OX conformance at small bounds") {
  Bounds b = tiny<Chunks>();
  b.trials = 500;
  Conformance<Chunks> cf(Chunks(), b);
  CHECK(cf.pcm(true, 0, b.seed).pass);
  CHECK(cf.frame(Mode::OX, true, 0, b.seed).pass);
  CHECK(cf.action(Mode::OX, 500, b.seed).pass);
  CHECK(cf.cp(Mode::OX, 500, b.seed).pass);
}
