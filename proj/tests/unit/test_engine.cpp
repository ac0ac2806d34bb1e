#include "common.hpp"

using namespace polyheap;
using namespace polyheap::test;

namespace {

using St = SymState<Linear::SMem>;

struct Fixture {
  Linear m;
  SpecContext specs;
  PredTable preds;
  Solver sv;
  Engine<Linear> eng;
  explicit Fixture(Mode mode, SpecContext s = {}) : specs(std::move(s)), eng(m, specs, preds, sv, mode) {}
};

// mem {1 -> 1, 2 -> 1}, 1 <= #x <= 2, x = #x
St two_cells() {
  St st;
  st.mem[lit_nat(1)] = {false, lit_nat(1)};
  st.mem[lit_nat(2)] = {false, lit_nat(1)};
  add_pc(st.pc, E("1 <= #x"));
  add_pc(st.pc, E("#x <= 2"));
  st.store["x"] = lvar("x");
  st.store["y"] = lit(Value::nil());
  return st;
}

bool has(const std::vector<Expr>& pc, const Expr& e) { return std::find(pc.begin(), pc.end(), e) != pc.end(); }

}  // namespace

TEST_CASE("sym_exec: skip") {
  Fixture f(Mode::OX);
  St st = two_cells();
  auto rs = f.eng.exec(Oracle(), st, c_skip());
  REQUIRE(rs.size() == 1);
  CHECK(rs[0].o == Outcome::Ok);
  CHECK(rs[0].st.pc == st.pc);
  CHECK(rs[0].st.store == st.store);
}

TEST_CASE("sym_exec: lookup branches over both matching cells") {
  Fixture f(Mode::OX);
  auto rs = f.eng.exec(Oracle(), two_cells(), parse_cmd("y := lookup(x)"));
  std::vector<const Engine<Linear>::Result*> ok;
  for (const auto& r : rs)
    if (r.o == Outcome::Ok && f.eng.feasible(r.st.pc) >= 0) ok.push_back(&r);
  REQUIRE(ok.size() == 2);
  bool saw1 = false, saw2 = false;
  for (const auto* r : ok) {
    saw1 = saw1 || has(r->st.pc, E("#x = 1"));
    saw2 = saw2 || has(r->st.pc, E("#x = 2"));
    CHECK(r->st.store.at("y") == lit_nat(1));
  }
  CHECK(saw1);
  CHECK(saw2);
}

TEST_CASE("sym_exec: SL specs are not usable in UX mode") {
  Program p = parse_program("func g(a) { skip; return a }\nspec SL g(a) { requires: emp; ensures_ok: ret = #a }");
  St st;
  st.store["x"] = lit_nat(1);
  st.store["r"] = lit(Value::nil());
  Cmd c = parse_cmd("r := g(x)", p);

  Fixture ox(Mode::OX, p.specs);
  auto ro = ox.eng.exec(Oracle(), st, c);
  CHECK(count_outcome(ro, Outcome::Ok) == 1);

  Fixture ux(Mode::UX, p.specs);
  auto ru = ux.eng.exec(Oracle(), st, c);
  CHECK(count_outcome(ru, Outcome::Ok) == 0);
  CHECK(count_outcome(ru, Outcome::Abort) == 1);
}

TEST_CASE("consume: emp and points-to") {
  Fixture f(Mode::UX);
  St st;
  CHECK(f.eng.consume(Mode::OX, Oracle(), a_emp(), {}, st).size() == 1);

  st.mem[lvar("e1")] = {false, lvar("e2")};
  auto rs = f.eng.consume(Mode::UX, Oracle(), a_res("points_to", {lvar("e")}, {lvar("o")}), {{"e", lvar("e")}}, st);
  size_t ok = 0;
  for (const auto& r : rs) {
    if (r.o != Outcome::Ok) continue;
    ++ok;
    CHECK(r.st.mem.empty());
    CHECK(r.th.at("o") == lvar("e2"));
    CHECK(has(r.st.pc, E("#e = #e1")));
  }
  CHECK(ok == 1);
}

TEST_CASE("consume: existentials are unsupported in UX") {
  Fixture f(Mode::UX);
  St st;
  auto rs = f.eng.consume(Mode::UX, Oracle(), A("exists #v. 1 |-> #v"), {}, st);
  REQUIRE(rs.size() == 1);
  CHECK(rs[0].o == Outcome::Abort);
  CHECK(show(rs[0].payload).find("UnsupportedInMode") != std::string::npos);
}

TEST_CASE("produce: emp, points-to and disjunction") {
  Fixture f(Mode::OX);
  St st;
  auto e = f.eng.produce(a_emp(), {}, st);
  REQUIRE(e.size() == 1);
  CHECK(e[0].st.mem.empty());

  auto p = f.eng.produce(A("1 |-> 2"), {}, st);
  REQUIRE(p.size() == 1);
  REQUIRE(p[0].st.mem.size() == 1);
  CHECK(p[0].st.mem.begin()->first == lit_nat(1));
  CHECK(p[0].st.mem.begin()->second.v == lit_nat(2));

  auto a = f.eng.produce(A("1 |-> 2"), {}, st), b = f.eng.produce(A("2 |-> 3"), {}, st);
  auto ab = f.eng.produce(A("1 |-> 2 \\/ 2 |-> 3"), {}, st);
  REQUIRE(ab.size() == a.size() + b.size());
  CHECK(ab[0].st.mem == a[0].st.mem);
  CHECK(ab[1].st.mem == b[0].st.mem);

  // A duplicate exclusive cell cannot be produced.
  CHECK(f.eng.produce(A("1 |-> 2 * 1 |-> 3"), {}, st).empty());
}

TEST_CASE("consume_pure: OX needs entailment, UX conjoins") {
  Fixture f(Mode::OX);
  St st = two_cells();
  CHECK(f.eng.consume_pure(Mode::OX, e_true(), st).size() == 1);
  CHECK(f.eng.consume_pure(Mode::OX, E("#x = 1"), st).empty());
  auto ux = f.eng.consume_pure(Mode::UX, E("#x = 1"), st);
  REQUIRE(ux.size() == 1);
  CHECK(ux[0].first == Outcome::Ok);
  CHECK(has(ux[0].second.pc, E("#x = 1")));
}

TEST_CASE("models_of") {
  Linear m;
  PredTable none;
  Bounds b;
  b.values = Bounds::nats(6);
  Satisfaction<Linear> sat(m, none, b);

  St empty;
  auto ms = models_of(sat, empty, {});
  REQUIRE(ms.size() == 1);
  CHECK(ms[0].mem.empty());

  St one;
  one.mem[lit_nat(1)] = {false, lvar("v")};
  add_pc(one.pc, E("#v = 5"));
  auto m1 = models_of(sat, one, {"v"});
  REQUIRE_FALSE(m1.empty());
  for (const auto& cm : m1) CHECK(cm.mem == Linear::CMem{{1, Linear::Cell{false, Value::nat(5)}}});

  St none_st;
  none_st.pc.push_back(e_false());
  CHECK(models_of(sat, none_st, {}).empty());
}

TEST_CASE("foo regression: predicates block naive miss soundness") {
  Bounds b;
  auto r = foo_regression(Linear(), b);
  CHECK(r.pass());
}
