#include "common.hpp"

using namespace polyheap;
using namespace polyheap::test;

namespace {

Bounds small() {
  Bounds b;
  b.values = Bounds::nats(4);
  b.max_cells = 2;
  b.max_addresses = 3;
  return b;
}

Linear::CMem heap(std::initializer_list<std::pair<uint64_t, uint64_t>> cells) {
  Linear::CMem h;
  for (auto [k, v] : cells) h[k] = Linear::Cell{false, Value::nat(v)};
  return h;
}

}  // namespace

TEST_CASE("holds: emp, points-to and star") {
  Linear m;
  PredTable none;
  Satisfaction<Linear> sat(m, none, small());
  CHECK(sat.holds({}, {}, m.empty(), a_emp()) == Holds::Yes);
  CHECK(sat.holds({}, {}, heap({{1, 5}}), A("1 |-> 5")) == Holds::Yes);
  CHECK(sat.holds({}, {}, heap({{1, 5}}), A("1 |-> 4")) == Holds::No);
  CHECK(sat.holds({}, {}, heap({{1, 5}, {2, 3}}), A("1 |-> 5 * 2 |-> 3")) == Holds::Yes);
  CHECK(sat.holds({}, {}, heap({{1, 5}, {2, 3}}), A("1 |-> 5")) == Holds::No);
  CHECK(sat.holds({}, {}, heap({{1, 5}, {2, 3}}), A("1 |-> 5 * TRUE")) == Holds::Yes);
}

TEST_CASE("holds: a 2-cell heap has 4 splittings") {
  Linear m;
  CHECK(m.splits(heap({{1, 5}, {2, 3}})).size() == 4);
}

TEST_CASE("holds: existentials and predicates") {
  Linear m;
  Program p = parse_program(fixture("sample.ph"));
  Satisfaction<Linear> sat(m, p.preds, small());
  CHECK(sat.holds({}, {}, heap({{1, 2}}), A("exists #v. 1 |-> #v")) == Holds::Yes);
  CHECK(sat.holds({}, {}, heap({{1, 2}}), a_pred("cellp", {lit_nat(1)}, {lit_nat(2)})) == Holds::Yes);
  CHECK(sat.holds({}, {}, heap({{1, 2}}), a_pred("cellp", {lit_nat(1)}, {lit_nat(3)})) == Holds::No);
}

TEST_CASE("internalize: locals are initialised to nil") {
  Program p = parse_program(
      "func f(x) { skip; return x }\n"
      "func g(x) { y := x; return y }\n"
      "spec SL f(x) { requires: emp; ensures_ok: ret = #x }\n"
      "spec SL g(x) { requires: emp; ensures_ok: ret = #x }\n");
  auto iof = internalize(p.specs.at("f")[0], p.funcs.at("f"), Mode::OX);
  CHECK(iof.locals.empty());
  auto iog = internalize(p.specs.at("g")[0], p.funcs.at("g"), Mode::OX);
  CHECK(iog.locals == std::vector<std::string>{"y"});
  CHECK(show(iog.pre).find("y = nil") != std::string::npos);
}

TEST_CASE("internalize: external shape is enforced") {
  CHECK_THROWS_AS(parse_program("func f(x) { skip; return x }\nspec SL f(x) { requires: x = 1; ensures_ok: emp }"),
                  ParseError);
  Program p = parse_program("func f(x) { skip; return x }\nspec SL f(x) { requires: emp; ensures_ok: ret = #x }");
  Quadruple q = p.specs.at("f")[0];
  q.pre = a_pure(e_eq(pvar("x"), lit_nat(1)));
  CHECK_THROWS_AS(internalize(q, p.funcs.at("f"), Mode::OX), ShapeError);
  FunctionDef other = p.funcs.at("f");
  other.id = "g";
  CHECK_THROWS_AS(internalize(p.specs.at("f")[0], other, Mode::OX), ShapeError);
}

TEST_CASE("bounded quadruple checks") {
  Linear m;
  ImplContext g;
  PredTable none;
  BoundedChecker<Linear> bc(m, g, none, small());

  auto skip = bc.check_cmd(Flavor::SL, a_emp(), c_skip(), a_emp(), a_false());
  CHECK(skip.verdict == QVerdict::Valid);
  CHECK(skip.pre_models > 0);

  auto miss = bc.check_cmd(Flavor::SL, a_emp(), parse_cmd("x := lookup(1)"), a_true(), a_false());
  CHECK(miss.verdict == QVerdict::CounterExample);

  auto fr = bc.check_cmd(Flavor::ISL, A("1 |-> #v"), parse_cmd("free(1)"), A("1 |-> FREED"), a_false());
  CHECK(fr.verdict == QVerdict::Valid);

  // An ISL post that is not reachable is refuted.
  auto bad = bc.check_cmd(Flavor::ISL, A("1 |-> #v"), parse_cmd("free(1)"), A("1 |-> 0"), a_false());
  CHECK(bad.verdict == QVerdict::CounterExample);
}

TEST_CASE("bounded function specs from the sample fixture") {
  Linear m;
  Program p = parse_program(fixture("sample.ph"));
  BoundedChecker<Linear> bc(m, p.funcs, p.preds, small());
  for (const auto& [fid, i] : p.spec_order) {
    CAPTURE(fid);
    auto r = bc.check(p.specs.at(fid)[i]);
    CHECK(r.verdict == QVerdict::Valid);
    CHECK(r.pre_models > 0);
  }
}
