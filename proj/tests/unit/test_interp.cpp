#include "common.hpp"

using namespace polyheap;
using namespace polyheap::test;

TEST_CASE("run: skip leaves the state unchanged") {
  Linear m;
  ImplContext g;
  Interpreter<Linear> in(m, g);
  auto rr = in.run({}, m.empty(), c_skip(), 4);
  REQUIRE(rr.results.size() == 1);
  CHECK(rr.results[0].o == Outcome::Ok);
  CHECK(rr.results[0].s.empty());
  CHECK(rr.results[0].mem.empty());
}

TEST_CASE("run: lookup hit and miss") {
  Linear m;
  ImplContext g;
  Interpreter<Linear> in(m, g);
  Linear::CMem h{{1, Linear::Cell{false, Value::nat(5)}}};
  auto hit = in.run({{"x", Value::nat(0)}}, h, parse_cmd("x := lookup(1)"), 4);
  REQUIRE(hit.results.size() == 1);
  CHECK(hit.results[0].o == Outcome::Ok);
  CHECK(hit.results[0].s.at("x") == Value::nat(5));
  CHECK(hit.results[0].mem == h);

  auto miss = in.run({{"x", Value::nat(0)}}, m.empty(), parse_cmd("x := lookup(1)"), 4);
  REQUIRE(miss.results.size() == 1);
  CHECK(miss.results[0].o == Outcome::Miss);
  CHECK(miss.results[0].s.at("err") == payload("MissingCell", {Value::nat(1)}));
}

TEST_CASE("run: use after free is an error") {
  Linear m;
  ImplContext g;
  Interpreter<Linear> in(m, g);
  Linear::CMem h{{1, Linear::Cell{false, Value::nat(5)}}};
  auto rr = in.run({{"y", Value::nil()}}, h, parse_cmd("free(1); y := lookup(1)"), 4);
  REQUIRE(rr.results.size() == 1);
  CHECK(rr.results[0].o == Outcome::Err);
  CHECK(rr.results[0].s.at("err") == payload("UseAfterFree", {Value::nat(1)}));
}

TEST_CASE("run: new enumerates the allocation choices") {
  Linear m;
  ImplContext g;
  Interpreter<Linear> in(m, g, AllocCtx{3, {}});
  auto rr = in.run({{"x", Value::nil()}}, m.empty(), parse_cmd("x := new()"), 4);
  CHECK(rr.results.size() == 3);
  CHECK(count_outcome(rr.results, Outcome::Ok) == 3);
}

TEST_CASE("run: expression and guard errors") {
  Linear m;
  ImplContext g;
  Interpreter<Linear> in(m, g);
  auto div = in.run({{"x", Value::nil()}}, m.empty(), parse_cmd("x := 1 / 0"), 4);
  REQUIRE(div.results.size() == 1);
  CHECK(div.results[0].o == Outcome::Err);
  CHECK(div.results[0].s.at("err") == Value::str("ExprEval"));
  auto guard = in.run({{"x", Value::nat(1)}}, m.empty(), parse_cmd("if (x) { skip } else { skip }"), 4);
  REQUIRE(guard.results.size() == 1);
  CHECK(guard.results[0].s.at("err") == Value::str("Type"));
}

TEST_CASE("run_function: return, arity and propagated miss") {
  Linear m;
  Program p = parse_program(
      "func f(x) { skip; return x }\n"
      "func inner(a) { y := lookup(a); return y }\n"
      "func outer(a) { r := inner(a); return r }\n");
  Interpreter<Linear> in(m, p.funcs);
  auto ok = in.run_function("f", {Value::nat(7)}, m.empty(), 4);
  REQUIRE(ok.size() == 1);
  CHECK(ok[0].o == Outcome::Ok);
  CHECK(ok[0].v == Value::nat(7));

  auto arity = in.run_function("f", {}, m.empty(), 4);
  REQUIRE(arity.size() == 1);
  CHECK(arity[0].o == Outcome::Err);
  CHECK(arity[0].v == Value::str("FuncArgsLength"));

  auto miss = in.run_function("outer", {Value::nat(2)}, m.empty(), 4);
  REQUIRE(miss.size() == 1);
  CHECK(miss[0].o == Outcome::Miss);
  CHECK(miss[0].v == payload("MissingCell", {Value::nat(2)}));
}

TEST_CASE("run_function: the call budget bounds recursion") {
  Linear m;
  Program p = parse_program("func loop(x) { r := loop(x); return r }");
  Interpreter<Linear> in(m, p.funcs);
  bool exhausted = false;
  auto rs = in.run_function("loop", {Value::nat(0)}, m.empty(), 5, &exhausted);
  CHECK(rs.empty());
  CHECK(exhausted);
}
