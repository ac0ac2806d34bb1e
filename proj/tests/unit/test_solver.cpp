#include "common.hpp"
#include "polyheap/solver_check.hpp"

using namespace polyheap;
using namespace polyheap::test;

namespace {

std::vector<Expr> pc(std::initializer_list<const char*> cs) {
  std::vector<Expr> out;
  for (const char* c : cs) out.push_back(E(c));
  return out;
}

}  // namespace

TEST_CASE("check_sat examples") {
  Solver sv;
  auto t = sv.check_sat({e_true()});
  CHECK(t.k == SatKind::Sat);
  CHECK(t.model.empty());
  CHECK(sv.check_sat(pc({"#x in nat", "#x < 0"})).k == SatKind::Unsat);
  auto one = sv.check_sat(pc({"1 <= #x", "#x <= 2", "#x = 1"}));
  REQUIRE(one.k == SatKind::Sat);
  CHECK(one.model.at("x") == Value::nat(1));
  CHECK(sv.check_sat({e_false()}).k == SatKind::Unsat);
}

TEST_CASE("check_sat: unbound variables are undefined") {
  Solver sv;
  // #b = #b forces #b to be defined but is satisfiable.
  auto v = sv.check_sat(pc({"#b = #b"}));
  REQUIRE(v.k == SatKind::Sat);
  CHECK(v.model.count("b") == 1);
  // (#a = 1) || !(#a in Val) is satisfied by leaving #a unbound only if Or is
  // lenient; under the strict operators it needs #a = 1.
  auto w = sv.check_sat(pc({"(#a = 1) || !(#a in Val)"}));
  REQUIRE(w.k == SatKind::Sat);
  CHECK(w.model.at("a") == Value::nat(1));
}

TEST_CASE("check_sat: case splits on disjunctions") {
  Solver sv;
  auto v = sv.check_sat(pc({"(#x = 1) || (#x = 2)", "!(#x = 1)"}));
  REQUIRE(v.k == SatKind::Sat);
  CHECK(v.model.at("x") == Value::nat(2));
  CHECK(sv.check_sat(pc({"(#x = 1) || (#x = 2)", "!(#x = 1)", "!(#x = 2)"})).k == SatKind::Unsat);
}

TEST_CASE("entails examples") {
  Solver sv;
  CHECK(sv.entails(pc({"#x = 1"}), E("#x = 1")) == Tri::Yes);
  CHECK(sv.entails(pc({"1 <= #x", "#x <= 2"}), E("#x = 1")) == Tri::No);
  CHECK(sv.entails(pc({"#x = #y", "#y = 3"}), E("#x = 3")) == Tri::Yes);
}

TEST_CASE("export_smtlib is deterministic") {
  auto p = pc({"#x in nat", "#x < 0", "#y = [1, \"a\"]"});
  std::string a = export_smtlib(p), b = export_smtlib(p);
  CHECK(a == b);
  std::vector<Expr> rev(p.rbegin(), p.rend());
  CHECK(export_smtlib(rev) == a);
  CHECK(a.find("(check-sat)") != std::string::npos);
  CHECK(a.find("|lv_x|") != std::string::npos);
}

TEST_CASE("randomized solver self-check") {
  Bounds b;
  SolverCheck sc(b);
  auto r = sc.run(500, 7);
  CHECK(r.pass());
  CHECK(r.trials == 500);
  CHECK(r.sat > 0);
  CHECK(r.unsat > 0);
}
