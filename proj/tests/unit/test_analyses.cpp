#include "common.hpp"

using namespace polyheap;
using namespace polyheap::test;

namespace {

template <class M>
std::vector<VerifyReport> verify_all(const M& m, const Program& p) {
  Solver sv;
  std::vector<VerifyReport> out;
  for (const auto& [fid, i] : p.spec_order) out.push_back(verify_ox(m, p.funcs, p.specs, p.specs.at(fid)[i], i, p.preds, sv));
  return out;
}

std::vector<BugReport> bugs_of(const std::string& src, const std::string& fid) {
  Program p = parse_program(src);
  Bounds b;
  Solver sv(b);
  return biabduct(Linear(), p.funcs, p.specs, fid, p.preds, sv, b);
}

}  // namespace

TEST_CASE("verify: identity and lookup specs") {
  Program p = parse_program(
      "func f(x) { skip; return x }\n"
      "func g(x) { y := lookup(x); return y }\n"
      "spec SL f(x) { requires: emp; ensures_ok: ret = #x }\n"
      "spec SL g(x) { requires: #x |-> #v; ensures_ok: #x |-> #v * ret = #v }\n");
  for (const auto& r : verify_all(Linear(), p)) {
    CAPTURE(r.spec);
    CHECK(r.verdict == VVerdict::Verified);
  }
}

TEST_CASE("verify: a wrong post fails with a trace") {
  Program p = parse_program(
      "func g(x) { y := lookup(x); return y }\n"
      "spec SL g(x) { requires: #x |-> #v; ensures_ok: #x |-> 0 * ret = #v }\n");
  auto rs = verify_all(Linear(), p);
  REQUIRE(rs.size() == 1);
  CHECK(rs[0].verdict == VVerdict::Failed);
  REQUIRE_FALSE(rs[0].failing.empty());
  CHECK_FALSE(rs[0].failing[0].trace.empty());
}

TEST_CASE("verify: fixtures for each OX model") {
  auto all_verified = [](const auto& m, const char* file) {
    Program p = parse_program(fixture(file));
    for (const auto& r : verify_all(m, p)) {
      CAPTURE(file);
      CAPTURE(r.spec);
      CHECK(r.verdict == VVerdict::Verified);
    }
  };
  all_verified(Linear(), "verify_linear.ph");
  all_verified(Linear(), "sample.ph");
  all_verified(Frac(), "verify_frac.ph");
  all_verified(BlockOffset(), "verify_block.ph");
  all_verified(Objects(), "verify_objects.ph");
}

TEST_CASE("verify: refuses models that are not OX-sound") {
  Program p = parse_program(fixture("verify_linear.ph"));
  Solver sv;
  const auto& [fid, i] = p.spec_order[0];
  CHECK_THROWS_AS(verify_ox(Linear(Linear::Variant::Cut), p.funcs, p.specs, p.specs.at(fid)[i], i, p.preds, sv),
                  UnsupportedCapability);
}

TEST_CASE("biabduct: missing cell gets an anti-heap") {
  auto rs = bugs_of("func f() { x := lookup(1); return x }", "f");
  REQUIRE(rs.size() == 1);
  CHECK(rs[0].outcome == Outcome::Ok);
  CHECK(show(rs[0].anti).find("1 |-> #") == 0);
  CHECK(rs[0].replay == "replayed");
  CHECK(rs[0].isl == "Valid");
  CHECK(rs[0].spec.flavor == Flavor::ISL);
}

TEST_CASE("biabduct: use after free is a bug") {
  auto rs = bugs_of("func f() { free(1); y := lookup(1); return y }", "f");
  size_t bugs = 0;
  for (const auto& r : rs) {
    if (!r.is_bug()) continue;
    ++bugs;
    CHECK(show(r.spec.post_err).find("UseAfterFree") != std::string::npos);
    CHECK(r.replay == "replayed");
    CHECK(r.isl == "Valid");
  }
  CHECK(bugs == 1);
}

TEST_CASE("biabduct: skip has one report with an empty anti-heap") {
  auto rs = bugs_of("func f() { skip; return 0 }", "f");
  REQUIRE(rs.size() == 1);
  CHECK(rs[0].outcome == Outcome::Ok);
  CHECK(rs[0].anti->k == AK::Emp);
}

TEST_CASE("biabduct: refuses models without UX soundness or fixes") {
  Program p = parse_program(fixture("skip.ph"));
  Bounds b;
  Solver sv(b);
  const std::string fid = p.func_order[0];
  CHECK_THROWS_AS(biabduct(Linear(Linear::Variant::NoNeg), p.funcs, p.specs, fid, p.preds, sv, b), UnsupportedCapability);
  CHECK_THROWS_AS(biabduct(Chunks(), p.funcs, p.specs, fid, p.preds, sv, b), UnsupportedCapability);
}
