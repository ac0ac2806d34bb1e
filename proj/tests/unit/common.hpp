#pragma once

#include <doctest.h>

#include <fstream>
#include <sstream>
#include <string>

#include "polyheap/analyses.hpp"
#include "polyheap/harness.hpp"
#include "polyheap/parser.hpp"
#include "polyheap/pretty.hpp"
#include "polyheap/registry.hpp"

namespace polyheap::test {

inline std::string fixture(const std::string& name) {
  std::ifstream f(std::string(POLYHEAP_FIXTURES) + "/" + name, std::ios::binary);
  REQUIRE_MESSAGE(f.good(), "missing fixture " << name);
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

inline Expr E(const std::string& s) { return parse_expr(s); }
inline Assertion A(const std::string& s) { return parse_assertion(s); }

template <class R>
size_t count_outcome(const R& rs, Outcome o) {
  size_t n = 0;
  for (const auto& r : rs)
    if (r.o == o) ++n;
  return n;
}

}  // namespace polyheap::test
