// Writes SMT-LIB exports of path conditions with the builtin solver's verdict
// in a leading comment, for replay under an external solver.
#include <filesystem>
#include <fstream>
#include <iostream>

#include "polyheap/parser.hpp"
#include "polyheap/solver_check.hpp"

using namespace polyheap;

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: smt_corpus <out-dir> [count] [seed]\n";
    return 2;
  }
  std::filesystem::path dir = argv[1];
  size_t count = argc > 2 ? std::stoul(argv[2]) : 1000;
  uint64_t seed = argc > 3 ? std::stoull(argv[3]) : 20240611;
  std::filesystem::create_directories(dir);

  std::vector<std::vector<Expr>> pcs = {
      {e_true()},
      {parse_expr("#x in nat"), parse_expr("#x < 0")},
      {parse_expr("1 <= #x"), parse_expr("#x <= 2"), parse_expr("#x = 1")},
      {parse_expr("#x = #y"), parse_expr("#y = 3"), parse_expr("!(#x = 3)")},
      {parse_expr("#b = #b")},
      {parse_expr("!(#a in Val)"), parse_expr("#a = 1")},
      {parse_expr("#l = [1, \"a\"]"), parse_expr("#l = [#p, #q]"), parse_expr("#q = \"a\"")},
      {parse_expr("rat(1, 2) < #r"), parse_expr("#r < rat(1)")},
      {parse_expr("#n - 2 = 0"), parse_expr("#n < 2")},
      {parse_expr("4 / #d = 2")},
  };
  Bounds b;
  SolverCheck sc(b);
  Rng rng(seed);
  while (pcs.size() < count) pcs.push_back(sc.gen_pc(rng));

  Solver sv(b);
  for (size_t i = 0; i < pcs.size(); ++i) {
    Verdict v = sv.check_sat(pcs[i]);
    std::ofstream f(dir / ("q" + std::to_string(i) + ".smt2"), std::ios::binary);
    f << "; builtin: " << sat_name(v.k) << "\n; pc: " << show_list(pcs[i]) << "\n" << export_smtlib(pcs[i]);
  }
  std::cout << pcs.size() << " queries written to " << dir.string() << "\n";
  return 0;
}
