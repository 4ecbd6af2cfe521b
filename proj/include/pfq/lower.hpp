// pfq/lower.hpp - from path conditions to formulas, and prefix splitting.
#pragma once

#include "pfq/formula.hpp"
#include "pfq/pathcond.hpp"

#include <set>

namespace pfq {

/// One assertion per conjunct, in order. Definitions become `name = term`,
/// branch conditions are asserted in the direction taken, and a store step
/// asserts the read-over-write fact `select(store(m, a, v), a) = v` on the
/// store chain so far. Symbolic inputs, fresh undef names and every defined
/// name are declared; mem_arr is declared when memory is touched.
inline Formula lower(const PathCondition &pc) {
  Formula f;
  Sort bv = Sort::bitvec(pc.bit_width);
  Sort arr = Sort::array(pc.bit_width, pc.bit_width);
  std::set<std::string> declared;
  auto declare = [&](const std::string &name) {
    if (declared.insert(name).second)
      f.declarations.push_back({name, bv});
  };
  for (const auto &s : pc.symbolic_inputs)
    declare(s);
  for (const auto &s : pc.fresh)
    declare(s);

  Term memory = term::name(kMemoryArray, arr);
  bool uses_memory = false;
  for (const auto &c : pc.conjuncts) {
    switch (c.kind) {
    case Conjunct::Kind::Def:
      declare(c.name);
      f.assertions.push_back(term::eq(term::name(c.name, bv), c.term));
      break;
    case Conjunct::Kind::Branch:
      f.assertions.push_back(c.holds());
      break;
    case Conjunct::Kind::Store:
      memory = term::store(memory, c.index, c.value);
      f.assertions.push_back(term::eq(term::select(memory, c.index), c.value));
      uses_memory = true;
      break;
    }
  }
  for (const auto &a : f.assertions)
    if (count_op(a, TermOp::Select) || count_op(a, TermOp::Store))
      uses_memory = true;
  if (uses_memory)
    f.declarations.push_back({kMemoryArray, arr});
  check_formula(f);
  return f;
}

struct PrefixSeries {
  std::vector<PathCondition> prefixes;
  std::vector<Formula> sections;
  std::vector<std::size_t> sizes; // conjuncts per section
};

/// Section i of k (1-based) holds the first round(i*n/k) conjuncts, rounding
/// halves up.
inline std::vector<std::size_t> prefix_sizes(std::size_t n, std::size_t k) {
  if (k == 0 || k > n)
    throw Error("section count " + std::to_string(k) + " must lie in [1, " + std::to_string(n) +
                "]");
  std::vector<std::size_t> sizes;
  for (std::size_t i = 1; i <= k; ++i)
    sizes.push_back((2 * i * n + k) / (2 * k));
  return sizes;
}

inline PrefixSeries split_prefixes(const PathCondition &pc, std::size_t k) {
  PrefixSeries out;
  out.sizes = prefix_sizes(pc.size(), k);
  for (std::size_t m : out.sizes) {
    PathCondition p = pc;
    p.conjuncts.resize(m);
    out.sections.push_back(lower(p));
    out.prefixes.push_back(std::move(p));
  }
  return out;
}

} // namespace pfq
