// Random QF_ABV formulas for property tests.
#pragma once

#include "pfq/formula.hpp"

#include <random>

namespace pfq::testing {

struct FormulaOptions {
  unsigned width = 4;
  unsigned names = 2;
  bool memory = true;
  unsigned max_depth = 3;
  unsigned max_assertions = 4;
};

class FormulaGenerator {
public:
  explicit FormulaGenerator(std::uint64_t seed, FormulaOptions opts = {})
      : rng_(seed), opts_(opts) {}

  Formula next() {
    Formula f;
    for (unsigned i = 0; i < opts_.names; ++i)
      f.declarations.push_back({"x" + std::to_string(i), Sort::bitvec(opts_.width)});
    if (opts_.memory)
      f.declarations.push_back({kMemoryArray, Sort::array(opts_.width, opts_.width)});
    unsigned n = 1 + pick(opts_.max_assertions);
    for (unsigned i = 0; i < n; ++i)
      f.assertions.push_back(boolean(opts_.max_depth));
    return f;
  }

  std::mt19937_64 &rng() { return rng_; }

private:
  unsigned pick(unsigned n) { return static_cast<unsigned>(rng_() % n); }

  Term name() {
    return term::name("x" + std::to_string(pick(opts_.names)), Sort::bitvec(opts_.width));
  }

  Term bitvec(unsigned depth) {
    unsigned choices = depth == 0 ? 2 : (opts_.memory ? 7 : 6);
    switch (pick(choices)) {
    case 0:
      return term::bv(rng_() & term::width_mask(opts_.width), opts_.width);
    case 1:
      return name();
    case 2:
      return term::add(bitvec(depth - 1), bitvec(depth - 1));
    case 3:
      return term::sub(bitvec(depth - 1), bitvec(depth - 1));
    case 4:
      return term::mul(bitvec(depth - 1), bitvec(depth - 1));
    case 5:
      return term::ite(boolean(depth - 1), bitvec(depth - 1), bitvec(depth - 1));
    default:
      return term::select(array(depth - 1), bitvec(depth - 1));
    }
  }

  Term array(unsigned depth) {
    Term base = term::name(kMemoryArray, Sort::array(opts_.width, opts_.width));
    if (depth == 0 || pick(3) == 0)
      return base;
    return term::store(array(depth - 1), bitvec(depth - 1), bitvec(depth - 1));
  }

  Term boolean(unsigned depth) {
    static constexpr TermOp kCompare[] = {TermOp::Slt, TermOp::Sle, TermOp::Sgt, TermOp::Sge};
    unsigned choices = depth == 0 ? 1 : 7;
    switch (pick(choices)) {
    case 0:
      return term::eq(bitvec(depth == 0 ? 0 : depth - 1), bitvec(depth == 0 ? 0 : depth - 1));
    case 1:
      return term::distinct(bitvec(depth - 1), bitvec(depth - 1));
    case 2:
      return term::compare(kCompare[pick(4)], bitvec(depth - 1), bitvec(depth - 1));
    case 3:
      return term::land(boolean(depth - 1), boolean(depth - 1));
    case 4:
      return term::lor(boolean(depth - 1), boolean(depth - 1));
    case 5:
      return term::lnot(boolean(depth - 1));
    default:
      return term::boolean(pick(4) != 0);
    }
  }

  std::mt19937_64 rng_;
  FormulaOptions opts_;
};

} // namespace pfq::testing
