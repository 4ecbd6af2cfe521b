// pfq/brute_solver.hpp - exhaustive satisfiability check for small formulas.
//
// The formula is first re-widthed. Names fixed by a defining equality
// `x = t` (where t only mentions free names or names fixed earlier) are
// computed rather than enumerated; every assignment of the remaining names is
// still tried, so the search stays exhaustive. The base contents of mem_arr
// are enumerated lazily: the first distinct addresses read from the base array
// are bound to numbered cells whose values are part of the search.
//
// Assignments are visited in lexicographic order (free names sorted by name,
// then array cells), so the first model found is the least one. When an
// assignment fails, the search jumps past all assignments that agree with it
// on every digit the failing evaluation actually read.
#pragma once

#include "pfq/formula.hpp"

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace pfq {

struct BruteOptions {
  unsigned width = 4;      // at most 6
  unsigned cells = 4;      // at most 8
  unsigned max_bits = 24;  // enumeration bound: 2^max_bits assignments
};

struct Model {
  std::map<std::string, Word> values;
  /// Base contents of mem_arr at the addresses the formula reads.
  std::map<Word, Word> memory;
};

struct BruteResult {
  bool sat = false;
  Model model;
  std::uint64_t assignments = 0; // assignments evaluated
};

/// Raised when a formula is outside the oracle's bounds.
class OracleBoundExceeded : public Error {
public:
  using Error::Error;
};

namespace detail {

/// The formula compiled to a flat node list in evaluation order. Shared
/// subterms are evaluated once per assignment.
class FormulaEvaluator {
public:
  FormulaEvaluator(const Formula &f, unsigned width) : width_(width), mask_(term::width_mask(width)) {
    for (const auto &d : f.declarations)
      if (d.sort.is_bv())
        var_index(d.name);

    std::set<std::string> candidates;
    for (const auto &a : f.assertions)
      if (auto x = defining_name(a))
        candidates.insert(*x);
    std::set<std::string> used, derived;
    for (const auto &a : f.assertions)
      collect_names(a, used);
    for (const auto &a : f.assertions) {
      auto x = defining_name(a);
      if (!x || derived.count(*x))
        continue;
      std::set<std::string> deps;
      collect_names(a->kids[1], deps);
      bool ok = !deps.count(*x);
      for (const auto &d : deps)
        if (d != kMemoryArray && candidates.count(d) && !derived.count(d))
          ok = false;
      if (ok) {
        derivations_.push_back({var_index(*x), compile(a->kids[1])});
        derived.insert(*x);
      }
    }
    derived_end_ = nodes_.size();
    for (const auto &a : f.assertions) {
      std::size_t n = compile(a);
      checks_.push_back({n, nodes_.size()});
    }
    for (const auto &d : f.declarations)
      if (d.sort.is_bv() && used.count(d.name) && !derived.count(d.name)) {
        free_.push_back(d.name);
      }
    std::sort(free_.begin(), free_.end());
    var_digit_.assign(var_names_.size(), kNone);
    for (const auto &n : free_) {
      var_digit_[var_index(n)] = free_vars_.size();
      free_vars_.push_back(var_index(n));
    }
    for (const auto &a : f.assertions)
      selects_ += count_op(a, TermOp::Select);
    vals_.assign(nodes_.size(), 0);
    vars_.assign(var_names_.size(), 0);
  }

  const std::vector<std::string> &free_names() const { return free_; }
  std::size_t select_count() const { return selects_; }

  /// Evaluates the formula with free name i set to free[i] and base array
  /// cells taken from `cells` in order of first read.
  bool holds(const std::vector<Word> &free, const std::vector<Word> &cells) {
    std::fill(vars_.begin(), vars_.end(), 0);
    touched_ = 0;
    for (std::size_t i = 0; i < free.size(); ++i)
      vars_[free_vars_[i]] = free[i] & mask_;
    cells_ = &cells;
    nslots_ = 0;
    std::size_t pc = 0;
    for (const auto &[var, node] : derivations_) {
      run(pc, node + 1);
      vars_[var] = vals_[node];
    }
    run(pc, derived_end_);
    for (const auto &[node, end] : checks_) {
      run(pc, end);
      if (vals_[node] == 0)
        return false;
    }
    return true;
  }

  /// One past the highest enumeration digit (free names, then cells) read by
  /// the last holds(). A failed evaluation fails for every assignment that
  /// agrees on digits below this.
  std::size_t touched() const { return touched_; }

  /// Same, with free values looked up by name (missing names are 0).
  bool holds(const std::map<std::string, Word> &values, const std::vector<Word> &cells) {
    std::vector<Word> free;
    for (const auto &n : free_) {
      auto it = values.find(n);
      free.push_back(it == values.end() ? 0 : it->second);
    }
    return holds(free, cells);
  }

  /// Values of all free and derived names, and the base cells read, after
  /// the last call to holds().
  Model model() const {
    Model m;
    for (std::size_t v : free_vars_)
      m.values[var_names_[v]] = vars_[v];
    for (const auto &[v, node] : derivations_)
      m.values[var_names_[v]] = vars_[v];
    for (std::size_t i = 0; i < nslots_; ++i)
      m.memory[slots_[i]] = (*cells_)[i];
    return m;
  }

private:
  struct Node {
    TermOp op;
    bool array_base = false;
    std::size_t a = 0, b = 0, c = 0; // kid nodes, or the variable for a name
    Word value = 0;
  };

  static constexpr std::size_t kNone = ~std::size_t{0};

  static std::optional<std::string> defining_name(const Term &a) {
    if (a->op == TermOp::Eq && a->kids[0]->op == TermOp::Name && a->kids[0]->sort.is_bv())
      return a->kids[0]->name;
    return std::nullopt;
  }

  std::size_t var_index(const std::string &name) {
    auto [it, fresh] = var_ids_.emplace(name, var_names_.size());
    if (fresh)
      var_names_.push_back(name);
    return it->second;
  }

  std::size_t compile(const Term &t) {
    auto it = ids_.find(t.get());
    if (it != ids_.end())
      return it->second;
    Node n{t->op};
    if (t->op == TermOp::Name) {
      if (t->sort.is_array())
        n.array_base = true;
      else
        n.a = var_index(t->name);
    } else if (t->op == TermOp::BoolLit || t->op == TermOp::BvLit) {
      n.value = t->value & mask_;
    } else {
      std::size_t k[3] = {0, 0, 0};
      for (std::size_t i = 0; i < t->kids.size(); ++i)
        k[i] = compile(t->kids[i]);
      n.a = k[0];
      n.b = k[1];
      n.c = k[2];
    }
    nodes_.push_back(n);
    ids_.emplace(t.get(), nodes_.size() - 1);
    return nodes_.size() - 1;
  }

  std::int64_t sgn(Word v) const {
    Word sign = Word{1} << (width_ - 1);
    return (v & sign) ? static_cast<std::int64_t>(v) - static_cast<std::int64_t>(mask_) - 1
                      : static_cast<std::int64_t>(v);
  }

  Word base_read(Word addr) {
    std::size_t base = free_vars_.size();
    for (std::size_t i = 0; i < nslots_; ++i)
      if (slots_[i] == addr) {
        touched_ = std::max(touched_, base + i + 1);
        return (*cells_)[i];
      }
    if (nslots_ >= cells_->size())
      throw OracleBoundExceeded("formula reads more than " + std::to_string(cells_->size()) +
                                " distinct array cells");
    if (slots_.size() <= nslots_)
      slots_.resize(nslots_ + 1);
    slots_[nslots_] = addr;
    touched_ = std::max(touched_, base + nslots_ + 1);
    return (*cells_)[nslots_++];
  }

  void run(std::size_t &pc, std::size_t end) {
    for (; pc < end; ++pc) {
      const Node &n = nodes_[pc];
      Word &out = vals_[pc];
      const Word a = vals_[n.a], b = vals_[n.b];
      switch (n.op) {
      case TermOp::BoolLit:
      case TermOp::BvLit:
        out = n.value;
        break;
      case TermOp::Name:
        if (n.array_base) {
          out = 0;
        } else {
          out = vars_[n.a];
          if (var_digit_[n.a] != kNone)
            touched_ = std::max(touched_, var_digit_[n.a] + 1);
        }
        break;
      case TermOp::Add:
        out = (a + b) & mask_;
        break;
      case TermOp::Sub:
        out = (a - b) & mask_;
        break;
      case TermOp::Mul:
        out = (a * b) & mask_;
        break;
      case TermOp::Slt:
        out = sgn(a) < sgn(b);
        break;
      case TermOp::Sle:
        out = sgn(a) <= sgn(b);
        break;
      case TermOp::Sgt:
        out = sgn(a) > sgn(b);
        break;
      case TermOp::Sge:
        out = sgn(a) >= sgn(b);
        break;
      case TermOp::Eq:
        out = a == b;
        break;
      case TermOp::Distinct:
        out = a != b;
        break;
      case TermOp::And:
        out = a && b;
        break;
      case TermOp::Or:
        out = a || b;
        break;
      case TermOp::Not:
        out = !a;
        break;
      case TermOp::Ite:
        out = a ? b : vals_[n.c];
        break;
      case TermOp::Select: {
        std::size_t arr = n.a;
        while (nodes_[arr].op == TermOp::Store && vals_[nodes_[arr].b] != b)
          arr = nodes_[arr].a;
        out = nodes_[arr].op == TermOp::Store ? vals_[nodes_[arr].c] : base_read(b);
        break;
      }
      case TermOp::Store:
        out = 0;
        break;
      }
    }
  }

  unsigned width_;
  Word mask_;
  std::vector<Node> nodes_;
  std::map<const TermNode *, std::size_t> ids_;
  std::map<std::string, std::size_t> var_ids_;
  std::vector<std::string> var_names_;
  std::vector<std::pair<std::size_t, std::size_t>> derivations_; // (variable, node)
  std::size_t derived_end_ = 0;
  std::vector<std::pair<std::size_t, std::size_t>> checks_; // (node, end of its code)
  std::vector<std::string> free_;
  std::vector<std::size_t> free_vars_;
  std::vector<std::size_t> var_digit_;
  std::size_t selects_ = 0;

  std::vector<Word> vals_;
  std::vector<Word> vars_;
  const std::vector<Word> *cells_ = nullptr;
  std::vector<Word> slots_;
  std::size_t nslots_ = 0;
  std::size_t touched_ = 0;
};

} // namespace detail

inline BruteResult brute_solve(const Formula &input, const BruteOptions &opts = {}) {
  if (opts.width < 1 || opts.width > 6)
    throw OracleBoundExceeded("oracle width must lie in [1, 6]");
  if (opts.cells > 8)
    throw OracleBoundExceeded("oracle supports at most 8 array cells");
  check_formula(input);
  Formula f = rewidth(input, opts.width);
  detail::FormulaEvaluator ev(f, opts.width);

  std::size_t slots = std::min<std::size_t>(opts.cells, ev.select_count());
  std::size_t digits = ev.free_names().size() + slots;
  std::size_t bits = digits * opts.width;
  if (bits > opts.max_bits)
    throw OracleBoundExceeded("search space of 2^" + std::to_string(bits) +
                              " assignments exceeds the bound of 2^" +
                              std::to_string(opts.max_bits));

  const Word base = Word{1} << opts.width;
  const std::uint64_t total = std::uint64_t{1} << bits;
  const std::size_t nfree = ev.free_names().size();
  BruteResult res;
  std::vector<Word> free(nfree, 0);
  std::vector<Word> cells(slots, 0);
  for (std::uint64_t n = 0; n < total;) {
    // Digit 0 (the first free name) is the most significant.
    std::uint64_t rest = n;
    for (std::size_t d = digits; d-- > 0;) {
      Word v = rest % base;
      rest /= base;
      if (d < nfree)
        free[d] = v;
      else
        cells[d - nfree] = v;
    }
    ++res.assignments;
    if (ev.holds(free, cells)) {
      res.sat = true;
      res.model = ev.model();
      return res;
    }
    // Skip every assignment that only differs in digits the failure never
    // looked at.
    unsigned shift = static_cast<unsigned>((digits - ev.touched()) * opts.width);
    if (shift >= 64 || (n >> shift) + 1 > (total - 1) >> shift)
      break;
    n = ((n >> shift) + 1) << shift;
  }
  return res;
}

/// True when `values` for the free names satisfy `f` at `width`, with defined
/// names computed and mem_arr zero everywhere (the interpreter's initial
/// memory). Supports up to 64 distinct base reads.
inline bool satisfies(const Formula &f, const std::map<std::string, Word> &values,
                      unsigned width) {
  detail::FormulaEvaluator ev(rewidth(f, width), width);
  std::vector<Word> zeros(64, 0);
  return ev.holds(values, zeros);
}

} // namespace pfq
