// pfq/term.hpp - QF_ABV terms.
//
// Terms are immutable trees shared through shared_ptr. Sorts are booleans,
// fixed-width bitvectors and arrays from bitvectors to bitvectors. Equality
// is structural.
#pragma once

#include "pfq/ir.hpp"

#include <functional>
#include <memory>
#include <set>
#include <string>
#include <vector>

namespace pfq {

struct Sort {
  enum class Kind : std::uint8_t { Bool, BitVec, Array };
  Kind kind = Kind::Bool;
  unsigned width = 0;       // bitvector width, or array element width
  unsigned index_width = 0; // arrays only

  static Sort boolean() { return {}; }
  static Sort bitvec(unsigned w) { return {Kind::BitVec, w, 0}; }
  static Sort array(unsigned index, unsigned elem) { return {Kind::Array, elem, index}; }

  bool is_bool() const { return kind == Kind::Bool; }
  bool is_bv() const { return kind == Kind::BitVec; }
  bool is_array() const { return kind == Kind::Array; }
  bool operator==(const Sort &) const = default;
};

inline std::string to_string(const Sort &s) {
  switch (s.kind) {
  case Sort::Kind::Bool:
    return "Bool";
  case Sort::Kind::BitVec:
    return "BitVec(" + std::to_string(s.width) + ")";
  case Sort::Kind::Array:
    return "Array(" + std::to_string(s.index_width) + "," + std::to_string(s.width) + ")";
  }
  return "?";
}

enum class TermOp : std::uint8_t {
  BoolLit,
  BvLit,
  Name,
  Add,
  Sub,
  Mul,
  Slt,
  Sle,
  Sgt,
  Sge,
  Eq,
  Distinct,
  And,
  Or,
  Not,
  Ite,
  Select,
  Store,
};

class TermNode;
using Term = std::shared_ptr<const TermNode>;

class TermNode {
public:
  TermOp op;
  Sort sort;
  Word value = 0;   // BvLit value (masked), BoolLit 0/1
  std::string name; // Name only
  std::vector<Term> kids;

  TermNode(TermOp op, Sort sort, Word value, std::string name, std::vector<Term> kids)
      : op(op), sort(sort), value(value), name(std::move(name)), kids(std::move(kids)) {}
};

/// Raised when operands of a term constructor have the wrong sorts.
class SortError : public Error {
public:
  using Error::Error;
};

namespace term {

inline Word width_mask(unsigned w) { return w >= 64 ? ~Word{0} : (Word{1} << w) - 1; }

inline Term make(TermOp op, Sort sort, std::vector<Term> kids, Word value = 0,
                 std::string name = {}) {
  return std::make_shared<const TermNode>(op, sort, value, std::move(name), std::move(kids));
}

inline Term boolean(bool b) { return make(TermOp::BoolLit, Sort::boolean(), {}, b ? 1 : 0); }
inline Term bv(Word value, unsigned width) {
  if (width == 0 || width > 64)
    throw SortError("bitvector width must be in 1..64");
  return make(TermOp::BvLit, Sort::bitvec(width), {}, value & width_mask(width));
}
inline Term name(std::string n, Sort sort) {
  return make(TermOp::Name, sort, {}, 0, std::move(n));
}

inline void expect_bv_pair(const Term &a, const Term &b, const char *what) {
  if (!a->sort.is_bv() || !(a->sort == b->sort))
    throw SortError(std::string(what) + " needs two bitvectors of equal width, got " +
                    to_string(a->sort) + " and " + to_string(b->sort));
}
inline void expect_bool(const Term &a, const char *what) {
  if (!a->sort.is_bool())
    throw SortError(std::string(what) + " needs a boolean, got " + to_string(a->sort));
}

inline Term arith(TermOp op, Term a, Term b) {
  expect_bv_pair(a, b, "arithmetic");
  Sort s = a->sort;
  return make(op, s, {std::move(a), std::move(b)});
}
inline Term add(Term a, Term b) { return arith(TermOp::Add, std::move(a), std::move(b)); }
inline Term sub(Term a, Term b) { return arith(TermOp::Sub, std::move(a), std::move(b)); }
inline Term mul(Term a, Term b) { return arith(TermOp::Mul, std::move(a), std::move(b)); }

inline Term compare(TermOp op, Term a, Term b) {
  expect_bv_pair(a, b, "comparison");
  return make(op, Sort::boolean(), {std::move(a), std::move(b)});
}

// Equality is restricted to bitvectors; nothing here compares booleans or
// whole arrays.
inline Term eq(Term a, Term b) {
  expect_bv_pair(a, b, "equality");
  return make(TermOp::Eq, Sort::boolean(), {std::move(a), std::move(b)});
}
inline Term distinct(Term a, Term b) {
  expect_bv_pair(a, b, "distinct");
  return make(TermOp::Distinct, Sort::boolean(), {std::move(a), std::move(b)});
}

inline Term logic(TermOp op, Term a, Term b) {
  expect_bool(a, "and/or");
  expect_bool(b, "and/or");
  return make(op, Sort::boolean(), {std::move(a), std::move(b)});
}
inline Term land(Term a, Term b) { return logic(TermOp::And, std::move(a), std::move(b)); }
inline Term lor(Term a, Term b) { return logic(TermOp::Or, std::move(a), std::move(b)); }
inline Term lnot(Term a) {
  expect_bool(a, "not");
  return make(TermOp::Not, Sort::boolean(), {std::move(a)});
}

inline Term ite(Term c, Term t, Term e) {
  expect_bool(c, "ite condition");
  if (!(t->sort == e->sort) || t->sort.is_array())
    throw SortError("ite arms must share a non-array sort");
  Sort s = t->sort;
  return make(TermOp::Ite, s, {std::move(c), std::move(t), std::move(e)});
}

inline Term select(Term arr, Term idx) {
  if (!arr->sort.is_array() || !idx->sort.is_bv() || idx->sort.width != arr->sort.index_width)
    throw SortError("select needs an array and an index of its index width");
  Sort s = Sort::bitvec(arr->sort.width);
  return make(TermOp::Select, s, {std::move(arr), std::move(idx)});
}
inline Term store(Term arr, Term idx, Term val) {
  if (!arr->sort.is_array() || !idx->sort.is_bv() || idx->sort.width != arr->sort.index_width ||
      !val->sort.is_bv() || val->sort.width != arr->sort.width)
    throw SortError("store needs an array, an index and a value of matching widths");
  Sort s = arr->sort;
  return make(TermOp::Store, s, {std::move(arr), std::move(idx), std::move(val)});
}

/// Builds a node of the given operator from already-built children. Used by
/// the parsers so that both formats share one set of sort checks.
inline Term apply(TermOp op, std::vector<Term> k) {
  auto need = [&](std::size_t n) {
    if (k.size() != n)
      throw SortError("operator expects " + std::to_string(n) + " arguments, got " +
                      std::to_string(k.size()));
  };
  switch (op) {
  case TermOp::Add:
  case TermOp::Sub:
  case TermOp::Mul:
    need(2);
    return arith(op, k[0], k[1]);
  case TermOp::Slt:
  case TermOp::Sle:
  case TermOp::Sgt:
  case TermOp::Sge:
    need(2);
    return compare(op, k[0], k[1]);
  case TermOp::Eq:
    need(2);
    return eq(k[0], k[1]);
  case TermOp::Distinct:
    need(2);
    return distinct(k[0], k[1]);
  case TermOp::And:
  case TermOp::Or:
    need(2);
    return logic(op, k[0], k[1]);
  case TermOp::Not:
    need(1);
    return lnot(k[0]);
  case TermOp::Ite:
    need(3);
    return ite(k[0], k[1], k[2]);
  case TermOp::Select:
    need(2);
    return select(k[0], k[1]);
  case TermOp::Store:
    need(3);
    return store(k[0], k[1], k[2]);
  default:
    throw SortError("operator cannot be applied to arguments");
  }
}

/// Negation pushed into the comparison where possible: not(a >= b) becomes
/// a < b, not(a = b) becomes a != b. Other terms get an explicit not.
inline Term negate(const Term &t) {
  auto flip = [&](TermOp op) { return make(op, t->sort, t->kids); };
  switch (t->op) {
  case TermOp::Slt:
    return flip(TermOp::Sge);
  case TermOp::Sge:
    return flip(TermOp::Slt);
  case TermOp::Sle:
    return flip(TermOp::Sgt);
  case TermOp::Sgt:
    return flip(TermOp::Sle);
  case TermOp::Eq:
    return flip(TermOp::Distinct);
  case TermOp::Distinct:
    return flip(TermOp::Eq);
  case TermOp::BoolLit:
    return boolean(t->value == 0);
  case TermOp::Not:
    return t->kids[0];
  default:
    return lnot(t);
  }
}

} // namespace term

inline bool equal(const Term &a, const Term &b) {
  if (a == b)
    return true;
  if (!a || !b)
    return false;
  if (a->op != b->op || !(a->sort == b->sort) || a->value != b->value || a->name != b->name ||
      a->kids.size() != b->kids.size())
    return false;
  for (std::size_t i = 0; i < a->kids.size(); ++i)
    if (!equal(a->kids[i], b->kids[i]))
      return false;
  return true;
}

/// Visits every node occurrence (shared subterms are visited once per
/// occurrence, matching what an emitted text contains).
inline void walk(const Term &t, const std::function<void(const TermNode &)> &fn) {
  fn(*t);
  for (const auto &k : t->kids)
    walk(k, fn);
}

inline std::size_t count_op(const Term &t, TermOp op) {
  std::size_t n = 0;
  walk(t, [&](const TermNode &node) { n += node.op == op; });
  return n;
}

inline void collect_names(const Term &t, std::set<std::string> &out) {
  walk(t, [&](const TermNode &node) {
    if (node.op == TermOp::Name)
      out.insert(node.name);
  });
}

} // namespace pfq
