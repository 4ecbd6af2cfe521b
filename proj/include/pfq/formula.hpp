// pfq/formula.hpp - QF_ABV formulas and their structural metrics.
#pragma once

#include "pfq/term.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace pfq {

/// The one array a formula may mention.
inline constexpr const char *kMemoryArray = "mem_arr";

struct Declaration {
  std::string name;
  Sort sort;
  bool operator==(const Declaration &) const = default;
};

struct Formula {
  std::vector<Declaration> declarations;
  std::vector<Term> assertions;

  const Declaration *find(const std::string &name) const {
    for (const auto &d : declarations)
      if (d.name == name)
        return &d;
    return nullptr;
  }

  bool operator==(const Formula &other) const {
    if (declarations != other.declarations || assertions.size() != other.assertions.size())
      return false;
    for (std::size_t i = 0; i < assertions.size(); ++i)
      if (!equal(assertions[i], other.assertions[i]))
        return false;
    return true;
  }
};

/// Checks the invariants the emitters and the oracle rely on: every name is
/// declared with the sort it is used at, assertions are boolean, and the only
/// array is mem_arr.
inline void check_formula(const Formula &f) {
  std::map<std::string, Sort> decl;
  for (const auto &d : f.declarations) {
    if (!decl.emplace(d.name, d.sort).second)
      throw SortError("'" + d.name + "' is declared twice");
    if (d.sort.is_array() && d.name != kMemoryArray)
      throw SortError("array '" + d.name + "' is not " + kMemoryArray);
    if (d.sort.is_bool())
      throw SortError("boolean declaration '" + d.name + "' is not supported");
  }
  for (const auto &a : f.assertions) {
    if (!a->sort.is_bool())
      throw SortError("assertion is not boolean");
    walk(a, [&](const TermNode &n) {
      if (n.op != TermOp::Name)
        return;
      auto it = decl.find(n.name);
      if (it == decl.end())
        throw SortError("'" + n.name + "' is not declared");
      if (!(it->second == n.sort))
        throw SortError("'" + n.name + "' used as " + to_string(n.sort) + " but declared " +
                        to_string(it->second));
    });
  }
}

struct QueryMetrics {
  std::size_t lines_stp = 0;
  std::size_t lines_smt2 = 0;
  std::size_t ite_count = 0;
  std::size_t store_count = 0;
  /// ite_count / store_count, absent when there are no stores.
  std::optional<double> ratio;
};

inline std::optional<double> ite_store_ratio(std::size_t ite, std::size_t store) {
  if (store == 0)
    return std::nullopt;
  return static_cast<double>(ite) / static_cast<double>(store);
}

/// The ratio with three decimals, truncated (7052/10889 = 0.64763 prints as
/// 0.647). Empty when there are no stores.
inline std::string format_ratio(std::size_t ite, std::size_t store) {
  if (store == 0)
    return "";
  unsigned long long milli =
      static_cast<unsigned long long>(ite) * 1000ULL / static_cast<unsigned long long>(store);
  std::string frac = std::to_string(milli % 1000);
  return std::to_string(milli / 1000) + "." + std::string(3 - frac.size(), '0') + frac;
}

/// Non-empty lines of an emitted text.
inline std::size_t count_lines(std::string_view text) {
  std::size_t n = 0;
  bool content = false;
  for (char c : text) {
    if (c == '\n') {
      n += content;
      content = false;
    } else if (c != ' ' && c != '\t' && c != '\r') {
      content = true;
    }
  }
  return n + content;
}

inline std::size_t count_substr(std::string_view text, std::string_view needle) {
  std::size_t n = 0;
  for (std::size_t pos = text.find(needle); pos != std::string_view::npos;
       pos = text.find(needle, pos + needle.size()))
    ++n;
  return n;
}

inline std::size_t count_op(const Formula &f, TermOp op) {
  std::size_t n = 0;
  for (const auto &a : f.assertions)
    n += count_op(a, op);
  return n;
}

/// Rebuilds `f` with every bitvector at width `w`; literals are truncated.
inline Formula rewidth(const Formula &f, unsigned w) {
  std::function<Term(const Term &)> go = [&](const Term &t) -> Term {
    switch (t->op) {
    case TermOp::BoolLit:
      return t;
    case TermOp::BvLit:
      return term::bv(t->value, w);
    case TermOp::Name: {
      Sort s = t->sort;
      if (s.is_bv())
        s = Sort::bitvec(w);
      else if (s.is_array())
        s = Sort::array(w, w);
      return term::name(t->name, s);
    }
    default: {
      std::vector<Term> kids;
      for (const auto &k : t->kids)
        kids.push_back(go(k));
      return term::apply(t->op, std::move(kids));
    }
    }
  };
  Formula out;
  for (const auto &d : f.declarations) {
    Sort s = d.sort;
    if (s.is_bv())
      s = Sort::bitvec(w);
    else if (s.is_array())
      s = Sort::array(w, w);
    out.declarations.push_back({d.name, s});
  }
  for (const auto &a : f.assertions)
    out.assertions.push_back(go(a));
  return out;
}

} // namespace pfq
