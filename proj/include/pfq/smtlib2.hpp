// pfq/smtlib2.hpp - SMT-LIB2 emission and parsing for QF_ABV formulas.
//
// The emitter writes one command per line:
//
//   (set-logic QF_ABV)
//   (declare-fun x () (_ BitVec 32))
//   (assert (= x #x00000001))
//   (check-sat)
//
// The parser accepts that layout and a little more (declare-const,
// set-info/set-option, `(_ bvN w)` literals, comments), but no `let`.
#pragma once

#include "pfq/formula.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace pfq {

inline std::string smt2_literal(Word value, unsigned width) {
  std::string out;
  if (width % 4 == 0) {
    static const char *hex = "0123456789abcdef";
    out = "#x";
    for (unsigned i = width / 4; i-- > 0;)
      out += hex[(value >> (4 * i)) & 0xf];
  } else {
    out = "#b";
    for (unsigned i = width; i-- > 0;)
      out += ((value >> i) & 1) ? '1' : '0';
  }
  return out;
}

inline std::string smt2_sort(const Sort &s) {
  switch (s.kind) {
  case Sort::Kind::Bool:
    return "Bool";
  case Sort::Kind::BitVec:
    return "(_ BitVec " + std::to_string(s.width) + ")";
  case Sort::Kind::Array:
    return "(Array (_ BitVec " + std::to_string(s.index_width) + ") (_ BitVec " +
           std::to_string(s.width) + "))";
  }
  return "?";
}

inline std::string_view smt2_operator(TermOp op) {
  switch (op) {
  case TermOp::Add:
    return "bvadd";
  case TermOp::Sub:
    return "bvsub";
  case TermOp::Mul:
    return "bvmul";
  case TermOp::Slt:
    return "bvslt";
  case TermOp::Sle:
    return "bvsle";
  case TermOp::Sgt:
    return "bvsgt";
  case TermOp::Sge:
    return "bvsge";
  case TermOp::Eq:
    return "=";
  case TermOp::Distinct:
    return "distinct";
  case TermOp::And:
    return "and";
  case TermOp::Or:
    return "or";
  case TermOp::Not:
    return "not";
  case TermOp::Ite:
    return "ite";
  case TermOp::Select:
    return "select";
  case TermOp::Store:
    return "store";
  default:
    return "";
  }
}

inline void print_smt2_term(std::ostream &os, const Term &t) {
  switch (t->op) {
  case TermOp::BoolLit:
    os << (t->value ? "true" : "false");
    return;
  case TermOp::BvLit:
    os << smt2_literal(t->value, t->sort.width);
    return;
  case TermOp::Name:
    os << t->name;
    return;
  default:
    os << '(' << smt2_operator(t->op);
    for (const auto &k : t->kids) {
      os << ' ';
      print_smt2_term(os, k);
    }
    os << ')';
  }
}

inline std::string smt2_term(const Term &t) {
  std::ostringstream os;
  print_smt2_term(os, t);
  return os.str();
}

inline std::string emit_smtlib2(const Formula &f) {
  std::ostringstream os;
  os << "(set-logic QF_ABV)\n";
  for (const auto &d : f.declarations)
    os << "(declare-fun " << d.name << " () " << smt2_sort(d.sort) << ")\n";
  for (const auto &a : f.assertions) {
    os << "(assert ";
    print_smt2_term(os, a);
    os << ")\n";
  }
  os << "(check-sat)\n";
  return os.str();
}

namespace detail {

struct SExpr {
  bool is_list = false;
  std::string atom;
  std::vector<SExpr> items;
  std::size_t line = 1, column = 1;
};

class SExprReader {
public:
  explicit SExprReader(std::string_view text) : text_(text) {}

  bool at_end() {
    skip();
    return pos_ >= text_.size();
  }

  SExpr read() {
    skip();
    SExpr e;
    e.line = line_;
    e.column = col_;
    if (pos_ >= text_.size())
      throw ParseError(line_, col_, "unexpected end of input");
    char c = text_[pos_];
    if (c == ')')
      throw ParseError(line_, col_, "unexpected ')'");
    if (c == '(') {
      advance();
      e.is_list = true;
      while (true) {
        skip();
        if (pos_ >= text_.size())
          throw ParseError(e.line, e.column, "unclosed '('");
        if (text_[pos_] == ')') {
          advance();
          break;
        }
        e.items.push_back(read());
      }
      return e;
    }
    if (c == '|') {
      advance();
      while (pos_ < text_.size() && text_[pos_] != '|')
        e.atom += advance();
      if (pos_ >= text_.size())
        throw ParseError(e.line, e.column, "unclosed '|'");
      advance();
      return e;
    }
    while (pos_ < text_.size()) {
      char d = text_[pos_];
      if (std::isspace(static_cast<unsigned char>(d)) || d == '(' || d == ')' || d == ';')
        break;
      e.atom += advance();
    }
    return e;
  }

  std::size_t line() const { return line_; }
  std::size_t column() const { return col_; }

private:
  char advance() {
    char c = text_[pos_++];
    if (c == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    return c;
  }
  void skip() {
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (c == ';') {
        while (pos_ < text_.size() && text_[pos_] != '\n')
          advance();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else {
        break;
      }
    }
  }

  std::string_view text_;
  std::size_t pos_ = 0, line_ = 1, col_ = 1;
};

[[noreturn]] inline void fail_at(const SExpr &e, const std::string &msg) {
  throw ParseError(e.line, e.column, msg);
}

inline unsigned parse_width(const SExpr &e) {
  if (e.is_list || e.atom.empty() || e.atom.size() > 2 ||
      !std::all_of(e.atom.begin(), e.atom.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }))
    fail_at(e, "expected a width");
  unsigned w = static_cast<unsigned>(std::stoul(e.atom));
  if (w == 0 || w > 64)
    fail_at(e, "width out of range");
  return w;
}

inline Sort parse_smt2_sort(const SExpr &e) {
  if (!e.is_list) {
    if (e.atom == "Bool")
      return Sort::boolean();
    fail_at(e, "unknown sort '" + e.atom + "'");
  }
  if (e.items.size() == 3 && !e.items[0].is_list && e.items[0].atom == "_" &&
      !e.items[1].is_list && e.items[1].atom == "BitVec")
    return Sort::bitvec(parse_width(e.items[2]));
  if (e.items.size() == 3 && !e.items[0].is_list && e.items[0].atom == "Array") {
    Sort i = parse_smt2_sort(e.items[1]), v = parse_smt2_sort(e.items[2]);
    if (!i.is_bv() || !v.is_bv())
      fail_at(e, "arrays must map bitvectors to bitvectors");
    return Sort::array(i.width, v.width);
  }
  fail_at(e, "unsupported sort");
}

inline Term parse_smt2_literal(const SExpr &e) {
  const std::string &a = e.atom;
  bool hex = a.rfind("#x", 0) == 0, bin = a.rfind("#b", 0) == 0;
  std::string digits = a.substr(2);
  if (digits.empty())
    fail_at(e, "empty bitvector literal");
  unsigned width = hex ? 4 * static_cast<unsigned>(digits.size())
                       : static_cast<unsigned>(digits.size());
  if (width > 64)
    fail_at(e, "bitvector literal wider than 64 bits");
  Word v = 0;
  for (char c : digits) {
    int d;
    if (bin && (c == '0' || c == '1'))
      d = c - '0';
    else if (hex && std::isxdigit(static_cast<unsigned char>(c)))
      d = std::isdigit(static_cast<unsigned char>(c))
              ? c - '0'
              : std::tolower(static_cast<unsigned char>(c)) - 'a' + 10;
    else
      fail_at(e, "bad digit in literal '" + a + "'");
    v = (v << (hex ? 4 : 1)) | static_cast<Word>(d);
  }
  return term::bv(v, width);
}

inline Term parse_smt2_term(const SExpr &e, const std::map<std::string, Sort> &env) {
  try {
    if (!e.is_list) {
      const std::string &a = e.atom;
      if (a == "true" || a == "false")
        return term::boolean(a == "true");
      if (a.rfind("#x", 0) == 0 || a.rfind("#b", 0) == 0)
        return parse_smt2_literal(e);
      auto it = env.find(a);
      if (it == env.end())
        fail_at(e, "undeclared name '" + a + "'");
      return term::name(a, it->second);
    }
    if (e.items.empty() || e.items[0].is_list)
      fail_at(e, "expected an operator");
    const std::string &head = e.items[0].atom;
    if (head == "_") {
      // (_ bvN w)
      if (e.items.size() != 3 || e.items[1].is_list || e.items[1].atom.rfind("bv", 0) != 0)
        fail_at(e, "unsupported indexed term");
      std::string digits = e.items[1].atom.substr(2);
      if (digits.empty() || !std::all_of(digits.begin(), digits.end(), [](char c) {
            return std::isdigit(static_cast<unsigned char>(c));
          }))
        fail_at(e, "bad bitvector literal");
      return term::bv(std::stoull(digits), parse_width(e.items[2]));
    }
    static const std::map<std::string, TermOp, std::less<>> ops = {
        {"bvadd", TermOp::Add},     {"bvsub", TermOp::Sub},   {"bvmul", TermOp::Mul},
        {"bvslt", TermOp::Slt},     {"bvsle", TermOp::Sle},   {"bvsgt", TermOp::Sgt},
        {"bvsge", TermOp::Sge},     {"=", TermOp::Eq},        {"distinct", TermOp::Distinct},
        {"and", TermOp::And},       {"or", TermOp::Or},       {"not", TermOp::Not},
        {"ite", TermOp::Ite},       {"select", TermOp::Select}, {"store", TermOp::Store},
    };
    auto it = ops.find(head);
    if (it == ops.end())
      fail_at(e.items[0], "unsupported operator '" + head + "'");
    std::vector<Term> kids;
    for (std::size_t i = 1; i < e.items.size(); ++i)
      kids.push_back(parse_smt2_term(e.items[i], env));
    return term::apply(it->second, std::move(kids));
  } catch (const SortError &err) {
    fail_at(e, err.what());
  }
}

} // namespace detail

/// Parses a single term against the given name sorts.
inline Term parse_smt2_term(std::string_view text, const std::map<std::string, Sort> &env) {
  detail::SExprReader r(text);
  detail::SExpr e = r.read();
  if (!r.at_end())
    throw ParseError(r.line(), r.column(), "trailing text after term");
  return detail::parse_smt2_term(e, env);
}

inline Formula parse_smtlib2(std::string_view text) {
  detail::SExprReader r(text);
  Formula f;
  std::map<std::string, Sort> env;
  bool checked = false;
  while (!r.at_end()) {
    detail::SExpr cmd = r.read();
    if (!cmd.is_list || cmd.items.empty() || cmd.items[0].is_list)
      detail::fail_at(cmd, "expected a command");
    const std::string &head = cmd.items[0].atom;
    if (checked && head != "exit" && head != "get-model")
      detail::fail_at(cmd, "command after check-sat");
    if (head == "set-logic" || head == "set-info" || head == "set-option" || head == "exit" ||
        head == "get-model") {
      continue;
    }
    if (head == "declare-fun" || head == "declare-const") {
      bool fun = head == "declare-fun";
      std::size_t want = fun ? 4 : 3;
      if (cmd.items.size() != want || cmd.items[1].is_list)
        detail::fail_at(cmd, "malformed " + head);
      if (fun && (!cmd.items[2].is_list || !cmd.items[2].items.empty()))
        detail::fail_at(cmd.items[2], "only nullary functions are supported");
      const std::string &name = cmd.items[1].atom;
      Sort s = detail::parse_smt2_sort(cmd.items[want - 1]);
      if (!env.emplace(name, s).second)
        detail::fail_at(cmd.items[1], "'" + name + "' declared twice");
      f.declarations.push_back({name, s});
    } else if (head == "assert") {
      if (cmd.items.size() != 2)
        detail::fail_at(cmd, "assert takes one term");
      Term t = detail::parse_smt2_term(cmd.items[1], env);
      if (!t->sort.is_bool())
        detail::fail_at(cmd.items[1], "assertion is not boolean");
      f.assertions.push_back(std::move(t));
    } else if (head == "check-sat") {
      checked = true;
    } else {
      detail::fail_at(cmd.items[0], "unsupported command '" + head + "'");
    }
  }
  try {
    check_formula(f);
  } catch (const SortError &e) {
    throw ParseError(r.line(), r.column(), e.what());
  }
  return f;
}

} // namespace pfq
