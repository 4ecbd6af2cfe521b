// pfq/stp.hpp - STP (CVC presentation language) emission and parsing.
//
// The dialect is the subset this toolkit emits:
//
//   % QF_ABV query
//   x : BITVECTOR(32);
//   mem_arr : ARRAY BITVECTOR(32) OF BITVECTOR(32);
//   ASSERT(x = BVPLUS(32, y, 0hex00000001));
//   QUERY(FALSE);
//
// Binary infix forms are always parenthesised, IF/THEN/ELSE/ENDIF puts each
// keyword on its own line, and array updates use `(a WITH [i] := v)`.
#pragma once

#include "pfq/formula.hpp"

#include <cctype>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace pfq {

inline std::string stp_literal(Word value, unsigned width) {
  std::string out;
  if (width % 4 == 0) {
    static const char *hex = "0123456789abcdef";
    out = "0hex";
    for (unsigned i = width / 4; i-- > 0;)
      out += hex[(value >> (4 * i)) & 0xf];
  } else {
    out = "0bin";
    for (unsigned i = width; i-- > 0;)
      out += ((value >> i) & 1) ? '1' : '0';
  }
  return out;
}

inline std::string stp_sort(const Sort &s) {
  switch (s.kind) {
  case Sort::Kind::Bool:
    return "BOOLEAN";
  case Sort::Kind::BitVec:
    return "BITVECTOR(" + std::to_string(s.width) + ")";
  case Sort::Kind::Array:
    return "ARRAY BITVECTOR(" + std::to_string(s.index_width) + ") OF BITVECTOR(" +
           std::to_string(s.width) + ")";
  }
  return "?";
}

namespace detail {

inline bool stp_is_infix(const Term &t) {
  switch (t->op) {
  case TermOp::Eq:
  case TermOp::Distinct:
  case TermOp::And:
  case TermOp::Or:
  case TermOp::Not:
  case TermOp::Store:
    return true;
  default:
    return false;
  }
}

// `bare` drops the outer parentheses of an infix form; ASSERT( ) supplies them.
inline void print_stp_term(std::ostream &os, const Term &t, bool bare = false) {
  const char *open = bare ? "" : "(";
  const char *close = bare ? "" : ")";
  auto kid = [&](std::size_t i) { print_stp_term(os, t->kids[i]); };
  switch (t->op) {
  case TermOp::BoolLit:
    os << (t->value ? "TRUE" : "FALSE");
    return;
  case TermOp::BvLit:
    os << stp_literal(t->value, t->sort.width);
    return;
  case TermOp::Name:
    os << t->name;
    return;
  case TermOp::Add:
  case TermOp::Sub:
  case TermOp::Mul:
    os << (t->op == TermOp::Add ? "BVPLUS(" : t->op == TermOp::Sub ? "BVSUB(" : "BVMULT(")
       << t->sort.width << ", ";
    kid(0);
    os << ", ";
    kid(1);
    os << ')';
    return;
  case TermOp::Slt:
  case TermOp::Sle:
  case TermOp::Sgt:
  case TermOp::Sge: {
    static const char *names[] = {"BVSLT(", "BVSLE(", "BVSGT(", "BVSGE("};
    os << names[static_cast<int>(t->op) - static_cast<int>(TermOp::Slt)];
    kid(0);
    os << ", ";
    kid(1);
    os << ')';
    return;
  }
  case TermOp::Eq:
  case TermOp::Distinct:
  case TermOp::And:
  case TermOp::Or: {
    const char *op = t->op == TermOp::Eq         ? " = "
                     : t->op == TermOp::Distinct ? " /= "
                     : t->op == TermOp::And      ? " AND "
                                                 : " OR ";
    os << open;
    kid(0);
    os << op;
    kid(1);
    os << close;
    return;
  }
  case TermOp::Not:
    os << open << "NOT ";
    kid(0);
    os << close;
    return;
  case TermOp::Ite:
    os << "IF ";
    kid(0);
    os << "\nTHEN ";
    kid(1);
    os << "\nELSE ";
    kid(2);
    os << "\nENDIF";
    return;
  case TermOp::Select: {
    print_stp_term(os, t->kids[0]);
    os << '[';
    kid(1);
    os << ']';
    return;
  }
  case TermOp::Store:
    os << open;
    kid(0);
    os << " WITH [";
    kid(1);
    os << "] := ";
    kid(2);
    os << close;
    return;
  }
}

} // namespace detail

inline std::string stp_term(const Term &t) {
  std::ostringstream os;
  detail::print_stp_term(os, t);
  return os.str();
}

inline std::string emit_stp(const Formula &f) {
  std::ostringstream os;
  os << "% QF_ABV query\n";
  for (const auto &d : f.declarations)
    os << d.name << " : " << stp_sort(d.sort) << ";\n";
  for (const auto &a : f.assertions) {
    os << "ASSERT(";
    detail::print_stp_term(os, a, detail::stp_is_infix(a));
    os << ");\n";
  }
  os << "QUERY(FALSE);\n";
  return os.str();
}

namespace detail {

struct StpToken {
  enum class Kind : std::uint8_t { Ident, Number, Literal, Symbol, End };
  Kind kind = Kind::End;
  std::string text;
  std::size_t line = 1, column = 1;
};

inline std::vector<StpToken> lex_stp(std::string_view text) {
  std::vector<StpToken> out;
  std::size_t i = 0, line = 1, col = 1;
  auto bump = [&](std::size_t n) {
    for (std::size_t k = 0; k < n; ++k, ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
  };
  auto is_ident = [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
  };
  while (i < text.size()) {
    char c = text[i];
    if (c == '%') {
      while (i < text.size() && text[i] != '\n')
        bump(1);
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      bump(1);
      continue;
    }
    StpToken t;
    t.line = line;
    t.column = col;
    std::size_t start = i;
    if (text.substr(i, 4) == "0hex" || text.substr(i, 4) == "0bin") {
      std::size_t j = i + 4;
      while (j < text.size() && is_ident(text[j]))
        ++j;
      t.kind = StpToken::Kind::Literal;
      t.text = std::string(text.substr(start, j - start));
      bump(j - i);
    } else if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t j = i;
      while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j])))
        ++j;
      t.kind = StpToken::Kind::Number;
      t.text = std::string(text.substr(start, j - start));
      bump(j - i);
    } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i;
      while (j < text.size() && is_ident(text[j]))
        ++j;
      t.kind = StpToken::Kind::Ident;
      t.text = std::string(text.substr(start, j - start));
      bump(j - i);
    } else {
      static const char *two[] = {"/=", ":="};
      t.kind = StpToken::Kind::Symbol;
      t.text = std::string(1, c);
      for (const char *s : two)
        if (text.substr(i, 2) == s)
          t.text = s;
      if (t.text.size() == 1 && std::string_view("()[],;:=").find(c) == std::string_view::npos)
        throw ParseError(line, col, std::string("unexpected character '") + c + "'");
      bump(t.text.size());
    }
    out.push_back(std::move(t));
  }
  StpToken end;
  end.line = line;
  end.column = col;
  out.push_back(end);
  return out;
}

class StpParser {
public:
  explicit StpParser(std::string_view text) : toks_(lex_stp(text)) {}

  Formula parse() {
    Formula f;
    bool queried = false;
    while (peek().kind != StpToken::Kind::End) {
      if (queried)
        fail(peek(), "text after QUERY");
      if (is_word("ASSERT")) {
        next();
        const StpToken &at = peek();
        Term t = expr();
        if (!t->sort.is_bool())
          fail(at, "assertion is not boolean");
        expect(";");
        f.assertions.push_back(std::move(t));
      } else if (is_word("QUERY")) {
        next();
        expect("(");
        if (!is_word("FALSE"))
          fail(peek(), "only QUERY(FALSE) is supported");
        next();
        expect(")");
        expect(";");
        queried = true;
      } else if (peek().kind == StpToken::Kind::Ident) {
        declaration(f);
      } else {
        fail(peek(), "expected a declaration, ASSERT or QUERY");
      }
    }
    if (!queried)
      fail(peek(), "missing QUERY(FALSE);");
    try {
      check_formula(f);
    } catch (const SortError &e) {
      fail(peek(), e.what());
    }
    return f;
  }

private:
  const StpToken &peek() const { return toks_[pos_]; }
  const StpToken &next() { return toks_[pos_ == toks_.size() - 1 ? pos_ : pos_++]; }
  bool is_sym(std::string_view s) const {
    return peek().kind == StpToken::Kind::Symbol && peek().text == s;
  }
  bool is_word(std::string_view s) const {
    return peek().kind == StpToken::Kind::Ident && peek().text == s;
  }
  [[noreturn]] void fail(const StpToken &t, const std::string &msg) const {
    throw ParseError(t.line, t.column, msg);
  }
  void expect(std::string_view s) {
    if (!is_sym(s))
      fail(peek(), "expected '" + std::string(s) + "'" +
                       (peek().kind == StpToken::Kind::End ? " before end of input"
                                                           : ", found '" + peek().text + "'"));
    next();
  }
  void expect_word(std::string_view s) {
    if (!is_word(s))
      fail(peek(), "expected " + std::string(s));
    next();
  }
  unsigned width() {
    if (peek().kind != StpToken::Kind::Number || peek().text.size() > 2)
      fail(peek(), "expected a width");
    unsigned w = static_cast<unsigned>(std::stoul(next().text));
    if (w == 0 || w > 64)
      fail(toks_[pos_ - 1], "width out of range");
    return w;
  }
  unsigned bitvector_sort() {
    expect_word("BITVECTOR");
    expect("(");
    unsigned w = width();
    expect(")");
    return w;
  }

  void declaration(Formula &f) {
    std::vector<const StpToken *> names{&next()};
    while (is_sym(",")) {
      next();
      if (peek().kind != StpToken::Kind::Ident)
        fail(peek(), "expected a name");
      names.push_back(&next());
    }
    expect(":");
    Sort s;
    if (is_word("ARRAY")) {
      next();
      unsigned i = bitvector_sort();
      expect_word("OF");
      s = Sort::array(i, bitvector_sort());
    } else if (is_word("BITVECTOR")) {
      s = Sort::bitvec(bitvector_sort());
    } else {
      fail(peek(), "expected BITVECTOR or ARRAY");
    }
    expect(";");
    for (const StpToken *n : names) {
      if (is_reserved(n->text))
        fail(*n, "'" + n->text + "' is a keyword");
      if (!env_.emplace(n->text, s).second)
        fail(*n, "'" + n->text + "' declared twice");
      f.declarations.push_back({n->text, s});
    }
  }

  static bool is_reserved(std::string_view s) {
    static const char *words[] = {"ASSERT", "QUERY", "TRUE",  "FALSE", "IF",    "THEN",
                                  "ELSE",   "ENDIF", "NOT",   "AND",   "OR",    "WITH",
                                  "ARRAY",  "OF",    "BITVECTOR", "BVPLUS", "BVSUB",
                                  "BVMULT", "BVSLT", "BVSLE", "BVSGT", "BVSGE"};
    for (const char *w : words)
      if (s == w)
        return true;
    return false;
  }

  Term build(const StpToken &at, TermOp op, std::vector<Term> kids) {
    try {
      return term::apply(op, std::move(kids));
    } catch (const SortError &e) {
      fail(at, e.what());
    }
  }

  Term expr() {
    Term t = primary();
    while (is_sym("[")) {
      const StpToken &at = next();
      Term idx = expr();
      expect("]");
      t = build(at, TermOp::Select, {t, idx});
    }
    return t;
  }

  Term primary() {
    const StpToken &t = peek();
    switch (t.kind) {
    case StpToken::Kind::Literal:
      next();
      return literal(t);
    case StpToken::Kind::Ident:
      return word();
    case StpToken::Kind::Symbol:
      if (t.text == "(")
        return parenthesised();
      fail(t, "unexpected '" + t.text + "'");
    case StpToken::Kind::Number:
      fail(t, "unexpected number");
    case StpToken::Kind::End:
      fail(t, "unexpected end of input");
    }
    fail(t, "unexpected token");
  }

  Term literal(const StpToken &t) {
    bool hex = t.text.rfind("0hex", 0) == 0;
    std::string digits = t.text.substr(4);
    if (digits.empty())
      fail(t, "empty literal");
    unsigned w = hex ? 4 * static_cast<unsigned>(digits.size()) : static_cast<unsigned>(digits.size());
    if (w > 64)
      fail(t, "literal wider than 64 bits");
    Word v = 0;
    for (char c : digits) {
      int d;
      if (!hex && (c == '0' || c == '1'))
        d = c - '0';
      else if (hex && std::isxdigit(static_cast<unsigned char>(c)))
        d = std::isdigit(static_cast<unsigned char>(c))
                ? c - '0'
                : std::tolower(static_cast<unsigned char>(c)) - 'a' + 10;
      else
        fail(t, "bad digit in literal '" + t.text + "'");
      v = (v << (hex ? 4 : 1)) | static_cast<Word>(d);
    }
    return term::bv(v, w);
  }

  Term word() {
    const StpToken &t = next();
    const std::string &w = t.text;
    if (w == "TRUE" || w == "FALSE")
      return term::boolean(w == "TRUE");
    if (w == "BVPLUS" || w == "BVSUB" || w == "BVMULT") {
      TermOp op = w == "BVPLUS" ? TermOp::Add : w == "BVSUB" ? TermOp::Sub : TermOp::Mul;
      expect("(");
      const StpToken &wt = peek();
      unsigned width_arg = width();
      expect(",");
      Term a = expr();
      expect(",");
      Term b = expr();
      expect(")");
      Term out = build(t, op, {a, b});
      if (out->sort.width != width_arg)
        fail(wt, "width argument does not match operands");
      return out;
    }
    static const std::map<std::string, TermOp, std::less<>> cmps = {
        {"BVSLT", TermOp::Slt}, {"BVSLE", TermOp::Sle}, {"BVSGT", TermOp::Sgt}, {"BVSGE", TermOp::Sge}};
    if (auto it = cmps.find(w); it != cmps.end()) {
      expect("(");
      Term a = expr();
      expect(",");
      Term b = expr();
      expect(")");
      return build(t, it->second, {a, b});
    }
    if (w == "IF") {
      Term c = expr();
      expect_word("THEN");
      Term a = expr();
      expect_word("ELSE");
      Term b = expr();
      expect_word("ENDIF");
      return build(t, TermOp::Ite, {c, a, b});
    }
    if (is_reserved(w))
      fail(t, "unexpected keyword " + w);
    auto it = env_.find(w);
    if (it == env_.end())
      fail(t, "undeclared name '" + w + "'");
    return term::name(w, it->second);
  }

  Term parenthesised() {
    const StpToken &open = next();
    if (is_word("NOT")) {
      next();
      Term a = expr();
      expect(")");
      return build(open, TermOp::Not, {a});
    }
    Term a = expr();
    if (is_sym(")")) {
      next();
      return a;
    }
    const StpToken &op = next();
    if (op.kind == StpToken::Kind::Ident && op.text == "WITH") {
      expect("[");
      Term idx = expr();
      expect("]");
      expect(":=");
      Term v = expr();
      expect(")");
      return build(op, TermOp::Store, {a, idx, v});
    }
    TermOp kind;
    if (op.kind == StpToken::Kind::Symbol && op.text == "=")
      kind = TermOp::Eq;
    else if (op.kind == StpToken::Kind::Symbol && op.text == "/=")
      kind = TermOp::Distinct;
    else if (op.kind == StpToken::Kind::Ident && op.text == "AND")
      kind = TermOp::And;
    else if (op.kind == StpToken::Kind::Ident && op.text == "OR")
      kind = TermOp::Or;
    else
      fail(op, "expected ')', '=', '/=', AND, OR or WITH");
    Term b = expr();
    expect(")");
    return build(op, kind, {a, b});
  }

  std::vector<StpToken> toks_;
  std::size_t pos_ = 0;
  std::map<std::string, Sort> env_;
};

} // namespace detail

inline Formula parse_stp(std::string_view text) { return detail::StpParser(text).parse(); }

} // namespace pfq
