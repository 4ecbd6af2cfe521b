// pfq/ir_text.hpp - the `.mir` text format.
//
//   func main(a, b) {      # one function, parameters optional
//   entry:                 # block label
//     x = 5                # const-assign (literal or `undef`)
//     y = x + a            # binop: + - *
//     c = y >= 4           # compare: < <= > >= == !=
//     v = load y           # memory read
//     store y, x           # memory write
//     m = phi [entry: x], [loop: y]
//     print v
//     br c, then, else
//     jmp L
//     ret y
//   }
//
// One instruction per line; `#` starts a comment. Identifiers containing a
// double underscore and the name `mem_arr` are reserved.
#pragma once

#include "pfq/ir.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace pfq {

namespace detail {

struct Token {
  enum class Kind : std::uint8_t { Ident, Number, Symbol, End };
  Kind kind = Kind::End;
  std::string text;
  std::size_t line = 0;
  std::size_t column = 0;
};

inline std::vector<Token> lex_ir(std::string_view text) {
  std::vector<Token> out;
  std::size_t line = 1, col = 1;
  std::size_t i = 0;
  auto advance = [&](std::size_t n) {
    for (std::size_t k = 0; k < n; ++k, ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
  };
  while (i < text.size()) {
    char c = text[i];
    if (c == '#') {
      while (i < text.size() && text[i] != '\n')
        advance(1);
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      advance(1);
      continue;
    }
    Token tok;
    tok.line = line;
    tok.column = col;
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i;
      while (j < text.size() &&
             (std::isalnum(static_cast<unsigned char>(text[j])) || text[j] == '_'))
        ++j;
      tok.kind = Token::Kind::Ident;
      tok.text = std::string(text.substr(i, j - i));
      advance(j - i);
    } else if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t j = i;
      while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j])))
        ++j;
      tok.kind = Token::Kind::Number;
      tok.text = std::string(text.substr(i, j - i));
      advance(j - i);
    } else {
      static constexpr std::string_view two[] = {"==", "!=", "<=", ">="};
      std::string_view rest = text.substr(i);
      std::size_t len = 1;
      for (auto op : two)
        if (rest.substr(0, 2) == op)
          len = 2;
      static constexpr std::string_view singles = "=<>+-*,:[](){}";
      if (len == 1 && singles.find(c) == std::string_view::npos)
        throw ParseError(line, col, std::string("unexpected character '") + c + "'");
      tok.kind = Token::Kind::Symbol;
      tok.text = std::string(rest.substr(0, len));
      advance(len);
    }
    out.push_back(std::move(tok));
  }
  Token end;
  end.line = line;
  end.column = col;
  out.push_back(end);
  return out;
}

inline bool is_keyword(std::string_view s) {
  static const std::set<std::string_view> kws = {
      "func", "undef", "load", "store", "phi", "print", "br", "jmp", "ret"};
  return kws.count(s) != 0;
}

inline bool is_reserved_name(std::string_view s) {
  return s.find("__") != std::string_view::npos || s == "mem_arr";
}

class IrParser {
public:
  explicit IrParser(std::string_view text) : toks_(lex_ir(text)) {}

  Program parse() {
    Program prog;
    prog.functions.push_back(parse_function());
    if (peek().kind != Token::Kind::End)
      fail(peek(), "only one function is supported");
    return prog;
  }

private:
  const Token &peek(std::size_t ahead = 0) const {
    return toks_[std::min(pos_ + ahead, toks_.size() - 1)];
  }
  const Token &next() {
    const Token &t = toks_[pos_];
    if (pos_ + 1 < toks_.size())
      ++pos_;
    return t;
  }
  [[noreturn]] void fail(const Token &t, const std::string &msg) const {
    throw ParseError(t.line, t.column, msg);
  }
  bool at_symbol(std::string_view s) const {
    return peek().kind == Token::Kind::Symbol && peek().text == s;
  }
  void expect_symbol(std::string_view s) {
    if (!at_symbol(s))
      fail(peek(), "expected '" + std::string(s) + "'" + found());
    next();
  }
  std::string found() const {
    if (peek().kind == Token::Kind::End)
      return ", found end of input";
    return ", found '" + peek().text + "'";
  }
  std::string expect_name(const char *what) {
    const Token &t = peek();
    if (t.kind != Token::Kind::Ident || is_keyword(t.text))
      fail(t, std::string("expected ") + what + found());
    if (is_reserved_name(t.text))
      fail(t, "reserved identifier '" + t.text + "'");
    next();
    return t.text;
  }

  Function parse_function() {
    if (peek().kind != Token::Kind::Ident || peek().text != "func")
      fail(peek(), "expected 'func'" + found());
    next();
    Function fn;
    const Token &name_tok = peek();
    fn.name = expect_name("function name");
    if (fn.name != "main")
      fail(name_tok, "the entry function must be named 'main'");
    expect_symbol("(");
    std::set<std::string> seen;
    if (!at_symbol(")")) {
      while (true) {
        const Token &p = peek();
        std::string param = expect_name("parameter name");
        if (!seen.insert(param).second)
          fail(p, "duplicate parameter '" + param + "'");
        fn.params.push_back(param);
        if (!at_symbol(","))
          break;
        next();
      }
    }
    expect_symbol(")");
    expect_symbol("{");

    std::vector<const Token *> label_toks;
    while (!at_symbol("}")) {
      if (peek().kind == Token::Kind::End)
        fail(peek(), "missing '}'");
      if (peek().kind == Token::Kind::Ident && !is_keyword(peek().text) &&
          peek(1).kind == Token::Kind::Symbol && peek(1).text == ":") {
        label_toks.push_back(&peek());
        Block b;
        b.label = expect_name("label");
        next(); // ':'
        fn.blocks.push_back(std::move(b));
        continue;
      }
      if (fn.blocks.empty())
        fail(peek(), "instruction outside of a labelled block");
      std::size_t line = peek().line;
      Instruction in = parse_instruction();
      in.line = line;
      if (peek().line == line && peek().kind != Token::Kind::End &&
          !at_symbol("}"))
        fail(peek(), "expected end of line" + found());
      fn.blocks.back().instructions.push_back(std::move(in));
    }
    const Token &close = peek();
    next();

    if (fn.blocks.empty())
      fail(close, "missing terminator");
    check_structure(fn, label_toks);
    return fn;
  }

  void check_structure(const Function &fn,
                       const std::vector<const Token *> &label_toks) const {
    std::set<std::string> labels;
    for (std::size_t b = 0; b < fn.blocks.size(); ++b)
      if (!labels.insert(fn.blocks[b].label).second)
        fail(*label_toks[b], "duplicate label '" + fn.blocks[b].label + "'");
    for (std::size_t b = 0; b < fn.blocks.size(); ++b) {
      const auto &blk = fn.blocks[b];
      if (blk.instructions.empty() || !blk.instructions.back().is_terminator())
        fail(*label_toks[b], "missing terminator in block '" + blk.label + "'");
      bool past_phis = false;
      for (std::size_t i = 0; i < blk.instructions.size(); ++i) {
        const auto &in = blk.instructions[i];
        Token at;
        at.line = in.line;
        at.column = 1;
        if (in.is_terminator() && i + 1 != blk.instructions.size())
          fail(at, "instruction after terminator in block '" + blk.label + "'");
        if (in.opcode == Opcode::Phi) {
          if (past_phis)
            fail(at, "phi outside block head in block '" + blk.label + "'");
        } else {
          past_phis = true;
        }
        for (const auto &l : in.labels)
          if (!labels.count(l))
            fail(at, "undefined label '" + l + "'");
      }
    }
  }

  Operand parse_operand() {
    const Token &t = peek();
    if (t.kind == Token::Kind::Ident && t.text == "undef") {
      next();
      return Operand::undef();
    }
    bool negative = false;
    if (at_symbol("-") && peek(1).kind == Token::Kind::Number) {
      negative = true;
      next();
    }
    if (peek().kind == Token::Kind::Number) {
      const Token &num = next();
      std::uint64_t mag = 0;
      auto [p, ec] = std::from_chars(num.text.data(), num.text.data() + num.text.size(), mag);
      (void)p;
      constexpr std::uint64_t kMax = static_cast<std::uint64_t>(INT64_MAX);
      if (ec != std::errc() || mag > kMax + (negative ? 1 : 0))
        fail(num, "integer literal out of range");
      std::int64_t v = negative ? static_cast<std::int64_t>(0 - mag)
                                : static_cast<std::int64_t>(mag);
      return Operand::literal(v);
    }
    if (negative)
      fail(t, "expected number after '-'");
    return Operand::var(expect_name("operand"));
  }

  std::string parse_label() { return expect_name("label"); }

  Instruction parse_instruction() {
    const Token &head = peek();
    if (head.kind == Token::Kind::Ident) {
      if (head.text == "store") {
        next();
        Operand addr = parse_operand();
        expect_symbol(",");
        return Instruction::make_store(addr, parse_operand());
      }
      if (head.text == "print") {
        next();
        bool paren = at_symbol("(");
        if (paren)
          next();
        Operand v = parse_operand();
        if (paren)
          expect_symbol(")");
        return Instruction::make_print(v);
      }
      if (head.text == "br") {
        next();
        Operand cond = parse_operand();
        expect_symbol(",");
        std::string t = parse_label();
        expect_symbol(",");
        return Instruction::make_branch(cond, t, parse_label());
      }
      if (head.text == "jmp") {
        next();
        return Instruction::make_jump(parse_label());
      }
      if (head.text == "ret") {
        next();
        return Instruction::make_return(parse_operand());
      }
    }
    std::string dest = expect_name("instruction");
    expect_symbol("=");
    if (peek().kind == Token::Kind::Ident && peek().text == "load") {
      next();
      return Instruction::make_load(dest, parse_operand());
    }
    if (peek().kind == Token::Kind::Ident && peek().text == "phi") {
      next();
      std::vector<std::pair<std::string, Operand>> incoming;
      while (true) {
        expect_symbol("[");
        std::string label = parse_label();
        expect_symbol(":");
        Operand v = parse_operand();
        expect_symbol("]");
        incoming.emplace_back(label, v);
        if (!at_symbol(","))
          break;
        next();
      }
      return Instruction::make_phi(dest, std::move(incoming));
    }
    const Token &first_tok = peek();
    Operand lhs = parse_operand();
    if (peek().kind == Token::Kind::Symbol && peek().line == first_tok.line) {
      const std::string op = peek().text;
      if (op == "+" || op == "-" || op == "*") {
        next();
        ArithOp a = op == "+" ? ArithOp::Add : op == "-" ? ArithOp::Sub : ArithOp::Mul;
        return Instruction::make_binop(dest, a, lhs, parse_operand());
      }
      static const std::pair<std::string_view, Relation> rels[] = {
          {"<", Relation::Lt},  {"<=", Relation::Le}, {">", Relation::Gt},
          {">=", Relation::Ge}, {"==", Relation::Eq}, {"!=", Relation::Ne}};
      for (auto [text, rel] : rels)
        if (op == text) {
          next();
          return Instruction::make_compare(dest, rel, lhs, parse_operand());
        }
    }
    if (lhs.is_var())
      fail(first_tok, "plain copies are not supported; expected literal or undef");
    return Instruction::make_const(dest, lhs);
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

} // namespace detail

/// Parses `.mir` text. Throws ParseError carrying line and column.
inline Program parse_ir(std::string_view text) {
  return detail::IrParser(text).parse();
}

inline std::string to_string(const Operand &op) {
  switch (op.kind()) {
  case Operand::Kind::Var:
    return op.name();
  case Operand::Kind::Literal:
    return std::to_string(op.value());
  case Operand::Kind::Undef:
    return "undef";
  }
  return "?";
}

inline std::string to_string(const Instruction &in) {
  std::ostringstream os;
  const auto &ops = in.operands;
  switch (in.opcode) {
  case Opcode::Const:
    os << in.dest << " = " << to_string(ops[0]);
    break;
  case Opcode::BinOp:
    os << in.dest << " = " << to_string(ops[0]) << ' ' << to_string(in.arith)
       << ' ' << to_string(ops[1]);
    break;
  case Opcode::Compare:
    os << in.dest << " = " << to_string(ops[0]) << ' ' << to_string(in.rel)
       << ' ' << to_string(ops[1]);
    break;
  case Opcode::Load:
    os << in.dest << " = load " << to_string(ops[0]);
    break;
  case Opcode::Store:
    os << "store " << to_string(ops[0]) << ", " << to_string(ops[1]);
    break;
  case Opcode::Phi:
    os << in.dest << " = phi ";
    for (std::size_t i = 0; i < ops.size(); ++i)
      os << (i ? ", [" : "[") << in.labels[i] << ": " << to_string(ops[i]) << ']';
    break;
  case Opcode::Print:
    os << "print " << to_string(ops[0]);
    break;
  case Opcode::Branch:
    os << "br " << to_string(ops[0]) << ", " << in.labels[0] << ", " << in.labels[1];
    break;
  case Opcode::Jump:
    os << "jmp " << in.labels[0];
    break;
  case Opcode::Return:
    os << "ret " << to_string(ops[0]);
    break;
  }
  return os.str();
}

/// Canonical text: deterministic, one instruction per line.
inline std::string print_ir(const Program &prog) {
  std::ostringstream os;
  for (const auto &fn : prog.functions) {
    os << "func " << fn.name << '(';
    for (std::size_t i = 0; i < fn.params.size(); ++i)
      os << (i ? ", " : "") << fn.params[i];
    os << ") {\n";
    for (const auto &b : fn.blocks) {
      os << b.label << ":\n";
      for (const auto &in : b.instructions)
        os << "  " << to_string(in) << '\n';
    }
    os << "}\n";
  }
  return os.str();
}

} // namespace pfq
