// pfq/ir.hpp - in-memory form of the mini intermediate representation.
//
// A Program holds one function (`main`) made of labelled blocks. Every block
// ends in exactly one terminator (br / jmp / ret). Operands are variable
// references, integer literals, or the distinguished `undef` token.
#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace pfq {

using Word = std::uint64_t;

/// Base class of every error raised by the toolkit.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Error with a 1-based source position.
class ParseError : public Error {
public:
  ParseError(std::size_t line, std::size_t column, const std::string &msg)
      : Error(std::to_string(line) + ":" + std::to_string(column) + ": " + msg),
        line_(line), column_(column), message_(msg) {}

  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }
  const std::string &message() const { return message_; }

private:
  std::size_t line_;
  std::size_t column_;
  std::string message_;
};

class Operand {
public:
  enum class Kind : std::uint8_t { Var, Literal, Undef };

  Operand() : kind_(Kind::Undef) {}

  static Operand var(std::string name) {
    Operand op;
    op.kind_ = Kind::Var;
    op.name_ = std::move(name);
    return op;
  }
  static Operand literal(std::int64_t value) {
    Operand op;
    op.kind_ = Kind::Literal;
    op.value_ = value;
    return op;
  }
  static Operand undef() { return Operand(); }

  Kind kind() const { return kind_; }
  bool is_var() const { return kind_ == Kind::Var; }
  bool is_literal() const { return kind_ == Kind::Literal; }
  bool is_undef() const { return kind_ == Kind::Undef; }

  const std::string &name() const { return name_; }
  std::int64_t value() const { return value_; }

  bool operator==(const Operand &other) const {
    if (kind_ != other.kind_)
      return false;
    switch (kind_) {
    case Kind::Var:
      return name_ == other.name_;
    case Kind::Literal:
      return value_ == other.value_;
    case Kind::Undef:
      return true;
    }
    return false;
  }
  bool operator!=(const Operand &other) const { return !(*this == other); }

private:
  Kind kind_;
  std::string name_;
  std::int64_t value_ = 0;
};

enum class Opcode : std::uint8_t {
  Const,   // dest = literal | undef
  BinOp,   // dest = lhs (+|-|*) rhs
  Compare, // dest = lhs rel rhs
  Load,    // dest = load addr
  Store,   // store addr, value
  Phi,     // dest = phi [label: op], ...
  Print,   // print op
  Branch,  // br cond, then, else
  Jump,    // jmp target
  Return,  // ret op
};

enum class ArithOp : std::uint8_t { Add, Sub, Mul };
enum class Relation : std::uint8_t { Lt, Le, Gt, Ge, Eq, Ne };

inline std::string_view to_string(ArithOp op) {
  switch (op) {
  case ArithOp::Add:
    return "+";
  case ArithOp::Sub:
    return "-";
  case ArithOp::Mul:
    return "*";
  }
  return "?";
}

inline std::string_view to_string(Relation rel) {
  switch (rel) {
  case Relation::Lt:
    return "<";
  case Relation::Le:
    return "<=";
  case Relation::Gt:
    return ">";
  case Relation::Ge:
    return ">=";
  case Relation::Eq:
    return "==";
  case Relation::Ne:
    return "!=";
  }
  return "?";
}

/// The relation that holds exactly when `rel` does not.
inline Relation negate(Relation rel) {
  switch (rel) {
  case Relation::Lt:
    return Relation::Ge;
  case Relation::Le:
    return Relation::Gt;
  case Relation::Gt:
    return Relation::Le;
  case Relation::Ge:
    return Relation::Lt;
  case Relation::Eq:
    return Relation::Ne;
  case Relation::Ne:
    return Relation::Eq;
  }
  return rel;
}

/// One IR instruction. The meaning of `operands` and `labels` depends on the
/// opcode:
///
///   Const    operands = [value]
///   BinOp    operands = [lhs, rhs]
///   Compare  operands = [lhs, rhs]
///   Load     operands = [addr]
///   Store    operands = [addr, value]
///   Phi      operands[i] flows in from block labels[i]
///   Print    operands = [value]
///   Branch   operands = [cond], labels = [then, else]
///   Jump     labels = [target]
///   Return   operands = [value]
struct Instruction {
  Opcode opcode = Opcode::Return;
  std::string dest;
  ArithOp arith = ArithOp::Add;
  Relation rel = Relation::Eq;
  std::vector<Operand> operands;
  std::vector<std::string> labels;
  std::size_t line = 0; // source line, 0 when synthesized; not part of equality

  static Instruction make_const(std::string dest, Operand value) {
    Instruction in;
    in.opcode = Opcode::Const;
    in.dest = std::move(dest);
    in.operands = {std::move(value)};
    return in;
  }
  static Instruction make_binop(std::string dest, ArithOp op, Operand lhs,
                                Operand rhs) {
    Instruction in;
    in.opcode = Opcode::BinOp;
    in.dest = std::move(dest);
    in.arith = op;
    in.operands = {std::move(lhs), std::move(rhs)};
    return in;
  }
  static Instruction make_compare(std::string dest, Relation rel, Operand lhs,
                                  Operand rhs) {
    Instruction in;
    in.opcode = Opcode::Compare;
    in.dest = std::move(dest);
    in.rel = rel;
    in.operands = {std::move(lhs), std::move(rhs)};
    return in;
  }
  static Instruction make_load(std::string dest, Operand addr) {
    Instruction in;
    in.opcode = Opcode::Load;
    in.dest = std::move(dest);
    in.operands = {std::move(addr)};
    return in;
  }
  static Instruction make_store(Operand addr, Operand value) {
    Instruction in;
    in.opcode = Opcode::Store;
    in.operands = {std::move(addr), std::move(value)};
    return in;
  }
  static Instruction
  make_phi(std::string dest,
           std::vector<std::pair<std::string, Operand>> incoming) {
    Instruction in;
    in.opcode = Opcode::Phi;
    in.dest = std::move(dest);
    for (auto &[label, op] : incoming) {
      in.labels.push_back(label);
      in.operands.push_back(op);
    }
    return in;
  }
  static Instruction make_print(Operand value) {
    Instruction in;
    in.opcode = Opcode::Print;
    in.operands = {std::move(value)};
    return in;
  }
  static Instruction make_branch(Operand cond, std::string then_label,
                                 std::string else_label) {
    Instruction in;
    in.opcode = Opcode::Branch;
    in.operands = {std::move(cond)};
    in.labels = {std::move(then_label), std::move(else_label)};
    return in;
  }
  static Instruction make_jump(std::string target) {
    Instruction in;
    in.opcode = Opcode::Jump;
    in.labels = {std::move(target)};
    return in;
  }
  static Instruction make_return(Operand value) {
    Instruction in;
    in.opcode = Opcode::Return;
    in.operands = {std::move(value)};
    return in;
  }

  bool is_terminator() const {
    return opcode == Opcode::Branch || opcode == Opcode::Jump ||
           opcode == Opcode::Return;
  }
  bool has_dest() const { return !dest.empty(); }
  /// Stores, prints and terminators are observable; everything else is pure.
  bool has_side_effect() const {
    return opcode == Opcode::Store || opcode == Opcode::Print ||
           is_terminator();
  }

  bool operator==(const Instruction &other) const {
    if (opcode != other.opcode || dest != other.dest ||
        operands != other.operands || labels != other.labels)
      return false;
    if (opcode == Opcode::BinOp && arith != other.arith)
      return false;
    if (opcode == Opcode::Compare && rel != other.rel)
      return false;
    return true;
  }
  bool operator!=(const Instruction &other) const { return !(*this == other); }
};

struct Block {
  std::string label;
  std::vector<Instruction> instructions;

  const Instruction &terminator() const { return instructions.back(); }
  Instruction &terminator() { return instructions.back(); }

  bool operator==(const Block &) const = default;
};

struct Function {
  std::string name;
  std::vector<std::string> params;
  std::vector<Block> blocks;

  const std::string &entry() const { return blocks.front().label; }

  std::optional<std::size_t> find_block(std::string_view label) const {
    for (std::size_t i = 0; i < blocks.size(); ++i)
      if (blocks[i].label == label)
        return i;
    return std::nullopt;
  }

  std::size_t instruction_count() const {
    std::size_t n = 0;
    for (const auto &b : blocks)
      n += b.instructions.size();
    return n;
  }

  bool operator==(const Function &) const = default;
};

struct Program {
  std::vector<Function> functions;

  /// v1 programs carry exactly one function, `main`.
  const Function &main() const { return functions.front(); }
  Function &main() { return functions.front(); }

  bool operator==(const Program &) const = default;
};

/// Position of an instruction inside a function.
struct InstrRef {
  std::size_t block = 0;
  std::size_t index = 0;

  auto operator<=>(const InstrRef &) const = default;
};

/// Dense numbering of a function's instructions in program order. Analyses key
/// their per-instruction results by these ids.
class InstrIndex {
public:
  explicit InstrIndex(const Function &fn) {
    for (std::size_t b = 0; b < fn.blocks.size(); ++b) {
      block_start_.push_back(refs_.size());
      for (std::size_t i = 0; i < fn.blocks[b].instructions.size(); ++i)
        refs_.push_back({b, i});
    }
  }

  std::size_t size() const { return refs_.size(); }
  InstrRef ref(std::size_t id) const { return refs_[id]; }
  std::size_t id(InstrRef r) const { return block_start_[r.block] + r.index; }
  std::size_t id(std::size_t block, std::size_t index) const {
    return block_start_[block] + index;
  }

private:
  std::vector<InstrRef> refs_;
  std::vector<std::size_t> block_start_;
};

/// How reads of `undef` are resolved by the interpreter.
struct UndefPolicy {
  enum class Kind : std::uint8_t { Fixed, SeededRandom };
  Kind kind = Kind::Fixed;
  Word value = 0;
  std::uint64_t seed = 0;

  static UndefPolicy fixed(Word v) { return {Kind::Fixed, v, 0}; }
  static UndefPolicy seeded_random(std::uint64_t seed) {
    return {Kind::SeededRandom, 0, seed};
  }
};

struct MachineConfig {
  unsigned bit_width = 32;
  UndefPolicy undef_policy{};

  Word mask() const {
    return bit_width >= 64 ? ~Word{0} : ((Word{1} << bit_width) - 1);
  }
  Word wrap(Word v) const { return v & mask(); }
  Word wrap_signed(std::int64_t v) const {
    return wrap(static_cast<Word>(v));
  }
  /// Two's-complement interpretation of a wrapped word.
  std::int64_t to_signed(Word v) const {
    v = wrap(v);
    if (bit_width >= 64)
      return static_cast<std::int64_t>(v);
    Word sign = Word{1} << (bit_width - 1);
    return (v & sign) ? static_cast<std::int64_t>(v) -
                            static_cast<std::int64_t>(Word{1} << bit_width)
                      : static_cast<std::int64_t>(v);
  }

  void validate() const {
    if (bit_width < 2 || bit_width > 64)
      throw Error("bit width must lie in [2, 64], got " +
                  std::to_string(bit_width));
  }
};

inline Word apply(ArithOp op, Word lhs, Word rhs, const MachineConfig &cfg) {
  switch (op) {
  case ArithOp::Add:
    return cfg.wrap(lhs + rhs);
  case ArithOp::Sub:
    return cfg.wrap(lhs - rhs);
  case ArithOp::Mul:
    return cfg.wrap(lhs * rhs);
  }
  return 0;
}

inline bool apply(Relation rel, Word lhs, Word rhs, const MachineConfig &cfg) {
  std::int64_t a = cfg.to_signed(lhs), b = cfg.to_signed(rhs);
  switch (rel) {
  case Relation::Lt:
    return a < b;
  case Relation::Le:
    return a <= b;
  case Relation::Gt:
    return a > b;
  case Relation::Ge:
    return a >= b;
  case Relation::Eq:
    return a == b;
  case Relation::Ne:
    return a != b;
  }
  return false;
}

/// Strips an SSA version suffix: `i2` -> `i`, `x2_3` -> `x2`. Names without a
/// suffix map to themselves.
inline std::string source_name(std::string_view ssa_name) {
  std::size_t end = ssa_name.size();
  while (end > 0 && ssa_name[end - 1] >= '0' && ssa_name[end - 1] <= '9')
    --end;
  if (end == ssa_name.size() || end == 0)
    return std::string(ssa_name);
  if (ssa_name[end - 1] == '_' && end > 1)
    --end;
  return std::string(ssa_name.substr(0, end));
}

/// All names defined in the function: parameters first, then instruction
/// destinations in program order (duplicates kept).
inline std::vector<std::string> defined_names(const Function &fn) {
  std::vector<std::string> out(fn.params.begin(), fn.params.end());
  for (const auto &b : fn.blocks)
    for (const auto &in : b.instructions)
      if (in.has_dest())
        out.push_back(in.dest);
  return out;
}

} // namespace pfq
