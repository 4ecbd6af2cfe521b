// pfq/pathcond.hpp - path conditions of single executions.
//
// A walk follows one path through an SSA program and records, in execution
// order:
//   - a definition `name = term` for each executed const, arithmetic, load and
//     phi instruction,
//   - a branch condition for each executed conditional branch, kept as the
//     condition plus the direction taken,
//   - a store step for each executed store.
// Compares contribute no conjunct of their own. Their boolean term is used
// directly as a branch condition, or as ite(cmp, 1, 0) where a value is read.
//
// A name defined again on a later loop iteration is renamed `name__k` for the
// k-th execution. Each `undef` read becomes a fresh name `undef__N`.
// Parameters listed as symbolic (all of them when walking by decisions) are
// free names; the others are replaced by their concrete input value.
#pragma once

#include "pfq/interpreter.hpp"
#include "pfq/smtlib2.hpp"
#include "pfq/ssa.hpp"
#include "pfq/term.hpp"

#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace pfq {

struct PathSpec {
  enum class Mode : std::uint8_t { Concrete, Decisions };
  Mode mode = Mode::Concrete;
  std::map<std::string, Word> inputs;
  std::vector<bool> decisions;
  std::size_t fuel = 10000;

  static PathSpec concrete(std::map<std::string, Word> inputs, std::size_t fuel = 10000) {
    PathSpec s;
    s.inputs = std::move(inputs);
    s.fuel = fuel;
    return s;
  }
  static PathSpec decided(std::vector<bool> decisions, std::size_t fuel = 10000) {
    PathSpec s;
    s.mode = Mode::Decisions;
    s.decisions = std::move(decisions);
    s.fuel = fuel;
    return s;
  }
};

struct Conjunct {
  enum class Kind : std::uint8_t { Def, Branch, Store };
  Kind kind = Kind::Def;
  std::string name;  // Def: defined name; Store: array name
  Term term;         // Def: value; Branch: condition
  bool taken = true; // Branch only
  Term index, value; // Store only

  static Conjunct def(std::string name, Term value) {
    Conjunct c;
    c.name = std::move(name);
    c.term = std::move(value);
    return c;
  }
  static Conjunct branch(Term cond, bool taken) {
    Conjunct c;
    c.kind = Kind::Branch;
    c.term = std::move(cond);
    c.taken = taken;
    return c;
  }
  static Conjunct store(Term index, Term value) {
    Conjunct c;
    c.kind = Kind::Store;
    c.name = kMemoryArray;
    c.index = std::move(index);
    c.value = std::move(value);
    return c;
  }

  /// The condition that holds on this path: the branch condition, or its
  /// structural negation when the else-arm was taken.
  Term holds() const { return taken ? term : term::negate(term); }

  bool operator==(const Conjunct &o) const {
    auto same = [](const Term &a, const Term &b) { return (!a && !b) || (a && b && equal(a, b)); };
    return kind == o.kind && name == o.name && taken == o.taken && same(term, o.term) &&
           same(index, o.index) && same(value, o.value);
  }
};

struct PathCondition {
  unsigned bit_width = 32;
  std::vector<Conjunct> conjuncts;
  std::vector<std::string> symbolic_inputs;
  std::vector<std::string> fresh; // names standing for undef reads
  std::string target;             // e.g. "ret_bb: ret i2"

  std::size_t size() const { return conjuncts.size(); }
  bool operator==(const PathCondition &) const = default;
};

/// Raised when a decision-directed walk meets more branches than decisions.
class DecisionUnderrun : public Error {
public:
  using Error::Error;
};

/// Raised when a walk exceeds its step budget.
class PathFuelExhausted : public Error {
public:
  using Error::Error;
};

namespace detail {

class PathWalker {
public:
  PathWalker(const SsaProgram &prog, const PathSpec &spec, const std::set<std::string> &symbolic,
             const MachineConfig &cfg)
      : fn_(prog.main()), spec_(spec), cfg_(cfg), rng_(cfg.undef_policy.seed) {
    cfg_.validate();
    pc_.bit_width = cfg_.bit_width;
    bv_ = Sort::bitvec(cfg_.bit_width);
    memory_ = term::name(kMemoryArray, Sort::array(cfg_.bit_width, cfg_.bit_width));
    for (const auto &p : fn_.params) {
      bool sym = spec.mode == PathSpec::Mode::Decisions || symbolic.count(p);
      Value v;
      if (sym) {
        v.term = term::name(p, bv_);
        pc_.symbolic_inputs.push_back(p);
      }
      if (spec.mode == PathSpec::Mode::Concrete) {
        auto it = spec.inputs.find(p);
        if (it == spec.inputs.end())
          throw Error("missing input for parameter '" + p + "'");
        v.value = cfg_.wrap(it->second);
        if (!sym)
          v.term = term::bv(*v.value, cfg_.bit_width);
      }
      env_[p] = v;
    }
  }

  PathCondition run() {
    std::size_t block = 0, prev = kNone, steps = 0, decision = 0;
    while (true) {
      const Block &blk = fn_.blocks[block];
      std::size_t i = 0;
      std::vector<std::pair<std::string, Value>> phis;
      for (; i < blk.instructions.size() && blk.instructions[i].opcode == Opcode::Phi; ++i) {
        const Instruction &phi = blk.instructions[i];
        step(steps);
        std::optional<Value> v;
        for (std::size_t k = 0; k < phi.labels.size(); ++k)
          if (prev != kNone && phi.labels[k] == fn_.blocks[prev].label)
            v = read_value(phi.operands[k]);
        if (!v)
          throw Error("phi '" + phi.dest + "' has no incoming value for the executed edge");
        phis.emplace_back(phi.dest, *v);
      }
      for (auto &[dest, v] : phis)
        define(dest, v);

      for (; i < blk.instructions.size(); ++i) {
        const Instruction &in = blk.instructions[i];
        step(steps);
        const auto &ops = in.operands;
        switch (in.opcode) {
        case Opcode::Const:
          define(in.dest, read_value(ops[0]));
          break;
        case Opcode::BinOp: {
          Value a = read_value(ops[0]), b = read_value(ops[1]);
          Value r;
          TermOp op = in.arith == ArithOp::Add ? TermOp::Add
                      : in.arith == ArithOp::Sub ? TermOp::Sub
                                                 : TermOp::Mul;
          r.term = term::apply(op, {a.term, b.term});
          if (a.value && b.value)
            r.value = apply(in.arith, *a.value, *b.value, cfg_);
          define(in.dest, r);
          break;
        }
        case Opcode::Compare: {
          Value a = read_value(ops[0]), b = read_value(ops[1]);
          Value r;
          r.cond = compare_term(in.rel, a.term, b.term);
          r.term = term::ite(r.cond, term::bv(1, cfg_.bit_width), term::bv(0, cfg_.bit_width));
          if (a.value && b.value)
            r.value = apply(in.rel, *a.value, *b.value, cfg_) ? 1 : 0;
          env_[in.dest] = r; // no conjunct
          break;
        }
        case Opcode::Load: {
          Value a = read_value(ops[0]);
          Value r;
          r.term = term::select(memory_, a.term);
          if (a.value && concrete_memory_) {
            auto it = cells_.find(*a.value);
            r.value = it == cells_.end() ? 0 : it->second;
          }
          define(in.dest, r);
          break;
        }
        case Opcode::Store: {
          Value a = read_value(ops[0]), v = read_value(ops[1]);
          pc_.conjuncts.push_back(Conjunct::store(a.term, v.term));
          memory_ = term::store(memory_, a.term, v.term);
          if (a.value && v.value)
            cells_[*a.value] = *v.value;
          else
            concrete_memory_ = false;
          break;
        }
        case Opcode::Print:
          read_value(ops[0]);
          break;
        case Opcode::Branch: {
          Value c = read_value(ops[0]);
          Term cond = c.cond ? c.cond : term::distinct(c.term, term::bv(0, cfg_.bit_width));
          bool taken;
          if (spec_.mode == PathSpec::Mode::Decisions) {
            if (decision >= spec_.decisions.size())
              throw DecisionUnderrun("decision list ends before branch in '" + blk.label + "'");
            taken = spec_.decisions[decision++];
          } else {
            taken = *c.value != 0;
          }
          pc_.conjuncts.push_back(Conjunct::branch(cond, taken));
          prev = block;
          block = target(in.labels[taken ? 0 : 1]);
          goto next_block;
        }
        case Opcode::Jump:
          prev = block;
          block = target(in.labels[0]);
          goto next_block;
        case Opcode::Return: {
          Value r = read_value(ops[0]);
          pc_.target = blk.label + ": ret " + smt2_term(r.term);
          return pc_;
        }
        case Opcode::Phi:
          throw Error("phi after non-phi instruction in '" + blk.label + "'");
        }
      }
      throw Error("block '" + blk.label + "' fell through without terminator");
    next_block:;
    }
  }

private:
  static constexpr std::size_t kNone = static_cast<std::size_t>(-1);

  struct Value {
    Term term;                 // bitvector term
    Term cond;                 // boolean term, compares only
    std::optional<Word> value; // concrete value when known
  };

  void step(std::size_t &steps) {
    if (++steps > spec_.fuel)
      throw PathFuelExhausted("fuel exhausted after " + std::to_string(spec_.fuel) + " steps");
  }

  Term compare_term(Relation rel, const Term &a, const Term &b) {
    switch (rel) {
    case Relation::Lt:
      return term::compare(TermOp::Slt, a, b);
    case Relation::Le:
      return term::compare(TermOp::Sle, a, b);
    case Relation::Gt:
      return term::compare(TermOp::Sgt, a, b);
    case Relation::Ge:
      return term::compare(TermOp::Sge, a, b);
    case Relation::Eq:
      return term::eq(a, b);
    case Relation::Ne:
      return term::distinct(a, b);
    }
    return nullptr;
  }

  Value read_value(const Operand &op) {
    Value v;
    switch (op.kind()) {
    case Operand::Kind::Literal:
      v.value = cfg_.wrap_signed(op.value());
      v.term = term::bv(*v.value, cfg_.bit_width);
      break;
    case Operand::Kind::Undef: {
      std::string name = "undef__" + std::to_string(pc_.fresh.size() + 1);
      pc_.fresh.push_back(name);
      v.term = term::name(name, bv_);
      if (spec_.mode == PathSpec::Mode::Concrete)
        v.value = cfg_.undef_policy.kind == UndefPolicy::Kind::Fixed
                      ? cfg_.wrap(cfg_.undef_policy.value)
                      : cfg_.wrap(rng_());
      break;
    }
    case Operand::Kind::Var: {
      auto it = env_.find(op.name());
      if (it == env_.end())
        throw Error("read of unassigned variable '" + op.name() + "'");
      v = it->second;
      break;
    }
    }
    return v;
  }

  /// Emits `dest = value` under the name for this execution of dest.
  void define(const std::string &dest, const Value &v) {
    std::size_t k = ++executions_[dest];
    std::string name = k == 1 ? dest : dest + "__" + std::to_string(k);
    pc_.conjuncts.push_back(Conjunct::def(name, v.term));
    Value bound;
    bound.term = term::name(name, bv_);
    bound.value = v.value;
    env_[dest] = bound;
  }

  std::size_t target(const std::string &label) const {
    auto b = fn_.find_block(label);
    if (!b)
      throw Error("undefined label '" + label + "'");
    return *b;
  }

  const Function &fn_;
  const PathSpec &spec_;
  MachineConfig cfg_;
  std::mt19937_64 rng_;
  Sort bv_;
  PathCondition pc_;
  std::map<std::string, Value> env_;
  std::map<std::string, std::size_t> executions_;
  Term memory_;
  std::map<Word, Word> cells_;
  bool concrete_memory_ = true;
};

} // namespace detail

/// Walks one path of `prog`. In concrete mode the path is the one the inputs
/// drive (undef reads are resolved by cfg.undef_policy exactly as the
/// interpreter does); in decision mode the branch directions come from the
/// decision list and every parameter is symbolic.
inline PathCondition path_condition(const SsaProgram &prog, const PathSpec &spec,
                                    const std::set<std::string> &symbolic = {},
                                    const MachineConfig &cfg = {}) {
  return detail::PathWalker(prog, spec, symbolic, cfg).run();
}

/// Depth-first enumeration of paths by decision prefix, then-arm first.
/// Paths that run out of fuel are skipped.
inline std::vector<PathCondition> enumerate_paths(const SsaProgram &prog, std::size_t max_paths,
                                                  std::size_t fuel,
                                                  const MachineConfig &cfg = {}) {
  std::vector<PathCondition> out;
  std::vector<std::vector<bool>> stack{{}};
  while (!stack.empty() && out.size() < max_paths) {
    std::vector<bool> prefix = std::move(stack.back());
    stack.pop_back();
    try {
      out.push_back(path_condition(prog, PathSpec::decided(prefix, fuel), {}, cfg));
    } catch (const DecisionUnderrun &) {
      std::vector<bool> t = prefix, e = prefix;
      t.push_back(true);
      e.push_back(false);
      stack.push_back(std::move(e));
      stack.push_back(std::move(t));
    } catch (const PathFuelExhausted &) {
    }
  }
  return out;
}

/// Line-oriented dump of a path condition. Terms use SMT-LIB2 syntax.
///
///   pc v1
///   width 32
///   symbolic a b
///   fresh undef__1
///   target ret_bb: ret i2
///   def i1 #x00000001
///   branch T (bvsge j2 n1)
///   store #x00000010 v
///   end
inline std::string write_pc(const PathCondition &pc) {
  std::ostringstream os;
  os << "pc v1\nwidth " << pc.bit_width << "\nsymbolic";
  for (const auto &s : pc.symbolic_inputs)
    os << ' ' << s;
  os << "\nfresh";
  for (const auto &s : pc.fresh)
    os << ' ' << s;
  os << "\ntarget " << pc.target << "\n";
  for (const auto &c : pc.conjuncts) {
    switch (c.kind) {
    case Conjunct::Kind::Def:
      os << "def " << c.name << ' ' << smt2_term(c.term) << "\n";
      break;
    case Conjunct::Kind::Branch:
      os << "branch " << (c.taken ? 'T' : 'F') << ' ' << smt2_term(c.term) << "\n";
      break;
    case Conjunct::Kind::Store:
      os << "store " << smt2_term(c.index) << ' ' << smt2_term(c.value) << "\n";
      break;
    }
  }
  os << "end\n";
  return os.str();
}

inline PathCondition read_pc(std::string_view text) {
  PathCondition pc;
  std::map<std::string, Sort> env;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  bool header = false, ended = false, have_width = false;
  auto fail = [&](const std::string &msg) -> void { throw ParseError(lineno, 1, msg); };
  auto words = [](const std::string &rest) {
    std::vector<std::string> out;
    std::istringstream ws(rest);
    for (std::string w; ws >> w;)
      out.push_back(w);
    return out;
  };
  // Splits "a rest" into the first word and everything after it.
  auto split = [](const std::string &s) -> std::pair<std::string, std::string> {
    std::size_t sp = s.find(' ');
    if (sp == std::string::npos)
      return {s, ""};
    return {s.substr(0, sp), s.substr(sp + 1)};
  };
  auto parse_term = [&](const std::string &t) {
    try {
      return parse_smt2_term(t, env);
    } catch (const ParseError &e) {
      throw ParseError(lineno, e.column(), e.message());
    }
  };
  // The two terms of a store line are consecutive s-expressions.
  auto split_terms = [&](const std::string &s) -> std::pair<std::string, std::string> {
    int depth = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      char c = s[i];
      if (c == '(')
        ++depth;
      else if (c == ')')
        --depth;
      else if (c == ' ' && depth == 0)
        return {s.substr(0, i), s.substr(i + 1)};
    }
    fail("store needs an index and a value");
    return {};
  };

  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r')
      line.pop_back();
    if (line.empty())
      continue;
    if (ended)
      fail("text after 'end'");
    auto [key, rest] = split(line);
    if (!header) {
      if (line != "pc v1")
        fail("expected 'pc v1' header");
      header = true;
      continue;
    }
    if (key == "width") {
      unsigned w = 0;
      try {
        w = static_cast<unsigned>(std::stoul(rest));
      } catch (const std::exception &) {
        fail("bad width");
      }
      MachineConfig probe;
      probe.bit_width = w;
      probe.validate();
      pc.bit_width = w;
      have_width = true;
      env[kMemoryArray] = Sort::array(w, w);
    } else if (!have_width) {
      fail("width must come first");
    } else if (key == "symbolic" || key == "fresh") {
      for (const auto &w : words(rest)) {
        (key == "symbolic" ? pc.symbolic_inputs : pc.fresh).push_back(w);
        env[w] = Sort::bitvec(pc.bit_width);
      }
    } else if (key == "target") {
      pc.target = rest;
    } else if (key == "def") {
      auto [name, t] = split(rest);
      if (name.empty() || t.empty())
        fail("def needs a name and a term");
      Term value = parse_term(t);
      if (!(value->sort == Sort::bitvec(pc.bit_width)))
        fail("def of '" + name + "' is not a bitvector of the declared width");
      pc.conjuncts.push_back(Conjunct::def(name, value));
      env[name] = Sort::bitvec(pc.bit_width);
    } else if (key == "branch") {
      auto [dir, t] = split(rest);
      if (dir != "T" && dir != "F")
        fail("branch direction must be T or F");
      Term cond = parse_term(t);
      if (!cond->sort.is_bool())
        fail("branch condition is not boolean");
      pc.conjuncts.push_back(Conjunct::branch(cond, dir == "T"));
    } else if (key == "store") {
      auto [a, v] = split_terms(rest);
      pc.conjuncts.push_back(Conjunct::store(parse_term(a), parse_term(v)));
    } else if (key == "end") {
      ended = true;
    } else {
      fail("unknown entry '" + key + "'");
    }
  }
  if (!ended)
    throw ParseError(lineno + 1, 1, "missing 'end'");
  return pc;
}

} // namespace pfq
