// Random structured mini-IR programs for property tests.
#pragma once

#include "pfq/ir.hpp"

#include <map>
#include <random>
#include <string>
#include <vector>

namespace pfq::testing {

struct GenOptions {
  std::size_t max_statements = 14;
  std::size_t max_depth = 2;
  std::size_t max_params = 2;
  bool memory = true;
  bool loops = true;
  bool prints = true;
};

/// Emits phi-free programs where every variable is assigned in the entry
/// block, so no path reads an unassigned name. Loops are counted down from a
/// small constant and always terminate.
class ProgramGenerator {
public:
  ProgramGenerator(std::uint64_t seed, GenOptions opts = {})
      : rng_(seed), opts_(opts) {}

  Program next() {
    fn_ = Function{};
    fn_.name = "main";
    blocks_ = 0;
    budget_ = opts_.max_statements;
    counters_ = 0;
    vars_ = {"x", "y", "z", "w"};
    std::size_t nparams = pick(opts_.max_params + 1);
    static const char *param_names[] = {"a", "b", "d"};
    for (std::size_t i = 0; i < nparams; ++i)
      fn_.params.push_back(param_names[i]);

    open_block();
    for (const auto &v : vars_)
      emit(Instruction::make_const(v, Operand::literal(small_literal())));
    statements(0);
    emit(Instruction::make_return(operand()));
    Program p;
    p.functions.push_back(std::move(fn_));
    return p;
  }

  std::map<std::string, Word> inputs(const Program &p, unsigned bit_width) {
    MachineConfig cfg;
    cfg.bit_width = bit_width;
    std::map<std::string, Word> out;
    for (const auto &param : p.main().params)
      out[param] = cfg.wrap(rng_());
    return out;
  }

  std::mt19937_64 &rng() { return rng_; }

private:
  std::size_t pick(std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_);
  }
  std::int64_t small_literal() {
    return std::uniform_int_distribution<std::int64_t>(-3, 9)(rng_);
  }

  std::string readable_var() {
    std::size_t n = vars_.size() + fn_.params.size();
    std::size_t k = pick(n);
    return k < vars_.size() ? vars_[k] : fn_.params[k - vars_.size()];
  }
  Operand operand() {
    if (pick(4) == 0)
      return Operand::literal(small_literal());
    return Operand::var(readable_var());
  }
  const std::string &target_var() { return vars_[pick(vars_.size())]; }

  std::string new_label() { return "b" + std::to_string(blocks_++); }
  void open_block(std::string label = {}) {
    Block b;
    b.label = label.empty() ? new_label() : std::move(label);
    fn_.blocks.push_back(std::move(b));
  }
  void emit(Instruction in) { fn_.blocks.back().instructions.push_back(std::move(in)); }

  void statements(std::size_t depth) {
    std::size_t count = 1 + pick(4);
    for (std::size_t s = 0; s < count && budget_ > 0; ++s) {
      --budget_;
      std::size_t kind = pick(depth < opts_.max_depth ? 10 : 8);
      switch (kind) {
      case 0:
      case 1:
      case 2:
        emit(Instruction::make_binop(target_var(),
                                     static_cast<ArithOp>(pick(3)), operand(),
                                     operand()));
        break;
      case 3:
        emit(Instruction::make_compare(target_var(),
                                       static_cast<Relation>(pick(6)),
                                       operand(), operand()));
        break;
      case 4:
        emit(Instruction::make_const(target_var(),
                                     Operand::literal(small_literal())));
        break;
      case 5:
        if (opts_.memory) {
          emit(Instruction::make_store(operand(), operand()));
          break;
        }
        [[fallthrough]];
      case 6:
        if (opts_.memory) {
          emit(Instruction::make_load(target_var(), operand()));
          break;
        }
        [[fallthrough]];
      case 7:
        if (opts_.prints)
          emit(Instruction::make_print(operand()));
        else
          emit(Instruction::make_binop(target_var(), ArithOp::Add, operand(),
                                       operand()));
        break;
      case 8:
        if_else(depth);
        break;
      case 9:
        if (opts_.loops)
          loop(depth);
        else
          if_else(depth);
        break;
      }
    }
  }

  void if_else(std::size_t depth) {
    std::string cond = target_var();
    emit(Instruction::make_compare(cond, static_cast<Relation>(pick(6)),
                                   operand(), operand()));
    std::string t = new_label(), e = new_label(), j = new_label();
    emit(Instruction::make_branch(Operand::var(cond), t, e));
    open_block(t);
    statements(depth + 1);
    emit(Instruction::make_jump(j));
    open_block(e);
    if (pick(3) != 0)
      statements(depth + 1);
    emit(Instruction::make_jump(j));
    open_block(j);
  }

  void loop(std::size_t depth) {
    std::string counter = "k" + std::to_string(counters_++);
    std::string test = "t" + std::to_string(counters_ - 1);
    emit(Instruction::make_const(counter, Operand::literal(1 + static_cast<std::int64_t>(pick(3)))));
    std::string h = new_label(), body = new_label(), exit = new_label();
    emit(Instruction::make_jump(h));
    open_block(h);
    emit(Instruction::make_compare(test, Relation::Gt, Operand::var(counter),
                                   Operand::literal(0)));
    emit(Instruction::make_branch(Operand::var(test), body, exit));
    open_block(body);
    statements(depth + 1);
    emit(Instruction::make_binop(counter, ArithOp::Sub, Operand::var(counter),
                                 Operand::literal(1)));
    emit(Instruction::make_jump(h));
    open_block(exit);
  }

  std::mt19937_64 rng_;
  GenOptions opts_;
  Function fn_;
  std::size_t blocks_ = 0;
  std::size_t budget_ = 0;
  std::size_t counters_ = 0;
  std::vector<std::string> vars_;
};

} // namespace pfq::testing
