// pfq/interpreter.hpp - concrete execution of mini-IR programs.
#pragma once

#include "pfq/ir.hpp"

#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace pfq {

/// One executed instruction. `value` is set for value-producing instructions,
/// `taken` for conditional branches.
struct TraceStep {
  std::size_t instr = 0; // InstrIndex id
  std::optional<Word> value;
  std::optional<bool> taken;

  bool operator==(const TraceStep &) const = default;
};

struct ExecResult {
  Word return_value = 0;
  std::vector<Word> prints;
  std::vector<TraceStep> trace;

  /// The sequence of conditional branch decisions along the trace.
  std::vector<bool> decisions() const {
    std::vector<bool> out;
    for (const auto &s : trace)
      if (s.taken)
        out.push_back(*s.taken);
    return out;
  }

  bool operator==(const ExecResult &) const = default;
};

/// Raised when the step budget runs out. Carries everything executed so far.
class FuelExhausted : public Error {
public:
  explicit FuelExhausted(ExecResult partial)
      : Error("fuel exhausted (possible non-termination)"),
        partial_(std::move(partial)) {}
  const ExecResult &partial() const { return partial_; }

private:
  ExecResult partial_;
};

class Interpreter {
public:
  Interpreter(const Program &prog, MachineConfig cfg)
      : fn_(prog.main()), cfg_(cfg), index_(fn_),
        rng_(cfg.undef_policy.seed) {
    cfg_.validate();
  }

  ExecResult run(const std::map<std::string, Word> &inputs, std::size_t fuel) {
    env_.clear();
    memory_.clear();
    for (const auto &p : fn_.params) {
      auto it = inputs.find(p);
      if (it == inputs.end())
        throw Error("missing input for parameter '" + p + "'");
      env_[p] = cfg_.wrap(it->second);
    }

    ExecResult res;
    std::size_t block = 0, prev = kNoBlock;
    std::size_t steps = 0;
    while (true) {
      const Block &blk = fn_.blocks[block];
      std::size_t i = 0;

      // Phis read their operands before any of them is written.
      std::vector<std::pair<const Instruction *, Word>> phi_vals;
      for (; i < blk.instructions.size() &&
             blk.instructions[i].opcode == Opcode::Phi;
           ++i) {
        const auto &phi = blk.instructions[i];
        if (++steps > fuel)
          throw FuelExhausted(std::move(res));
        std::optional<Word> v;
        for (std::size_t k = 0; k < phi.labels.size(); ++k)
          if (prev != kNoBlock && phi.labels[k] == fn_.blocks[prev].label) {
            v = read(phi.operands[k]);
            break;
          }
        if (!v)
          throw Error("phi '" + phi.dest + "' has no incoming value for the "
                      "executed edge");
        phi_vals.emplace_back(&phi, *v);
        res.trace.push_back({index_.id(block, i), *v, std::nullopt});
      }
      for (auto &[phi, v] : phi_vals)
        env_[phi->dest] = v;

      for (; i < blk.instructions.size(); ++i) {
        const auto &in = blk.instructions[i];
        if (++steps > fuel)
          throw FuelExhausted(std::move(res));
        TraceStep step{index_.id(block, i), std::nullopt, std::nullopt};
        const auto &ops = in.operands;
        switch (in.opcode) {
        case Opcode::Const:
          step.value = read(ops[0]);
          break;
        case Opcode::BinOp: {
          // Operands are read left to right so undef draws are reproducible.
          Word a = read(ops[0]), b = read(ops[1]);
          step.value = apply(in.arith, a, b, cfg_);
          break;
        }
        case Opcode::Compare: {
          Word a = read(ops[0]), b = read(ops[1]);
          step.value = apply(in.rel, a, b, cfg_) ? 1 : 0;
          break;
        }
        case Opcode::Load: {
          Word addr = read(ops[0]);
          auto it = memory_.find(addr);
          step.value = it == memory_.end() ? 0 : it->second;
          break;
        }
        case Opcode::Store: {
          Word addr = read(ops[0]);
          Word value = read(ops[1]);
          memory_[addr] = value;
          break;
        }
        case Opcode::Phi:
          throw Error("phi after non-phi instruction");
        case Opcode::Print:
          res.prints.push_back(read(ops[0]));
          break;
        case Opcode::Branch: {
          bool taken = read(ops[0]) != 0;
          step.taken = taken;
          res.trace.push_back(step);
          prev = block;
          block = target(in.labels[taken ? 0 : 1]);
          goto next_block;
        }
        case Opcode::Jump:
          res.trace.push_back(step);
          prev = block;
          block = target(in.labels[0]);
          goto next_block;
        case Opcode::Return:
          res.return_value = read(ops[0]);
          res.trace.push_back(step);
          return res;
        }
        if (step.value)
          env_[in.dest] = *step.value;
        res.trace.push_back(step);
      }
      throw Error("block '" + blk.label + "' fell through without terminator");
    next_block:;
    }
  }

  const InstrIndex &index() const { return index_; }

private:
  static constexpr std::size_t kNoBlock = static_cast<std::size_t>(-1);

  Word read(const Operand &op) {
    switch (op.kind()) {
    case Operand::Kind::Literal:
      return cfg_.wrap_signed(op.value());
    case Operand::Kind::Undef:
      if (cfg_.undef_policy.kind == UndefPolicy::Kind::Fixed)
        return cfg_.wrap(cfg_.undef_policy.value);
      return cfg_.wrap(rng_());
    case Operand::Kind::Var: {
      auto it = env_.find(op.name());
      if (it == env_.end())
        throw Error("read of unassigned variable '" + op.name() + "'");
      return it->second;
    }
    }
    return 0;
  }

  std::size_t target(const std::string &label) const {
    auto b = fn_.find_block(label);
    if (!b)
      throw Error("undefined label '" + label + "'");
    return *b;
  }

  const Function &fn_;
  MachineConfig cfg_;
  InstrIndex index_;
  std::mt19937_64 rng_;
  std::map<std::string, Word> env_;
  std::map<Word, Word> memory_;
};

/// Runs `prog` on `inputs` for at most `fuel` instructions. Memory starts
/// zeroed; every `undef` read is resolved by `cfg.undef_policy`.
inline ExecResult interpret(const Program &prog, const MachineConfig &cfg,
                            const std::map<std::string, Word> &inputs,
                            std::size_t fuel) {
  return Interpreter(prog, cfg).run(inputs, fuel);
}

} // namespace pfq
