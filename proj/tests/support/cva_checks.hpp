// Trace-level checks of the CVA slice against the interpreter. Shared by the
// unit tests and the acceptance run.
#pragma once

#include "pfq/cva.hpp"
#include "pfq/interpreter.hpp"

#include <string>

namespace pfq::testing {

struct SliceCheck {
  std::size_t runs = 0;     // executions compared
  std::size_t diverged = 0; // skipped: branch decisions differed
  std::size_t no_fuel = 0;  // skipped: fuel ran out
  std::string failure;      // empty when every compared run agreed

  bool ok() const { return failure.empty(); }
};

/// Runs the cva output of `prog` under two undef policies and the original
/// program on the same inputs. Wherever two runs take the same branch
/// decisions, every Changed trace step must produce the same value in all
/// three. When every conditional branch is Changed the decisions must agree.
inline void check_slice(const SsaProgram &prog, const CvaConfig &cfg,
                        const std::map<std::string, Word> &inputs,
                        std::uint64_t policy_seed, SliceCheck &acc,
                        std::size_t fuel = 20000) {
  MarkMap marks = mark_fixpoint(prog, cfg);
  SsaProgram out = apply_undef(prog, marks, cfg);

  bool branches_changed = true;
  {
    InstrIndex idx(prog.main());
    for (std::size_t id = 0; id < marks.size(); ++id) {
      InstrRef r = idx.ref(id);
      const Instruction &in = prog.main().blocks[r.block].instructions[r.index];
      if (in.opcode == Opcode::Branch && marks[id] != Mark::Changed)
        branches_changed = false;
    }
  }

  MachineConfig fixed, random;
  fixed.undef_policy = UndefPolicy::fixed(0);
  random.undef_policy = UndefPolicy::seeded_random(policy_seed);
  ExecResult runs[3];
  try {
    runs[0] = interpret(prog.program, fixed, inputs, fuel);
    runs[1] = interpret(out.program, fixed, inputs, fuel);
    runs[2] = interpret(out.program, random, inputs, fuel);
  } catch (const FuelExhausted &) {
    ++acc.no_fuel;
    return;
  }

  auto compare = [&](const ExecResult &a, const ExecResult &b, const char *what) {
    if (a.decisions() != b.decisions()) {
      if (branches_changed && acc.failure.empty())
        acc.failure = std::string(what) + ": decisions differ although every branch is Changed";
      ++acc.diverged;
      return;
    }
    ++acc.runs;
    for (std::size_t k = 0; k < a.trace.size() && k < b.trace.size(); ++k) {
      const TraceStep &x = a.trace[k], &y = b.trace[k];
      if (marks[x.instr] == Mark::Changed && x.value != y.value && acc.failure.empty())
        acc.failure = std::string(what) + ": Changed instruction #" +
                      std::to_string(x.instr) + " differs at trace step " +
                      std::to_string(k);
    }
  };
  compare(runs[1], runs[2], "undef-independence");
  compare(runs[0], runs[1], "soundness");
  compare(runs[0], runs[2], "soundness");
}

} // namespace pfq::testing
