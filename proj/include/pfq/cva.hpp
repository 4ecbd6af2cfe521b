// pfq/cva.hpp - Change Value Analysis.
//
// Marks every instruction of an SSA program on the lattice
// Undefined < Unchanged < Changed. An instruction is Changed when it reads a
// version of one of the seed variables, or reads a value produced by a Changed
// instruction (phi operands included). A load is additionally Changed when a
// Changed store may execute before it. Everything else that is reachable ends
// Unchanged; unreachable instructions stay Undefined.
//
// The marking is a forward data-dependence slice only. Control dependence
// never promotes a mark: branches that guard Changed code but compute nothing
// Changed are left Unchanged, so their conditions may later be replaced by
// `undef` and folded away. That deliberately introduces undefined behaviour on
// the paths the symbolic executor does not care about.
//
// apply_undef then replaces operands with `undef` inside instructions that are
// not Changed. Instructions whose results (transitively, and through memory)
// feed a Changed instruction are never rewritten, so the values the slice
// observes are unaffected by the substitution.
#pragma once

#include "pfq/cfg.hpp"
#include "pfq/ir.hpp"
#include "pfq/ssa.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace pfq {

enum class Mark : std::uint8_t { Undefined = 0, Unchanged = 1, Changed = 2 };

inline std::string_view to_string(Mark m) {
  switch (m) {
  case Mark::Undefined:
    return "Undefined";
  case Mark::Unchanged:
    return "Unchanged";
  case Mark::Changed:
    return "Changed";
  }
  return "?";
}

enum class CvaMode : std::uint8_t {
  /// Only operands defined by a const-assign are replaced.
  Conservative,
  /// Every operand defined by a non-Changed instruction is replaced.
  Aggressive,
};

struct CvaConfig {
  std::set<std::string> seed_vars;
  CvaMode mode = CvaMode::Conservative;
};

/// Mark per instruction, indexed by InstrIndex id.
using MarkMap = std::vector<Mark>;

namespace detail {

/// Def-use structure shared by the marking and the rewriting.
struct DependenceGraph {
  explicit DependenceGraph(const Function &fn) : index(fn), cfg(fn) {
    auto defs = definition_sites(fn);
    std::vector<std::size_t> stores, loads;
    operand_defs.resize(index.size());
    users.resize(index.size());
    for (std::size_t id = 0; id < index.size(); ++id) {
      InstrRef r = index.ref(id);
      const Instruction &in = fn.blocks[r.block].instructions[r.index];
      for (const auto &op : in.operands) {
        if (!op.is_var())
          continue;
        auto it = defs.find(op.name());
        if (it == defs.end())
          continue;
        std::size_t d = index.id(it->second);
        operand_defs[id].push_back(d);
        users[d].push_back(id);
      }
      if (in.opcode == Opcode::Store)
        stores.push_back(id);
      if (in.opcode == Opcode::Load)
        loads.push_back(id);
    }

    std::vector<std::vector<bool>> reach(cfg.size(), std::vector<bool>(cfg.size()));
    for (std::size_t a = 0; a < cfg.size(); ++a)
      for (std::size_t b = 0; b < cfg.size(); ++b)
        reach[a][b] = cfg.reaches_via_edge(a, b);
    later_loads.resize(index.size());
    earlier_stores.resize(index.size());
    for (std::size_t s : stores)
      for (std::size_t l : loads) {
        InstrRef rs = index.ref(s), rl = index.ref(l);
        bool precedes = (rs.block == rl.block && rs.index < rl.index) ||
                        reach[rs.block][rl.block];
        if (precedes) {
          later_loads[s].push_back(l);
          earlier_stores[l].push_back(s);
        }
      }
  }

  InstrIndex index;
  Cfg cfg;
  std::vector<std::vector<std::size_t>> operand_defs; // id -> defining ids
  std::vector<std::vector<std::size_t>> users;        // id -> reading ids
  std::vector<std::vector<std::size_t>> later_loads;  // store -> loads it may feed
  std::vector<std::vector<std::size_t>> earlier_stores; // load -> stores before it
};

inline void check_seeds(const SsaProgram &prog, const CvaConfig &cfg) {
  std::set<std::string> sources;
  for (const auto &[src, versions] : prog.version_map)
    sources.insert(src);
  for (const auto &p : prog.main().params)
    sources.insert(prog.source_of(p));
  for (const auto &v : cfg.seed_vars)
    if (!sources.count(v))
      throw Error("seed variable '" + v + "' does not occur in the program");
}

} // namespace detail

/// Runs the marking to its fixpoint. `shuffle_seed` permutes the worklist
/// order; the result does not depend on it.
inline MarkMap mark_fixpoint(const SsaProgram &prog, const CvaConfig &cfg,
                             std::optional<std::uint64_t> shuffle_seed = std::nullopt) {
  detail::check_seeds(prog, cfg);
  const Function &fn = prog.main();
  detail::DependenceGraph g(fn);
  MarkMap marks(g.index.size(), Mark::Undefined);

  std::deque<std::size_t> work;
  for (std::size_t id = 0; id < g.index.size(); ++id) {
    InstrRef r = g.index.ref(id);
    if (!g.cfg.reachable(r.block))
      continue;
    marks[id] = Mark::Unchanged;
    const Instruction &in = fn.blocks[r.block].instructions[r.index];
    for (const auto &op : in.operands)
      if (op.is_var() && cfg.seed_vars.count(prog.source_of(op.name()))) {
        work.push_back(id);
        break;
      }
  }

  std::mt19937_64 rng(shuffle_seed.value_or(0));
  auto enqueue = [&](std::vector<std::size_t> ids) {
    if (shuffle_seed)
      std::shuffle(ids.begin(), ids.end(), rng);
    for (std::size_t id : ids)
      work.push_back(id);
  };
  if (shuffle_seed) {
    std::vector<std::size_t> seeds(work.begin(), work.end());
    work.clear();
    enqueue(std::move(seeds));
  }

  while (!work.empty()) {
    std::size_t id = work.front();
    work.pop_front();
    if (marks[id] != Mark::Unchanged)
      continue;
    marks[id] = Mark::Changed;
    enqueue(g.users[id]);
    enqueue(g.later_loads[id]);
  }
  return marks;
}

/// Replaces operands with `undef` inside instructions not marked Changed. See
/// the file comment for which instructions are left alone. Parameters are
/// program inputs and are never replaced.
inline SsaProgram apply_undef(const SsaProgram &prog, const MarkMap &marks,
                              const CvaConfig &cfg) {
  const Function &fn = prog.main();
  detail::DependenceGraph g(fn);
  if (marks.size() != g.index.size())
    throw Error("mark map does not match the program");

  // Backward closure from the Changed instructions.
  std::vector<bool> feeds_slice(g.index.size(), false);
  std::vector<std::size_t> stack;
  for (std::size_t id = 0; id < marks.size(); ++id)
    if (marks[id] == Mark::Changed)
      stack.push_back(id);
  while (!stack.empty()) {
    std::size_t id = stack.back();
    stack.pop_back();
    auto visit = [&](std::size_t dep) {
      if (!feeds_slice[dep] && marks[dep] != Mark::Changed) {
        feeds_slice[dep] = true;
        stack.push_back(dep);
      }
    };
    for (std::size_t d : g.operand_defs[id])
      visit(d);
    for (std::size_t s : g.earlier_stores[id])
      visit(s);
  }

  auto defs = definition_sites(fn);
  SsaProgram out = prog;
  Function &dst = out.program.main();
  for (std::size_t id = 0; id < marks.size(); ++id) {
    if (marks[id] == Mark::Changed || feeds_slice[id])
      continue;
    InstrRef r = g.index.ref(id);
    for (auto &op : dst.blocks[r.block].instructions[r.index].operands) {
      if (!op.is_var())
        continue;
      auto it = defs.find(op.name());
      if (it == defs.end())
        continue;
      std::size_t def_id = g.index.id(it->second);
      if (marks[def_id] == Mark::Changed)
        continue;
      const Instruction &def = fn.blocks[it->second.block].instructions[it->second.index];
      if (cfg.mode == CvaMode::Aggressive || def.opcode == Opcode::Const)
        op = Operand::undef();
    }
  }
  return out;
}

inline SsaProgram cva(const SsaProgram &prog, const CvaConfig &cfg) {
  return apply_undef(prog, mark_fixpoint(prog, cfg), cfg);
}

} // namespace pfq
