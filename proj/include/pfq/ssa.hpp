// pfq/ssa.hpp - SSA construction and validation.
//
// build_ssa places phi nodes at iterated dominance frontiers, pruned by
// liveness, then renames along the dominator tree. Versions are numbered from
// 1 per source variable (`i` -> `i1`, `i2`, ...); a variable whose name already
// ends in a digit gets an underscore separator (`x2` -> `x2_1`). Parameters
// keep their own name as version 0.
#pragma once

#include "pfq/cfg.hpp"
#include "pfq/ir.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace pfq {

struct SsaProgram {
  Program program;
  /// source variable -> SSA names, in version order
  std::map<std::string, std::vector<std::string>> version_map;

  const Function &main() const { return program.main(); }

  /// Wraps a program that is already in SSA form (e.g. a parsed fixture). The
  /// version map is recovered by stripping numeric suffixes.
  static SsaProgram from_ssa(Program prog) {
    SsaProgram out;
    for (const auto &name : defined_names(prog.main())) {
      auto &versions = out.version_map[source_name(name)];
      if (std::find(versions.begin(), versions.end(), name) == versions.end())
        versions.push_back(name);
    }
    out.program = std::move(prog);
    return out;
  }

  /// Source variable of an SSA name, falling back to suffix stripping.
  std::string source_of(const std::string &ssa_name) const {
    for (const auto &[src, versions] : version_map)
      if (std::find(versions.begin(), versions.end(), ssa_name) != versions.end())
        return src;
    return source_name(ssa_name);
  }
};

struct SsaViolation {
  enum class Kind : std::uint8_t {
    MultipleDefinitions,
    UndefinedName,
    NotDominated,
    PhiNotAtHead,
    PhiBadIncoming,
  };
  Kind kind;
  std::string name;
  std::string message;
};

inline std::vector<SsaViolation> validate_ssa(const Program &prog) {
  using K = SsaViolation::Kind;
  const Function &fn = prog.main();
  std::vector<SsaViolation> out;

  std::map<std::string, std::size_t> def_count;
  for (const auto &n : defined_names(fn))
    ++def_count[n];
  for (const auto &[name, count] : def_count)
    if (count > 1)
      out.push_back({K::MultipleDefinitions, name,
                     "'" + name + "' has " + std::to_string(count) +
                         " definitions"});

  Cfg cfg(fn);
  auto defs = definition_sites(fn);
  std::set<std::string> params(fn.params.begin(), fn.params.end());

  // True when the definition of `name` is available at instruction (b, i);
  // i == SIZE_MAX means "at the end of block b".
  auto available = [&](const std::string &name, std::size_t b, std::size_t i) {
    if (params.count(name))
      return true;
    auto it = defs.find(name);
    if (it == defs.end())
      return false;
    InstrRef d = it->second;
    if (d.block == b)
      return d.index < i;
    return cfg.dominates(d.block, b);
  };

  for (std::size_t b = 0; b < fn.blocks.size(); ++b) {
    const Block &blk = fn.blocks[b];
    bool past_phis = false;
    for (std::size_t i = 0; i < blk.instructions.size(); ++i) {
      const Instruction &in = blk.instructions[i];
      if (in.opcode != Opcode::Phi) {
        past_phis = true;
      } else if (past_phis) {
        out.push_back({K::PhiNotAtHead, in.dest,
                       "phi '" + in.dest + "' is not at the head of '" +
                           blk.label + "'"});
      }
      for (std::size_t k = 0; k < in.operands.size(); ++k) {
        const Operand &op = in.operands[k];
        if (!op.is_var())
          continue;
        if (!params.count(op.name()) && !defs.count(op.name())) {
          out.push_back({K::UndefinedName, op.name(),
                         "'" + op.name() + "' is used but never defined"});
          continue;
        }
        if (!cfg.reachable(b))
          continue;
        if (in.opcode == Opcode::Phi) {
          auto pred = fn.find_block(in.labels[k]);
          if (!pred || !cfg.reachable(*pred))
            continue;
          if (!available(op.name(), *pred, SIZE_MAX))
            out.push_back({K::NotDominated, op.name(),
                           "'" + op.name() + "' does not dominate the edge " +
                               in.labels[k] + " -> " + blk.label});
        } else if (!available(op.name(), b, i)) {
          out.push_back({K::NotDominated, op.name(),
                         "use of '" + op.name() + "' in '" + blk.label +
                             "' is not dominated by its definition"});
        }
      }
      if (in.opcode == Opcode::Phi && cfg.reachable(b)) {
        std::set<std::string> pred_labels;
        for (std::size_t p : cfg.preds(b))
          pred_labels.insert(fn.blocks[p].label);
        std::set<std::string> seen;
        for (const auto &l : in.labels) {
          if (!pred_labels.count(l))
            out.push_back({K::PhiBadIncoming, in.dest,
                           "phi '" + in.dest + "' names non-predecessor '" + l +
                               "'"});
          else if (!seen.insert(l).second)
            out.push_back({K::PhiBadIncoming, in.dest,
                           "phi '" + in.dest + "' repeats predecessor '" + l +
                               "'"});
        }
        for (std::size_t p : cfg.preds(b))
          if (cfg.reachable(p) && !seen.count(fn.blocks[p].label))
            out.push_back({K::PhiBadIncoming, in.dest,
                           "phi '" + in.dest + "' lacks an incoming value from '" +
                               fn.blocks[p].label + "'"});
      }
    }
  }
  return out;
}

inline std::string ssa_version_name(const std::string &base, std::size_t version) {
  bool digit_tail = !base.empty() && base.back() >= '0' && base.back() <= '9';
  return base + (digit_tail ? "_" : "") + std::to_string(version);
}

/// Converts a phi-free program into pruned SSA form.
inline SsaProgram build_ssa(const Program &input) {
  Function fn = input.main();
  for (const auto &b : fn.blocks)
    for (const auto &in : b.instructions)
      if (in.opcode == Opcode::Phi)
        throw Error("program already contains phi instructions");

  // Unreachable blocks are never renamed; drop them up front.
  {
    Cfg cfg(fn);
    std::vector<Block> kept;
    for (std::size_t b = 0; b < fn.blocks.size(); ++b)
      if (cfg.reachable(b))
        kept.push_back(std::move(fn.blocks[b]));
    fn.blocks = std::move(kept);
  }
  Cfg cfg(fn);
  const std::size_t n = fn.blocks.size();

  std::set<std::string> vars(fn.params.begin(), fn.params.end());
  std::map<std::string, std::set<std::size_t>> def_blocks;
  for (const auto &p : fn.params)
    def_blocks[p].insert(0);
  std::vector<std::set<std::string>> upward(n), killed(n);
  for (std::size_t b = 0; b < n; ++b)
    for (const auto &in : fn.blocks[b].instructions) {
      for (const auto &op : in.operands)
        if (op.is_var() && !killed[b].count(op.name()))
          upward[b].insert(op.name());
      if (in.has_dest()) {
        vars.insert(in.dest);
        killed[b].insert(in.dest);
        def_blocks[in.dest].insert(b);
      }
    }

  // Backward liveness over source variables.
  std::vector<std::set<std::string>> live_in(n);
  for (bool changed = true; changed;) {
    changed = false;
    for (std::size_t k = n; k-- > 0;) {
      std::set<std::string> live = upward[k];
      for (std::size_t s : cfg.succs(k))
        for (const auto &v : live_in[s])
          if (!killed[k].count(v))
            live.insert(v);
      if (live != live_in[k]) {
        live_in[k] = std::move(live);
        changed = true;
      }
    }
  }
  std::set<std::string> params(fn.params.begin(), fn.params.end());
  for (const auto &v : live_in[0])
    if (!params.count(v))
      throw Error("use of '" + v + "' before definition along some path");

  // Phi placement at the iterated dominance frontier.
  auto df = cfg.dominance_frontiers();
  std::vector<std::vector<std::string>> phi_vars(n);
  for (const auto &[v, blocks] : def_blocks) {
    std::set<std::size_t> has_phi;
    std::vector<std::size_t> work(blocks.begin(), blocks.end());
    std::set<std::size_t> queued(blocks.begin(), blocks.end());
    while (!work.empty()) {
      std::size_t b = work.back();
      work.pop_back();
      for (std::size_t d : df[b]) {
        if (has_phi.count(d) || !live_in[d].count(v))
          continue;
        has_phi.insert(d);
        phi_vars[d].push_back(v);
        if (queued.insert(d).second)
          work.push_back(d);
      }
    }
  }
  for (std::size_t b = 0; b < n; ++b) {
    std::vector<Instruction> phis;
    for (const auto &v : phi_vars[b]) {
      std::vector<std::pair<std::string, Operand>> incoming;
      for (std::size_t p : cfg.preds(b))
        incoming.emplace_back(fn.blocks[p].label, Operand::undef());
      Instruction phi = Instruction::make_phi(v, std::move(incoming));
      phis.push_back(std::move(phi));
    }
    auto &insts = fn.blocks[b].instructions;
    insts.insert(insts.begin(), phis.begin(), phis.end());
  }

  // Renaming along the dominator tree.
  SsaProgram out;
  std::map<std::string, std::size_t> counter;
  std::map<std::string, std::vector<std::string>> stacks;
  for (const auto &p : fn.params) {
    stacks[p].push_back(p);
    out.version_map[p].push_back(p);
  }
  auto fresh = [&](const std::string &v) {
    std::string name = ssa_version_name(v, ++counter[v]);
    stacks[v].push_back(name);
    out.version_map[v].push_back(name);
    return name;
  };
  auto top = [&](const std::string &v) -> const std::string & {
    auto &s = stacks[v];
    if (s.empty())
      throw Error("use of '" + v + "' before definition along some path");
    return s.back();
  };
  auto kids = cfg.dominator_tree();
  std::function<void(std::size_t)> rename = [&](std::size_t b) {
    std::vector<std::string> pushed;
    for (auto &in : fn.blocks[b].instructions) {
      if (in.opcode != Opcode::Phi)
        for (auto &op : in.operands)
          if (op.is_var())
            op = Operand::var(top(op.name()));
      if (in.has_dest()) {
        pushed.push_back(in.dest);
        in.dest = fresh(in.dest);
      }
    }
    for (std::size_t s : cfg.succs(b))
      for (std::size_t p = 0; p < phi_vars[s].size(); ++p) {
        auto &phi = fn.blocks[s].instructions[p];
        for (std::size_t k = 0; k < phi.labels.size(); ++k)
          if (phi.labels[k] == fn.blocks[b].label)
            phi.operands[k] = Operand::var(top(phi_vars[s][p]));
      }
    for (std::size_t c : kids[b])
      rename(c);
    for (const auto &v : pushed)
      stacks[v].pop_back();
  };
  rename(0);

  std::set<std::string> names;
  for (const auto &name : defined_names(fn))
    if (!names.insert(name).second)
      throw Error("SSA renaming produced a clashing name '" + name + "'");

  out.program.functions.push_back(std::move(fn));
  return out;
}

} // namespace pfq
