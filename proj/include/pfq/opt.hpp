// pfq/opt.hpp - cleanup passes run after CVA, and the pass manager.
//
// `undef` is treated as absorbing during folding: any arithmetic or compare
// with an `undef` operand yields `undef`. A branch on `undef` is folded to its
// then-arm unless the pipeline asks for the else-arm.
//
// Names that are versions of a symbolic variable are opaque: they never count
// as constants, and instructions reading them are not rewritten by constant
// propagation.
#pragma once

#include "pfq/cfg.hpp"
#include "pfq/ir.hpp"
#include "pfq/ssa.hpp"

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace pfq {

enum class PassId : std::uint8_t { ConstProp, SccpUndef, Dce, Dse };
enum class UndefBranch : std::uint8_t { Then, Else };

inline std::string_view to_string(PassId p) {
  switch (p) {
  case PassId::ConstProp:
    return "constprop";
  case PassId::SccpUndef:
    return "sccp-undef";
  case PassId::Dce:
    return "dce";
  case PassId::Dse:
    return "dse";
  }
  return "?";
}

inline PassId parse_pass(std::string_view name) {
  for (PassId p : {PassId::ConstProp, PassId::SccpUndef, PassId::Dce, PassId::Dse})
    if (to_string(p) == name)
      return p;
  throw Error("unknown pass '" + std::string(name) + "'");
}

/// Parses a comma-separated pass list such as "constprop,sccp-undef,dce".
inline std::vector<PassId> parse_pass_list(std::string_view list) {
  std::vector<PassId> out;
  std::size_t start = 0;
  while (start <= list.size()) {
    std::size_t comma = list.find(',', start);
    if (comma == std::string_view::npos)
      comma = list.size();
    std::string_view item = list.substr(start, comma - start);
    if (item.empty())
      throw Error("empty entry in pass list");
    out.push_back(parse_pass(item));
    start = comma + 1;
  }
  return out;
}

/// Settings shared by every pass.
struct OptOptions {
  unsigned bit_width = 32;
  /// SSA names treated as symbolic (never constant, never rewritten into).
  std::set<std::string> pinned;
  UndefBranch undef_branch = UndefBranch::Then;
};

struct PassPipeline {
  std::vector<PassId> passes{PassId::ConstProp, PassId::SccpUndef, PassId::Dce,
                             PassId::Dse};
  std::size_t max_rounds = 10;
  unsigned bit_width = 32;
  /// Source variables that stay symbolic through constant propagation.
  std::set<std::string> symbolic;
  UndefBranch undef_branch = UndefBranch::Then;
};

namespace detail {

/// Abstract value of an SSA name. Ordered Top > Undef > Const > Bottom.
struct Lattice {
  enum class Kind : std::uint8_t { Top, Undef, Const, Bottom };
  Kind kind = Kind::Top;
  Word value = 0;

  static Lattice top() { return {}; }
  static Lattice undef() { return {Kind::Undef, 0}; }
  static Lattice constant(Word v) { return {Kind::Const, v}; }
  static Lattice bottom() { return {Kind::Bottom, 0}; }

  bool is_const() const { return kind == Kind::Const; }
  bool operator==(const Lattice &) const = default;
};

inline Lattice meet(const Lattice &a, const Lattice &b) {
  using K = Lattice::Kind;
  if (a.kind == K::Top)
    return b;
  if (b.kind == K::Top)
    return a;
  if (a.kind == K::Bottom || b.kind == K::Bottom)
    return Lattice::bottom();
  if (a.kind == K::Undef)
    return b;
  if (b.kind == K::Undef)
    return a;
  return a.value == b.value ? a : Lattice::bottom();
}

class ValueTable {
public:
  ValueTable(const Function &fn, const OptOptions &opts)
      : opts_(opts), params_(fn.params.begin(), fn.params.end()) {
    cfg_.bit_width = opts.bit_width;
  }

  Lattice of(const Operand &op) const {
    switch (op.kind()) {
    case Operand::Kind::Literal:
      return Lattice::constant(cfg_.wrap_signed(op.value()));
    case Operand::Kind::Undef:
      return Lattice::undef();
    case Operand::Kind::Var: {
      if (params_.count(op.name()) || opts_.pinned.count(op.name()))
        return Lattice::bottom();
      auto it = values_.find(op.name());
      return it == values_.end() ? Lattice::top() : it->second;
    }
    }
    return Lattice::bottom();
  }

  /// Abstract evaluation of a non-phi value-producing instruction.
  Lattice evaluate(const Instruction &in) const {
    using K = Lattice::Kind;
    if (opts_.pinned.count(in.dest))
      return Lattice::bottom();
    switch (in.opcode) {
    case Opcode::Const:
      return of(in.operands[0]);
    case Opcode::BinOp:
    case Opcode::Compare: {
      Lattice a = of(in.operands[0]), b = of(in.operands[1]);
      if (a.kind == K::Undef || b.kind == K::Undef)
        return Lattice::undef();
      if (a.kind == K::Top || b.kind == K::Top)
        return Lattice::top();
      if (a.kind == K::Bottom || b.kind == K::Bottom)
        return Lattice::bottom();
      if (in.opcode == Opcode::BinOp)
        return Lattice::constant(apply(in.arith, a.value, b.value, cfg_));
      return Lattice::constant(apply(in.rel, a.value, b.value, cfg_) ? 1 : 0);
    }
    default:
      return Lattice::bottom();
    }
  }

  /// Lowers the stored value to meet(old, v). Returns true on change.
  bool update(const std::string &name, const Lattice &v) {
    Lattice old = of(Operand::var(name));
    Lattice next = meet(old, v);
    if (next == old)
      return false;
    values_[name] = next;
    return true;
  }

  Operand as_operand(const Lattice &v) const {
    if (v.kind == Lattice::Kind::Undef)
      return Operand::undef();
    return Operand::literal(cfg_.to_signed(v.value));
  }

  bool reads_pinned(const Instruction &in) const {
    if (opts_.pinned.count(in.dest))
      return true;
    for (const auto &op : in.operands)
      if (op.is_var() && opts_.pinned.count(op.name()))
        return true;
    return false;
  }

private:
  const OptOptions &opts_;
  std::set<std::string> params_;
  MachineConfig cfg_;
  std::map<std::string, Lattice> values_;
};

/// Keeps phis at block heads after rewriting turned some of them into
/// ordinary instructions.
inline void hoist_phis(Block &blk) {
  std::stable_partition(blk.instructions.begin(), blk.instructions.end(),
                        [](const Instruction &in) { return in.opcode == Opcode::Phi; });
}

inline void replace_uses(Function &fn, const std::string &name, const Operand &with) {
  for (auto &b : fn.blocks)
    for (auto &in : b.instructions)
      for (auto &op : in.operands)
        if (op.is_var() && op.name() == name)
          op = with;
}

/// Drops the blocks for which `keep` is false and the phi inputs that flowed
/// in from them.
inline void drop_blocks(Function &fn, const std::vector<bool> &keep) {
  std::set<std::string> gone;
  std::vector<Block> kept;
  for (std::size_t b = 0; b < fn.blocks.size(); ++b) {
    if (keep[b])
      kept.push_back(std::move(fn.blocks[b]));
    else
      gone.insert(fn.blocks[b].label);
  }
  fn.blocks = std::move(kept);
  if (gone.empty())
    return;
  for (auto &b : fn.blocks)
    for (auto &in : b.instructions) {
      if (in.opcode != Opcode::Phi)
        continue;
      for (std::size_t k = in.labels.size(); k-- > 0;)
        if (gone.count(in.labels[k])) {
          in.labels.erase(in.labels.begin() + static_cast<std::ptrdiff_t>(k));
          in.operands.erase(in.operands.begin() + static_cast<std::ptrdiff_t>(k));
        }
    }
}

inline void remove_unreachable_blocks(Function &fn) {
  Cfg cfg(fn);
  std::vector<bool> keep(fn.blocks.size());
  for (std::size_t b = 0; b < fn.blocks.size(); ++b)
    keep[b] = cfg.reachable(b);
  drop_blocks(fn, keep);
}

/// Drops phi inputs whose edge no longer exists.
inline void prune_phi_edges(Function &fn) {
  Cfg cfg(fn);
  for (std::size_t b = 0; b < fn.blocks.size(); ++b) {
    std::set<std::string> preds;
    for (std::size_t p : cfg.preds(b))
      preds.insert(fn.blocks[p].label);
    for (auto &in : fn.blocks[b].instructions) {
      if (in.opcode != Opcode::Phi)
        break;
      for (std::size_t k = in.labels.size(); k-- > 0;)
        if (!preds.count(in.labels[k])) {
          in.labels.erase(in.labels.begin() + static_cast<std::ptrdiff_t>(k));
          in.operands.erase(in.operands.begin() + static_cast<std::ptrdiff_t>(k));
        }
    }
  }
}

/// Folds `A: ... jmp B` into A when B has no other predecessor.
inline void merge_straight_line_blocks(Function &fn) {
  for (bool merged = true; merged;) {
    merged = false;
    Cfg cfg(fn);
    for (std::size_t a = 0; a < fn.blocks.size() && !merged; ++a) {
      const Instruction &term = fn.blocks[a].terminator();
      if (term.opcode != Opcode::Jump)
        continue;
      auto target = fn.find_block(term.labels[0]);
      if (!target || *target == a || *target == 0 || cfg.preds(*target).size() != 1)
        continue;
      std::size_t b = *target;
      Block tail = std::move(fn.blocks[b]);
      const std::string a_label = fn.blocks[a].label;
      std::vector<Instruction> body;
      std::vector<std::pair<std::string, Operand>> copies;
      for (auto &in : tail.instructions) {
        if (in.opcode == Opcode::Phi)
          copies.emplace_back(in.dest, in.operands.empty() ? Operand::undef()
                                                           : in.operands[0]);
        else
          body.push_back(std::move(in));
      }
      fn.blocks[b].instructions = std::move(body);
      for (const auto &[name, value] : copies)
        replace_uses(fn, name, value);
      body = std::move(fn.blocks[b].instructions);
      auto &dst = fn.blocks[a].instructions;
      dst.pop_back();
      for (auto &in : body)
        dst.push_back(std::move(in));
      fn.blocks.erase(fn.blocks.begin() + static_cast<std::ptrdiff_t>(b));
      for (auto &blk : fn.blocks)
        for (auto &in : blk.instructions)
          if (in.opcode == Opcode::Phi)
            for (auto &l : in.labels)
              if (l == tail.label)
                l = a_label;
      merged = true;
    }
  }
}

} // namespace detail

/// Folds literal-defined names into their uses and evaluates constant
/// arithmetic and compares modulo 2^bit_width.
inline Program constprop(const Program &prog, const OptOptions &opts = {}) {
  Program out = prog;
  Function &fn = out.main();
  detail::ValueTable vals(fn, opts);
  Cfg cfg(fn);

  for (bool changed = true; changed;) {
    changed = false;
    for (std::size_t b : cfg.rpo())
      for (const auto &in : fn.blocks[b].instructions) {
        if (!in.has_dest())
          continue;
        detail::Lattice v;
        if (in.opcode == Opcode::Phi) {
          if (opts.pinned.count(in.dest)) {
            v = detail::Lattice::bottom();
          } else {
            for (const auto &op : in.operands) {
              detail::Lattice o = vals.of(op);
              v = detail::meet(v, o.kind == detail::Lattice::Kind::Top
                                      ? detail::Lattice::bottom()
                                      : o);
            }
          }
        } else {
          v = vals.evaluate(in);
          if (v.kind == detail::Lattice::Kind::Top)
            v = detail::Lattice::bottom();
        }
        changed |= vals.update(in.dest, v);
      }
  }

  for (auto &blk : fn.blocks) {
    for (auto &in : blk.instructions) {
      if (vals.reads_pinned(in))
        continue;
      if (in.has_dest()) {
        detail::Lattice v = vals.of(Operand::var(in.dest));
        if (v.kind == detail::Lattice::Kind::Const ||
            v.kind == detail::Lattice::Kind::Undef) {
          if (in.opcode != Opcode::Const)
            in = Instruction::make_const(in.dest, vals.as_operand(v));
          continue;
        }
      }
      for (auto &op : in.operands) {
        if (!op.is_var())
          continue;
        detail::Lattice v = vals.of(op);
        if (v.kind == detail::Lattice::Kind::Const ||
            v.kind == detail::Lattice::Kind::Undef)
          op = vals.as_operand(v);
      }
    }
    detail::hoist_phis(blk);
  }
  return out;
}

/// Sparse conditional propagation over executable edges. Branches whose
/// condition is constant go to the taken arm; branches on `undef` go to the
/// arm selected by `opts.undef_branch`. Unreachable blocks are deleted, phi
/// inputs from deleted edges dropped, and straight-line block chains merged.
inline Program sccp_undef(const Program &prog, const OptOptions &opts = {}) {
  using K = detail::Lattice::Kind;
  Program out = prog;
  Function &fn = out.main();
  const std::size_t n = fn.blocks.size();
  Cfg cfg(fn);
  detail::ValueTable vals(fn, opts);

  std::vector<bool> exec(n, false);
  std::set<std::pair<std::size_t, std::size_t>> edges;
  exec[0] = true;
  auto branch_targets = [&](std::size_t b) -> std::vector<std::size_t> {
    const Instruction &t = fn.blocks[b].terminator();
    std::vector<std::size_t> targets;
    auto idx = [&](const std::string &l) { return *fn.find_block(l); };
    switch (t.opcode) {
    case Opcode::Jump:
      targets.push_back(idx(t.labels[0]));
      break;
    case Opcode::Branch: {
      detail::Lattice c = vals.of(t.operands[0]);
      if (c.kind == K::Const)
        targets.push_back(idx(t.labels[c.value != 0 ? 0 : 1]));
      else if (c.kind == K::Undef)
        targets.push_back(idx(t.labels[opts.undef_branch == UndefBranch::Then ? 0 : 1]));
      else if (c.kind == K::Bottom)
        targets = {idx(t.labels[0]), idx(t.labels[1])};
      break;
    }
    default:
      break;
    }
    return targets;
  };

  for (bool changed = true; changed;) {
    changed = false;
    for (std::size_t b : cfg.rpo()) {
      if (!exec[b])
        continue;
      for (const auto &in : fn.blocks[b].instructions) {
        if (!in.has_dest())
          continue;
        detail::Lattice v;
        if (in.opcode == Opcode::Phi) {
          if (opts.pinned.count(in.dest)) {
            v = detail::Lattice::bottom();
          } else {
            for (std::size_t k = 0; k < in.labels.size(); ++k) {
              auto p = fn.find_block(in.labels[k]);
              if (p && edges.count({*p, b}))
                v = detail::meet(v, vals.of(in.operands[k]));
            }
          }
        } else {
          v = vals.evaluate(in);
        }
        changed |= vals.update(in.dest, v);
      }
      for (std::size_t s : branch_targets(b)) {
        if (edges.insert({b, s}).second)
          changed = true;
        if (!exec[s]) {
          exec[s] = true;
          changed = true;
        }
      }
    }
  }

  for (std::size_t b = 0; b < n; ++b) {
    if (!exec[b])
      continue;
    Instruction &t = fn.blocks[b].terminator();
    if (t.opcode != Opcode::Branch)
      continue;
    auto targets = branch_targets(b);
    if (targets.size() == 1)
      t = Instruction::make_jump(fn.blocks[targets[0]].label);
  }
  detail::drop_blocks(fn, exec);
  detail::prune_phi_edges(fn);
  detail::merge_straight_line_blocks(fn);
  return out;
}

/// Removes instructions whose results are transitively unused. Stores, prints
/// and terminators are roots. Unreachable blocks are removed as well.
inline Program dce(const Program &prog, const OptOptions & = {}) {
  Program out = prog;
  Function &fn = out.main();
  detail::remove_unreachable_blocks(fn);
  auto defs = definition_sites(fn);

  std::set<std::string> live;
  std::vector<const Instruction *> work;
  for (const auto &b : fn.blocks)
    for (const auto &in : b.instructions)
      if (in.has_side_effect())
        work.push_back(&in);
  while (!work.empty()) {
    const Instruction *in = work.back();
    work.pop_back();
    for (const auto &op : in->operands) {
      if (!op.is_var() || !live.insert(op.name()).second)
        continue;
      auto it = defs.find(op.name());
      if (it != defs.end())
        work.push_back(&fn.blocks[it->second.block].instructions[it->second.index]);
    }
  }
  for (auto &b : fn.blocks)
    std::erase_if(b.instructions, [&](const Instruction &in) {
      return !in.has_side_effect() && !live.count(in.dest);
    });
  return out;
}

/// Removes stores no load can observe: stores overwritten at the same address
/// later in the block with no load in between, and stores that no load can
/// follow on any path.
inline Program dse(const Program &prog, const OptOptions & = {}) {
  Program out = prog;
  Function &fn = out.main();
  Cfg cfg(fn);
  std::vector<bool> has_load(fn.blocks.size(), false);
  for (std::size_t b = 0; b < fn.blocks.size(); ++b)
    for (const auto &in : fn.blocks[b].instructions)
      has_load[b] = has_load[b] || in.opcode == Opcode::Load;

  for (std::size_t b = 0; b < fn.blocks.size(); ++b) {
    bool load_reachable_later = false;
    for (std::size_t s = 0; s < fn.blocks.size(); ++s)
      if (has_load[s] && cfg.reaches_via_edge(b, s))
        load_reachable_later = true;

    auto &insts = fn.blocks[b].instructions;
    std::vector<bool> dead(insts.size(), false);
    for (std::size_t i = 0; i < insts.size(); ++i) {
      if (insts[i].opcode != Opcode::Store)
        continue;
      bool load_after = load_reachable_later;
      for (std::size_t j = i + 1; j < insts.size(); ++j) {
        if (insts[j].opcode == Opcode::Load) {
          load_after = true;
          break;
        }
        if (insts[j].opcode == Opcode::Store && !insts[i].operands[0].is_undef() &&
            insts[j].operands[0] == insts[i].operands[0]) {
          dead[i] = true;
          break;
        }
      }
      if (!load_after)
        dead[i] = true;
    }
    std::vector<Instruction> kept;
    for (std::size_t i = 0; i < insts.size(); ++i)
      if (!dead[i])
        kept.push_back(std::move(insts[i]));
    insts = std::move(kept);
  }
  return out;
}

inline Program run_pass(PassId pass, const Program &prog, const OptOptions &opts) {
  switch (pass) {
  case PassId::ConstProp:
    return constprop(prog, opts);
  case PassId::SccpUndef:
    return sccp_undef(prog, opts);
  case PassId::Dce:
    return dce(prog, opts);
  case PassId::Dse:
    return dse(prog, opts);
  }
  return prog;
}

struct PipelineResult {
  SsaProgram program;
  std::size_t rounds = 0;
  /// False when max_rounds ran out while passes were still changing the program.
  bool converged = true;
};

/// Repeats the pass list until a whole round changes nothing.
inline PipelineResult run_pipeline(const SsaProgram &prog, const PassPipeline &pipeline) {
  if (pipeline.max_rounds == 0)
    throw Error("max_rounds must be positive");
  OptOptions opts;
  opts.bit_width = pipeline.bit_width;
  opts.undef_branch = pipeline.undef_branch;
  for (const auto &name : defined_names(prog.main()))
    if (pipeline.symbolic.count(prog.source_of(name)))
      opts.pinned.insert(name);

  PipelineResult res;
  res.program = prog;
  res.converged = false;
  for (std::size_t round = 0; round < pipeline.max_rounds; ++round) {
    Program before = res.program.program;
    for (PassId p : pipeline.passes)
      res.program.program = run_pass(p, res.program.program, opts);
    res.rounds = round + 1;
    if (res.program.program == before) {
      res.converged = true;
      break;
    }
  }

  std::set<std::string> alive;
  for (const auto &name : defined_names(res.program.main()))
    alive.insert(name);
  for (auto it = res.program.version_map.begin(); it != res.program.version_map.end();) {
    std::erase_if(it->second, [&](const std::string &n) { return !alive.count(n); });
    it = it->second.empty() ? res.program.version_map.erase(it) : std::next(it);
  }
  return res;
}

} // namespace pfq
