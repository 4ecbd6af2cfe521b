// Independent oracle for the CVA marking, plus random corpora. Shared by the
// unit tests and the acceptance run.
#pragma once

#include "pfq/cva.hpp"
#include "support/random_programs.hpp"

#include <deque>
#include <map>
#include <random>
#include <set>
#include <vector>

namespace pfq::testing {

inline std::set<std::string> source_vars(const SsaProgram &p) {
  std::set<std::string> out;
  for (const auto &name : defined_names(p.main()))
    out.insert(p.source_of(name));
  return out;
}

// Independent oracle: recompute the Changed set by rescanning the whole
// function until nothing moves. Reachability and "store may run before load"
// are recomputed here from labels without using Cfg.
inline std::vector<bool> brute_force_changed(const SsaProgram &prog,
                                      const std::set<std::string> &seeds) {
  const Function &fn = prog.main();
  std::map<std::string, std::size_t> label_to_block;
  for (std::size_t b = 0; b < fn.blocks.size(); ++b)
    label_to_block[fn.blocks[b].label] = b;
  auto succ = [&](std::size_t b) {
    std::vector<std::size_t> out;
    const Instruction &t = fn.blocks[b].instructions.back();
    if (t.opcode == Opcode::Jump || t.opcode == Opcode::Branch)
      for (const auto &l : t.labels)
        out.push_back(label_to_block.at(l));
    return out;
  };
  // paths[a][b]: b reachable from a through at least one edge.
  const std::size_t n = fn.blocks.size();
  std::vector<std::vector<bool>> paths(n, std::vector<bool>(n, false));
  for (std::size_t a = 0; a < n; ++a) {
    std::deque<std::size_t> q;
    for (std::size_t s : succ(a))
      q.push_back(s);
    while (!q.empty()) {
      std::size_t b = q.front();
      q.pop_front();
      if (paths[a][b])
        continue;
      paths[a][b] = true;
      for (std::size_t s : succ(b))
        q.push_back(s);
    }
  }
  std::vector<bool> reachable(n, false);
  reachable[0] = true;
  for (std::size_t b = 1; b < n; ++b)
    reachable[b] = paths[0][b];

  struct Site {
    std::size_t block, index;
    const Instruction *in;
  };
  std::vector<Site> sites;
  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t i = 0; i < fn.blocks[b].instructions.size(); ++i)
      sites.push_back({b, i, &fn.blocks[b].instructions[i]});

  std::vector<bool> changed(sites.size(), false);
  std::set<std::string> changed_names;
  for (bool moved = true; moved;) {
    moved = false;
    for (std::size_t k = 0; k < sites.size(); ++k) {
      if (changed[k] || !reachable[sites[k].block])
        continue;
      const Instruction &in = *sites[k].in;
      bool hit = false;
      for (const auto &op : in.operands)
        if (op.is_var() &&
            (seeds.count(prog.source_of(op.name())) || changed_names.count(op.name())))
          hit = true;
      if (in.opcode == Opcode::Load)
        for (std::size_t s = 0; s < sites.size() && !hit; ++s) {
          if (!changed[s] || sites[s].in->opcode != Opcode::Store)
            continue;
          bool before = (sites[s].block == sites[k].block && sites[s].index < sites[k].index) ||
                        paths[sites[s].block][sites[k].block];
          hit = before;
        }
      if (hit) {
        changed[k] = true;
        if (in.has_dest())
          changed_names.insert(in.dest);
        moved = true;
      }
    }
  }
  return changed;
}

inline std::vector<bool> as_flags(const MarkMap &m) {
  std::vector<bool> out;
  for (Mark x : m)
    out.push_back(x == Mark::Changed);
  return out;
}

inline std::set<std::string> random_subset(const std::set<std::string> &all,
                                           std::mt19937_64 &rng) {
  std::set<std::string> out;
  for (const auto &v : all)
    if (rng() % 3 == 0)
      out.insert(v);
  return out;
}

/// Random SSA programs with at most 60 instructions.
inline std::vector<SsaProgram> ssa_corpus(std::uint64_t seed, std::size_t count) {
  ProgramGenerator gen(seed);
  std::vector<SsaProgram> out;
  while (out.size() < count) {
    SsaProgram s = build_ssa(gen.next());
    if (s.main().instruction_count() <= 60)
      out.push_back(std::move(s));
  }
  return out;
}

} // namespace pfq::testing
