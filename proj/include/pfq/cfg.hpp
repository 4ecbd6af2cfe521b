// pfq/cfg.hpp - control-flow structure: edges, reachability, dominators.
#pragma once

#include "pfq/ir.hpp"

#include <algorithm>
#include <cstddef>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace pfq {

/// Block-index control-flow graph of a function. Unresolvable labels are
/// ignored; the parser rejects them before a Cfg is ever built.
class Cfg {
public:
  static constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

  explicit Cfg(const Function &fn) : succs_(fn.blocks.size()), preds_(fn.blocks.size()) {
    for (std::size_t b = 0; b < fn.blocks.size(); ++b) {
      const auto &insts = fn.blocks[b].instructions;
      if (insts.empty() || !insts.back().is_terminator())
        continue;
      for (const auto &label : insts.back().labels) {
        auto target = fn.find_block(label);
        if (!target)
          continue;
        if (std::find(succs_[b].begin(), succs_[b].end(), *target) ==
            succs_[b].end()) {
          succs_[b].push_back(*target);
          preds_[*target].push_back(b);
        }
      }
    }
    compute_reachability();
    compute_dominators();
  }

  std::size_t size() const { return succs_.size(); }
  const std::vector<std::size_t> &succs(std::size_t b) const { return succs_[b]; }
  const std::vector<std::size_t> &preds(std::size_t b) const { return preds_[b]; }
  bool reachable(std::size_t b) const { return reachable_[b]; }
  /// Reachable blocks in reverse post-order from the entry.
  const std::vector<std::size_t> &rpo() const { return rpo_; }

  /// Immediate dominator, kNone for the entry and unreachable blocks.
  std::size_t idom(std::size_t b) const { return idom_[b]; }

  bool dominates(std::size_t a, std::size_t b) const {
    if (!reachable_[a] || !reachable_[b])
      return false;
    for (std::size_t cur = b; cur != kNone; cur = idom_[cur])
      if (cur == a)
        return true;
    return false;
  }

  /// Dominance frontier of every reachable block.
  std::vector<std::set<std::size_t>> dominance_frontiers() const {
    std::vector<std::set<std::size_t>> df(size());
    for (std::size_t b = 0; b < size(); ++b) {
      if (!reachable_[b] || preds_[b].size() < 2)
        continue;
      for (std::size_t p : preds_[b]) {
        if (!reachable_[p])
          continue;
        for (std::size_t runner = p; runner != kNone && runner != idom_[b];
             runner = idom_[runner])
          df[runner].insert(b);
      }
    }
    return df;
  }

  /// Children of each block in the dominator tree, in block order.
  std::vector<std::vector<std::size_t>> dominator_tree() const {
    std::vector<std::vector<std::size_t>> kids(size());
    for (std::size_t b = 0; b < size(); ++b)
      if (idom_[b] != kNone)
        kids[idom_[b]].push_back(b);
    return kids;
  }

  /// True when control can flow from the end of `from` to the start of `to`
  /// along a path of at least one edge.
  bool reaches_via_edge(std::size_t from, std::size_t to) const {
    std::vector<bool> seen(size(), false);
    std::vector<std::size_t> stack(succs_[from].begin(), succs_[from].end());
    while (!stack.empty()) {
      std::size_t b = stack.back();
      stack.pop_back();
      if (seen[b])
        continue;
      seen[b] = true;
      if (b == to)
        return true;
      for (std::size_t s : succs_[b])
        stack.push_back(s);
    }
    return false;
  }

private:
  void compute_reachability() {
    reachable_.assign(size(), false);
    if (size() == 0)
      return;
    std::vector<std::size_t> post;
    std::vector<std::pair<std::size_t, std::size_t>> stack{{0, 0}};
    reachable_[0] = true;
    while (!stack.empty()) {
      auto &[b, next] = stack.back();
      if (next < succs_[b].size()) {
        std::size_t s = succs_[b][next++];
        if (!reachable_[s]) {
          reachable_[s] = true;
          stack.push_back({s, 0});
        }
      } else {
        post.push_back(b);
        stack.pop_back();
      }
    }
    rpo_.assign(post.rbegin(), post.rend());
  }

  // Iterative dataflow formulation (Cooper, Harvey & Kennedy).
  void compute_dominators() {
    idom_.assign(size(), kNone);
    if (size() == 0)
      return;
    std::vector<std::size_t> order(size(), kNone);
    for (std::size_t i = 0; i < rpo_.size(); ++i)
      order[rpo_[i]] = i;

    std::vector<std::size_t> doms(size(), kNone);
    doms[0] = 0;
    auto intersect = [&](std::size_t a, std::size_t b) {
      while (a != b) {
        while (order[a] > order[b])
          a = doms[a];
        while (order[b] > order[a])
          b = doms[b];
      }
      return a;
    };
    bool changed = true;
    while (changed) {
      changed = false;
      for (std::size_t i = 1; i < rpo_.size(); ++i) {
        std::size_t b = rpo_[i];
        std::size_t new_idom = kNone;
        for (std::size_t p : preds_[b]) {
          if (doms[p] == kNone)
            continue;
          new_idom = new_idom == kNone ? p : intersect(p, new_idom);
        }
        if (new_idom != kNone && doms[b] != new_idom) {
          doms[b] = new_idom;
          changed = true;
        }
      }
    }
    for (std::size_t b = 1; b < size(); ++b)
      idom_[b] = doms[b];
  }

  std::vector<std::vector<std::size_t>> succs_;
  std::vector<std::vector<std::size_t>> preds_;
  std::vector<bool> reachable_;
  std::vector<std::size_t> rpo_;
  std::vector<std::size_t> idom_;
};

/// Maps each defined name to the instruction defining it. Parameters are
/// absent. With duplicate definitions the first one wins.
inline std::map<std::string, InstrRef> definition_sites(const Function &fn) {
  std::map<std::string, InstrRef> defs;
  for (std::size_t b = 0; b < fn.blocks.size(); ++b)
    for (std::size_t i = 0; i < fn.blocks[b].instructions.size(); ++i) {
      const auto &in = fn.blocks[b].instructions[i];
      if (in.has_dest())
        defs.emplace(in.dest, InstrRef{b, i});
    }
  return defs;
}

} // namespace pfq
