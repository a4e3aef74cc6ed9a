#pragma once

// Exhaustive set-partition oracle for the group scheduler. Enumerates every
// partition of the pair set via restricted growth strings and filters by a
// direct compatibility check (SINR recomputed straight from the geometry),
// so it shares no search machinery with CoverSearch in the library.

#include <functional>
#include <vector>

#include "cosr/grouping.hpp"
#include "cosr/phy.hpp"

namespace oracle {

struct BestPlan {
  bool feasible = false;
  double objective = 0.0;
  std::vector<std::vector<int>> partition;  // canonical: sorted blocks
};

// Direct compatibility check for a block of STAs (one candidate group).
inline bool block_compatible(const cosr::Deployment& dep, const cosr::SimParams& params,
                             const cosr::McsTable& mcs, const std::vector<int>& block,
                             cosr::SrGroup& out) {
  out.members.clear();
  for (std::size_t i = 0; i < block.size(); ++i)
    for (std::size_t j = i + 1; j < block.size(); ++j)
      if (dep.association[block[i]] == dep.association[block[j]]) return false;
  for (int sta : block) {
    std::vector<int> interferers;
    for (int other : block)
      if (other != sta) interferers.push_back(dep.association[other]);
    double sinr = cosr::sinr_db(dep, params, sta, dep.association[sta], interferers);
    if (sinr < params.capture_threshold_db) return false;
    const cosr::McsEntry* e = mcs.select(sinr);
    if (!e) return false;
    int n = cosr::max_aggregation(*e, params, block.size() > 1);
    if (n < 1) return false;
    cosr::GroupMember m;
    m.ap = dep.association[sta];
    m.sta = sta;
    m.sinr_db = sinr;
    m.mcs = *e;
    m.max_packets = n;
    out.members.push_back(m);
  }
  return true;
}

inline BestPlan brute_force_best_plan(const cosr::Deployment& dep,
                                      const cosr::SimParams& params,
                                      const cosr::McsTable& mcs,
                                      int max_group_size = 0) {
  int n = dep.num_stas();
  std::vector<int> assign(n, 0);
  std::vector<int> counts = cosr::per_ap_pair_counts(dep);
  BestPlan best;

  auto evaluate = [&]() {
    int blocks = 0;
    for (int i = 0; i < n; ++i) blocks = std::max(blocks, assign[i] + 1);
    std::vector<std::vector<int>> partition(blocks);
    for (int i = 0; i < n; ++i) partition[assign[i]].push_back(i);
    std::vector<cosr::SrGroup> groups(blocks);
    for (int b = 0; b < blocks; ++b) {
      if (max_group_size > 0 &&
          static_cast<int>(partition[b].size()) > max_group_size)
        return;
      if (!block_compatible(dep, params, mcs, partition[b], groups[b])) return;
    }
    std::vector<const cosr::SrGroup*> ptrs;
    for (const auto& g : groups) ptrs.push_back(&g);
    double obj = cosr::plan_objective(ptrs, counts, params);
    std::sort(partition.begin(), partition.end());
    if (!best.feasible || obj > best.objective ||
        (obj == best.objective && partition < best.partition)) {
      best.feasible = true;
      best.objective = obj;
      best.partition = partition;
    }
  };

  std::function<void(int, int)> rec = [&](int i, int max_used) {
    if (i == n) {
      evaluate();
      return;
    }
    for (int b = 0; b <= max_used; ++b) {
      assign[i] = b;
      rec(i + 1, std::max(max_used, b + 1));
    }
  };
  rec(0, 0);
  return best;
}

inline std::vector<std::vector<int>> canonical_groups(const cosr::GroupPlan& plan) {
  std::vector<std::vector<int>> out;
  for (const auto& g : plan.groups) {
    std::vector<int> stas;
    for (const auto& m : g.members) stas.push_back(m.sta);
    std::sort(stas.begin(), stas.end());
    out.push_back(stas);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace oracle
