#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "cosr/deployment.hpp"
#include "cosr/params.hpp"
#include "cosr/phy.hpp"

namespace cosr {

enum class GroupPolicy { kUnconstrained, kMaxTwo };

// An associated AP-STA pair with its interference-free link state.
struct PairLink {
  int ap = 0;
  int sta = 0;
  double solo_snr_db = 0.0;
  McsEntry solo_mcs;
};

// One member of a spatial-reuse group: the pair plus its link state under
// simultaneous transmission of every other member's AP. max_packets carries
// the TXOP-sharing overhead for multi-pair groups; a single-pair group is an
// ordinary DCF transmission and budgets accordingly.
struct GroupMember {
  int ap = 0;
  int sta = 0;
  double sinr_db = 0.0;
  McsEntry mcs;
  int max_packets = 0;
};

struct SrGroup {
  std::vector<GroupMember> members;  // sorted by sta index, at most one per AP
  double quality = 0.0;              // filled once the group is part of a plan

  int size() const { return static_cast<int>(members.size()); }
  bool contains_sta(int sta) const {
    for (const auto& m : members)
      if (m.sta == sta) return true;
    return false;
  }
};

struct GroupPlan {
  std::vector<PairLink> pairs;    // indexed by sta (one stream per STA)
  std::vector<SrGroup> groups;    // exact cover of the pair set
  std::vector<int> group_of_sta;  // sta -> index into groups
  double objective = 0.0;
  GroupPolicy policy = GroupPolicy::kUnconstrained;
};

inline std::vector<PairLink> make_pair_links(const Deployment& dep,
                                             const SimParams& params,
                                             const McsTable& mcs) {
  std::vector<PairLink> links;
  for (int sta = 0; sta < dep.num_stas(); ++sta) {
    PairLink l;
    l.ap = dep.association[sta];
    l.sta = sta;
    l.solo_snr_db = snr_db(dep, params, sta, l.ap);
    const McsEntry* e = mcs.select(l.solo_snr_db);
    if (e) l.solo_mcs = *e;
    else l.solo_mcs.index = -1;
    links.push_back(l);
  }
  return links;
}

inline bool solo_link_usable(const PairLink& l, const SimParams& params,
                             const McsTable& mcs) {
  if (l.solo_mcs.index < 0) return false;
  if (l.solo_snr_db < params.capture_threshold_db) return false;
  return max_aggregation(l.solo_mcs, params, /*coordinated=*/true) >= 1;
}

namespace detail {

// Evaluates a candidate member set (one pair per distinct AP). Every member
// must decode above the capture threshold while all the other members' APs
// transmit. Compatibility is checked per subset: it is not monotone, so
// nothing is inherited from smaller groups.
inline bool evaluate_group(const Deployment& dep, const SimParams& params,
                           const McsTable& mcs, const std::vector<int>& stas,
                           SrGroup& out) {
  out.members.clear();
  bool coordinated = stas.size() > 1;
  for (int sta : stas) {
    int serving = dep.association[sta];
    std::vector<int> interferers;
    for (int other : stas) {
      if (other == sta) continue;
      interferers.push_back(dep.association[other]);
    }
    GroupMember m;
    m.ap = serving;
    m.sta = sta;
    m.sinr_db = sinr_db(dep, params, sta, serving, interferers);
    if (m.sinr_db < params.capture_threshold_db) return false;
    const McsEntry* e = mcs.select(m.sinr_db);
    if (!e) return false;
    m.mcs = *e;
    m.max_packets = max_aggregation(m.mcs, params, coordinated);
    if (m.max_packets < 1) return false;
    out.members.push_back(m);
  }
  return true;
}

}  // namespace detail

// Every compatible group: subsets of pairs with at most one pair per AP,
// size <= max_size (0 = no limit), all members above gamma_CE under full
// intra-group interference. Groups and members come out in a canonical
// (lexicographic by sta) order.
inline std::vector<SrGroup> enumerate_compatible_groups(const Deployment& dep,
                                                        const SimParams& params,
                                                        const McsTable& mcs,
                                                        int max_size = 0) {
  int num_aps = dep.num_aps();
  std::vector<std::vector<int>> per_ap(num_aps);
  for (int sta = 0; sta < dep.num_stas(); ++sta)
    per_ap[dep.association[sta]].push_back(sta);

  std::vector<SrGroup> groups;
  std::vector<int> chosen;
  // Walk APs in order, each contributing either nothing or one of its STAs.
  auto rec = [&](auto&& self, int ap) -> void {
    if (ap == num_aps) {
      if (chosen.empty()) return;
      if (max_size > 0 && static_cast<int>(chosen.size()) > max_size) return;
      SrGroup g;
      if (detail::evaluate_group(dep, params, mcs, chosen, g)) groups.push_back(g);
      return;
    }
    self(self, ap + 1);
    if (max_size > 0 && static_cast<int>(chosen.size()) >= max_size) return;
    for (int sta : per_ap[ap]) {
      chosen.push_back(sta);
      self(self, ap + 1);
      chosen.pop_back();
    }
  };
  rec(rec, 0);

  std::sort(groups.begin(), groups.end(), [](const SrGroup& a, const SrGroup& b) {
    std::vector<int> sa, sb;
    for (const auto& m : a.members) sa.push_back(m.sta);
    for (const auto& m : b.members) sb.push_back(m.sta);
    return sa < sb;
  });
  return groups;
}

// Probability that a backoff cycle triggers this group: any member AP wins
// (uniform 1/K across equal contenders) and its round-robin points at the
// pair it has in this group (1 of G_a groups).
inline double group_tx_probability(const SrGroup& group,
                                   const std::vector<int>& per_ap_group_counts,
                                   const SimParams& params) {
  double p = 0.0;
  for (const auto& m : group.members)
    p += (1.0 / params.num_bss) * (1.0 / per_ap_group_counts[m.ap]);
  return p;
}

// Group quality: transmission probability times the packets the group can
// move per TXOP.
inline double group_quality(const SrGroup& group,
                            const std::vector<int>& per_ap_group_counts,
                            const SimParams& params) {
  double packets = 0.0;
  for (const auto& m : group.members) packets += m.max_packets;
  return group_tx_probability(group, per_ap_group_counts, params) * packets;
}

namespace detail {

// Per-pair share of the plan objective. The optimizer maximizes, over exact
// covers, the sum across pairs of log(p_tx * packets) -- i.e. proportional
// fairness over AP-STA pairs. This keeps the fairness constraint meaningful:
// summing per-group logs instead would always favor splitting into
// singletons regardless of the interference structure.
inline double group_log_weight(const SrGroup& group,
                               const std::vector<int>& per_ap_group_counts,
                               const SimParams& params) {
  double p = group_tx_probability(group, per_ap_group_counts, params);
  double w = 0.0;
  for (const auto& m : group.members) w += std::log(p * m.max_packets);
  return w;
}

inline std::vector<int> group_sta_vector(const SrGroup& g) {
  std::vector<int> v;
  for (const auto& m : g.members) v.push_back(m.sta);
  return v;
}

// Canonical partition order: groups sorted by their member vectors.
inline std::vector<std::vector<int>> canonical_partition(
    const std::vector<const SrGroup*>& groups) {
  std::vector<std::vector<int>> p;
  for (const SrGroup* g : groups) p.push_back(group_sta_vector(*g));
  std::sort(p.begin(), p.end());
  return p;
}

}  // namespace detail

// Objective of a complete partition, evaluated in canonical group order so
// that equal partitions always produce bit-identical doubles.
inline double plan_objective(const std::vector<const SrGroup*>& groups,
                             const std::vector<int>& per_ap_group_counts,
                             const SimParams& params) {
  std::vector<const SrGroup*> sorted = groups;
  std::sort(sorted.begin(), sorted.end(), [](const SrGroup* a, const SrGroup* b) {
    return detail::group_sta_vector(*a) < detail::group_sta_vector(*b);
  });
  double obj = 0.0;
  for (const SrGroup* g : sorted)
    obj += detail::group_log_weight(*g, per_ap_group_counts, params);
  return obj;
}

// Pairs-per-AP counts. Multiplicity one plus the one-pair-per-AP rule force
// every exact cover to spread an AP's pairs over exactly that many groups,
// so the plan-wide G_a counts are known before the partition is.
inline std::vector<int> per_ap_pair_counts(const Deployment& dep) {
  std::vector<int> counts(dep.num_aps(), 0);
  for (int sta = 0; sta < dep.num_stas(); ++sta) counts[dep.association[sta]]++;
  return counts;
}

namespace detail {

struct CoverSearch {
  const std::vector<SrGroup>* candidates = nullptr;
  const std::vector<int>* group_counts = nullptr;
  const SimParams* params = nullptr;
  int num_pairs = 0;
  std::vector<std::vector<int>> by_first_uncovered;  // pair -> candidate idx
  std::vector<double> weight;                        // candidate -> log weight
  std::vector<double> pair_bound;                    // pair -> best per-pair term
  std::vector<std::uint64_t> member_mask;            // candidate -> pair bitmask

  bool found = false;
  double best_obj = 0.0;
  std::vector<std::vector<int>> best_canonical;
  std::vector<int> best_choice;

  std::vector<int> choice;

  void run() {
    const auto& cands = *candidates;
    weight.resize(cands.size());
    member_mask.resize(cands.size());
    by_first_uncovered.assign(num_pairs, {});
    pair_bound.assign(num_pairs, -1e300);
    for (std::size_t i = 0; i < cands.size(); ++i) {
      weight[i] = group_log_weight(cands[i], *group_counts, *params);
      std::uint64_t mask = 0;
      for (const auto& m : cands[i].members) mask |= 1ull << m.sta;
      member_mask[i] = mask;
      int first = cands[i].members.front().sta;
      by_first_uncovered[first].push_back(static_cast<int>(i));
      double p = group_tx_probability(cands[i], *group_counts, *params);
      for (const auto& m : cands[i].members) {
        double term = std::log(p * m.max_packets);
        pair_bound[m.sta] = std::max(pair_bound[m.sta], term);
      }
    }
    // Suffix bound: best achievable per-pair terms for pairs >= p.
    suffix_bound.assign(num_pairs + 1, 0.0);
    for (int p = num_pairs - 1; p >= 0; --p)
      suffix_bound[p] = suffix_bound[p + 1] + pair_bound[p];
    recurse(0, 0.0);
  }

  std::vector<double> suffix_bound;

  void recurse(std::uint64_t covered, double acc) {
    int first = -1;
    for (int p = 0; p < num_pairs; ++p) {
      if (!(covered & (1ull << p))) {
        first = p;
        break;
      }
    }
    if (first < 0) {
      finish(acc);
      return;
    }
    // A true upper bound on the remaining terms; the slack keeps rounding
    // from pruning an exact tie.
    if (found && acc + remaining_bound(covered, first) + 1e-9 < best_obj) return;
    for (int ci : by_first_uncovered[first]) {
      if (member_mask[ci] & covered) continue;
      choice.push_back(ci);
      recurse(covered | member_mask[ci], acc + weight[ci]);
      choice.pop_back();
    }
  }

  double remaining_bound(std::uint64_t covered, int first) const {
    double b = 0.0;
    for (int p = first; p < num_pairs; ++p)
      if (!(covered & (1ull << p))) b += pair_bound[p];
    return b;
  }

  void finish(double acc) {
    std::vector<const SrGroup*> groups;
    for (int ci : choice) groups.push_back(&(*candidates)[ci]);
    double obj = plan_objective(groups, *group_counts, *params);
    (void)acc;
    if (!found || obj > best_obj) {
      found = true;
      best_obj = obj;
      best_canonical = canonical_partition(groups);
      best_choice = choice;
    } else if (obj == best_obj) {
      auto canon = canonical_partition(groups);
      if (canon < best_canonical) {
        best_canonical = std::move(canon);
        best_choice = choice;
      }
    }
  }
};

// Greedy fallback for instances too large for exact search: repeatedly take
// the feasible candidate with the best per-pair weight. Singleton groups
// keep it total.
inline std::vector<int> greedy_cover(const std::vector<SrGroup>& cands,
                                     const std::vector<int>& group_counts,
                                     const SimParams& params, int num_pairs) {
  std::vector<double> weight(cands.size());
  for (std::size_t i = 0; i < cands.size(); ++i)
    weight[i] = group_log_weight(cands[i], group_counts, params);
  std::vector<bool> covered(num_pairs, false);
  std::vector<int> picked;
  int covered_count = 0;
  while (covered_count < num_pairs) {
    int best = -1;
    double best_score = 0.0;
    for (std::size_t i = 0; i < cands.size(); ++i) {
      bool ok = true;
      for (const auto& m : cands[i].members)
        if (covered[m.sta]) { ok = false; break; }
      if (!ok) continue;
      double score = weight[i] / cands[i].size();
      if (best < 0 || score > best_score) {
        best = static_cast<int>(i);
        best_score = score;
      }
    }
    if (best < 0) throw ScenarioError("greedy grouping could not cover all pairs");
    picked.push_back(best);
    for (const auto& m : cands[best].members) {
      covered[m.sta] = true;
      ++covered_count;
    }
  }
  return picked;
}

}  // namespace detail

// Exact-cover size above which optimize_plan switches from exact search to
// the greedy fallback.
inline constexpr int kExactSearchPairLimit = 16;

// Selects the scheduled groups: the exact cover of all AP-STA pairs by
// compatible groups maximizing the proportional-fair objective. MAX2 caps
// candidate groups at two pairs. Deterministic: ties break to the
// lexicographically smallest partition.
inline GroupPlan optimize_plan(const Deployment& dep, const SimParams& params,
                               const McsTable& mcs, GroupPolicy policy) {
  GroupPlan plan;
  plan.policy = policy;
  plan.pairs = make_pair_links(dep, params, mcs);
  for (const PairLink& l : plan.pairs) {
    if (!solo_link_usable(l, params, mcs))
      throw ScenarioError("solo link unusable for STA " + std::to_string(l.sta));
  }
  int num_pairs = dep.num_stas();
  if (num_pairs > 63) throw ScenarioError("too many AP-STA pairs (max 63)");

  int max_size = policy == GroupPolicy::kMaxTwo ? 2 : 0;
  std::vector<SrGroup> candidates =
      enumerate_compatible_groups(dep, params, mcs, max_size);
  std::vector<int> group_counts = per_ap_pair_counts(dep);

  std::vector<int> chosen;
  if (num_pairs <= kExactSearchPairLimit) {
    detail::CoverSearch search;
    search.candidates = &candidates;
    search.group_counts = &group_counts;
    search.params = &params;
    search.num_pairs = num_pairs;
    search.run();
    if (!search.found) throw ScenarioError("no feasible partition found");
    chosen = search.best_choice;
  } else {
    chosen = detail::greedy_cover(candidates, group_counts, params, num_pairs);
  }

  std::vector<const SrGroup*> picked;
  for (int ci : chosen) picked.push_back(&candidates[ci]);
  std::sort(picked.begin(), picked.end(), [](const SrGroup* a, const SrGroup* b) {
    return detail::group_sta_vector(*a) < detail::group_sta_vector(*b);
  });
  plan.group_of_sta.assign(num_pairs, -1);
  for (const SrGroup* g : picked) {
    SrGroup out = *g;
    out.quality = group_quality(out, group_counts, params);
    for (const auto& m : out.members) plan.group_of_sta[m.sta] = static_cast<int>(plan.groups.size());
    plan.groups.push_back(std::move(out));
  }
  plan.objective = plan_objective(picked, group_counts, params);
  return plan;
}

inline const SrGroup& plan_lookup(const GroupPlan& plan, int ap, int sta) {
  if (sta < 0 || sta >= static_cast<int>(plan.group_of_sta.size()))
    throw std::out_of_range("pair not in plan: sta " + std::to_string(sta));
  int gi = plan.group_of_sta[sta];
  if (gi < 0) throw std::out_of_range("pair not in plan: sta " + std::to_string(sta));
  const SrGroup& g = plan.groups[gi];
  for (const auto& m : g.members)
    if (m.sta == sta && m.ap == ap) return g;
  throw std::out_of_range("pair (" + std::to_string(ap) + "," + std::to_string(sta) +
                          ") not in plan");
}

// One group per line: member ap:sta:mcs:sinr triplets, packet budget and
// quality. Stable output used for inspection and as the plan hash preimage.
inline void write_plan(std::ostream& out, const GroupPlan& plan) {
  out << "# policy "
      << (plan.policy == GroupPolicy::kMaxTwo ? "max2" : "unc") << '\n';
  char buf[64];
  auto fmt = [&buf](double v) {
    int n = std::snprintf(buf, sizeof buf, "%.6f", v);
    return std::string(buf, static_cast<std::size_t>(n));
  };
  for (const SrGroup& g : plan.groups) {
    bool first = true;
    for (const auto& m : g.members) {
      if (!first) out << ' ';
      first = false;
      out << m.ap << ':' << m.sta << ":mcs" << m.mcs.index << ":n" << m.max_packets
          << ":sinr" << fmt(m.sinr_db);
    }
    out << " quality=" << fmt(g.quality) << '\n';
  }
  out << "# objective " << fmt(plan.objective) << '\n';
}

inline std::uint64_t plan_hash(const GroupPlan& plan) {
  std::ostringstream ss;
  write_plan(ss, plan);
  std::uint64_t h = 14695981039346656037ULL;  // FNV-1a
  for (unsigned char c : ss.str()) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace cosr
