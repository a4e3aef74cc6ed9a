#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <deque>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "cosr/deployment.hpp"
#include "cosr/grouping.hpp"
#include "cosr/params.hpp"
#include "cosr/phy.hpp"
#include "cosr/rng.hpp"
#include "cosr/traffic.hpp"

namespace cosr {

enum class Policy { kDcf, kMax2, kUnc };

inline const char* policy_name(Policy p) {
  switch (p) {
    case Policy::kDcf: return "dcf";
    case Policy::kMax2: return "max2";
    default: return "unc";
  }
}

struct PacketRecord {
  int sta = 0;
  std::int64_t arrival_us = 0;
  std::int64_t delivery_us = 0;
  int txop_id = -1;
  bool delivered = false;
};

struct TimeAccounting {
  std::int64_t idle_us = 0;       // empty slots, DIFS waits, dead air
  std::int64_t collision_us = 0;
  std::int64_t txop_us = 0;
  std::int64_t end_us = 0;
};

struct TxopMemberInfo {
  int ap = 0;
  int sta = 0;
  int mcs_index = 0;
  int n_packets = 0;
  double sinr_db = 0.0;  // under the TXOP's actual transmitter set
};

struct TxopInfo {
  int id = 0;
  std::int64_t start_us = 0;
  std::int64_t duration_us = 0;
  int sharing_ap = 0;
  bool coordinated = false;
  std::vector<TxopMemberInfo> members;
};

struct BackoffDraw {
  int ap = 0;
  int cw = 0;
  int value = 0;
};

struct RunOptions {
  bool record_packets = true;
  bool event_log = false;    // formatted lines for the post-hoc checkers
  bool backoff_audit = false;
  std::int64_t horizon_us = 0;  // 0: params.sim_duration_s
};

struct SimResult {
  std::vector<PacketRecord> records;
  std::vector<std::int64_t> generated_per_sta;
  std::vector<std::int64_t> delivered_per_sta;
  std::vector<std::int64_t> residual_per_sta;
  TimeAccounting accounting;
  std::int64_t txop_count = 0;
  std::int64_t collision_count = 0;
  std::vector<TxopInfo> txops;
  std::vector<std::string> event_log;
  std::vector<BackoffDraw> backoff_draws;

  std::int64_t delivered_total() const {
    std::int64_t n = 0;
    for (auto v : delivered_per_sta) n += v;
    return n;
  }
};

// APs are mutual contenders when they can carrier-sense each other.
inline std::vector<std::vector<bool>> contention_adjacency(const Deployment& dep,
                                                           const SimParams& params) {
  int k = dep.num_aps();
  std::vector<std::vector<bool>> adj(k, std::vector<bool>(k, false));
  for (int a = 0; a < k; ++a) {
    for (int b = a + 1; b < k; ++b) {
      double r = link_rssi_dbm(dep.ap_positions[a], dep.ap_positions[b], params);
      adj[a][b] = adj[b][a] = (r >= params.cca_dbm);
    }
  }
  return adj;
}

// The engine serializes the channel, which is only valid when every AP hears
// every other; anything else is hidden-node territory and rejected.
inline void require_single_clique(const Deployment& dep, const SimParams& params) {
  auto adj = contention_adjacency(dep, params);
  int k = dep.num_aps();
  for (int a = 0; a < k; ++a)
    for (int b = a + 1; b < k; ++b)
      if (!adj[a][b])
        throw ScenarioError("APs " + std::to_string(a) + " and " + std::to_string(b) +
                            " cannot carrier-sense each other (non-clique domain)");
}

namespace detail {

inline std::int64_t ceil_to_us(double us) {
  return static_cast<std::int64_t>(std::ceil(us - kCountEps));
}

struct MemberLink {
  int ap = 0;
  int sta = 0;
  McsEntry mcs;
  int n_max = 0;
  double sinr_db = 0.0;
};

// Per-group link parameters the engine serves with. Members that co-fire
// stick to the MCS the group was planned against (the controller-distributed
// worst case); a member whose trigger finds every partner empty transmits at
// its solo MCS instead, since no intra-group interference exists.
struct GroupAdaptation {
  std::vector<GroupMember> members;   // planned per-group links
  std::vector<MemberLink> lone;       // solo-MCS links, coordinated budget
};

struct ApState {
  std::vector<int> stas;                       // global indices, in order
  std::vector<std::pair<std::int64_t, int>> arrivals;  // merged (time, sta)
  std::size_t arr_idx = 0;
  std::int64_t queued_total = 0;
  int backoff = -1;  // slots; -1 means not drawn
  int cw = 0;
  int pending_local = -1;  // sticky head-of-line pick across collision retries
  int rr_last = 0;         // local index of the most recently served STA
};

class Engine {
 public:
  Engine(const Deployment& dep, const SimParams& params, const McsTable& mcs,
         const TrafficSet& traffic, const GroupPlan* plan,
         std::uint64_t engine_seed, const RunOptions& opts)
      : dep_(dep), params_(params), mcs_(mcs), traffic_(traffic), plan_(plan),
        opts_(opts), rng_(derive_seed(engine_seed, seed_tag::kEngine)) {
    params_.validate();
    require_single_clique(dep_, params_);
    int num_stas = dep_.num_stas();
    if (static_cast<int>(traffic_.per_sta_us.size()) != num_stas)
      throw std::invalid_argument("traffic stream count != station count");
    if (plan_) {
      if (static_cast<int>(plan_->group_of_sta.size()) != num_stas)
        throw std::invalid_argument("plan does not match deployment");
      for (int s = 0; s < num_stas; ++s) plan_lookup(*plan_, dep_.association[s], s);
    }
    horizon_us_ = opts_.horizon_us > 0 ? opts_.horizon_us
                                       : to_us(params_.sim_duration_s);
    setup_links();
    if (plan_) setup_group_adaptations();
    setup_aps();
    queues_.resize(num_stas);
    result_.generated_per_sta.assign(num_stas, 0);
    result_.delivered_per_sta.assign(num_stas, 0);
    result_.residual_per_sta.assign(num_stas, 0);
  }

  SimResult run() {
    while (step()) {
    }
    finalize();
    return std::move(result_);
  }

 private:
  // --- setup -------------------------------------------------------------

  void setup_links() {
    bool coordinated = plan_ != nullptr;
    for (int sta = 0; sta < dep_.num_stas(); ++sta) {
      MemberLink l;
      l.ap = dep_.association[sta];
      l.sta = sta;
      if (plan_) {
        const SrGroup& g = plan_lookup(*plan_, l.ap, sta);
        for (const auto& m : g.members) {
          if (m.sta == sta) {
            l.mcs = m.mcs;
            l.n_max = m.max_packets;
            l.sinr_db = m.sinr_db;
          }
        }
      } else {
        double snr = snr_db(dep_, params_, sta, l.ap);
        const McsEntry* e = mcs_.select(snr);
        if (!e || snr < params_.capture_threshold_db)
          throw ScenarioError("solo link unusable for STA " + std::to_string(sta));
        l.mcs = *e;
        l.n_max = max_aggregation(l.mcs, params_, coordinated);
        l.sinr_db = snr;
        if (l.n_max < 1)
          throw ScenarioError("solo link unusable for STA " + std::to_string(sta));
      }
      links_.push_back(l);
    }
  }

  void setup_group_adaptations() {
    for (const SrGroup& g : plan_->groups) {
      GroupAdaptation adapt;
      adapt.members = g.members;
      if (g.size() > 1) {
        for (const auto& m : g.members) {
          MemberLink link;
          link.ap = m.ap;
          link.sta = m.sta;
          link.sinr_db = snr_db(dep_, params_, m.sta, m.ap);
          link.mcs = *mcs_.select(link.sinr_db);
          link.n_max = max_aggregation(link.mcs, params_, /*coordinated=*/true);
          adapt.lone.push_back(link);
        }
      }
      group_adapt_.push_back(std::move(adapt));
    }
  }

  void setup_aps() {
    aps_.resize(dep_.num_aps());
    for (int a = 0; a < dep_.num_aps(); ++a) {
      aps_[a].stas = dep_.stas_of(a);
      aps_[a].cw = params_.cw_min;
      aps_[a].rr_last = static_cast<int>(aps_[a].stas.size()) - 1;
      for (int sta : aps_[a].stas)
        for (std::int64_t t : traffic_.per_sta_us[sta])
          aps_[a].arrivals.emplace_back(t, sta);
      std::stable_sort(aps_[a].arrivals.begin(), aps_[a].arrivals.end());
    }
  }

  // --- queue helpers -----------------------------------------------------

  bool saturated() const { return traffic_.saturated; }

  void insert_arrivals(std::int64_t up_to) {
    for (auto& ap : aps_) {
      while (ap.arr_idx < ap.arrivals.size() &&
             ap.arrivals[ap.arr_idx].first <= up_to) {
        const auto& [t, sta] = ap.arrivals[ap.arr_idx];
        queues_[sta].push_back(t);
        ap.queued_total++;
        ap.arr_idx++;
      }
    }
  }

  bool ap_active(int a) const { return saturated() || aps_[a].queued_total > 0; }

  std::int64_t queue_len(int sta) const {
    return saturated() ? std::numeric_limits<std::int64_t>::max()
                       : static_cast<std::int64_t>(queues_[sta].size());
  }

  std::int64_t next_arrival(int a) const {
    const ApState& ap = aps_[a];
    if (ap.arr_idx >= ap.arrivals.size()) return -1;
    return ap.arrivals[ap.arr_idx].first;
  }

  // --- contention --------------------------------------------------------

  int draw_backoff(int a) {
    int v = static_cast<int>(rng_.next_masked(static_cast<std::uint64_t>(aps_[a].cw)));
    if (opts_.backoff_audit) result_.backoff_draws.push_back({a, aps_[a].cw, v});
    return v;
  }

  void charge_idle(std::int64_t us) {
    result_.accounting.idle_us += us;
    now_ += us;
  }

  // One channel epoch: either an idle jump to the next arrival, or
  // DIFS + backoff countdown ending in a TXOP or a collision.
  bool step() {
    insert_arrivals(now_);
    std::vector<int> contenders;
    for (int a = 0; a < static_cast<int>(aps_.size()); ++a)
      if (ap_active(a)) contenders.push_back(a);

    if (contenders.empty()) {
      std::int64_t ta = -1;
      for (int a = 0; a < static_cast<int>(aps_.size()); ++a) {
        std::int64_t t = next_arrival(a);
        if (t >= 0 && (ta < 0 || t < ta)) ta = t;
      }
      if (ta < 0) return false;  // drained
      charge_idle(ta - now_);
      return true;
    }

    if (now_ >= horizon_us_) return false;  // no new contention past the horizon

    for (int a : contenders)
      if (aps_[a].backoff < 0) aps_[a].backoff = draw_backoff(a);

    charge_idle(static_cast<std::int64_t>(params_.t_difs_us));
    insert_arrivals(now_);

    const std::int64_t slot = static_cast<std::int64_t>(params_.t_empty_slot_us);
    while (true) {
      // Late joiners: an AP whose first packet arrived mid-countdown enters
      // with a fresh draw at the next slot boundary (its DIFS is folded in).
      for (int a = 0; a < static_cast<int>(aps_.size()); ++a) {
        if (ap_active(a) &&
            std::find(contenders.begin(), contenders.end(), a) == contenders.end()) {
          contenders.push_back(a);
          if (aps_[a].backoff < 0) aps_[a].backoff = draw_backoff(a);
        }
      }
      std::sort(contenders.begin(), contenders.end());

      int min_b = std::numeric_limits<int>::max();
      for (int a : contenders) min_b = std::min(min_b, aps_[a].backoff);

      // Cap the jump at the next arrival that could activate a new AP.
      std::int64_t ta = -1;
      for (int a = 0; a < static_cast<int>(aps_.size()); ++a) {
        if (ap_active(a)) continue;
        std::int64_t t = next_arrival(a);
        if (t >= 0 && (ta < 0 || t < ta)) ta = t;
      }
      std::int64_t slots_to_act = -1;
      if (ta >= 0)
        slots_to_act = std::max<std::int64_t>(0, (ta - now_ + slot - 1) / slot);

      if (slots_to_act >= 0 && slots_to_act < min_b) {
        charge_idle(slots_to_act * slot);
        for (int a : contenders) aps_[a].backoff -= static_cast<int>(slots_to_act);
        insert_arrivals(now_);
        continue;
      }

      charge_idle(static_cast<std::int64_t>(min_b) * slot);
      for (int a : contenders) aps_[a].backoff -= min_b;
      insert_arrivals(now_);

      std::vector<int> winners;
      for (int a : contenders)
        if (aps_[a].backoff == 0) winners.push_back(a);

      if (winners.size() > 1) {
        handle_collision(winners);
        return true;
      }
      transmit(winners.front());
      return true;
    }
  }

  void handle_collision(const std::vector<int>& colliders) {
    std::int64_t start = now_;
    std::int64_t dur = static_cast<std::int64_t>(params_.t_collision_us);
    result_.accounting.collision_us += dur;
    now_ += dur;
    result_.collision_count++;
    for (int a : colliders) {
      aps_[a].cw = std::min(2 * aps_[a].cw + 1, params_.cw_max);
      aps_[a].backoff = draw_backoff(a);
      // head-of-line STA is retried as-is: pending_local untouched
    }
    if (opts_.event_log) {
      std::string line = "coll," + std::to_string(start) + "," + std::to_string(dur) + ",";
      for (std::size_t i = 0; i < colliders.size(); ++i) {
        if (i) line += ';';
        line += std::to_string(colliders[i]);
      }
      result_.event_log.push_back(std::move(line));
    }
  }

  // Round-robin pick over non-empty queues, sticky across collision retries.
  int select_local_sta(int a) {
    ApState& ap = aps_[a];
    if (ap.pending_local >= 0 && queue_len(ap.stas[ap.pending_local]) > 0)
      return ap.pending_local;
    int s = static_cast<int>(ap.stas.size());
    for (int i = 1; i <= s; ++i) {
      int local = (ap.rr_last + i) % s;
      if (queue_len(ap.stas[local]) > 0) {
        ap.pending_local = local;
        return local;
      }
    }
    throw std::logic_error("contending AP has no queued traffic");
  }

  void serve_member(const MemberLink& link, std::int64_t n, std::int64_t delivery,
                    int txop_id) {
    if (saturated()) {
      result_.delivered_per_sta[link.sta] += n;
      return;
    }
    auto& q = queues_[link.sta];
    for (std::int64_t i = 0; i < n; ++i) {
      std::int64_t arrival = q.front();
      q.pop_front();
      if (opts_.record_packets)
        result_.records.push_back({link.sta, arrival, delivery, txop_id, true});
    }
    aps_[link.ap].queued_total -= n;
    result_.delivered_per_sta[link.sta] += n;
  }

  void after_transmit(int a, int served_local) {
    ApState& ap = aps_[a];
    ap.cw = params_.cw_min;
    ap.backoff = -1;
    ap.rr_last = served_local;
    if (ap.pending_local == served_local ||
        (ap.pending_local >= 0 && queue_len(ap.stas[ap.pending_local]) == 0))
      ap.pending_local = -1;
  }

  void transmit(int winner) {
    int local = select_local_sta(winner);
    int sta = aps_[winner].stas[local];
    if (plan_)
      transmit_cosr(winner, sta);
    else
      transmit_dcf(winner, local, sta);
  }

  void transmit_dcf(int winner, int local, int sta) {
    const MemberLink& link = links_[sta];
    std::int64_t n = std::min<std::int64_t>(queue_len(sta), link.n_max);
    double dur_f = txop_duration_us(static_cast<int>(n), link.mcs, params_,
                                    /*coordinated=*/false);
    std::int64_t dur = detail::ceil_to_us(dur_f);
    std::int64_t start = now_;
    std::int64_t end = start + dur;

    int txop_id = static_cast<int>(result_.txop_count);
    serve_member(link, n, end, txop_id);
    after_transmit(winner, local);

    result_.accounting.txop_us += dur;
    now_ = end;
    result_.txop_count++;
    record_txop(txop_id, start, dur, winner, false,
                {{winner, sta, link.mcs.index, static_cast<int>(n), link.sinr_db}});
  }

  void transmit_cosr(int winner, int sta) {
    int gi = plan_->group_of_sta[sta];
    const GroupAdaptation& adapt = group_adapt_[gi];
    if (adapt.members.size() == 1) {
      // A single-pair group has nobody to trigger: the TXOP is plain DCF.
      transmit_dcf(winner, local_index(winner, sta), sta);
      return;
    }

    // Members with nothing queued abstain. The coordination phase settles
    // the actual device set, so MCS and budget follow that set.
    int m = static_cast<int>(adapt.members.size());
    int mask = 0;
    for (int i = 0; i < m; ++i)
      if (queue_len(adapt.members[i].sta) >= 1) mask |= 1 << i;
    const auto& row = adapt.adapted[mask];

    std::vector<std::pair<const MemberLink*, std::int64_t>> tx;
    long max_symbols = 0;
    for (int i = 0; i < m; ++i) {
      if (!(mask & (1 << i))) continue;
      const MemberLink& link = row[i];
      std::int64_t n = std::min<std::int64_t>(queue_len(link.sta), link.n_max);
      tx.emplace_back(&link, n);
      max_symbols = std::max(
          max_symbols, symbols_for_packets(static_cast<int>(n), link.mcs, params_));
    }
    // The sharing AP always has traffic for the pair that won it the TXOP.
    double dur_f = txop_overhead_us(params_, /*coordinated=*/true) +
                   static_cast<double>(max_symbols) * params_.symbol_us();
    std::int64_t dur = detail::ceil_to_us(dur_f);
    std::int64_t start = now_;
    std::int64_t end = start + dur;

    int txop_id = static_cast<int>(result_.txop_count);
    std::vector<TxopMemberInfo> infos;
    for (auto& [link, n] : tx) {
      serve_member(*link, n, end, txop_id);
      int local = local_index(link->ap, link->sta);
      after_transmit(link->ap, local);
      infos.push_back({link->ap, link->sta, link->mcs.index, static_cast<int>(n),
                       link->sinr_db});
    }
    if (opts_.event_log) {
      for (int a = 0; a < static_cast<int>(aps_.size()); ++a) {
        bool transmitting = false;
        for (auto& [link, n] : tx)
          if (link->ap == a) transmitting = true;
        if (!transmitting)
          result_.event_log.push_back("nav," + std::to_string(start) + "," +
                                      std::to_string(dur) + "," + std::to_string(a));
      }
    }

    result_.accounting.txop_us += dur;
    now_ = end;
    result_.txop_count++;
    record_txop(txop_id, start, dur, winner, true, infos);
  }

  int local_index(int ap, int sta) const {
    const auto& stas = aps_[ap].stas;
    for (int i = 0; i < static_cast<int>(stas.size()); ++i)
      if (stas[i] == sta) return i;
    throw std::logic_error("sta not associated to ap");
  }

  void record_txop(int id, std::int64_t start, std::int64_t dur, int sharing_ap,
                   bool coordinated, std::vector<TxopMemberInfo> members) {
    TxopInfo info;
    info.id = id;
    info.start_us = start;
    info.duration_us = dur;
    info.sharing_ap = sharing_ap;
    info.coordinated = coordinated;
    info.members = std::move(members);
    if (opts_.event_log) {
      std::string line = "txop," + std::to_string(id) + "," + std::to_string(start) +
                         "," + std::to_string(dur) + "," + std::to_string(sharing_ap) +
                         "," + (coordinated ? "1" : "0") + ",";
      char buf[64];
      for (std::size_t i = 0; i < info.members.size(); ++i) {
        const auto& m = info.members[i];
        if (i) line += '|';
        std::snprintf(buf, sizeof buf, "%d:%d:%d:%d:%.6f", m.ap, m.sta, m.mcs_index,
                      m.n_packets, m.sinr_db);
        line += buf;
      }
      result_.event_log.push_back(std::move(line));
    }
    result_.txops.push_back(std::move(info));
  }

  void finalize() {
    insert_arrivals(std::numeric_limits<std::int64_t>::max());
    for (int sta = 0; sta < dep_.num_stas(); ++sta) {
      result_.residual_per_sta[sta] = static_cast<std::int64_t>(queues_[sta].size());
      result_.generated_per_sta[sta] =
          saturated() ? result_.delivered_per_sta[sta]
                      : static_cast<std::int64_t>(traffic_.per_sta_us[sta].size());
    }
    result_.accounting.end_us = now_;
    const auto& acc = result_.accounting;
    if (acc.idle_us + acc.collision_us + acc.txop_us != acc.end_us)
      throw std::logic_error("time accounting drift");
    if (!saturated()) {
      for (int sta = 0; sta < dep_.num_stas(); ++sta) {
        if (result_.delivered_per_sta[sta] + result_.residual_per_sta[sta] !=
            result_.generated_per_sta[sta])
          throw std::logic_error("packet conservation violated");
      }
    }
    if (opts_.event_log) {
      result_.event_log.push_back(
          "end," + std::to_string(now_) + "," + std::to_string(acc.idle_us) + "," +
          std::to_string(acc.collision_us) + "," + std::to_string(acc.txop_us));
    }
  }

  const Deployment& dep_;
  SimParams params_;
  const McsTable& mcs_;
  const TrafficSet& traffic_;
  const GroupPlan* plan_;
  RunOptions opts_;
  Rng rng_;
  std::int64_t horizon_us_ = 0;
  std::int64_t now_ = 0;

  std::vector<MemberLink> links_;
  std::vector<GroupAdaptation> group_adapt_;
  std::vector<ApState> aps_;
  std::vector<std::deque<std::int64_t>> queues_;
  SimResult result_;
};

}  // namespace detail

// Baseline: plain DCF, one AP-STA transmission per TXOP at the solo MCS.
inline SimResult run_dcf(const Deployment& dep, const SimParams& params,
                         const McsTable& mcs, const TrafficSet& traffic,
                         std::uint64_t engine_seed, const RunOptions& opts = {}) {
  detail::Engine engine(dep, params, mcs, traffic, nullptr, engine_seed, opts);
  return engine.run();
}

// Coordinated spatial reuse: the contention winner becomes the sharing AP
// and triggers its pair's whole group for one aligned TXOP.
inline SimResult run_cosr(const Deployment& dep, const SimParams& params,
                          const McsTable& mcs, const TrafficSet& traffic,
                          const GroupPlan& plan, std::uint64_t engine_seed,
                          const RunOptions& opts = {}) {
  detail::Engine engine(dep, params, mcs, traffic, &plan, engine_seed, opts);
  return engine.run();
}

}  // namespace cosr
