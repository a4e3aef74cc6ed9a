#include <cmath>
#include <set>

#include <catch_amalgamated.hpp>

#include "cosr/calibration.hpp"
#include "cosr/mac.hpp"
#include "cosr/metrics.hpp"

using namespace cosr;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

Deployment single_link_deployment(double sta_distance = 3.0) {
  Deployment d;
  d.ap_positions = {{0.0, 0.0}};
  d.sta_positions = {{sta_distance, 0.0}};
  d.association = {0};
  return d;
}

Deployment one_ap_two_stas() {
  Deployment d;
  d.ap_positions = {{0.0, 0.0}};
  d.sta_positions = {{3.0, 0.0}, {0.0, 6.0}};
  d.association = {0, 0};
  return d;
}

}  // namespace

TEST_CASE("contention domain thresholds") {
  SimParams p = make_params();
  // 20 m with the wall rule: rssi = 23.01 - 92.55 = -69.5 dBm, above CCA
  Deployment d;
  d.ap_positions = {{0.0, 0.0}, {20.0, 0.0}};
  d.sta_positions = {{1.0, 0.0}, {21.0, 0.0}};
  d.association = {0, 1};
  auto adj = contention_adjacency(d, p);
  CHECK(adj[0][1]);
  CHECK_THAT(link_rssi_dbm(d.ap_positions[0], d.ap_positions[1], p),
             WithinAbs(-69.53, 0.01));
  REQUIRE_NOTHROW(require_single_clique(d, p));

  // 50 m: below -82 dBm, hidden-node territory
  Deployment far = d;
  far.ap_positions[1] = {50.0, 0.0};
  CHECK(!contention_adjacency(far, p)[0][1]);
  CHECK_THROWS_AS(require_single_clique(far, p), ScenarioError);

  // the evaluated inter-AP distances always form a clique, diagonals included
  for (double side : {10.0, 15.0, 20.0}) {
    SimParams ps = make_params({{"inter_ap_distance", side}});
    Deployment dep = generate_deployment(ps, 1);
    REQUIRE_NOTHROW(require_single_clique(dep, ps));
  }
}

TEST_CASE("zero traffic leaves the channel idle") {
  SimParams p = make_params({{"sim_duration_s", 0.01}});
  McsTable t = McsTable::default_table();
  Deployment d = generate_deployment(p, 1);
  TrafficSet empty;
  empty.per_sta_us.resize(d.num_stas());
  SimResult r = run_dcf(d, p, t, empty, 7);
  CHECK(r.records.empty());
  CHECK(r.txop_count == 0);
  CHECK(r.accounting.txop_us == 0);
  CHECK(r.accounting.collision_us == 0);
}

TEST_CASE("saturated single link matches the renewal-cycle closed form") {
  SimParams p = make_params({{"sim_duration_s", 5.0}});
  McsTable t = McsTable::default_table();
  Deployment d = single_link_deployment();
  TrafficSet sat = TrafficSet::saturated_set(1);
  RunOptions opts;
  opts.record_packets = false;
  SimResult r = run_dcf(d, p, t, sat, 11, opts);

  // renewal cycle: DIFS + mean backoff + TXOP (integer-us, like the engine)
  int n_max = max_aggregation(t.at(13), p, false);
  double txop_us = std::ceil(txop_duration_us(n_max, t.at(13), p, false));
  double cycle_us = p.t_difs_us + 7.5 * p.t_empty_slot_us + txop_us;
  double expected_bps = n_max * p.frame_length_bits / (cycle_us * 1e-6);
  double measured_bps =
      static_cast<double>(r.delivered_total()) * p.frame_length_bits / p.sim_duration_s;
  CHECK_THAT(measured_bps, WithinRel(expected_bps, 0.02));
  CHECK(r.collision_count == 0);
}

TEST_CASE("two saturated APs share the channel evenly") {
  SimParams p = make_params({{"sim_duration_s", 20.0}});
  McsTable t = McsTable::default_table();
  Deployment d;
  d.ap_positions = {{0.0, 0.0}, {20.0, 0.0}};
  d.sta_positions = {{3.0, 0.0}, {17.0, 0.0}};
  d.association = {0, 1};
  TrafficSet sat = TrafficSet::saturated_set(2);
  RunOptions opts;
  opts.record_packets = false;
  SimResult r = run_dcf(d, p, t, sat, 5, opts);
  double a = static_cast<double>(r.delivered_per_sta[0]);
  double b = static_cast<double>(r.delivered_per_sta[1]);
  CHECK(std::abs(a - b) / std::max(a, b) < 0.05);
  CHECK(r.collision_count > 0);  // they do collide sometimes
}

TEST_CASE("determinism: same seeds give bit-identical records") {
  SimParams p = make_params({{"sim_duration_s", 0.5}});
  McsTable t = McsTable::default_table();
  Deployment d = generate_deployment(p, 33);
  CalibrationResult cal = calibrate_load(d, p, t, 33);
  TrafficSet traffic = generate_traffic(d, p, TrafficModel::kPoisson, cal.lambda_pps, 33);
  SimResult r1 = run_dcf(d, p, t, traffic, 99);
  SimResult r2 = run_dcf(d, p, t, traffic, 99);
  REQUIRE(r1.records.size() == r2.records.size());
  for (std::size_t i = 0; i < r1.records.size(); ++i) {
    CHECK(r1.records[i].sta == r2.records[i].sta);
    CHECK(r1.records[i].arrival_us == r2.records[i].arrival_us);
    CHECK(r1.records[i].delivery_us == r2.records[i].delivery_us);
    CHECK(r1.records[i].txop_id == r2.records[i].txop_id);
  }
  SimResult r3 = run_dcf(d, p, t, traffic, 100);
  CHECK(r3.records.size() > 0);
}

TEST_CASE("time accounting and conservation hold") {
  SimParams p = make_params({{"sim_duration_s", 0.5}});
  McsTable t = McsTable::default_table();
  Deployment d = generate_deployment(p, 8);
  CalibrationResult cal = calibrate_load(d, p, t, 8);
  for (TrafficModel model : {TrafficModel::kPoisson, TrafficModel::kBursty}) {
    TrafficSet traffic = generate_traffic(d, p, model, cal.lambda_pps, 21);
    SimResult r = run_dcf(d, p, t, traffic, 4);
    CHECK(r.accounting.idle_us + r.accounting.collision_us + r.accounting.txop_us ==
          r.accounting.end_us);
    for (int sta = 0; sta < d.num_stas(); ++sta)
      CHECK(r.delivered_per_sta[sta] + r.residual_per_sta[sta] ==
            r.generated_per_sta[sta]);
    // every delivery is at a TXOP end, after its arrival
    for (const auto& rec : r.records) CHECK(rec.delivery_us >= rec.arrival_us);
  }
}

TEST_CASE("backoff draws stay legal and CW follows collisions") {
  SimParams p = make_params({{"sim_duration_s", 2.0}});
  McsTable t = McsTable::default_table();
  Deployment d = generate_deployment(p, 13);
  TrafficSet sat = TrafficSet::saturated_set(d.num_stas());
  RunOptions opts;
  opts.record_packets = false;
  opts.backoff_audit = true;
  SimResult r = run_dcf(d, p, t, sat, 3, opts);
  REQUIRE(!r.backoff_draws.empty());
  for (const auto& draw : r.backoff_draws) {
    CHECK(draw.value >= 0);
    CHECK(draw.value <= draw.cw);
    CHECK(draw.cw >= p.cw_min);
    CHECK(draw.cw <= p.cw_max);
    // every CW is of the doubling chain 15, 31, ..., 1023
    bool in_chain = false;
    for (int cw = p.cw_min; cw <= p.cw_max; cw = 2 * cw + 1)
      if (draw.cw == cw) in_chain = true;
    CHECK(in_chain);
  }
  CHECK(r.collision_count > 0);
  bool saw_doubled = false;
  for (const auto& draw : r.backoff_draws)
    if (draw.cw > p.cw_min) saw_doubled = true;
  CHECK(saw_doubled);
}

TEST_CASE("NAV safety: transmissions never overlap") {
  SimParams p = make_params({{"inter_ap_distance", 15.0}, {"sim_duration_s", 0.5}});
  McsTable t = McsTable::default_table();
  Deployment d = make_symmetric_deployment(p, {{-0.71, -0.71}, {-0.8, -0.6}});
  GroupPlan plan = optimize_plan(d, p, t, GroupPolicy::kUnconstrained);
  CalibrationResult cal = calibrate_load(d, p, t, 2);
  TrafficSet traffic = generate_traffic(d, p, TrafficModel::kPoisson, cal.lambda_pps, 2);
  SimResult r = run_cosr(d, p, t, traffic, plan, 6);
  REQUIRE(r.txops.size() > 1);
  for (std::size_t i = 1; i < r.txops.size(); ++i)
    CHECK(r.txops[i].start_us >= r.txops[i - 1].start_us + r.txops[i - 1].duration_us);
  // multi-pair TXOPs do happen on this deployment
  bool saw_group = false;
  for (const auto& txop : r.txops)
    if (txop.members.size() > 1) saw_group = true;
  CHECK(saw_group);
}

TEST_CASE("capture guarantee: recomputed SINR clears the threshold") {
  SimParams p = make_params({{"inter_ap_distance", 15.0}, {"sim_duration_s", 0.2}});
  McsTable t = McsTable::default_table();
  Deployment d = generate_deployment(p, 17);
  GroupPlan plan = optimize_plan(d, p, t, GroupPolicy::kUnconstrained);
  CalibrationResult cal = calibrate_load(d, p, t, 17);
  TrafficSet traffic = generate_traffic(d, p, TrafficModel::kBursty, cal.lambda_pps, 17);
  SimResult r = run_cosr(d, p, t, traffic, plan, 17);
  for (const auto& txop : r.txops) {
    for (const auto& m : txop.members) {
      std::vector<int> interferers;
      for (const auto& o : txop.members)
        if (o.sta != m.sta) interferers.push_back(o.ap);
      double sinr = sinr_db(d, p, m.sta, m.ap, interferers);
      CHECK(sinr + 1e-9 >= p.capture_threshold_db);
      CHECK(sinr + 1e-9 >= t.at(m.mcs_index).min_snr_db);
    }
  }
}

TEST_CASE("an all-singleton plan replays DCF packet for packet") {
  // Single-pair groups have nobody to trigger, so no coordination phase is
  // spent and the run must reduce to plain DCF exactly.
  SimParams p = make_params({{"sim_duration_s", 1.0}});
  McsTable t = McsTable::default_table();
  Deployment d = one_ap_two_stas();
  GroupPlan plan = optimize_plan(d, p, t, GroupPolicy::kUnconstrained);
  REQUIRE(plan.groups.size() == 2);  // one AP: only singletons possible

  TrafficSet traffic;
  traffic.per_sta_us.resize(2);
  for (int i = 0; i < 18; ++i) traffic.per_sta_us[0].push_back(10000 + i * 50000);
  for (int i = 0; i < 18; ++i) traffic.per_sta_us[1].push_back(35000 + i * 50000);

  SimResult dcf = run_dcf(d, p, t, traffic, 42);
  SimResult cosr = run_cosr(d, p, t, traffic, plan, 42);
  REQUIRE(dcf.records.size() == cosr.records.size());
  for (std::size_t i = 0; i < dcf.records.size(); ++i) {
    CHECK(dcf.records[i].sta == cosr.records[i].sta);
    CHECK(dcf.records[i].arrival_us == cosr.records[i].arrival_us);
    CHECK(cosr.records[i].delivery_us == dcf.records[i].delivery_us);
    CHECK(dcf.records[i].txop_id == cosr.records[i].txop_id);
  }
  CHECK(dcf.accounting.txop_us == cosr.accounting.txop_us);
}

TEST_CASE("coordinated groups shrink opportunistically when queues are empty") {
  SimParams p = make_params({{"inter_ap_distance", 15.0}, {"sim_duration_s", 1.0}});
  McsTable t = McsTable::default_table();
  Deployment d = make_symmetric_deployment(p, {{-0.71, -0.71}, {-0.8, -0.6}});
  GroupPlan plan = optimize_plan(d, p, t, GroupPolicy::kUnconstrained);
  // only STA 0 has traffic: its group triggers but nobody else transmits
  TrafficSet traffic;
  traffic.per_sta_us.resize(d.num_stas());
  traffic.per_sta_us[0] = {1000, 200000, 400000};
  SimResult r = run_cosr(d, p, t, traffic, plan, 9);
  REQUIRE(!r.txops.empty());
  for (const auto& txop : r.txops) {
    CHECK(txop.members.size() == 1);
    CHECK(txop.members[0].sta == 0);
    CHECK(txop.coordinated);
  }
  CHECK(r.delivered_per_sta[0] == 3);
}

TEST_CASE("plan and deployment must match") {
  SimParams p = make_params({{"inter_ap_distance", 15.0}, {"sim_duration_s", 0.1}});
  McsTable t = McsTable::default_table();
  Deployment d = generate_deployment(p, 1);
  Deployment other = generate_deployment(p, 2);
  GroupPlan plan = optimize_plan(other, p, t, GroupPolicy::kUnconstrained);
  TrafficSet traffic = generate_traffic(d, p, TrafficModel::kPoisson, 100.0, 1);
  // same pair structure but different geometry: accepted only if the pair
  // set matches; a structurally different plan is rejected
  Deployment small;
  small.ap_positions = {{0.0, 0.0}};
  small.sta_positions = {{3.0, 0.0}};
  small.association = {0};
  GroupPlan small_plan = optimize_plan(small, p, t, GroupPolicy::kUnconstrained);
  CHECK_THROWS_AS(run_cosr(d, p, t, traffic, small_plan, 1), std::invalid_argument);
}

TEST_CASE("event log captures the run") {
  SimParams p = make_params({{"sim_duration_s", 0.05}});
  McsTable t = McsTable::default_table();
  Deployment d = generate_deployment(p, 3);
  TrafficSet traffic = generate_traffic(d, p, TrafficModel::kPoisson, 2000.0, 3);
  RunOptions opts;
  opts.event_log = true;
  SimResult r = run_dcf(d, p, t, traffic, 3, opts);
  REQUIRE(!r.event_log.empty());
  CHECK(r.event_log.back().rfind("end,", 0) == 0);
  int txop_lines = 0;
  for (const auto& line : r.event_log)
    if (line.rfind("txop,", 0) == 0) txop_lines++;
  CHECK(txop_lines == r.txop_count);
}
