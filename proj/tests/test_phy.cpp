#include <cmath>
#include <sstream>

#include <catch_amalgamated.hpp>

#include "cosr/deployment.hpp"
#include "cosr/phy.hpp"

using namespace cosr;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("path loss pins the enterprise model") {
  CHECK_THAT(path_loss_db(1.0, 6.0, 0), WithinAbs(48.01, 0.01));
  CHECK_THAT(path_loss_db(10.0, 6.0, 0), WithinAbs(68.01, 0.01));   // breakpoint
  CHECK_THAT(path_loss_db(20.0, 6.0, 1), WithinAbs(85.55, 0.01));
  CHECK_THROWS_AS(path_loss_db(0.0, 6.0, 0), std::invalid_argument);
  CHECK_THROWS_AS(path_loss_db(-3.0, 6.0, 0), std::invalid_argument);
}

TEST_CASE("path loss is nondecreasing in distance and walls") {
  double prev = 0.0;
  for (double d = 0.5; d < 40.0; d += 0.25) {
    double pl = path_loss_db(d, 6.0, 0);
    CHECK(pl >= prev);
    prev = pl;
    CHECK(path_loss_db(d, 6.0, 2) > path_loss_db(d, 6.0, 1));
  }
}

TEST_CASE("wall rule: one wall per 10 m, capped") {
  SimParams p = make_params();
  CHECK(walls_for_distance(3.0, p) == 0);
  CHECK(walls_for_distance(10.0, p) == 1);
  CHECK(walls_for_distance(19.9, p) == 1);
  CHECK(walls_for_distance(20.0, p) == 2);
  CHECK(walls_for_distance(35.0, p) == 2);  // capped
}

TEST_CASE("rssi arithmetic") {
  CHECK_THAT(rssi_dbm(23.01, 68.01), WithinAbs(-45.0, 1e-9));
  CHECK_THAT(rssi_dbm(23.01, 0.0), WithinAbs(23.01, 1e-12));
  CHECK_THAT(rssi_dbm(23.01, 48.01), WithinAbs(-25.0, 1e-9));
}

TEST_CASE("snr and sinr") {
  SimParams p = make_params();
  // rssi -45 dBm over noise 3.2e-13 W (-94.95 dBm) -> 49.9 dB
  double snr_from_rssi = 10.0 * std::log10(dbm_to_watts(-45.0) / p.noise_power_w);
  CHECK_THAT(snr_from_rssi, WithinAbs(49.9, 0.05));

  // deployment-based SNR equals the budget assembled by hand
  Deployment d;
  d.ap_positions = {{0.0, 0.0}, {30.0, 0.0}};
  d.sta_positions = {{3.0, 0.0}};
  d.association = {0};
  double snr = snr_db(d, p, 0, 0);
  double by_hand = p.tx_power_dbm() - path_loss_db(3.0, p) - p.noise_power_dbm();
  CHECK_THAT(snr, WithinAbs(by_hand, 1e-9));

  // interferer at the same received power -> interference-limited, ~0 dB
  Deployment sym;
  sym.ap_positions = {{0.0, 0.0}, {20.0, 0.0}};
  sym.sta_positions = {{10.0, 0.0}};
  sym.association = {0};
  double sinr = sinr_db(sym, p, 0, 0, {1});
  CHECK_THAT(sinr, WithinAbs(0.0, 0.01));

  // interference can only degrade
  CHECK(sinr_db(d, p, 0, 0, {1}) < snr_db(d, p, 0, 0));
  CHECK_THROWS_AS(sinr_db(d, p, 0, 0, {0}), std::invalid_argument);
}

TEST_CASE("sinr linear-domain computation matches a dB-domain oracle") {
  SimParams p = make_params();
  Deployment d = generate_deployment(p, 5);
  for (int sta = 0; sta < d.num_stas(); ++sta) {
    int serving = d.association[sta];
    std::vector<int> interferers;
    for (int ap = 0; ap < d.num_aps(); ++ap)
      if (ap != serving) interferers.push_back(ap);
    double via_linear = sinr_db(d, p, sta, serving, interferers);
    // oracle: accumulate every term independently in dBm then convert once
    double signal_dbm =
        link_rssi_dbm(d.ap_positions[serving], d.sta_positions[sta], p);
    double denom_w = p.noise_power_w;
    for (int ap : interferers)
      denom_w += std::pow(
          10.0, (link_rssi_dbm(d.ap_positions[ap], d.sta_positions[sta], p) - 30.0) / 10.0);
    double oracle = signal_dbm - (10.0 * std::log10(denom_w) + 30.0);
    CHECK_THAT(via_linear, WithinRel(oracle, 1e-9));
  }
}

TEST_CASE("mcs selection boundaries") {
  McsTable t = McsTable::default_table();
  const McsEntry* top = t.select(t.at(13).min_snr_db);
  REQUIRE(top != nullptr);
  CHECK(top->index == 13);
  CHECK(t.select(t.at(0).min_snr_db - 0.01) == nullptr);
  const McsEntry* e = t.select(49.9);
  REQUIRE(e != nullptr);
  CHECK(e->index == 13);

  // monotone: higher SINR never yields a lower index
  int prev = -1;
  for (double s = -10.0; s < 45.0; s += 0.1) {
    const McsEntry* m = t.select(s);
    int idx = m ? m->index : -1;
    CHECK(idx >= prev);
    prev = idx;
  }
}

TEST_CASE("mcs table validation") {
  auto entries = McsTable::default_table().entries();
  entries[5].min_snr_db = entries[4].min_snr_db;  // not strictly increasing
  CHECK_THROWS_AS(McsTable(entries), ConfigError);
  entries = McsTable::default_table().entries();
  entries.pop_back();
  CHECK_THROWS_AS(McsTable(entries), ConfigError);
  entries = McsTable::default_table().entries();
  entries[3].index = 7;
  CHECK_THROWS_AS(McsTable(entries), ConfigError);
}

TEST_CASE("mcs table file round trip") {
  McsTable t = McsTable::default_table();
  std::stringstream ss;
  save_mcs_table(ss, t);
  McsTable u = load_mcs_table(ss);
  for (int i = 0; i < 14; ++i) {
    CHECK(u.at(i).modulation_bits == t.at(i).modulation_bits);
    CHECK(u.at(i).coding_rate == t.at(i).coding_rate);
    CHECK(u.at(i).min_snr_db == t.at(i).min_snr_db);
  }
  std::stringstream bad("0 1 0.5\n");
  CHECK_THROWS_AS(load_mcs_table(bad), ConfigError);
}

TEST_CASE("data rates") {
  SimParams p = make_params();
  McsTable t = McsTable::default_table();
  CHECK_THAT(data_rate_bps(t.at(0), p), WithinRel(72.06e6, 1e-3));
  CHECK_THAT(data_rate_bps(t.at(13), p), WithinRel(1441.2e6, 1e-3));
  // doubling spatial streams doubles the rate
  SimParams p4 = make_params({{"num_spatial_streams", 4.0}});
  CHECK_THAT(data_rate_bps(t.at(7), p4), WithinRel(2.0 * data_rate_bps(t.at(7), p), 1e-12));
}

TEST_CASE("aggregation limits") {
  SimParams p = make_params();
  McsTable t = McsTable::default_table();
  CHECK(max_aggregation(t.at(0), p, true) == 27);
  CHECK(max_aggregation(t.at(13), p, true) == 552);
  CHECK(max_aggregation(t.at(13), p, false) == 586);
  // enormous frames make the link unusable
  SimParams big = make_params({{"frame_length_bits", 10000000.0}});
  CHECK(max_aggregation(t.at(0), big, true) == 0);
}

TEST_CASE("txop durations") {
  SimParams p = make_params();
  McsTable t = McsTable::default_table();
  // single frame at MCS 13: overhead 402 us plus one OFDM symbol
  CHECK_THAT(txop_duration_us(1, t.at(13), p, true), WithinAbs(415.6, 0.01));
  CHECK_THAT(txop_duration_us(27, t.at(0), p, true), WithinAbs(4903.6, 0.01));
  CHECK_THROWS_AS(txop_duration_us(0, t.at(0), p, true), std::out_of_range);
  CHECK_THROWS_AS(txop_duration_us(28, t.at(0), p, true), std::out_of_range);

  // every legal aggregation fits in T_max, and duration is nondecreasing in n
  for (bool coordinated : {false, true}) {
    for (const McsEntry& e : t.entries()) {
      int n_max = max_aggregation(e, p, coordinated);
      double prev = 0.0;
      for (int n = 1; n <= n_max; ++n) {
        double dur = txop_duration_us(n, e, p, coordinated);
        CHECK(dur <= p.t_txop_max_us + 1e-9);
        CHECK(dur >= prev);
        prev = dur;
      }
    }
  }
}
