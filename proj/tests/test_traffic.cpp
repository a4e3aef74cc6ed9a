#include <cmath>
#include <sstream>

#include <catch_amalgamated.hpp>

#include "cosr/traffic.hpp"

using namespace cosr;
using Catch::Matchers::WithinRel;

TEST_CASE("poisson stream count and determinism") {
  auto a = poisson_arrival_times_s(1000.0, 5.0, 99);
  auto b = poisson_arrival_times_s(1000.0, 5.0, 99);
  CHECK(a == b);
  // ~5000 arrivals within 3 sigma
  double n = static_cast<double>(a.size());
  CHECK(std::abs(n - 5000.0) < 3.0 * std::sqrt(5000.0));
  for (std::size_t i = 1; i < a.size(); ++i) CHECK(a[i] >= a[i - 1]);
  CHECK(a.back() < 5.0);
  CHECK(poisson_arrival_times_s(1000.0, 0.0, 1).empty());
}

TEST_CASE("poisson mean gap converges to 1/lambda") {
  auto a = poisson_arrival_times_s(1000.0, 1000.0, 4242);  // ~1e6 samples
  double sum = a.front();
  for (std::size_t i = 1; i < a.size(); ++i) sum += a[i] - a[i - 1];
  double mean_gap = sum / static_cast<double>(a.size());
  CHECK_THAT(mean_gap, WithinRel(1e-3, 0.01));
}

TEST_CASE("bursty long-run rate matches the nominal rate") {
  TrafficSpec spec;
  spec.model = TrafficModel::kBursty;
  spec.per_sta_rate_pps = 1000.0;
  spec.t_on_mean_ms = 1.0;
  spec.t_off_mean_ms = 10.0;
  CHECK_THAT(spec.on_rate_pps(), WithinRel(11000.0, 1e-12));
  auto a = bursty_arrival_times_s(spec, 100.0, 7);
  double rate = static_cast<double>(a.size()) / 100.0;
  CHECK_THAT(rate, WithinRel(1000.0, 0.02));
}

TEST_CASE("no arrivals inside OFF periods") {
  TrafficSpec spec;
  spec.per_sta_rate_pps = 2000.0;
  spec.t_on_mean_ms = 1.0;
  spec.t_off_mean_ms = 10.0;
  std::vector<std::pair<double, double>> on_periods;
  auto a = bursty_arrival_times_s(spec, 20.0, 13, &on_periods);
  REQUIRE(!a.empty());
  for (double t : a) {
    bool inside = false;
    for (auto& [s, e] : on_periods)
      if (t >= s && t < e) inside = true;
    CHECK(inside);
  }
}

TEST_CASE("zero OFF time degenerates to a poisson process") {
  TrafficSpec spec;
  spec.per_sta_rate_pps = 1000.0;
  spec.t_on_mean_ms = 1.0;
  spec.t_off_mean_ms = 0.0;
  CHECK_THAT(spec.on_rate_pps(), WithinRel(1000.0, 1e-12));
  auto a = bursty_arrival_times_s(spec, 200.0, 3);
  // KS test of inter-arrival gaps against Exp(1000)
  std::vector<double> gaps;
  for (std::size_t i = 1; i < a.size(); ++i) gaps.push_back(a[i] - a[i - 1]);
  std::sort(gaps.begin(), gaps.end());
  double n = static_cast<double>(gaps.size());
  double dn = 0.0;
  for (std::size_t i = 0; i < gaps.size(); ++i) {
    double cdf = 1.0 - std::exp(-1000.0 * gaps[i]);
    dn = std::max(dn, std::abs((static_cast<double>(i) + 1.0) / n - cdf));
    dn = std::max(dn, std::abs(cdf - static_cast<double>(i) / n));
  }
  CHECK(dn < 1.36 / std::sqrt(n));
}

TEST_CASE("traffic spec validation") {
  TrafficSpec spec;
  spec.per_sta_rate_pps = 0.0;
  CHECK_THROWS_AS(spec.validate(), ConfigError);
  spec.per_sta_rate_pps = 100.0;
  spec.t_on_mean_ms = 0.0;
  CHECK_THROWS_AS(spec.validate(), ConfigError);
}

TEST_CASE("lambda from bottleneck throughput") {
  CHECK_THAT(lambda_for_bottleneck(10e6, 12000), WithinRel(750.0, 1e-12));
  // scales with 1/L
  CHECK_THAT(lambda_for_bottleneck(10e6, 6000), WithinRel(1500.0, 1e-12));
}

TEST_CASE("trace round trip") {
  SimParams p = make_params({{"sim_duration_s", 0.05}});
  Deployment d = generate_deployment(p, 11);
  TrafficSet set = generate_traffic(d, p, TrafficModel::kPoisson, 5000.0, 77);
  std::stringstream ss;
  write_trace(ss, set, p.frame_length_bits);
  TrafficSet back = read_trace(ss, d.num_stas());
  REQUIRE(back.per_sta_us.size() == set.per_sta_us.size());
  for (std::size_t s = 0; s < set.per_sta_us.size(); ++s)
    CHECK(back.per_sta_us[s] == set.per_sta_us[s]);

  std::stringstream bad("0 100\n");
  CHECK_THROWS_AS(read_trace(bad, 8), ConfigError);
  std::stringstream bad_sta("9 100 12000\n");
  CHECK_THROWS_AS(read_trace(bad_sta, 8), ConfigError);
}

TEST_CASE("generated traffic is deterministic per seed and distinct per sta") {
  SimParams p = make_params({{"sim_duration_s", 0.2}});
  Deployment d = generate_deployment(p, 1);
  TrafficSet a = generate_traffic(d, p, TrafficModel::kBursty, 2000.0, 5);
  TrafficSet b = generate_traffic(d, p, TrafficModel::kBursty, 2000.0, 5);
  for (std::size_t s = 0; s < a.per_sta_us.size(); ++s)
    CHECK(a.per_sta_us[s] == b.per_sta_us[s]);
  CHECK(a.per_sta_us[0] != a.per_sta_us[1]);
}
