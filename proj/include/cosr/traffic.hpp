#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "cosr/deployment.hpp"
#include "cosr/params.hpp"
#include "cosr/rng.hpp"

namespace cosr {

enum class TrafficModel { kPoisson, kBursty };

inline const char* traffic_model_name(TrafficModel m) {
  return m == TrafficModel::kPoisson ? "poisson" : "bursty";
}

struct TrafficSpec {
  TrafficModel model = TrafficModel::kPoisson;
  double per_sta_rate_pps = 0.0;  // long-run mean, both models
  double t_on_mean_ms = 1.0;
  double t_off_mean_ms = 10.0;

  // Arrival rate inside ON periods, scaled so the long-run mean stays at
  // per_sta_rate_pps regardless of the duty cycle.
  double on_rate_pps() const {
    return per_sta_rate_pps * (t_on_mean_ms + t_off_mean_ms) / t_on_mean_ms;
  }

  void validate() const {
    if (!(per_sta_rate_pps > 0.0)) throw ConfigError("traffic rate must be > 0");
    if (!(t_on_mean_ms > 0.0)) throw ConfigError("t_on_mean must be > 0");
    if (t_off_mean_ms < 0.0) throw ConfigError("t_off_mean must be >= 0");
    if (!std::isfinite(on_rate_pps())) throw ConfigError("ON-period rate not finite");
  }
};

struct Arrival {
  int sta = 0;
  std::int64_t time_us = 0;
  int size_bits = 0;
};

// i.i.d. exponential gaps; times in seconds, strictly below the horizon.
inline std::vector<double> poisson_arrival_times_s(double rate_pps, double horizon_s,
                                                   std::uint64_t seed) {
  if (!(rate_pps > 0.0)) throw ConfigError("rate must be > 0");
  std::vector<double> out;
  Rng rng(seed);
  double t = rng.exponential(1.0 / rate_pps);
  while (t < horizon_s) {
    out.push_back(t);
    t += rng.exponential(1.0 / rate_pps);
  }
  return out;
}

// Alternating exponential ON/OFF periods starting in ON; Poisson arrivals at
// the scaled ON rate inside ON periods, silence otherwise. on_periods, when
// given, receives the [start, end) of every ON span touched.
inline std::vector<double> bursty_arrival_times_s(
    const TrafficSpec& spec, double horizon_s, std::uint64_t seed,
    std::vector<std::pair<double, double>>* on_periods = nullptr) {
  spec.validate();
  std::vector<double> out;
  Rng rng(seed);
  double on_rate = spec.on_rate_pps();
  double t = 0.0;
  while (t < horizon_s) {
    double on_end = t + rng.exponential(spec.t_on_mean_ms * 1e-3);
    if (on_periods) on_periods->emplace_back(t, std::min(on_end, horizon_s));
    double a = t + rng.exponential(1.0 / on_rate);
    while (a < on_end && a < horizon_s) {
      out.push_back(a);
      a += rng.exponential(1.0 / on_rate);
    }
    t = on_end + rng.exponential(spec.t_off_mean_ms * 1e-3);
  }
  return out;
}

// Per-STA downlink arrival streams on the integer-microsecond clock the MAC
// engine runs on. saturated marks the calibration mode where every queue is
// treated as permanently backlogged.
struct TrafficSet {
  std::vector<std::vector<std::int64_t>> per_sta_us;
  bool saturated = false;

  static TrafficSet saturated_set(int num_stas) {
    TrafficSet t;
    t.per_sta_us.resize(num_stas);
    t.saturated = true;
    return t;
  }

  std::int64_t total() const {
    std::int64_t n = 0;
    for (const auto& v : per_sta_us) n += static_cast<std::int64_t>(v.size());
    return n;
  }
};

inline std::int64_t to_us(double seconds) {
  return static_cast<std::int64_t>(std::llround(seconds * 1e6));
}

// Independent stream per STA, derived from one traffic seed so the same seed
// reproduces the same arrivals across policies.
inline TrafficSet generate_traffic(const Deployment& dep, const SimParams& params,
                                   TrafficModel model, double per_sta_rate_pps,
                                   std::uint64_t traffic_seed) {
  TrafficSpec spec;
  spec.model = model;
  spec.per_sta_rate_pps = per_sta_rate_pps;
  spec.t_on_mean_ms = params.t_on_mean_ms;
  spec.t_off_mean_ms = params.t_off_mean_ms;
  spec.validate();

  TrafficSet set;
  std::int64_t horizon_us = to_us(params.sim_duration_s);
  for (int sta = 0; sta < dep.num_stas(); ++sta) {
    std::uint64_t s = derive_seed(traffic_seed, seed_tag::kTraffic, sta,
                                  model == TrafficModel::kPoisson ? 0 : 1);
    std::vector<double> times =
        model == TrafficModel::kPoisson
            ? poisson_arrival_times_s(per_sta_rate_pps, params.sim_duration_s, s)
            : bursty_arrival_times_s(spec, params.sim_duration_s, s);
    std::vector<std::int64_t> us;
    us.reserve(times.size());
    for (double t : times) {
      std::int64_t v = to_us(t);
      if (v < horizon_us) us.push_back(v);
    }
    set.per_sta_us.push_back(std::move(us));
  }
  return set;
}

// ---------------------------------------------------------------------------
// Trace replay format: one arrival per line, "sta time_us size_bits".

inline void write_trace(std::ostream& out, const TrafficSet& set, int frame_bits) {
  std::vector<Arrival> all;
  for (int sta = 0; sta < static_cast<int>(set.per_sta_us.size()); ++sta)
    for (std::int64_t t : set.per_sta_us[sta]) all.push_back({sta, t, frame_bits});
  std::stable_sort(all.begin(), all.end(), [](const Arrival& a, const Arrival& b) {
    if (a.time_us != b.time_us) return a.time_us < b.time_us;
    return a.sta < b.sta;
  });
  for (const Arrival& a : all)
    out << a.sta << ' ' << a.time_us << ' ' << a.size_bits << '\n';
}

inline TrafficSet read_trace(std::istream& in, int num_stas) {
  TrafficSet set;
  set.per_sta_us.resize(num_stas);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    int sta = -1;
    std::int64_t t = 0;
    long long bits = 0;
    if (!(ls >> sta >> t >> bits))
      throw ConfigError("trace line " + std::to_string(lineno) + ": expected 3 fields");
    if (sta < 0 || sta >= num_stas)
      throw ConfigError("trace line " + std::to_string(lineno) + ": bad sta index");
    auto& v = set.per_sta_us[sta];
    if (!v.empty() && t < v.back())
      throw ConfigError("trace line " + std::to_string(lineno) +
                        ": times must be nondecreasing per sta");
    v.push_back(t);
  }
  return set;
}

// Target per-STA load from a measured bottleneck throughput: 90% of the
// lowest-MCS STA's DCF throughput, in packets per second.
inline double lambda_for_bottleneck(double s_min_bps, int frame_bits) {
  return 0.9 * s_min_bps / frame_bits;
}

}  // namespace cosr
