#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "cosr/mac.hpp"
#include "cosr/params.hpp"

namespace cosr {

// Nearest-rank empirical quantile of (delivery - arrival), in milliseconds.
inline double delay_percentile_ms(const std::vector<PacketRecord>& records, double q) {
  if (!(q > 0.0 && q < 1.0)) throw std::invalid_argument("quantile must be in (0,1)");
  std::vector<std::int64_t> delays;
  delays.reserve(records.size());
  for (const auto& r : records)
    if (r.delivered) delays.push_back(r.delivery_us - r.arrival_us);
  if (delays.empty()) throw std::invalid_argument("no delivered packets");
  std::sort(delays.begin(), delays.end());
  std::size_t rank = static_cast<std::size_t>(
      std::ceil(q * static_cast<double>(delays.size()) - kCountEps));
  if (rank < 1) rank = 1;
  return static_cast<double>(delays[rank - 1]) * 1e-3;
}

struct StaSummary {
  int sta = 0;
  std::int64_t delivered = 0;
  double throughput_bps = 0.0;
  bool has_delay = false;  // false when nothing was delivered
  double delay_p50_ms = 0.0;
  double delay_p99_ms = 0.0;
  double mean_delay_ms = 0.0;
  std::int64_t residual_queue = 0;
};

struct RunSummary {
  std::vector<StaSummary> stas;
  double aggregate_throughput_bps = 0.0;
  bool has_delay = false;
  // pooled over every delivered packet in the run
  double pooled_p50_ms = 0.0;
  double pooled_p99_ms = 0.0;
  double pooled_mean_ms = 0.0;
  std::int64_t delivered = 0;
  std::int64_t residual = 0;
};

// Per-STA summaries plus the network aggregate. Undelivered packets are
// reported as residual_queue and excluded from the delay percentiles.
inline RunSummary summarize(const SimResult& result, const Deployment& dep,
                            const SimParams& params) {
  RunSummary out;
  std::vector<std::vector<std::int64_t>> delays(dep.num_stas());
  for (const auto& r : result.records)
    if (r.delivered) delays[r.sta].push_back(r.delivery_us - r.arrival_us);

  std::vector<std::int64_t> pooled;
  for (int sta = 0; sta < dep.num_stas(); ++sta) {
    StaSummary s;
    s.sta = sta;
    s.delivered = result.delivered_per_sta[sta];
    s.residual_queue = result.residual_per_sta[sta];
    s.throughput_bps = static_cast<double>(s.delivered) * params.frame_length_bits /
                       params.sim_duration_s;
    auto& d = delays[sta];
    if (!d.empty()) {
      std::sort(d.begin(), d.end());
      auto rank = [&d](double q) {
        std::size_t r = static_cast<std::size_t>(
            std::ceil(q * static_cast<double>(d.size()) - kCountEps));
        return d[std::max<std::size_t>(r, 1) - 1];
      };
      double sum = 0.0;
      for (auto v : d) sum += static_cast<double>(v);
      s.has_delay = true;
      s.delay_p50_ms = static_cast<double>(rank(0.5)) * 1e-3;
      s.delay_p99_ms = static_cast<double>(rank(0.99)) * 1e-3;
      s.mean_delay_ms = sum / static_cast<double>(d.size()) * 1e-3;
      pooled.insert(pooled.end(), d.begin(), d.end());
    }
    out.aggregate_throughput_bps += s.throughput_bps;
    out.delivered += s.delivered;
    out.residual += s.residual_queue;
    out.stas.push_back(s);
  }
  if (!pooled.empty()) {
    std::sort(pooled.begin(), pooled.end());
    auto rank = [&pooled](double q) {
      std::size_t r = static_cast<std::size_t>(
          std::ceil(q * static_cast<double>(pooled.size()) - kCountEps));
      return pooled[std::max<std::size_t>(r, 1) - 1];
    };
    double sum = 0.0;
    for (auto v : pooled) sum += static_cast<double>(v);
    out.has_delay = true;
    out.pooled_p50_ms = static_cast<double>(rank(0.5)) * 1e-3;
    out.pooled_p99_ms = static_cast<double>(rank(0.99)) * 1e-3;
    out.pooled_mean_ms = sum / static_cast<double>(pooled.size()) * 1e-3;
  }
  return out;
}

inline void write_summary_csv_header(std::ostream& out) {
  out << "deployment_seed,policy,traffic,sta,delivered,throughput_bps,"
         "delay_p50_ms,delay_p99_ms,mean_delay_ms,residual_queue\n";
}

namespace detail {

inline std::string csv_double(double v, bool present = true) {
  if (!present) return "nan";
  char buf[64];
  int n = std::snprintf(buf, sizeof buf, "%.6f", v);
  return std::string(buf, static_cast<std::size_t>(n));
}

}  // namespace detail

// One row per STA plus a pooled "net" row.
inline void write_summary_csv_rows(std::ostream& out, std::uint64_t deployment_seed,
                                   const std::string& policy,
                                   const std::string& traffic,
                                   const RunSummary& summary) {
  for (const StaSummary& s : summary.stas) {
    out << deployment_seed << ',' << policy << ',' << traffic << ',' << s.sta << ','
        << s.delivered << ',' << detail::csv_double(s.throughput_bps) << ','
        << detail::csv_double(s.delay_p50_ms, s.has_delay) << ','
        << detail::csv_double(s.delay_p99_ms, s.has_delay) << ','
        << detail::csv_double(s.mean_delay_ms, s.has_delay) << ','
        << s.residual_queue << '\n';
  }
  out << deployment_seed << ',' << policy << ',' << traffic << ",net,"
      << summary.delivered << ','
      << detail::csv_double(summary.aggregate_throughput_bps) << ','
      << detail::csv_double(summary.pooled_p50_ms, summary.has_delay) << ','
      << detail::csv_double(summary.pooled_p99_ms, summary.has_delay) << ','
      << detail::csv_double(summary.pooled_mean_ms, summary.has_delay) << ','
      << summary.residual << '\n';
}

}  // namespace cosr
