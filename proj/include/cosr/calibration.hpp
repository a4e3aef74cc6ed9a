#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cosr/grouping.hpp"
#include "cosr/mac.hpp"
#include "cosr/traffic.hpp"

namespace cosr {

struct CalibrationResult {
  double lambda_pps = 0.0;   // applied network-wide, one scalar per STA
  double s_min_bps = 0.0;    // bottleneck STA's saturated DCF throughput
  int bottleneck_sta = -1;
  std::vector<double> per_sta_throughput_bps;
};

// Measures the saturated-DCF throughput of every STA and sets the offered
// load to 90% of the bottleneck's. The bottleneck is the STA with the lowest
// solo MCS; ties resolve to the lowest measured throughput.
inline CalibrationResult calibrate_load(const Deployment& dep, const SimParams& params,
                                        const McsTable& mcs, std::uint64_t seed) {
  std::vector<PairLink> links = make_pair_links(dep, params, mcs);
  for (const PairLink& l : links) {
    if (l.solo_mcs.index < 0 || l.solo_snr_db < params.capture_threshold_db ||
        max_aggregation(l.solo_mcs, params, false) < 1)
      throw CalibrationError("link unusable for STA " + std::to_string(l.sta));
  }

  TrafficSet saturated = TrafficSet::saturated_set(dep.num_stas());
  RunOptions opts;
  opts.record_packets = false;
  SimResult res = run_dcf(dep, params, mcs, saturated,
                          derive_seed(seed, seed_tag::kCalibration), opts);

  CalibrationResult out;
  out.per_sta_throughput_bps.resize(dep.num_stas());
  for (int sta = 0; sta < dep.num_stas(); ++sta)
    out.per_sta_throughput_bps[sta] =
        static_cast<double>(res.delivered_per_sta[sta]) * params.frame_length_bits /
        params.sim_duration_s;

  int lowest_mcs = links[0].solo_mcs.index;
  for (const PairLink& l : links) lowest_mcs = std::min(lowest_mcs, l.solo_mcs.index);
  for (int sta = 0; sta < dep.num_stas(); ++sta) {
    if (links[sta].solo_mcs.index != lowest_mcs) continue;
    if (out.bottleneck_sta < 0 ||
        out.per_sta_throughput_bps[sta] < out.s_min_bps) {
      out.bottleneck_sta = sta;
      out.s_min_bps = out.per_sta_throughput_bps[sta];
    }
  }
  out.lambda_pps = lambda_for_bottleneck(out.s_min_bps, params.frame_length_bits);
  return out;
}

}  // namespace cosr
