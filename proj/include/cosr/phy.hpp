#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "cosr/deployment.hpp"
#include "cosr/params.hpp"

namespace cosr {

// Guard used wherever a real-valued symbol/packet count is collapsed to an
// integer, so exact rational values do not straddle an integer boundary
// because of floating-point rounding.
inline constexpr double kCountEps = 1e-9;

inline double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
inline double watts_to_dbm(double w) { return 10.0 * std::log10(w) + 30.0; }

// Enterprise indoor model: free-space up to the 10 m breakpoint, 35 dB/decade
// beyond it, 7 dB per wall.
inline double path_loss_db(double distance_m, double carrier_freq_ghz, int walls) {
  if (!(distance_m > 0.0)) throw std::invalid_argument("distance must be > 0");
  if (walls < 0) throw std::invalid_argument("wall count must be >= 0");
  double pl = 40.05 + 20.0 * std::log10(carrier_freq_ghz / 2.4) +
              20.0 * std::log10(std::min(distance_m, 10.0));
  if (distance_m > 10.0) pl += 35.0 * std::log10(distance_m / 10.0);
  return pl + 7.0 * walls;
}

// One wall every 10 meters, capped by params.max_walls.
inline int walls_for_distance(double distance_m, const SimParams& params) {
  if (!(distance_m > 0.0)) throw std::invalid_argument("distance must be > 0");
  return std::min(static_cast<int>(std::floor(distance_m / 10.0)), params.max_walls);
}

inline double path_loss_db(double distance_m, const SimParams& params) {
  return path_loss_db(distance_m, params.carrier_freq_ghz,
                      walls_for_distance(distance_m, params));
}

inline double rssi_dbm(double tx_power_dbm, double path_loss) {
  return tx_power_dbm - path_loss;
}

// Received power of the params-wide fixed transmit power over the given link.
inline double link_rx_power_w(const Vec2& from, const Vec2& to, const SimParams& params) {
  double d = distance(from, to);
  return dbm_to_watts(rssi_dbm(params.tx_power_dbm(), path_loss_db(d, params)));
}

inline double link_rssi_dbm(const Vec2& from, const Vec2& to, const SimParams& params) {
  return rssi_dbm(params.tx_power_dbm(), path_loss_db(distance(from, to), params));
}

// SINR at a STA served by serving_ap while every AP in interferer_aps
// transmits. Summed in linear watts, returned in dB. An empty interferer
// set yields the plain SNR.
inline double sinr_db(const Deployment& dep, const SimParams& params, int sta,
                      int serving_ap, const std::vector<int>& interferer_aps) {
  const Vec2& rx = dep.sta_positions[sta];
  double signal_w = link_rx_power_w(dep.ap_positions[serving_ap], rx, params);
  double interference_w = 0.0;
  for (int ap : interferer_aps) {
    if (ap == serving_ap)
      throw std::invalid_argument("serving AP cannot interfere with itself");
    interference_w += link_rx_power_w(dep.ap_positions[ap], rx, params);
  }
  return 10.0 * std::log10(signal_w / (params.noise_power_w + interference_w));
}

inline double snr_db(const Deployment& dep, const SimParams& params, int sta,
                     int serving_ap) {
  return sinr_db(dep, params, sta, serving_ap, {});
}

struct LinkBudget {
  double rssi_dbm = 0.0;
  double snr_db = 0.0;
  double sinr_db = 0.0;  // under the given interferer set
  double distance_m = 0.0;
  int walls = 0;
};

inline LinkBudget link_budget(const Deployment& dep, const SimParams& params,
                              int sta, int serving_ap,
                              const std::vector<int>& interferer_aps) {
  LinkBudget b;
  b.distance_m = distance(dep.ap_positions[serving_ap], dep.sta_positions[sta]);
  b.walls = walls_for_distance(b.distance_m, params);
  b.rssi_dbm = rssi_dbm(params.tx_power_dbm(), path_loss_db(b.distance_m, params));
  b.snr_db = snr_db(dep, params, sta, serving_ap);
  b.sinr_db = sinr_db(dep, params, sta, serving_ap, interferer_aps);
  return b;
}

// ---------------------------------------------------------------------------
// MCS table

struct McsEntry {
  int index = 0;
  int modulation_bits = 0;  // Y_m
  double coding_rate = 0.0; // Y_c
  double min_snr_db = 0.0;  // selection threshold
};

inline double bits_per_symbol(const McsEntry& mcs, const SimParams& params) {
  return params.num_subcarriers * params.num_spatial_streams *
         mcs.modulation_bits * mcs.coding_rate;
}

inline double data_rate_bps(const McsEntry& mcs, const SimParams& params) {
  return bits_per_symbol(mcs, params) / (params.symbol_us() * 1e-6);
}

class McsTable {
 public:
  explicit McsTable(std::vector<McsEntry> entries) : entries_(std::move(entries)) {
    validate();
  }

  // 802.11be MCS 0..13. Selection thresholds are the capacity-form SNR at
  // which the spectral efficiency of the MCS is reachable,
  // 10*log10(2^(Ym*Yc) - 1), rounded to 0.01 dB. Editable via config.
  static McsTable default_table() {
    return McsTable({
        {0, 1, 1.0 / 2.0, -3.83},
        {1, 2, 1.0 / 2.0, 0.00},
        {2, 2, 3.0 / 4.0, 2.62},
        {3, 4, 1.0 / 2.0, 4.77},
        {4, 4, 3.0 / 4.0, 8.45},
        {5, 6, 2.0 / 3.0, 11.76},
        {6, 6, 3.0 / 4.0, 13.35},
        {7, 6, 5.0 / 6.0, 14.91},
        {8, 8, 3.0 / 4.0, 17.99},
        {9, 8, 5.0 / 6.0, 20.03},
        {10, 10, 3.0 / 4.0, 22.55},
        {11, 10, 5.0 / 6.0, 25.08},
        {12, 12, 3.0 / 4.0, 27.08},
        {13, 12, 5.0 / 6.0, 30.10},
    });
  }

  const std::vector<McsEntry>& entries() const { return entries_; }
  const McsEntry& at(int index) const { return entries_.at(index); }
  int size() const { return static_cast<int>(entries_.size()); }

  // Highest-index entry whose threshold the SINR meets; nullptr when even
  // MCS 0 is out of reach (unusable link).
  const McsEntry* select(double sinr_db) const {
    const McsEntry* best = nullptr;
    for (const McsEntry& e : entries_)
      if (sinr_db >= e.min_snr_db) best = &e;
    return best;
  }

 private:
  void validate() const {
    if (entries_.size() != 14)
      throw ConfigError("MCS table must contain exactly indices 0..13");
    for (int i = 0; i < 14; ++i) {
      const McsEntry& e = entries_[i];
      if (e.index != i) throw ConfigError("MCS table indices must be 0..13 in order");
      if (e.modulation_bits < 1 || e.coding_rate <= 0.0 || e.coding_rate > 1.0)
        throw ConfigError("invalid MCS modulation/coding values");
      if (i > 0) {
        if (!(e.min_snr_db > entries_[i - 1].min_snr_db))
          throw ConfigError("MCS thresholds must be strictly increasing");
        if (!(e.modulation_bits * e.coding_rate >
              entries_[i - 1].modulation_bits * entries_[i - 1].coding_rate))
          throw ConfigError("MCS data rates must be strictly increasing");
      }
    }
  }

  std::vector<McsEntry> entries_;
};

// Threshold table file: one row per MCS, "index modulation_bits coding_rate
// min_snr_db", '#' comments. Parsed with std::from_chars so the result does
// not depend on the process locale.
inline McsTable load_mcs_table(std::istream& in) {
  std::vector<McsEntry> entries;
  std::string line;
  auto parse_double = [](const std::string& tok, const char* what) {
    double v = 0.0;
    auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc{} || p != tok.data() + tok.size())
      throw ConfigError(std::string("MCS table: bad ") + what + " value: " + tok);
    return v;
  };
  while (std::getline(in, line)) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string t0, t1, t2, t3;
    if (!(ls >> t0)) continue;  // blank
    if (!(ls >> t1 >> t2 >> t3))
      throw ConfigError("MCS table: each row needs 4 columns");
    std::string extra;
    if (ls >> extra) throw ConfigError("MCS table: trailing tokens on row");
    McsEntry e;
    e.index = static_cast<int>(parse_double(t0, "index"));
    e.modulation_bits = static_cast<int>(parse_double(t1, "modulation bits"));
    e.coding_rate = parse_double(t2, "coding rate");
    e.min_snr_db = parse_double(t3, "min SNR");
    entries.push_back(e);
  }
  return McsTable(std::move(entries));
}

inline void save_mcs_table(std::ostream& out, const McsTable& table) {
  out << "# index modulation_bits coding_rate min_snr_db\n";
  char buf[64];
  for (const McsEntry& e : table.entries()) {
    auto fmt = [&buf](double v) {
      int n = std::snprintf(buf, sizeof buf, "%.17g", v);
      return std::string(buf, static_cast<std::size_t>(n));
    };
    out << e.index << ' ' << e.modulation_bits << ' ' << fmt(e.coding_rate)
        << ' ' << fmt(e.min_snr_db) << '\n';
  }
}

// ---------------------------------------------------------------------------
// Airtime

// One fixed overhead block per TXOP: coordination phase (coordinated only),
// then SIFS + block ACK after the data.
inline double txop_overhead_us(const SimParams& params, bool coordinated) {
  double overhead = params.t_sifs_us + params.t_back_us;
  if (coordinated) overhead += params.t_mapc_us;
  return overhead;
}

// Whole OFDM symbols available for data inside one TXOP.
inline long data_symbols_per_txop(const SimParams& params, bool coordinated) {
  double t_data = params.t_txop_max_us - txop_overhead_us(params, coordinated);
  if (t_data <= 0.0) return 0;
  return static_cast<long>(std::floor(t_data / params.symbol_us() + kCountEps));
}

// Largest A-MPDU (in frames) that fits in T_max at this MCS. Computed from
// whole symbols so that txop_duration(n) <= T_max holds for every n up to
// the returned count. 0 means the link cannot carry even one frame.
inline int max_aggregation(const McsEntry& mcs, const SimParams& params,
                           bool coordinated) {
  long symbols = data_symbols_per_txop(params, coordinated);
  double bits = static_cast<double>(symbols) * bits_per_symbol(mcs, params);
  double n = std::floor(bits / params.frame_length_bits + kCountEps);
  return n < 0.0 ? 0 : static_cast<int>(n);
}

inline long symbols_for_packets(int n_packets, const McsEntry& mcs,
                                const SimParams& params) {
  double bits = static_cast<double>(n_packets) * params.frame_length_bits;
  return static_cast<long>(std::ceil(bits / bits_per_symbol(mcs, params) - kCountEps));
}

// Full airtime of a TXOP carrying n_packets frames: overhead plus the data
// span rounded up to whole OFDM symbols. Never exceeds T_max.
inline double txop_duration_us(int n_packets, const McsEntry& mcs,
                               const SimParams& params, bool coordinated) {
  int n_max = max_aggregation(mcs, params, coordinated);
  if (n_packets < 1 || n_packets > n_max)
    throw std::out_of_range("n_packets outside [1, max_aggregation]");
  return txop_overhead_us(params, coordinated) +
         static_cast<double>(symbols_for_packets(n_packets, mcs, params)) *
             params.symbol_us();
}

}  // namespace cosr
