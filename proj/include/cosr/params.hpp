#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>

namespace cosr {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised when a deployment falls outside what the engine models
// (e.g. APs that cannot carrier-sense each other).
class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class CalibrationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Every simulation constant. Defaults are the evaluated scenario; anything
// can be overridden through make_params or the config file.
struct SimParams {
  int num_bss = 4;                      // K
  int stas_per_bss = 2;                 // S_k
  double inter_ap_distance_m = 10.0;    // d_AP-AP
  double ap_sta_distance_min_m = 1.0;   // d_AP-STA range
  double ap_sta_distance_max_m = 10.0;
  double bandwidth_mhz = 80.0;
  int num_subcarriers = 980;            // N_sc
  int num_spatial_streams = 2;          // N_ss
  double carrier_freq_ghz = 6.0;        // f_c
  double t_ofdm_us = 12.8;
  double t_gi_us = 0.8;
  double t_txop_max_us = 5000.0;        // T_max
  double t_mapc_us = 286.0;             // coordination overhead per shared TXOP
  double t_back_us = 100.0;
  double t_sifs_us = 16.0;
  double t_difs_us = 34.0;
  double t_collision_us = 137.0;        // T_c
  double t_empty_slot_us = 9.0;         // T_e
  int cw_min = 15;
  int cw_max = 1023;
  double capture_threshold_db = 15.0;   // gamma_CE
  double tx_power_mw = 200.0;           // P_max
  double noise_power_w = 3.2e-13;       // W
  double cca_dbm = -82.0;
  double t_on_mean_ms = 1.0;            // bursty ON period mean
  double t_off_mean_ms = 10.0;          // bursty OFF period mean
  double sim_duration_s = 5.0;
  int frame_length_bits = 12000;        // L
  int max_walls = 2;                    // cap on the walls-every-10m rule

  double tx_power_dbm() const { return 10.0 * std::log10(tx_power_mw); }
  double noise_power_dbm() const { return 10.0 * std::log10(noise_power_w) + 30.0; }
  double symbol_us() const { return t_ofdm_us + t_gi_us; }

  void validate() const;
};

namespace detail {

inline bool is_pow2_minus_1(int v) {
  if (v < 1) return false;
  std::uint64_t u = static_cast<std::uint64_t>(v) + 1;
  return (u & (u - 1)) == 0;
}

}  // namespace detail

inline void SimParams::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0)) throw ConfigError(std::string(name) + " must be strictly positive");
  };
  if (num_bss < 1) throw ConfigError("num_bss must be >= 1");
  if (stas_per_bss < 1) throw ConfigError("stas_per_bss must be >= 1");
  positive(inter_ap_distance_m, "inter_ap_distance");
  if (ap_sta_distance_min_m < 1.0)
    throw ConfigError("ap_sta_distance_min must be >= 1 m");
  if (!(ap_sta_distance_max_m >= ap_sta_distance_min_m))
    throw ConfigError("ap_sta_distance_max must be >= ap_sta_distance_min");
  positive(bandwidth_mhz, "bandwidth_mhz");
  if (num_subcarriers < 1) throw ConfigError("num_subcarriers must be >= 1");
  if (num_spatial_streams < 1) throw ConfigError("num_spatial_streams must be >= 1");
  positive(carrier_freq_ghz, "carrier_freq_ghz");
  positive(t_ofdm_us, "t_ofdm_us");
  positive(t_gi_us, "t_gi_us");
  positive(t_txop_max_us, "t_txop_max_us");
  positive(t_mapc_us, "t_mapc_us");
  positive(t_back_us, "t_back_us");
  positive(t_sifs_us, "t_sifs_us");
  positive(t_difs_us, "t_difs_us");
  positive(t_collision_us, "t_collision_us");
  positive(t_empty_slot_us, "t_empty_slot_us");
  if (!detail::is_pow2_minus_1(cw_min))
    throw ConfigError("cw_min must be of the form 2^n - 1");
  if (!detail::is_pow2_minus_1(cw_max))
    throw ConfigError("cw_max must be of the form 2^n - 1");
  if (!(cw_min < cw_max)) throw ConfigError("cw_min must be < cw_max");
  positive(tx_power_mw, "tx_power_mw");
  positive(noise_power_w, "noise_power_w");
  positive(t_on_mean_ms, "t_on_mean_ms");
  if (t_off_mean_ms < 0.0) throw ConfigError("t_off_mean_ms must be >= 0");
  positive(sim_duration_s, "sim_duration_s");
  if (frame_length_bits < 1) throw ConfigError("frame_length_bits must be >= 1");
  if (max_walls < 0) throw ConfigError("max_walls must be >= 0");
}

// All overridable fields are numeric, so overrides are a flat name -> value
// map. Integer fields reject non-integral values.
using ParamOverrides = std::map<std::string, double>;

namespace detail {

struct ParamField {
  const char* name;
  enum Kind { kInt, kDouble } kind;
  void (*set)(SimParams&, double);
};

inline const ParamField* param_fields(std::size_t& count) {
  static const ParamField kFields[] = {
#define COSR_INT_FIELD(key, member) \
  {key, ParamField::kInt, [](SimParams& p, double v) { p.member = static_cast<int>(v); }}
#define COSR_DBL_FIELD(key, member) \
  {key, ParamField::kDouble, [](SimParams& p, double v) { p.member = v; }}
      COSR_INT_FIELD("num_bss", num_bss),
      COSR_INT_FIELD("stas_per_bss", stas_per_bss),
      COSR_DBL_FIELD("inter_ap_distance", inter_ap_distance_m),
      COSR_DBL_FIELD("ap_sta_distance_min", ap_sta_distance_min_m),
      COSR_DBL_FIELD("ap_sta_distance_max", ap_sta_distance_max_m),
      COSR_DBL_FIELD("bandwidth_mhz", bandwidth_mhz),
      COSR_INT_FIELD("num_subcarriers", num_subcarriers),
      COSR_INT_FIELD("num_spatial_streams", num_spatial_streams),
      COSR_DBL_FIELD("carrier_freq_ghz", carrier_freq_ghz),
      COSR_DBL_FIELD("t_ofdm_us", t_ofdm_us),
      COSR_DBL_FIELD("t_gi_us", t_gi_us),
      COSR_DBL_FIELD("t_txop_max_us", t_txop_max_us),
      COSR_DBL_FIELD("t_mapc_us", t_mapc_us),
      COSR_DBL_FIELD("t_back_us", t_back_us),
      COSR_DBL_FIELD("t_sifs_us", t_sifs_us),
      COSR_DBL_FIELD("t_difs_us", t_difs_us),
      COSR_DBL_FIELD("t_collision_us", t_collision_us),
      COSR_DBL_FIELD("t_empty_slot_us", t_empty_slot_us),
      COSR_INT_FIELD("cw_min", cw_min),
      COSR_INT_FIELD("cw_max", cw_max),
      COSR_DBL_FIELD("capture_threshold_db", capture_threshold_db),
      COSR_DBL_FIELD("tx_power_mw", tx_power_mw),
      COSR_DBL_FIELD("noise_power_w", noise_power_w),
      COSR_DBL_FIELD("cca_dbm", cca_dbm),
      COSR_DBL_FIELD("t_on_mean_ms", t_on_mean_ms),
      COSR_DBL_FIELD("t_off_mean_ms", t_off_mean_ms),
      COSR_DBL_FIELD("sim_duration_s", sim_duration_s),
      COSR_INT_FIELD("frame_length_bits", frame_length_bits),
      COSR_INT_FIELD("max_walls", max_walls),
#undef COSR_INT_FIELD
#undef COSR_DBL_FIELD
  };
  count = sizeof(kFields) / sizeof(kFields[0]);
  return kFields;
}

}  // namespace detail

inline SimParams make_params(const ParamOverrides& overrides = {}) {
  SimParams p;
  std::size_t count = 0;
  const detail::ParamField* fields = detail::param_fields(count);
  for (const auto& [key, value] : overrides) {
    const detail::ParamField* match = nullptr;
    for (std::size_t i = 0; i < count; ++i) {
      if (key == fields[i].name) {
        match = &fields[i];
        break;
      }
    }
    if (!match) throw ConfigError("unknown parameter: " + key);
    if (match->kind == detail::ParamField::kInt &&
        value != std::floor(value))
      throw ConfigError("parameter " + key + " must be an integer");
    match->set(p, value);
  }
  p.validate();
  return p;
}

}  // namespace cosr
