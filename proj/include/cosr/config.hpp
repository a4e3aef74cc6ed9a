#pragma once

#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "cosr/params.hpp"
#include "cosr/phy.hpp"

namespace cosr {

using Json = nlohmann::json;

inline Json params_to_json(const SimParams& p) {
  return Json{
      {"num_bss", p.num_bss},
      {"stas_per_bss", p.stas_per_bss},
      {"inter_ap_distance", p.inter_ap_distance_m},
      {"ap_sta_distance_min", p.ap_sta_distance_min_m},
      {"ap_sta_distance_max", p.ap_sta_distance_max_m},
      {"bandwidth_mhz", p.bandwidth_mhz},
      {"num_subcarriers", p.num_subcarriers},
      {"num_spatial_streams", p.num_spatial_streams},
      {"carrier_freq_ghz", p.carrier_freq_ghz},
      {"t_ofdm_us", p.t_ofdm_us},
      {"t_gi_us", p.t_gi_us},
      {"t_txop_max_us", p.t_txop_max_us},
      {"t_mapc_us", p.t_mapc_us},
      {"t_back_us", p.t_back_us},
      {"t_sifs_us", p.t_sifs_us},
      {"t_difs_us", p.t_difs_us},
      {"t_collision_us", p.t_collision_us},
      {"t_empty_slot_us", p.t_empty_slot_us},
      {"cw_min", p.cw_min},
      {"cw_max", p.cw_max},
      {"capture_threshold_db", p.capture_threshold_db},
      {"tx_power_mw", p.tx_power_mw},
      {"noise_power_w", p.noise_power_w},
      {"cca_dbm", p.cca_dbm},
      {"t_on_mean_ms", p.t_on_mean_ms},
      {"t_off_mean_ms", p.t_off_mean_ms},
      {"sim_duration_s", p.sim_duration_s},
      {"frame_length_bits", p.frame_length_bits},
      {"max_walls", p.max_walls},
  };
}

inline SimParams params_from_json(const Json& j) {
  if (!j.is_object()) throw ConfigError("params section must be an object");
  ParamOverrides overrides;
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!it.value().is_number())
      throw ConfigError("parameter " + it.key() + " must be numeric");
    overrides[it.key()] = it.value().get<double>();
  }
  return make_params(overrides);
}

inline Json mcs_table_to_json(const McsTable& t) {
  Json rows = Json::array();
  for (const McsEntry& e : t.entries())
    rows.push_back({e.index, e.modulation_bits, e.coding_rate, e.min_snr_db});
  return rows;
}

inline McsTable mcs_table_from_json(const Json& rows) {
  if (!rows.is_array()) throw ConfigError("mcs_table must be an array of rows");
  std::vector<McsEntry> entries;
  for (const auto& row : rows) {
    if (!row.is_array() || row.size() != 4)
      throw ConfigError("mcs_table rows must be [index, bits, rate, min_snr]");
    McsEntry e;
    e.index = row[0].get<int>();
    e.modulation_bits = row[1].get<int>();
    e.coding_rate = row[2].get<double>();
    e.min_snr_db = row[3].get<double>();
    entries.push_back(e);
  }
  return McsTable(std::move(entries));
}

struct FileConfig {
  SimParams params;
  McsTable mcs_table = McsTable::default_table();
};

// Experiment config file: a "params" section mirroring the SimParams field
// names plus an optional MCS threshold table (inline or as a file path).
// Unknown keys anywhere are rejected.
inline FileConfig load_config(const Json& j) {
  if (!j.is_object()) throw ConfigError("config root must be an object");
  FileConfig cfg;
  bool have_inline = false;
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (it.key() == "params") {
      cfg.params = params_from_json(it.value());
    } else if (it.key() == "mcs_table") {
      cfg.mcs_table = mcs_table_from_json(it.value());
      have_inline = true;
    } else if (it.key() == "mcs_table_file") {
      if (have_inline)
        throw ConfigError("mcs_table and mcs_table_file are mutually exclusive");
      std::ifstream in(it.value().get<std::string>());
      if (!in) throw ConfigError("cannot open mcs_table_file");
      cfg.mcs_table = load_mcs_table(in);
    } else {
      throw ConfigError("unknown config key: " + it.key());
    }
  }
  return cfg;
}

inline FileConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  Json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  return load_config(j);
}

}  // namespace cosr
