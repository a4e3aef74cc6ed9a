#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "cosr/calibration.hpp"
#include "cosr/config.hpp"
#include "cosr/deployment.hpp"
#include "cosr/grouping.hpp"
#include "cosr/mac.hpp"
#include "cosr/metrics.hpp"
#include "cosr/params.hpp"
#include "cosr/traffic.hpp"

namespace cosr {

// Runs fn(0..n-1) on a small worker pool. Exceptions are rethrown on the
// caller thread once every worker has stopped.
inline void parallel_for(int n, int workers, const std::function<void(int)>& fn) {
  if (workers < 1) workers = 1;
  if (workers == 1 || n <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    while (true) {
      int i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        next.store(n);
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  for (int w = 0; w < std::min(workers, n); ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

struct ExperimentSpec {
  SimParams params;
  McsTable mcs_table = McsTable::default_table();
  std::vector<Policy> policies;
  std::vector<TrafficModel> traffic_models;
  std::vector<std::uint64_t> deployment_seeds;
  std::uint64_t master_seed = 1;
  std::string out_dir;
  int workers = 0;  // 0: hardware concurrency
  bool event_logs = false;
  // When set, every "deployment seed" runs on this one symmetric layout
  // (traffic and contention randomness still vary by seed).
  std::optional<std::vector<Vec2>> symmetric_offsets;

  void validate() const {
    params.validate();
    if (policies.empty()) throw ConfigError("at least one policy required");
    if (traffic_models.empty()) throw ConfigError("at least one traffic model required");
    if (deployment_seeds.empty()) throw ConfigError("at least one deployment seed required");
    if (out_dir.empty()) throw ConfigError("output directory required");
  }
};

struct RunRecord {
  std::uint64_t deployment_seed = 0;
  Policy policy = Policy::kDcf;
  TrafficModel traffic = TrafficModel::kPoisson;
  std::uint64_t traffic_seed = 0;
  std::uint64_t engine_seed = 0;
  RunSummary summary;
  std::vector<std::int64_t> generated_per_sta;
  std::string csv_path;  // relative to out_dir
  std::string log_path;  // empty when logs are off
};

struct DeploymentRecord {
  std::uint64_t seed = 0;
  std::uint64_t calibration_seed = 0;
  CalibrationResult calibration;
  std::vector<std::pair<Policy, std::uint64_t>> plan_hashes;
  std::vector<RunRecord> runs;
};

struct BatchResult {
  std::vector<DeploymentRecord> deployments;
  std::string manifest_path;
};

namespace detail {

inline std::string run_stem(std::uint64_t seed, Policy policy, TrafficModel traffic) {
  return std::to_string(seed) + "_" + policy_name(policy) + "_" +
         traffic_model_name(traffic);
}

inline Deployment build_deployment(const ExperimentSpec& spec, std::uint64_t seed) {
  if (spec.symmetric_offsets)
    return make_symmetric_deployment(spec.params, *spec.symmetric_offsets);
  return generate_deployment(spec.params, seed);
}

}  // namespace detail

// Full experiment matrix: for every deployment seed, calibrate once, compute
// the needed plans once, then run every (policy x traffic) cell on the same
// arrival streams so comparisons are paired. Writes per-run CSVs, one
// aggregate CSV, and a manifest that suffices to reproduce any run.
inline BatchResult run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  namespace fs = std::filesystem;
  fs::create_directories(spec.out_dir);
  fs::create_directories(spec.out_dir + "/runs");
  fs::create_directories(spec.out_dir + "/plans");
  if (spec.event_logs) fs::create_directories(spec.out_dir + "/logs");

  int n = static_cast<int>(spec.deployment_seeds.size());
  std::vector<DeploymentRecord> deployments(n);
  int workers = spec.workers > 0
                    ? spec.workers
                    : std::max(1u, std::thread::hardware_concurrency());

  parallel_for(n, workers, [&](int di) {
    std::uint64_t seed = spec.deployment_seeds[di];
    DeploymentRecord& rec = deployments[di];
    rec.seed = seed;
    Deployment dep = detail::build_deployment(spec, seed);

    rec.calibration_seed = derive_seed(spec.master_seed, seed_tag::kCalibration, seed);
    rec.calibration = calibrate_load(dep, spec.params, spec.mcs_table,
                                     rec.calibration_seed);

    std::vector<std::pair<Policy, GroupPlan>> plans;
    for (Policy policy : spec.policies) {
      if (policy == Policy::kDcf) continue;
      GroupPolicy gp = policy == Policy::kMax2 ? GroupPolicy::kMaxTwo
                                               : GroupPolicy::kUnconstrained;
      plans.emplace_back(policy, optimize_plan(dep, spec.params, spec.mcs_table, gp));
      const GroupPlan& plan = plans.back().second;
      rec.plan_hashes.emplace_back(policy, plan_hash(plan));
      std::ofstream pf(spec.out_dir + "/plans/" + std::to_string(seed) + "_" +
                       policy_name(policy) + ".txt");
      write_plan(pf, plan);
    }

    for (TrafficModel traffic : spec.traffic_models) {
      std::uint64_t traffic_seed = derive_seed(
          spec.master_seed, seed_tag::kTraffic, seed,
          traffic == TrafficModel::kPoisson ? 0 : 1);
      TrafficSet set = generate_traffic(dep, spec.params, traffic,
                                        rec.calibration.lambda_pps, traffic_seed);
      std::uint64_t engine_seed = derive_seed(
          spec.master_seed, seed_tag::kEngine, seed,
          traffic == TrafficModel::kPoisson ? 0 : 1);

      for (Policy policy : spec.policies) {
        RunOptions opts;
        opts.event_log = spec.event_logs;
        SimResult result;
        if (policy == Policy::kDcf) {
          result = run_dcf(dep, spec.params, spec.mcs_table, set, engine_seed, opts);
        } else {
          const GroupPlan* plan = nullptr;
          for (auto& [p, pl] : plans)
            if (p == policy) plan = &pl;
          result = run_cosr(dep, spec.params, spec.mcs_table, set, *plan,
                            engine_seed, opts);
        }

        RunRecord run;
        run.deployment_seed = seed;
        run.policy = policy;
        run.traffic = traffic;
        run.traffic_seed = traffic_seed;
        run.engine_seed = engine_seed;
        run.summary = summarize(result, dep, spec.params);
        run.generated_per_sta = result.generated_per_sta;
        std::string stem = detail::run_stem(seed, policy, traffic);
        run.csv_path = "runs/" + stem + ".csv";
        {
          std::ofstream csv(spec.out_dir + "/" + run.csv_path);
          write_summary_csv_header(csv);
          write_summary_csv_rows(csv, seed, policy_name(policy),
                                 traffic_model_name(traffic), run.summary);
        }
        if (spec.event_logs) {
          run.log_path = "logs/" + stem + ".evt";
          std::ofstream evt(spec.out_dir + "/" + run.log_path);
          for (const std::string& line : result.event_log) evt << line << '\n';
        }
        rec.runs.push_back(std::move(run));
      }
    }
  });

  // Aggregate CSV and the manifest are written serially, in spec order, so
  // identical specs produce byte-identical outputs.
  {
    std::ofstream agg(spec.out_dir + "/aggregate.csv");
    write_summary_csv_header(agg);
    for (const auto& rec : deployments)
      for (const auto& run : rec.runs)
        write_summary_csv_rows(agg, run.deployment_seed, policy_name(run.policy),
                               traffic_model_name(run.traffic), run.summary);
  }

  Json manifest;
  manifest["format"] = 1;
  manifest["master_seed"] = spec.master_seed;
  manifest["params"] = params_to_json(spec.params);
  manifest["mcs_table"] = mcs_table_to_json(spec.mcs_table);
  if (spec.symmetric_offsets) {
    Json offs = Json::array();
    for (const Vec2& o : *spec.symmetric_offsets) offs.push_back({o.x, o.y});
    manifest["symmetric_offsets"] = offs;
  }
  Json deps = Json::array();
  for (const auto& rec : deployments) {
    Json d;
    d["seed"] = rec.seed;
    d["calibration"] = {{"seed", rec.calibration_seed},
                        {"lambda_pps", rec.calibration.lambda_pps},
                        {"s_min_bps", rec.calibration.s_min_bps},
                        {"bottleneck_sta", rec.calibration.bottleneck_sta}};
    Json plans = Json::object();
    for (const auto& [policy, hash] : rec.plan_hashes)
      plans[policy_name(policy)] = { {"hash", hash},
          {"file", "plans/" + std::to_string(rec.seed) + "_" + policy_name(policy) + ".txt"}};
    d["plans"] = plans;
    Json runs = Json::array();
    for (const auto& run : rec.runs) {
      Json r;
      r["policy"] = policy_name(run.policy);
      r["traffic"] = traffic_model_name(run.traffic);
      r["traffic_seed"] = run.traffic_seed;
      r["engine_seed"] = run.engine_seed;
      r["lambda_pps"] = rec.calibration.lambda_pps;
      r["csv"] = run.csv_path;
      if (!run.log_path.empty()) r["log"] = run.log_path;
      std::int64_t generated = 0;
      Json gps = Json::array(), dps = Json::array(), rps = Json::array();
      for (std::size_t s = 0; s < run.generated_per_sta.size(); ++s) {
        generated += run.generated_per_sta[s];
        gps.push_back(run.generated_per_sta[s]);
        dps.push_back(run.summary.stas[s].delivered);
        rps.push_back(run.summary.stas[s].residual_queue);
      }
      r["generated"] = generated;
      r["delivered"] = run.summary.delivered;
      r["residual"] = run.summary.residual;
      r["generated_per_sta"] = gps;
      r["delivered_per_sta"] = dps;
      r["residual_per_sta"] = rps;
      r["pooled_p50_ms"] = run.summary.has_delay ? run.summary.pooled_p50_ms : -1.0;
      r["pooled_p99_ms"] = run.summary.has_delay ? run.summary.pooled_p99_ms : -1.0;
      r["aggregate_throughput_bps"] = run.summary.aggregate_throughput_bps;
      runs.push_back(r);
    }
    d["runs"] = runs;
    deps.push_back(d);
  }
  manifest["deployments"] = deps;

  BatchResult out;
  out.deployments = std::move(deployments);
  out.manifest_path = spec.out_dir + "/manifest.json";
  std::ofstream mf(out.manifest_path);
  mf << manifest.dump(2) << '\n';
  return out;
}

// ---------------------------------------------------------------------------
// Post-hoc verification over exported event logs.

struct CheckResult {
  std::string run;
  std::string check;
  bool pass = false;
  std::string message;
};

struct VerifyReport {
  std::vector<CheckResult> checks;
  bool all_pass = true;

  void add(const std::string& run, const std::string& check, bool pass,
           const std::string& message = "") {
    checks.push_back({run, check, pass, message});
    if (!pass) all_pass = false;
  }
};

namespace detail {

struct LoggedTxop {
  int id = 0;
  std::int64_t start = 0, dur = 0;
  int sharing_ap = 0;
  bool coordinated = false;
  std::vector<TxopMemberInfo> members;
};

struct ParsedLog {
  std::vector<LoggedTxop> txops;
  std::vector<std::pair<std::int64_t, std::int64_t>> collisions;  // start, dur
  std::vector<std::tuple<std::int64_t, std::int64_t, int>> navs;  // start, dur, ap
  std::int64_t end_us = -1, idle_us = 0, coll_us = 0, txop_us = 0;
};

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    std::size_t next = s.find(sep, pos);
    if (next == std::string::npos) {
      out.push_back(s.substr(pos));
      return out;
    }
    out.push_back(s.substr(pos, next - pos));
    pos = next + 1;
  }
}

inline ParsedLog parse_event_log(std::istream& in) {
  ParsedLog log;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    auto f = split(line, ',');
    if (f[0] == "txop") {
      if (f.size() != 7) throw ConfigError("malformed txop line: " + line);
      LoggedTxop t;
      t.id = std::stoi(f[1]);
      t.start = std::stoll(f[2]);
      t.dur = std::stoll(f[3]);
      t.sharing_ap = std::stoi(f[4]);
      t.coordinated = f[5] == "1";
      for (const std::string& ms : split(f[6], '|')) {
        auto mf = split(ms, ':');
        if (mf.size() != 5) throw ConfigError("malformed txop member: " + ms);
        TxopMemberInfo m;
        m.ap = std::stoi(mf[0]);
        m.sta = std::stoi(mf[1]);
        m.mcs_index = std::stoi(mf[2]);
        m.n_packets = std::stoi(mf[3]);
        m.sinr_db = std::stod(mf[4]);
        t.members.push_back(m);
      }
      log.txops.push_back(std::move(t));
    } else if (f[0] == "coll") {
      log.collisions.emplace_back(std::stoll(f[1]), std::stoll(f[2]));
    } else if (f[0] == "nav") {
      log.navs.emplace_back(std::stoll(f[1]), std::stoll(f[2]), std::stoi(f[3]));
    } else if (f[0] == "end") {
      log.end_us = std::stoll(f[1]);
      log.idle_us = std::stoll(f[2]);
      log.coll_us = std::stoll(f[3]);
      log.txop_us = std::stoll(f[4]);
    } else {
      throw ConfigError("unknown event kind: " + f[0]);
    }
  }
  if (log.end_us < 0) throw ConfigError("event log missing end line");
  return log;
}

}  // namespace detail

// Replays the checks over a completed batch: NAV safety, time accounting,
// capture guarantee and packet conservation, all from the exported logs plus
// regenerated deployments/traffic.
inline VerifyReport verify_batch(const std::string& out_dir) {
  namespace fs = std::filesystem;
  std::ifstream mf(out_dir + "/manifest.json");
  if (!mf) throw ConfigError("missing manifest.json in " + out_dir);
  Json manifest;
  mf >> manifest;

  SimParams params = params_from_json(manifest.at("params"));
  McsTable mcs = mcs_table_from_json(manifest.at("mcs_table"));
  std::optional<std::vector<Vec2>> symmetric;
  if (manifest.contains("symmetric_offsets")) {
    std::vector<Vec2> offs;
    for (const auto& o : manifest["symmetric_offsets"])
      offs.push_back({o[0].get<double>(), o[1].get<double>()});
    symmetric = offs;
  }

  VerifyReport report;
  for (const auto& d : manifest.at("deployments")) {
    std::uint64_t seed = d.at("seed").get<std::uint64_t>();
    Deployment dep = symmetric ? make_symmetric_deployment(params, *symmetric)
                               : generate_deployment(params, seed);
    double lambda = d.at("calibration").at("lambda_pps").get<double>();

    for (const auto& r : d.at("runs")) {
      std::string run_name = std::to_string(seed) + "/" +
                             r.at("policy").get<std::string>() + "/" +
                             r.at("traffic").get<std::string>();
      if (!r.contains("log"))
        throw ConfigError("run " + run_name +
                          " has no event log; re-run with event logs enabled");
      std::string log_path = out_dir + "/" + r.at("log").get<std::string>();
      std::ifstream lf(log_path);
      if (!lf) throw ConfigError("missing event log: " + log_path);
      detail::ParsedLog log = detail::parse_event_log(lf);

      // NAV safety: the channel is one collision domain, so no two TXOPs may
      // overlap in time, and every coordinated TXOP must carry at most one
      // pair per AP with NAV rows covering everyone else.
      {
        bool pass = true;
        std::string msg;
        auto sorted = log.txops;
        std::sort(sorted.begin(), sorted.end(),
                  [](const auto& a, const auto& b) { return a.start < b.start; });
        for (std::size_t i = 1; i < sorted.size(); ++i) {
          if (sorted[i].start < sorted[i - 1].start + sorted[i - 1].dur) {
            pass = false;
            msg = "TXOPs " + std::to_string(sorted[i - 1].id) + " and " +
                  std::to_string(sorted[i].id) + " overlap";
            break;
          }
        }
        for (const auto& t : log.txops) {
          std::vector<bool> ap_seen(dep.num_aps(), false);
          for (const auto& m : t.members) {
            if (ap_seen[m.ap]) {
              pass = false;
              msg = "TXOP " + std::to_string(t.id) + " has two pairs on AP " +
                    std::to_string(m.ap);
            }
            ap_seen[m.ap] = true;
          }
          if (t.coordinated) {
            for (int a = 0; a < dep.num_aps(); ++a) {
              if (ap_seen[a]) continue;
              bool nav = false;
              for (const auto& [ns, nd, na] : log.navs)
                if (na == a && ns == t.start && nd == t.dur) nav = true;
              if (!nav) {
                pass = false;
                msg = "TXOP " + std::to_string(t.id) + " missing NAV for AP " +
                      std::to_string(a);
              }
            }
          }
        }
        report.add(run_name, "nav_safety", pass, msg);
      }

      // Time accounting: logged spans must add up to the engine totals and
      // the totals to the final clock, with nothing unaccounted.
      {
        std::int64_t txop_sum = 0, coll_sum = 0;
        for (const auto& t : log.txops) txop_sum += t.dur;
        for (const auto& [s, dur] : log.collisions) coll_sum += dur;
        bool pass = txop_sum == log.txop_us && coll_sum == log.coll_us &&
                    log.idle_us + log.coll_us + log.txop_us == log.end_us;
        report.add(run_name, "time_accounting", pass,
                   pass ? "" : "logged spans do not sum to the elapsed time");
      }

      // Capture guarantee: recompute every member's SINR under the TXOP's
      // actual transmitter set; it must clear gamma_CE and the MCS threshold.
      {
        bool pass = true;
        std::string msg;
        for (const auto& t : log.txops) {
          for (const auto& m : t.members) {
            std::vector<int> interferers;
            for (const auto& o : t.members)
              if (o.sta != m.sta) interferers.push_back(o.ap);
            double sinr = sinr_db(dep, params, m.sta, m.ap, interferers);
            if (sinr + 1e-9 < params.capture_threshold_db ||
                sinr + 1e-9 < mcs.at(m.mcs_index).min_snr_db) {
              pass = false;
              msg = "TXOP " + std::to_string(t.id) + " STA " + std::to_string(m.sta) +
                    " below threshold";
            }
          }
        }
        report.add(run_name, "capture", pass, msg);
      }

      // Conservation: regenerated arrivals == generated == delivered+residual,
      // and the log's per-STA delivery counts match the manifest.
      {
        TrafficModel model = r.at("traffic").get<std::string>() == "poisson"
                                 ? TrafficModel::kPoisson
                                 : TrafficModel::kBursty;
        TrafficSet set = generate_traffic(dep, params, model, lambda,
                                          r.at("traffic_seed").get<std::uint64_t>());
        bool pass = true;
        std::string msg;
        std::vector<std::int64_t> log_delivered(dep.num_stas(), 0);
        for (const auto& t : log.txops)
          for (const auto& m : t.members) log_delivered[m.sta] += m.n_packets;
        for (int sta = 0; sta < dep.num_stas(); ++sta) {
          std::int64_t gen = r.at("generated_per_sta")[sta].get<std::int64_t>();
          std::int64_t del = r.at("delivered_per_sta")[sta].get<std::int64_t>();
          std::int64_t res = r.at("residual_per_sta")[sta].get<std::int64_t>();
          if (static_cast<std::int64_t>(set.per_sta_us[sta].size()) != gen ||
              del + res != gen || log_delivered[sta] != del) {
            pass = false;
            msg = "STA " + std::to_string(sta) + " counts inconsistent";
          }
        }
        report.add(run_name, "conservation", pass, msg);
      }
    }
  }
  return report;
}

}  // namespace cosr
