// Command-line front end: batch experiment runner plus the single-deployment
// inspection commands (calibrate, plan) and the post-hoc log verifier.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cosr/cosr.hpp"

namespace {

std::vector<cosr::Policy> parse_policies(const std::string& csv) {
  std::vector<cosr::Policy> out;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok == "dcf") out.push_back(cosr::Policy::kDcf);
    else if (tok == "max2") out.push_back(cosr::Policy::kMax2);
    else if (tok == "unc") out.push_back(cosr::Policy::kUnc);
    else throw cosr::ConfigError("unknown policy: " + tok);
  }
  return out;
}

std::vector<cosr::TrafficModel> parse_traffic(const std::string& csv) {
  std::vector<cosr::TrafficModel> out;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok == "poisson") out.push_back(cosr::TrafficModel::kPoisson);
    else if (tok == "bursty") out.push_back(cosr::TrafficModel::kBursty);
    else throw cosr::ConfigError("unknown traffic model: " + tok);
  }
  return out;
}

// "x:y,x:y" offset list for the symmetric deployment.
std::vector<cosr::Vec2> parse_offsets(const std::string& text) {
  std::vector<cosr::Vec2> out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    auto colon = tok.find(':');
    if (colon == std::string::npos)
      throw cosr::ConfigError("offset must be x:y, got " + tok);
    out.push_back({std::stod(tok.substr(0, colon)), std::stod(tok.substr(colon + 1))});
  }
  return out;
}

std::string default_out_dir() {
  if (const char* root = std::getenv("COSRSIM_OUT_ROOT")) return root;
  return "out";
}

struct CommonArgs {
  std::string config_path;
  double d_ap_ap = 0.0;  // 0: keep config/default
  std::string symmetric;

  cosr::FileConfig load() const {
    cosr::FileConfig cfg;
    if (!config_path.empty()) cfg = cosr::load_config_file(config_path);
    if (d_ap_ap > 0.0) {
      cfg.params.inter_ap_distance_m = d_ap_ap;
      cfg.params.validate();
    }
    return cfg;
  }

  std::optional<std::vector<cosr::Vec2>> offsets() const {
    if (symmetric.empty()) return std::nullopt;
    return parse_offsets(symmetric);
  }

  cosr::Deployment deployment(const cosr::FileConfig& cfg, std::uint64_t seed) const {
    if (auto offs = offsets()) return cosr::make_symmetric_deployment(cfg.params, *offs);
    return cosr::generate_deployment(cfg.params, seed);
  }
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "experiment config file (JSON)");
  cmd->add_option("--d-ap-ap", args.d_ap_ap, "override the inter-AP distance [m]");
  cmd->add_option("--symmetric", args.symmetric,
                  "use the symmetric deployment with these offsets (x:y,x:y)");
}

int cmd_run(const CommonArgs& common, const std::string& out_dir, int seeds,
            const std::string& seed_list, std::uint64_t master_seed,
            const std::string& policies, const std::string& traffic, int workers,
            bool event_logs) {
  cosr::FileConfig cfg = common.load();
  cosr::ExperimentSpec spec;
  spec.params = cfg.params;
  spec.mcs_table = cfg.mcs_table;
  spec.policies = parse_policies(policies);
  spec.traffic_models = parse_traffic(traffic);
  spec.master_seed = master_seed;
  spec.out_dir = out_dir;
  spec.workers = workers;
  spec.event_logs = event_logs;
  spec.symmetric_offsets = common.offsets();
  if (!seed_list.empty()) {
    std::stringstream ss(seed_list);
    std::string tok;
    while (std::getline(ss, tok, ',')) spec.deployment_seeds.push_back(std::stoull(tok));
  } else {
    for (int i = 0; i < seeds; ++i)
      spec.deployment_seeds.push_back(
          cosr::derive_seed(master_seed, cosr::seed_tag::kDeployment, i));
  }

  cosr::BatchResult result = cosr::run_experiment(spec);
  std::size_t n_runs = 0;
  for (const auto& d : result.deployments) n_runs += d.runs.size();
  std::cout << "wrote " << n_runs << " runs across " << result.deployments.size()
            << " deployments to " << spec.out_dir << "\n"
            << "manifest: " << result.manifest_path << "\n";
  return 0;
}

int cmd_verify(const std::string& out_dir) {
  cosr::VerifyReport report = cosr::verify_batch(out_dir);
  for (const auto& c : report.checks) {
    std::cout << (c.pass ? "PASS" : "FAIL") << "  " << c.run << "  " << c.check;
    if (!c.message.empty()) std::cout << "  (" << c.message << ")";
    std::cout << "\n";
  }
  std::cout << (report.all_pass ? "all checks passed" : "CHECKS FAILED") << "\n";
  return report.all_pass ? 0 : 1;
}

int cmd_calibrate(const CommonArgs& common, std::uint64_t seed) {
  cosr::FileConfig cfg = common.load();
  cosr::Deployment dep = common.deployment(cfg, seed);
  cosr::CalibrationResult cal = cosr::calibrate_load(dep, cfg.params, cfg.mcs_table, seed);
  std::cout << "bottleneck sta: " << cal.bottleneck_sta << "\n"
            << "s_min: " << cal.s_min_bps / 1e6 << " Mbps\n"
            << "lambda per sta: " << cal.lambda_pps << " packets/s\n";
  for (std::size_t s = 0; s < cal.per_sta_throughput_bps.size(); ++s)
    std::cout << "sta " << s << " saturated dcf throughput: "
              << cal.per_sta_throughput_bps[s] / 1e6 << " Mbps\n";
  return 0;
}

int cmd_plan(const CommonArgs& common, std::uint64_t seed, const std::string& policy) {
  cosr::FileConfig cfg = common.load();
  cosr::Deployment dep = common.deployment(cfg, seed);
  cosr::GroupPolicy gp;
  if (policy == "unc") gp = cosr::GroupPolicy::kUnconstrained;
  else if (policy == "max2") gp = cosr::GroupPolicy::kMaxTwo;
  else throw cosr::ConfigError("plan policy must be unc or max2");
  cosr::GroupPlan plan = cosr::optimize_plan(dep, cfg.params, cfg.mcs_table, gp);
  cosr::write_plan(std::cout, plan);
  std::cout << "# hash " << cosr::plan_hash(plan) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multi-BSS coordinated spatial reuse simulator"};
  app.require_subcommand(1);

  CommonArgs run_common, cal_common, plan_common;

  auto* run = app.add_subcommand("run", "run an experiment batch");
  std::string out_dir = default_out_dir();
  int seeds = 1;
  std::string seed_list;
  std::uint64_t master_seed = 1;
  std::string policies = "dcf,max2,unc";
  std::string traffic = "poisson,bursty";
  int workers = 0;
  bool event_logs = false;
  add_common(run, run_common);
  run->add_option("--out", out_dir, "output directory (default $COSRSIM_OUT_ROOT or ./out)");
  run->add_option("--seeds", seeds, "number of random deployments");
  run->add_option("--seed-list", seed_list, "explicit deployment seeds (csv)");
  run->add_option("--master-seed", master_seed, "master seed for all derived streams");
  run->add_option("--policies", policies, "subset of dcf,max2,unc");
  run->add_option("--traffic", traffic, "subset of poisson,bursty");
  run->add_option("--workers", workers, "worker threads (0 = hardware)");
  run->add_flag("-v,--event-logs", event_logs, "export per-run event logs");

  auto* verify = app.add_subcommand("verify", "re-check invariants over a batch");
  std::string verify_dir = default_out_dir();
  verify->add_option("--out", verify_dir, "batch output directory");

  auto* calibrate = app.add_subcommand("calibrate", "print the 90% load calibration");
  std::uint64_t cal_seed = 1;
  add_common(calibrate, cal_common);
  calibrate->add_option("--seed", cal_seed, "deployment seed");

  auto* plan = app.add_subcommand("plan", "print a deployment's group plan");
  std::uint64_t plan_seed = 1;
  std::string plan_policy = "unc";
  add_common(plan, plan_common);
  plan->add_option("--seed", plan_seed, "deployment seed");
  plan->add_option("--policy", plan_policy, "unc or max2");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed())
      return cmd_run(run_common, out_dir, seeds, seed_list, master_seed, policies,
                     traffic, workers, event_logs);
    if (verify->parsed()) return cmd_verify(verify_dir);
    if (calibrate->parsed()) return cmd_calibrate(cal_common, cal_seed);
    if (plan->parsed()) return cmd_plan(plan_common, plan_seed, plan_policy);
  } catch (const cosr::ScenarioError& e) {
    std::cerr << "unsupported scenario: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
