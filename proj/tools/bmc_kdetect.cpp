#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "bmckit/harness.hpp"
#include "bmckit/io.hpp"
#include "bmckit/metrics.hpp"

namespace {

using bmckit::Error;
using bmckit::ErrorKind;

std::string read_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorKind::Config, "cannot open " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

int cmd_sample(const std::string& config_path, const std::string& out_path,
               bool text) {
  bmckit::Scenario s = bmckit::scenario_from_json_text(read_file(config_path));
  bmckit::Replication rep =
      bmckit::make_replication(s, bmckit::child_seed(s.root_seed, 0));
  bmckit::save_trajectory(out_path, rep.trajectory, text);

  nlohmann::json info;
  info["n"] = rep.trajectory.n;
  info["ell"] = rep.trajectory.ell;
  info["K"] = rep.params.k;
  info["seed"] = rep.trajectory.seed;
  std::cout << info.dump() << "\n";
  return 0;
}

int cmd_estimate(const std::string& traj_path, const std::string& estimator,
                 double a, double b, double c, std::optional<int> r_override,
                 int k_max, uint32_t n_hint) {
  if (!bmckit::is_known_estimator(estimator)) {
    throw Error(ErrorKind::Config, "unknown estimator id " + estimator);
  }
  bmckit::Trajectory traj = bmckit::load_trajectory(traj_path, n_hint);
  bmckit::Thresholds th = bmckit::Thresholds::resolve(a, b, c, traj.n, traj.ell);

  nlohmann::json out;
  out["estimator"] = estimator;
  out["n"] = traj.n;
  out["ell"] = traj.ell;
  if (estimator == "alg2") {
    bmckit::FullEstimate full = bmckit::estimate_full(traj, th, r_override);
    out["k_hat"] = full.result.k_hat;
    out["k_spec"] = full.result.diag.k_spec;
    out["embedding_rank"] = full.result.embedding_rank;
    out["trimmed"] = full.result.diag.gamma_size;
    out["centers"] = full.result.centers;
    out["singular_values"] = full.result.diag.singvals;
    out["labels"] = full.labeling.labels;
  } else if (estimator == "alg1") {
    auto [k_spec, trimmed] = bmckit::alg1_spectral_count(traj, th);
    out["k_hat"] = k_spec;
    out["k_spec"] = k_spec;
    out["trimmed"] = trimmed.gamma.size();
  } else if (estimator == "megh") {
    out["k_hat"] = bmckit::megh_estimate(bmckit::build_counts(traj));
  } else if (estimator == "llsc") {
    out["k_hat"] = bmckit::llsc_estimate(traj, k_max, th);
  } else if (estimator == "llci") {
    out["k_hat"] = bmckit::llci_estimate(traj, k_max, th);
  } else {
    out["k_hat"] = bmckit::caic_estimate(traj, k_max, th);
  }
  std::cout << out.dump() << "\n";
  return 0;
}

int cmd_experiment(const std::string& config_path, const std::string& out_path,
                   bool sequential, const std::string& format, bool timing) {
  bmckit::Scenario s = bmckit::scenario_from_json_text(read_file(config_path));
  std::vector<bmckit::ResultRow> rows = bmckit::run_scenario(s, sequential);

  std::ofstream os(out_path);
  if (!os) throw Error(ErrorKind::Io, "cannot open " + out_path);
  if (format == "jsonl") {
    bmckit::write_rows_jsonl(os, rows);
  } else {
    bmckit::write_rows_csv(os, rows, timing);
  }

  for (const auto& [id, stats] : bmckit::aggregate(rows)) {
    std::cout << s.id << " " << id << ": mean=" << stats.mean
              << " sd=" << stats.sd << " margin=" << stats.margin
              << " count=" << stats.count;
    if (stats.errors > 0) std::cout << " errors=" << stats.errors;
    std::cout << "\n";
  }
  return 0;
}

int cmd_metrics(const std::string& truth_path, const std::string& est_path) {
  auto truth_labels = bmckit::read_labels(truth_path);
  auto est_labels = bmckit::read_labels(est_path);
  if (truth_labels.size() != est_labels.size()) {
    throw Error(ErrorKind::Config, "label files have different lengths");
  }
  auto truth = bmckit::Partition::from_labels(std::move(truth_labels));
  auto est = bmckit::Partition::from_labels(std::move(est_labels));
  bmckit::ComparisonReport report = bmckit::compare_partitions(truth, est);

  nlohmann::json j;
  j["relative_accuracy"] = report.relative_accuracy;
  j["ami"] = report.ami_value;
  j["ami_degenerate"] = report.ami_degenerate;
  j["mi"] = report.mi;
  j["entropy_truth"] = report.entropy_a;
  j["entropy_est"] = report.entropy_b;
  j["misclassified_count"] = report.misclassified_count;
  j["optimal_permutation"] = report.optimal_permutation;
  std::cout << j.dump() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cluster-count estimation for block Markov chain trajectories"};
  app.require_subcommand(1);

  std::string config_path, out_path = "traj.bin", traj_path;
  std::string estimator = "alg2", format = "csv";
  std::string truth_path, est_path;
  double a = 0.9, b = 0.1, c = 0.75;
  int k_max = 15, r_flag = -1;
  uint32_t n_hint = 0;
  bool text = false, sequential = false, timing = false;

  auto* sample = app.add_subcommand("sample", "simulate one trajectory");
  sample->add_option("--config", config_path, "scenario JSON")->required();
  sample->add_option("--out", out_path, "output path");
  sample->add_flag("--text", text, "write newline-delimited text");

  auto* estimate = app.add_subcommand("estimate", "estimate K from a trajectory");
  estimate->add_option("--traj", traj_path, "trajectory file")->required();
  estimate->add_option("--estimator", estimator, "alg2|alg1|megh|llsc|llci|caic");
  estimate->add_option("--a", a, "radius exponent");
  estimate->add_option("--b", b, "neighborhood-size exponent");
  estimate->add_option("--c", c, "singular-value exponent");
  estimate->add_option("--r", r_flag, "embedding rank override");
  estimate->add_option("--k-max", k_max, "candidate cap for llsc/llci/caic");
  estimate->add_option("--n", n_hint, "state count for text trajectories");

  auto* experiment = app.add_subcommand("experiment", "run a seeded scenario");
  experiment->add_option("--config", config_path, "scenario JSON")->required();
  experiment->add_option("--out", out_path, "output path")->required();
  experiment->add_flag("--sequential", sequential, "sample until margin <= 0.15");
  experiment->add_option("--format", format, "csv|jsonl");
  experiment->add_flag("--timing", timing, "include wall_ms column");

  auto* metrics = app.add_subcommand("metrics", "compare two label files");
  metrics->add_option("--truth", truth_path, "ground-truth labels")->required();
  metrics->add_option("--est", est_path, "estimated labels")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (sample->parsed()) return cmd_sample(config_path, out_path, text);
    if (estimate->parsed()) {
      std::optional<int> r_override;
      if (r_flag > 0) r_override = r_flag;
      return cmd_estimate(traj_path, estimator, a, b, c, r_override, k_max, n_hint);
    }
    if (experiment->parsed()) {
      return cmd_experiment(config_path, out_path, sequential, format, timing);
    }
    if (metrics->parsed()) return cmd_metrics(truth_path, est_path);
  } catch (const Error& e) {
    std::cerr << "error (" << bmckit::error_kind_name(e.kind()) << "): "
              << e.what() << "\n";
    return bmckit::exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
