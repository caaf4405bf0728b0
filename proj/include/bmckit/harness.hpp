#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bmckit/estimators.hpp"
#include "bmckit/model.hpp"

namespace bmckit {

struct EnsembleSpec {
  enum class Kind { Uniform, LowRank, Reversible, Assortative, Explicit, DotProduct };
  Kind kind = Kind::Uniform;
  int d = 1;               // low-rank
  double p0 = 0.8;         // assortative
  double dp_a = 1.0;       // dot-product example
  double dp_b = 1.0;
  BmcParams explicit_params;
};

enum class AlphaMode { Default, Uniform, Equal, Stationary };

struct EllSpec {
  enum class Kind { LogPower, Quadratic, Explicit };
  Kind kind = Kind::LogPower;
  double beta = 2.0;
  uint64_t value = 0;

  uint64_t resolve(uint32_t n) const;
};

struct SequentialRule {
  double margin = 0.15;
  int min_samples = 250;
  int max_samples = 10000;
};

struct Scenario {
  std::string id = "scenario";
  EnsembleSpec ensemble;
  AlphaMode alpha_mode = AlphaMode::Default;
  int k = 2;
  uint32_t n = 100;
  EllSpec ell;
  double epsilon = 0.0;
  double a = 0.9, b = 0.1, c = 0.75;
  std::vector<std::string> estimators = {"alg2"};
  int replications = 10;
  std::optional<SequentialRule> sequential;
  uint64_t root_seed = 0;
  int k_max = 15;
  StartDistribution start = StartDistribution::Stationary;
};

Scenario scenario_from_json_text(const std::string& text);
std::string scenario_to_json(const Scenario& s);

struct ResultRow {
  std::string scenario_id;
  int rep = 0;
  uint64_t seed = 0;
  std::string estimator;
  int k_true = 0;
  int k_hat = -1;
  int k_spec = -1;                   // alg1/alg2 only
  double relative_acc = 0.0;
  double ami = std::numeric_limits<double>::quiet_NaN();
  double i_alpha_p = 0.0;
  double normalized_entropy = std::numeric_limits<double>::quiet_NaN();
  int t_mix = -1;
  double wall_ms = 0.0;
  std::string error;  // empty on success

  bool ok() const { return error.empty(); }
};

// Sample params (with the floor(n alpha_k) >= 1 rejection rule, retry budget
// 1000), build the instance, and simulate one trajectory. Exposed so single
// replications can be reproduced outside the runner.
struct Replication {
  BmcParams params;
  BmcInstance instance;
  Trajectory trajectory;
};
Replication make_replication(const Scenario& s, uint64_t seed);

// Runs replications on a work queue with pre-assigned child seeds; thread
// count (capped by the BMC_THREADS environment variable) cannot change the
// results. In sequential mode, sampling continues in fixed-size blocks until
// every estimator cell has a 95% margin of error <= rule.margin, with at
// least rule.min_samples samples.
std::vector<ResultRow> run_scenario(const Scenario& s,
                                    bool force_sequential = false);

int max_threads_from_env();

struct CellStats {
  double mean = 0.0;
  double sd = 0.0;
  double margin = 0.0;  // 1.96 sd / sqrt(count)
  int count = 0;
  int errors = 0;
};

// Keyed by estimator id; error rows are excluded from the moments and only
// counted.
std::map<std::string, CellStats> aggregate(const std::vector<ResultRow>& rows);

CellStats aggregate_values(const std::vector<double>& values);

// Fixed header order, floats at 17 significant digits, rows in (rep,
// estimator) order. Timing is off by default so identical seeds give
// byte-identical files.
void write_rows_csv(std::ostream& os, const std::vector<ResultRow>& rows,
                    bool include_timing = false);
std::vector<ResultRow> read_rows_csv(std::istream& is);

void write_rows_jsonl(std::ostream& os, const std::vector<ResultRow>& rows);

}  // namespace bmckit
