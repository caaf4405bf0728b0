#include "bmckit/harness.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "bmckit/io.hpp"
#include "bmckit/metrics.hpp"

namespace bmckit {

uint64_t EllSpec::resolve(uint32_t n) const {
  switch (kind) {
    case Kind::LogPower: {
      double ln = std::log(static_cast<double>(n));
      return static_cast<uint64_t>(std::floor(n * std::pow(ln, beta)));
    }
    case Kind::Quadratic:
      return static_cast<uint64_t>(n) * n;
    case Kind::Explicit:
    default:
      return value;
  }
}

namespace {

using nlohmann::json;

EnsembleSpec ensemble_from_json(const json& j) {
  EnsembleSpec spec;
  std::string type = j.at("type").get<std::string>();
  if (type == "uniform") {
    spec.kind = EnsembleSpec::Kind::Uniform;
  } else if (type == "lowrank") {
    spec.kind = EnsembleSpec::Kind::LowRank;
    spec.d = j.at("d").get<int>();
  } else if (type == "reversible") {
    spec.kind = EnsembleSpec::Kind::Reversible;
  } else if (type == "assortative") {
    spec.kind = EnsembleSpec::Kind::Assortative;
    spec.p0 = j.value("p0", 0.8);
  } else if (type == "explicit") {
    spec.kind = EnsembleSpec::Kind::Explicit;
    spec.explicit_params = params_from_json_text(j.at("params").dump());
  } else if (type == "dot_product_example") {
    spec.kind = EnsembleSpec::Kind::DotProduct;
    spec.dp_a = j.value("a", 1.0);
    spec.dp_b = j.value("b", 1.0);
  } else {
    throw Error(ErrorKind::Config, "unknown ensemble type " + type);
  }
  return spec;
}

json ensemble_to_json(const EnsembleSpec& spec) {
  json j;
  switch (spec.kind) {
    case EnsembleSpec::Kind::Uniform:
      j["type"] = "uniform";
      break;
    case EnsembleSpec::Kind::LowRank:
      j["type"] = "lowrank";
      j["d"] = spec.d;
      break;
    case EnsembleSpec::Kind::Reversible:
      j["type"] = "reversible";
      break;
    case EnsembleSpec::Kind::Assortative:
      j["type"] = "assortative";
      j["p0"] = spec.p0;
      break;
    case EnsembleSpec::Kind::Explicit:
      j["type"] = "explicit";
      j["params"] = json::parse(params_to_json(spec.explicit_params));
      break;
    case EnsembleSpec::Kind::DotProduct:
      j["type"] = "dot_product_example";
      j["a"] = spec.dp_a;
      j["b"] = spec.dp_b;
      break;
  }
  return j;
}

EllSpec ell_from_json(const json& j) {
  EllSpec spec;
  std::string type = j.at("type").get<std::string>();
  if (type == "log_power") {
    spec.kind = EllSpec::Kind::LogPower;
    spec.beta = j.at("beta").get<double>();
  } else if (type == "quadratic") {
    spec.kind = EllSpec::Kind::Quadratic;
  } else if (type == "explicit") {
    spec.kind = EllSpec::Kind::Explicit;
    spec.value = j.at("value").get<uint64_t>();
  } else {
    throw Error(ErrorKind::Config, "unknown ell type " + type);
  }
  return spec;
}

AlphaMode alpha_mode_from_string(const std::string& s) {
  if (s == "default") return AlphaMode::Default;
  if (s == "uniform") return AlphaMode::Uniform;
  if (s == "equal") return AlphaMode::Equal;
  if (s == "stationary") return AlphaMode::Stationary;
  throw Error(ErrorKind::Config, "unknown alpha mode " + s);
}

}  // namespace

Scenario scenario_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Config, std::string("bad scenario JSON: ") + e.what());
  }
  try {
    Scenario s;
    s.id = j.value("id", std::string("scenario"));
    s.ensemble = ensemble_from_json(j.at("ensemble"));
    if (j.contains("alpha")) {
      s.alpha_mode = alpha_mode_from_string(j["alpha"].get<std::string>());
    }
    s.k = j.value("K", 2);
    s.n = j.at("n").get<uint32_t>();
    s.ell = ell_from_json(j.at("ell"));
    s.epsilon = j.value("epsilon", 0.0);
    if (j.contains("thresholds")) {
      s.a = j["thresholds"].value("a", 0.9);
      s.b = j["thresholds"].value("b", 0.1);
      s.c = j["thresholds"].value("c", 0.75);
    }
    if (j.contains("estimators")) {
      s.estimators = j["estimators"].get<std::vector<std::string>>();
    }
    for (const auto& id : s.estimators) {
      if (!is_known_estimator(id)) {
        throw Error(ErrorKind::Config, "unknown estimator id " + id);
      }
    }
    s.replications = j.value("replications", 10);
    if (j.contains("sequential")) {
      SequentialRule rule;
      rule.margin = j["sequential"].value("margin", 0.15);
      rule.min_samples = j["sequential"].value("min_samples", 250);
      rule.max_samples = j["sequential"].value("max_samples", 10000);
      s.sequential = rule;
    }
    s.root_seed = j.value("seed", uint64_t{0});
    s.k_max = j.value("k_max", 15);
    if (j.contains("start")) {
      std::string start = j["start"].get<std::string>();
      if (start == "stationary") {
        s.start = StartDistribution::Stationary;
      } else if (start == "fixed_zero") {
        s.start = StartDistribution::FixedZero;
      } else if (start == "uniform") {
        s.start = StartDistribution::Uniform;
      } else {
        throw Error(ErrorKind::Config, "unknown start distribution " + start);
      }
    }
    return s;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Config, std::string("bad scenario JSON: ") + e.what());
  }
}

std::string scenario_to_json(const Scenario& s) {
  json j;
  j["id"] = s.id;
  j["ensemble"] = ensemble_to_json(s.ensemble);
  j["K"] = s.k;
  j["n"] = s.n;
  switch (s.ell.kind) {
    case EllSpec::Kind::LogPower:
      j["ell"] = {{"type", "log_power"}, {"beta", s.ell.beta}};
      break;
    case EllSpec::Kind::Quadratic:
      j["ell"] = {{"type", "quadratic"}};
      break;
    case EllSpec::Kind::Explicit:
      j["ell"] = {{"type", "explicit"}, {"value", s.ell.value}};
      break;
  }
  j["epsilon"] = s.epsilon;
  j["thresholds"] = {{"a", s.a}, {"b", s.b}, {"c", s.c}};
  j["estimators"] = s.estimators;
  j["replications"] = s.replications;
  if (s.sequential) {
    j["sequential"] = {{"margin", s.sequential->margin},
                       {"min_samples", s.sequential->min_samples},
                       {"max_samples", s.sequential->max_samples}};
  }
  j["seed"] = s.root_seed;
  j["k_max"] = s.k_max;
  return j.dump(2);
}

namespace {

BmcParams sample_scenario_params(const Scenario& s, Rng& rng) {
  BmcParams params;
  switch (s.ensemble.kind) {
    case EnsembleSpec::Kind::Uniform:
      params = sample_uniform_ensemble(s.k, rng);
      break;
    case EnsembleSpec::Kind::LowRank:
      params = sample_lowrank_ensemble(s.k, s.ensemble.d, rng);
      break;
    case EnsembleSpec::Kind::Reversible:
      params = sample_reversible_ensemble(s.k, rng);
      break;
    case EnsembleSpec::Kind::Assortative:
      params = sample_assortative_ensemble(s.k, s.ensemble.p0, rng);
      break;
    case EnsembleSpec::Kind::Explicit:
      params = s.ensemble.explicit_params;
      break;
    case EnsembleSpec::Kind::DotProduct:
      params = dot_product_example_params(s.ensemble.dp_a, s.ensemble.dp_b);
      break;
  }
  switch (s.alpha_mode) {
    case AlphaMode::Default:
      break;
    case AlphaMode::Uniform: {
      auto a = rng.simplex(params.k);
      for (int i = 0; i < params.k; ++i) params.alpha(i) = a[static_cast<size_t>(i)];
      break;
    }
    case AlphaMode::Equal:
      params.alpha.setConstant(1.0 / params.k);
      break;
    case AlphaMode::Stationary:
      params.alpha = stationary_by_linear_solve(params.p);
      break;
  }
  return params;
}

bool resamples_alpha(const Scenario& s) {
  if (s.alpha_mode == AlphaMode::Uniform) return true;
  if (s.alpha_mode != AlphaMode::Default) return false;
  return s.ensemble.kind == EnsembleSpec::Kind::Uniform ||
         s.ensemble.kind == EnsembleSpec::Kind::LowRank;
}

}  // namespace

Replication make_replication(const Scenario& s, uint64_t seed) {
  Rng rng(child_seed(seed, 0));
  const uint64_t traj_seed = child_seed(seed, 1);

  Replication rep;
  // Retry budget for the floor(n alpha_k) >= 1 rule; only ensembles with
  // random alpha can be resampled.
  const int budget = resamples_alpha(s) ? 1000 : 1;
  for (int attempt = 0;; ++attempt) {
    rep.params = sample_scenario_params(s, rng);
    try {
      rep.instance = build_instance(rep.params, static_cast<int>(s.n));
      break;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::ClusterTooSmall || attempt + 1 >= budget) throw;
    }
  }
  const uint64_t ell = s.ell.resolve(s.n);
  if (s.epsilon > 0.0) {
    rep.trajectory = simulate_perturbed(rep.instance, {s.epsilon}, ell,
                                        traj_seed, s.start);
  } else {
    rep.trajectory = simulate(rep.instance, ell, traj_seed, s.start);
  }
  return rep;
}

int max_threads_from_env() {
  const char* env = std::getenv("BMC_THREADS");
  if (env != nullptr) {
    int value = std::atoi(env);
    if (value >= 1) return value;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

namespace {

std::vector<ResultRow> run_replication(const Scenario& s, int rep_index) {
  const uint64_t seed = child_seed(s.root_seed, static_cast<uint64_t>(rep_index));
  std::vector<ResultRow> rows;
  rows.reserve(s.estimators.size());

  ResultRow base;
  base.scenario_id = s.id;
  base.rep = rep_index;
  base.seed = seed;
  base.k_true = s.k;

  Replication rep;
  try {
    rep = make_replication(s, seed);
  } catch (const std::exception& e) {
    const auto* err = dynamic_cast<const Error*>(&e);
    std::string msg = err ? std::string(error_kind_name(err->kind())) + ": " + e.what()
                          : std::string("Exception: ") + e.what();
    for (const auto& id : s.estimators) {
      ResultRow row = base;
      row.estimator = id;
      row.error = msg;
      rows.push_back(std::move(row));
    }
    return rows;
  }

  base.k_true = rep.params.k;
  base.i_alpha_p = information_quantity(rep.params);
  if (rep.params.k >= 2) {
    Partition truth = Partition::from_labels(
        std::vector<int32_t>(rep.instance.sigma.begin(), rep.instance.sigma.end()),
        rep.params.k);
    base.normalized_entropy = normalized_entropy(truth);
  }
  try {
    base.t_mix = mixing_time(rep.params);
  } catch (const Error&) {
    base.t_mix = -1;
  }

  Thresholds th = Thresholds::resolve(s.a, s.b, s.c, s.n, rep.trajectory.ell);
  for (const auto& id : s.estimators) {
    ResultRow row = base;
    row.estimator = id;
    auto t0 = std::chrono::steady_clock::now();
    try {
      if (id == "alg2") {
        FullEstimate full = estimate_full(rep.trajectory, th);
        row.k_hat = full.result.k_hat;
        row.k_spec = full.result.diag.k_spec;
        Partition truth = Partition::from_labels(
            std::vector<int32_t>(rep.instance.sigma.begin(), rep.instance.sigma.end()),
            rep.params.k);
        Partition est = Partition::from_labels(full.labeling.labels,
                                               std::max(full.result.k_hat, 1));
        row.ami = ami(truth, est).value;
      } else if (id == "alg1") {
        auto [k_spec, trimmed] = alg1_spectral_count(rep.trajectory, th);
        (void)trimmed;
        row.k_hat = k_spec;
        row.k_spec = k_spec;
      } else if (id == "megh") {
        row.k_hat = megh_estimate(build_counts(rep.trajectory));
      } else if (id == "llsc") {
        row.k_hat = llsc_estimate(rep.trajectory, s.k_max, th);
      } else if (id == "llci") {
        row.k_hat = llci_estimate(rep.trajectory, s.k_max, th);
      } else if (id == "caic") {
        row.k_hat = caic_estimate(rep.trajectory, s.k_max, th);
      } else {
        throw Error(ErrorKind::Config, "unknown estimator id " + id);
      }
      row.relative_acc = relative_accuracy(row.k_hat, row.k_true);
    } catch (const Error& e) {
      row.error = std::string(error_kind_name(e.kind())) + ": " + e.what();
    } catch (const std::exception& e) {
      row.error = std::string("Exception: ") + e.what();
    }
    auto t1 = std::chrono::steady_clock::now();
    row.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    rows.push_back(std::move(row));
  }
  return rows;
}

// Runs [first, last) replications across a thread pool; results land in
// rep-index order regardless of the thread count.
void run_block(const Scenario& s, int first, int last, int threads,
               std::vector<std::vector<ResultRow>>& out) {
  out.resize(static_cast<size_t>(last - first));
  std::atomic<int> cursor{first};
  auto worker = [&]() {
    for (;;) {
      int rep = cursor.fetch_add(1);
      if (rep >= last) return;
      out[static_cast<size_t>(rep - first)] = run_replication(s, rep);
    }
  };
  const int used = std::min(threads, last - first);
  if (used <= 1) {
    worker();
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(used));
  for (int t = 0; t < used; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
}

bool cells_converged(const std::vector<ResultRow>& rows, const Scenario& s,
                     const SequentialRule& rule) {
  auto stats = aggregate(rows);
  for (const auto& id : s.estimators) {
    auto it = stats.find(id);
    if (it == stats.end()) return false;
    if (it->second.count < rule.min_samples) return false;
    if (it->second.margin > rule.margin) return false;
  }
  return true;
}

}  // namespace

std::vector<ResultRow> run_scenario(const Scenario& s, bool force_sequential) {
  const int threads = max_threads_from_env();
  std::vector<ResultRow> rows;

  std::optional<SequentialRule> rule = s.sequential;
  if (force_sequential && !rule) rule = SequentialRule{};

  if (!rule) {
    std::vector<std::vector<ResultRow>> block;
    run_block(s, 0, s.replications, threads, block);
    for (auto& group : block) {
      rows.insert(rows.end(), group.begin(), group.end());
    }
    return rows;
  }

  // Sequential sampling: fixed block size so the stopping decision (made at
  // block boundaries, in replication order) is independent of thread count.
  constexpr int kBlock = 16;
  int next = 0;
  while (next < rule->max_samples) {
    int last = std::min(next + kBlock, rule->max_samples);
    std::vector<std::vector<ResultRow>> block;
    run_block(s, next, last, threads, block);
    for (auto& group : block) {
      rows.insert(rows.end(), group.begin(), group.end());
    }
    next = last;
    if (next >= rule->min_samples && cells_converged(rows, s, *rule)) break;
  }
  return rows;
}

std::map<std::string, CellStats> aggregate(const std::vector<ResultRow>& rows) {
  std::map<std::string, std::vector<double>> cells;
  std::map<std::string, int> errors;
  for (const auto& row : rows) {
    if (row.ok()) {
      cells[row.estimator].push_back(static_cast<double>(row.k_hat));
    } else {
      ++errors[row.estimator];
    }
  }
  std::map<std::string, CellStats> out;
  for (const auto& [id, values] : cells) {
    CellStats stats = aggregate_values(values);
    stats.errors = errors.count(id) ? errors.at(id) : 0;
    out[id] = stats;
  }
  for (const auto& [id, count] : errors) {
    if (!out.count(id)) {
      CellStats stats;
      stats.errors = count;
      out[id] = stats;
    }
  }
  return out;
}

CellStats aggregate_values(const std::vector<double>& values) {
  CellStats stats;
  stats.count = static_cast<int>(values.size());
  if (values.empty()) return stats;
  double sum = 0.0;
  for (double v : values) sum += v;
  stats.mean = sum / stats.count;
  if (stats.count > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - stats.mean) * (v - stats.mean);
    stats.sd = std::sqrt(ss / (stats.count - 1));
  }
  stats.margin = stats.count > 0
                     ? 1.96 * stats.sd / std::sqrt(static_cast<double>(stats.count))
                     : 0.0;
  return stats;
}

namespace {

std::string format_double(double v) {
  if (std::isnan(v)) return "";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace

void write_rows_csv(std::ostream& os, const std::vector<ResultRow>& rows,
                    bool include_timing) {
  os << "scenario,rep,seed,estimator,k_true,k_hat,k_spec,relative_accuracy,"
        "ami,i_alpha_p,normalized_entropy,t_mix";
  if (include_timing) os << ",wall_ms";
  os << ",error\n";
  for (const auto& row : rows) {
    os << csv_escape(row.scenario_id) << ',' << row.rep << ',' << row.seed
       << ',' << row.estimator << ',' << row.k_true << ',';
    if (row.ok()) os << row.k_hat;
    os << ',';
    if (row.k_spec >= 0) os << row.k_spec;
    os << ',';
    if (row.ok()) os << format_double(row.relative_acc);
    os << ',' << format_double(row.ami) << ','
       << format_double(row.i_alpha_p) << ','
       << format_double(row.normalized_entropy) << ',';
    if (row.t_mix >= 0) os << row.t_mix;
    if (include_timing) os << ',' << format_double(row.wall_ms);
    os << ',' << csv_escape(row.error) << '\n';
  }
  if (!os) throw Error(ErrorKind::Io, "write failed");
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(field);
      field.clear();
    } else {
      field += c;
    }
  }
  fields.push_back(field);
  return fields;
}

}  // namespace

std::vector<ResultRow> read_rows_csv(std::istream& is) {
  std::vector<ResultRow> rows;
  std::string line;
  if (!std::getline(is, line)) throw Error(ErrorKind::Io, "empty CSV");
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    auto f = split_csv_line(line);
    if (f.size() < 13) throw Error(ErrorKind::Io, "short CSV row");
    ResultRow row;
    row.scenario_id = f[0];
    row.rep = std::stoi(f[1]);
    row.seed = std::stoull(f[2]);
    row.estimator = f[3];
    row.k_true = std::stoi(f[4]);
    row.k_hat = f[5].empty() ? -1 : std::stoi(f[5]);
    row.k_spec = f[6].empty() ? -1 : std::stoi(f[6]);
    row.relative_acc = f[7].empty() ? 0.0 : std::stod(f[7]);
    row.ami = f[8].empty() ? std::numeric_limits<double>::quiet_NaN() : std::stod(f[8]);
    row.i_alpha_p = f[9].empty() ? 0.0 : std::stod(f[9]);
    row.normalized_entropy =
        f[10].empty() ? std::numeric_limits<double>::quiet_NaN() : std::stod(f[10]);
    row.t_mix = f[11].empty() ? -1 : std::stoi(f[11]);
    row.error = f.back();
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_rows_jsonl(std::ostream& os, const std::vector<ResultRow>& rows) {
  for (const auto& row : rows) {
    json j;
    j["scenario"] = row.scenario_id;
    j["rep"] = row.rep;
    j["seed"] = row.seed;
    j["estimator"] = row.estimator;
    j["k_true"] = row.k_true;
    if (row.ok()) {
      j["k_hat"] = row.k_hat;
      j["relative_accuracy"] = row.relative_acc;
    }
    if (row.k_spec >= 0) j["k_spec"] = row.k_spec;
    if (!std::isnan(row.ami)) j["ami"] = row.ami;
    j["i_alpha_p"] = row.i_alpha_p;
    if (!std::isnan(row.normalized_entropy)) {
      j["normalized_entropy"] = row.normalized_entropy;
    }
    if (row.t_mix >= 0) j["t_mix"] = row.t_mix;
    if (!row.error.empty()) j["error"] = row.error;
    os << j.dump() << '\n';
  }
  if (!os) throw Error(ErrorKind::Io, "write failed");
}

}  // namespace bmckit
