#include "bmckit/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace bmckit {

namespace {

constexpr double kRowSumTol = 1e-12;
constexpr double kAlphaSumTol = 1e-12;

// Strong connectivity of the positive-entry digraph: forward and backward
// reachability from node 0.
bool strongly_connected(const Eigen::MatrixXd& p) {
  const int k = static_cast<int>(p.rows());
  auto reach = [&](bool transpose) {
    std::vector<char> seen(static_cast<size_t>(k), 0);
    std::vector<int> stack{0};
    seen[0] = 1;
    while (!stack.empty()) {
      int u = stack.back();
      stack.pop_back();
      for (int v = 0; v < k; ++v) {
        double w = transpose ? p(v, u) : p(u, v);
        if (w > 0.0 && !seen[static_cast<size_t>(v)]) {
          seen[static_cast<size_t>(v)] = 1;
          stack.push_back(v);
        }
      }
    }
    return std::all_of(seen.begin(), seen.end(), [](char c) { return c != 0; });
  };
  return reach(false) && reach(true);
}

}  // namespace

void validate_params(const BmcParams& params) {
  const int k = params.k;
  if (k < 1 || params.p.rows() != k || params.p.cols() != k ||
      params.alpha.size() != k) {
    throw Error(ErrorKind::Config, "params dimensions inconsistent with K");
  }
  for (int i = 0; i < k; ++i) {
    double row = 0.0;
    for (int j = 0; j < k; ++j) {
      if (params.p(i, j) < 0.0) {
        throw Error(ErrorKind::NotStochastic, "negative transition probability");
      }
      row += params.p(i, j);
    }
    if (std::abs(row - 1.0) > kRowSumTol) {
      throw Error(ErrorKind::NotStochastic,
                  "row " + std::to_string(i) + " sums to " + std::to_string(row));
    }
  }
  double asum = 0.0;
  for (int i = 0; i < k; ++i) {
    if (!(params.alpha(i) > 0.0) || params.alpha(i) > 1.0) {
      throw Error(ErrorKind::BadAlpha, "alpha entries must lie in (0, 1]");
    }
    asum += params.alpha(i);
  }
  if (std::abs(asum - 1.0) > kAlphaSumTol) {
    throw Error(ErrorKind::BadAlpha, "alpha sums to " + std::to_string(asum));
  }
  if (!strongly_connected(params.p)) {
    throw Error(ErrorKind::NotIrreducible, "chain induced by p is reducible");
  }
}

Eigen::VectorXd stationary_distribution(const Eigen::MatrixXd& p, int max_iter,
                                        double tol) {
  const int k = static_cast<int>(p.rows());
  Eigen::VectorXd pi = Eigen::VectorXd::Constant(k, 1.0 / k);
  for (int it = 0; it < max_iter; ++it) {
    Eigen::VectorXd next = p.transpose() * pi;
    next /= next.sum();
    double residual = (p.transpose() * next - next).cwiseAbs().maxCoeff();
    pi = next;
    if (residual <= tol) return pi;
  }
  throw Error(ErrorKind::NoConvergence,
              "power iteration did not reach residual " + std::to_string(tol));
}

Eigen::VectorXd stationary_by_linear_solve(const Eigen::MatrixXd& p) {
  const int k = static_cast<int>(p.rows());
  // (p^T - I) pi = 0 with the last equation replaced by sum(pi) = 1.
  Eigen::MatrixXd a = p.transpose() - Eigen::MatrixXd::Identity(k, k);
  a.row(k - 1).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(k);
  rhs(k - 1) = 1.0;
  Eigen::VectorXd pi = a.fullPivLu().solve(rhs);
  double s = pi.sum();
  if (!(s > 0.0) || !pi.allFinite()) {
    throw Error(ErrorKind::NoConvergence, "singular stationary system");
  }
  return pi / s;
}

namespace {

Eigen::VectorXd stationary_with_fallback(const Eigen::MatrixXd& p) {
  try {
    return stationary_distribution(p);
  } catch (const Error&) {
    return stationary_by_linear_solve(p);
  }
}

}  // namespace

std::vector<double> BmcInstance::full_stationary() const {
  std::vector<double> out(static_cast<size_t>(n));
  for (int x = 0; x < n; ++x) out[static_cast<size_t>(x)] = stationary_mass(x);
  return out;
}

BmcInstance build_instance(const BmcParams& params, int n) {
  validate_params(params);
  const int k = params.k;
  if (n < k) throw Error(ErrorKind::ClusterTooSmall, "n < K");

  BmcInstance inst;
  inst.params = params;
  inst.n = n;
  inst.cluster_sizes.assign(static_cast<size_t>(k), 0);
  int assigned = 0;
  for (int j = 1; j < k; ++j) {  // clusters 2..K take floor(n alpha)
    int size = static_cast<int>(std::floor(n * params.alpha(j)));
    if (size < 1) {
      throw Error(ErrorKind::ClusterTooSmall,
                  "floor(n alpha_" + std::to_string(j + 1) + ") < 1");
    }
    inst.cluster_sizes[static_cast<size_t>(j)] = size;
    assigned += size;
  }
  int first = n - assigned;
  if (first < 1) {
    throw Error(ErrorKind::ClusterTooSmall, "no states left for cluster 1");
  }
  inst.cluster_sizes[0] = first;

  inst.cluster_offsets.assign(static_cast<size_t>(k), 0);
  inst.sigma.assign(static_cast<size_t>(n), 0);
  int offset = 0;
  for (int j = 0; j < k; ++j) {
    inst.cluster_offsets[static_cast<size_t>(j)] = offset;
    for (int x = offset; x < offset + inst.cluster_sizes[static_cast<size_t>(j)]; ++x) {
      inst.sigma[static_cast<size_t>(x)] = j;
    }
    offset += inst.cluster_sizes[static_cast<size_t>(j)];
  }
  inst.pi = stationary_with_fallback(params.p);
  return inst;
}

namespace {

// Walks the CDF of a probability row; clamps roundoff leftovers to the last
// positive entry.
int sample_row(const Eigen::MatrixXd& p, int row, double u) {
  const int k = static_cast<int>(p.cols());
  double acc = 0.0;
  int last_positive = -1;
  for (int j = 0; j < k; ++j) {
    double w = p(row, j);
    if (w > 0.0) last_positive = j;
    acc += w;
    if (u < acc) return j;
  }
  return last_positive >= 0 ? last_positive : k - 1;
}

int sample_vector(const Eigen::VectorXd& w, double u) {
  const int k = static_cast<int>(w.size());
  double acc = 0.0;
  int last_positive = -1;
  for (int j = 0; j < k; ++j) {
    if (w(j) > 0.0) last_positive = j;
    acc += w(j);
    if (u < acc) return j;
  }
  return last_positive >= 0 ? last_positive : k - 1;
}

uint32_t sample_start_state(const BmcInstance& inst, StartDistribution start,
                            Rng& rng) {
  switch (start) {
    case StartDistribution::FixedZero:
      return 0;
    case StartDistribution::Uniform:
      return static_cast<uint32_t>(rng.uniform_int(static_cast<uint64_t>(inst.n)));
    case StartDistribution::Stationary:
    default: {
      int cluster = sample_vector(inst.pi, rng.uniform());
      uint64_t size = static_cast<uint64_t>(inst.cluster_sizes[static_cast<size_t>(cluster)]);
      return static_cast<uint32_t>(inst.cluster_offsets[static_cast<size_t>(cluster)] +
                                   rng.uniform_int(size));
    }
  }
}

Trajectory simulate_impl(const BmcInstance& inst, double epsilon, uint64_t ell,
                         uint64_t seed, StartDistribution start) {
  if (ell < 1) throw Error(ErrorKind::Config, "ell must be >= 1");
  Rng rng(seed);
  Trajectory traj;
  traj.ell = ell;
  traj.n = static_cast<uint32_t>(inst.n);
  traj.seed = seed;
  traj.states.resize(static_cast<size_t>(ell) + 1);
  traj.states[0] = sample_start_state(inst, start, rng);
  uint32_t x = traj.states[0];
  for (uint64_t t = 0; t < ell; ++t) {
    uint32_t next;
    if (epsilon > 0.0 && rng.uniform() < epsilon) {
      next = static_cast<uint32_t>(rng.uniform_int(static_cast<uint64_t>(inst.n)));
    } else {
      int from = inst.sigma[x];
      int cluster = sample_row(inst.params.p, from, rng.uniform());
      uint64_t size = static_cast<uint64_t>(inst.cluster_sizes[static_cast<size_t>(cluster)]);
      next = static_cast<uint32_t>(inst.cluster_offsets[static_cast<size_t>(cluster)] +
                                   rng.uniform_int(size));
    }
    traj.states[static_cast<size_t>(t) + 1] = next;
    x = next;
  }
  return traj;
}

}  // namespace

Trajectory simulate(const BmcInstance& inst, uint64_t ell, uint64_t seed,
                    StartDistribution start) {
  return simulate_impl(inst, 0.0, ell, seed, start);
}

Trajectory simulate_perturbed(const BmcInstance& inst,
                              const PerturbationSpec& spec, uint64_t ell,
                              uint64_t seed, StartDistribution start) {
  if (spec.epsilon < 0.0 || spec.epsilon > 1.0) {
    throw Error(ErrorKind::Config, "epsilon must lie in [0, 1]");
  }
  return simulate_impl(inst, spec.epsilon, ell, seed, start);
}

namespace {

Eigen::VectorXd to_vector(const std::vector<double>& v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  for (size_t i = 0; i < v.size(); ++i) out(static_cast<Eigen::Index>(i)) = v[i];
  return out;
}

}  // namespace

BmcParams sample_uniform_ensemble(int k, Rng& rng) {
  BmcParams params;
  params.k = k;
  params.p.resize(k, k);
  for (int i = 0; i < k; ++i) {
    auto row = rng.simplex(k);
    for (int j = 0; j < k; ++j) params.p(i, j) = row[static_cast<size_t>(j)];
  }
  params.alpha = to_vector(rng.simplex(k));
  return params;
}

BmcParams sample_lowrank_ensemble(int k, int d, Rng& rng) {
  if (d < 1 || d >= k) throw Error(ErrorKind::Config, "need 1 <= d < K");
  std::vector<std::vector<double>> v(static_cast<size_t>(k));
  for (auto& vi : v) vi = rng.dirichlet(d, 1.0 / d);

  BmcParams params;
  params.k = k;
  params.p.resize(k, k);
  for (int i = 0; i < k; ++i) {
    double row_sum = 0.0;
    for (int j = 0; j < k; ++j) {
      double dot = 0.0;
      for (int t = 0; t < d; ++t) {
        dot += v[static_cast<size_t>(i)][static_cast<size_t>(t)] *
               v[static_cast<size_t>(j)][static_cast<size_t>(t)];
      }
      params.p(i, j) = dot;
      row_sum += dot;
    }
    if (!(row_sum > 0.0)) {
      throw Error(ErrorKind::DegenerateVectors, "zero Gram row");
    }
    params.p.row(i) /= row_sum;
  }
  params.alpha = to_vector(rng.simplex(k));
  return params;
}

BmcParams sample_reversible_ensemble(int k, Rng& rng) {
  Eigen::MatrixXd w(k, k);
  for (int i = 0; i < k; ++i) {
    auto row = rng.simplex(k);
    for (int j = 0; j < k; ++j) w(i, j) = row[static_cast<size_t>(j)];
  }
  w = ((w + w.transpose()) / 2.0).eval();
  w /= w.sum();

  BmcParams params;
  params.k = k;
  params.p.resize(k, k);
  Eigen::VectorXd row_sums = w.rowwise().sum();
  for (int i = 0; i < k; ++i) params.p.row(i) = w.row(i) / row_sums(i);
  params.alpha = row_sums;  // pi_j = sum_i W_{i,j}; W symmetric, total sum 1
  return params;
}

BmcParams sample_assortative_ensemble(int k, double p0, Rng& rng) {
  if (k < 2) throw Error(ErrorKind::Config, "assortative ensemble needs K >= 2");
  if (!(p0 > 0.5 && p0 < 1.0)) {
    throw Error(ErrorKind::Config, "p0 must lie in (1/2, 1)");
  }
  BmcParams params;
  params.k = k;
  params.p.resize(k, k);
  for (int i = 0; i < k; ++i) {
    auto q = rng.simplex(k - 1);
    int t = 0;
    for (int j = 0; j < k; ++j) {
      params.p(i, j) = (j == i) ? p0 : (1.0 - p0) * q[static_cast<size_t>(t++)];
    }
  }
  params.alpha = Eigen::VectorXd::Constant(k, 1.0 / k);
  return params;
}

BmcParams dot_product_example_params(double a, double b) {
  if (!(a > 0.0 && b > 0.0)) {
    throw Error(ErrorKind::Config, "dot-product example needs a, b > 0");
  }
  BmcParams params;
  params.k = 3;
  params.p.resize(3, 3);
  const double z = 2.0 * (a + b);
  params.p << 2 * a / z, 2 * b / z, 0.0,
              a / z,     2 * b / z, a / z,
              0.0,       2 * b / z, 2 * a / z;
  params.alpha.resize(3);
  params.alpha << a / z, 2 * b / z, a / z;
  return params;
}

double information_quantity(const BmcParams& params) {
  validate_params(params);
  const int k = params.k;
  if (k == 1) return 0.0;
  const Eigen::MatrixXd& p = params.p;
  const Eigen::VectorXd& alpha = params.alpha;
  Eigen::VectorXd pi = stationary_with_fallback(p);
  const double inf = std::numeric_limits<double>::infinity();

  double best = inf;
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) {
      if (i == j) continue;  // at i = j every summand vanishes
      double value = pi(j) / alpha(j) - pi(i) / alpha(i);
      bool infinite = false;
      for (int t = 0; t < k && !infinite; ++t) {
        double out_mass = pi(i) * p(i, t);
        if (out_mass > 0.0) {
          if (p(j, t) <= 0.0) {
            infinite = true;
            break;
          }
          value += out_mass * std::log(p(i, t) / p(j, t)) / alpha(i);
        }
        double in_mass = pi(t) * p(t, i);
        if (in_mass > 0.0) {
          if (p(t, j) <= 0.0) {
            infinite = true;
            break;
          }
          value += in_mass *
                   std::log(p(t, i) * alpha(j) / (p(t, j) * alpha(i))) /
                   alpha(i);
        }
      }
      double candidate = infinite ? inf : value;
      if (candidate < best) best = candidate;
    }
  }
  return best < 0.0 ? 0.0 : best;  // clamp roundoff; the quantity is >= 0
}

int mixing_time(const BmcParams& params, int cap) {
  validate_params(params);
  Eigen::VectorXd pi = stationary_with_fallback(params.p);
  Eigen::MatrixXd pt = params.p;
  // Boundary cases (d_TV exactly 1/4) resolve toward mixed, matching the
  // closed form ceil(ln 2 / ln(1/(2 p0 - 1))) on the symmetric family.
  const double threshold = 0.25 + 1e-12;
  for (int t = 1; t <= cap; ++t) {
    double worst = 0.0;
    for (int i = 0; i < params.k; ++i) {
      double d = 0.5 * (pt.row(i).transpose() - pi).cwiseAbs().sum();
      worst = std::max(worst, d);
    }
    if (worst < threshold) return t;
    pt = (pt * params.p).eval();
  }
  throw Error(ErrorKind::NoMixing, "no mixing within cap");
}

}  // namespace bmckit
