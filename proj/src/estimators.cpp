#include "bmckit/estimators.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>

namespace bmckit {

Thresholds Thresholds::resolve(double a, double b, double c, uint32_t n,
                               uint64_t ell) {
  if (!(a > 0.0 && a < 1.0) || !(b > 0.0 && b < a) || !(c > 0.0 && c < 1.0)) {
    throw Error(ErrorKind::Config, "need 0 < b < a < 1 and 0 < c < 1");
  }
  if (n == 0 || ell == 0) throw Error(ErrorKind::Config, "empty trajectory");
  Thresholds th;
  th.a = a;
  th.b = b;
  th.c = c;
  const double ratio = static_cast<double>(ell) / n;
  th.gamma = std::pow(ratio, c);
  th.h = std::sqrt(std::pow(ratio, 1.0 + a) / n);
  th.rho = n / std::pow(ratio, a - b);
  return th;
}

namespace {

// Fixed-size bitset over states; the peeling loop only needs and-not
// population counts against the assigned set.
class StateBits {
 public:
  explicit StateBits(uint32_t n) : n_(n), words_((n + 63) / 64, 0) {}
  void set(uint32_t i) { words_[i >> 6] |= (uint64_t{1} << (i & 63)); }
  bool test(uint32_t i) const {
    return (words_[i >> 6] >> (i & 63)) & 1u;
  }
  size_t count_and_not(const StateBits& mask) const {
    size_t total = 0;
    for (size_t w = 0; w < words_.size(); ++w) {
      total += static_cast<size_t>(std::popcount(words_[w] & ~mask.words_[w]));
    }
    return total;
  }
  void or_with(const StateBits& other) {
    for (size_t w = 0; w < words_.size(); ++w) words_[w] |= other.words_[w];
  }
  std::vector<uint32_t> to_indices_and_not(const StateBits& mask) const {
    std::vector<uint32_t> out;
    for (uint32_t i = 0; i < n_; ++i) {
      if (test(i) && !mask.test(i)) out.push_back(i);
    }
    return out;
  }

 private:
  uint32_t n_;
  std::vector<uint64_t> words_;
};

std::vector<StateBits> build_neighborhoods(const Eigen::MatrixXd& x_hat,
                                           double h) {
  const auto n = static_cast<uint32_t>(x_hat.rows());
  const double h2 = h * h;
  Eigen::VectorXd sq = x_hat.rowwise().squaredNorm();
  std::vector<StateBits> nbhd(n, StateBits(n));

  const uint32_t chunk = 256;
  for (uint32_t lo = 0; lo < n; lo += chunk) {
    const uint32_t hi = std::min(lo + chunk, n);
    Eigen::MatrixXd gram = x_hat.middleRows(lo, hi - lo) * x_hat.transpose();
    for (uint32_t x = lo; x < hi; ++x) {
      for (uint32_t y = 0; y < n; ++y) {
        double d2 = sq(x) + sq(y) - 2.0 * gram(x - lo, y);
        if (d2 <= h2) nbhd[x].set(y);
      }
    }
  }
  return nbhd;
}

struct PeelOutcome {
  std::vector<uint32_t> centers;
  std::vector<std::vector<uint32_t>> clusters;
};

// Greedy peeling straight from the pseudocode. When exact_k >= 0 the rho
// stopping rule is ignored and exactly exact_k neighborhoods are extracted;
// otherwise iteration continues while the stored set has >= rho states, and
// the final below-threshold set is discarded.
PeelOutcome peel(const std::vector<StateBits>& nbhd, uint32_t n, double rho,
                 int exact_k) {
  PeelOutcome out;
  StateBits assigned(n);
  size_t last_size = n;  // |V_0| = n

  for (;;) {
    if (exact_k >= 0) {
      if (out.centers.size() == static_cast<size_t>(exact_k)) break;
    } else if (static_cast<double>(last_size) < rho) {
      break;
    }
    uint32_t best = 0;
    size_t best_count = 0;
    for (uint32_t x = 0; x < n; ++x) {
      size_t cnt = nbhd[x].count_and_not(assigned);
      if (cnt > best_count) {  // ties keep the smallest x
        best_count = cnt;
        best = x;
      }
    }
    std::vector<uint32_t> members = nbhd[best].to_indices_and_not(assigned);
    out.centers.push_back(best);
    out.clusters.push_back(members);
    assigned.or_with(nbhd[best]);  // union of the V_l equals union of the N_{z_l}
    last_size = members.size();
  }

  if (exact_k < 0 && !out.centers.empty()) {
    // K_hat = k - 1: the set that broke the threshold is dropped.
    out.centers.pop_back();
    out.clusters.pop_back();
  }
  return out;
}

SvdResult svd_of_trimmed(const TrimmedCounts& trimmed, int r) {
  return svd_truncated(trimmed.dense(), r);
}

EstimateResult alg2_from_svd(const SvdResult& svd, int r, const Thresholds& th,
                             const TrimmedCounts& trimmed,
                             Embedding* out_embedding) {
  if (svd.nonzero_count() < r) {
    throw Error(ErrorKind::EmptyEmbedding,
                "r exceeds available nonzero singular values");
  }
  Embedding emb = embed(svd, r);
  auto nbhd = build_neighborhoods(emb.x_hat, th.h);
  PeelOutcome peeled = peel(nbhd, static_cast<uint32_t>(emb.x_hat.rows()),
                            th.rho, -1);

  EstimateResult result;
  result.k_hat = static_cast<int>(peeled.centers.size());
  result.centers = std::move(peeled.centers);
  result.clusters = std::move(peeled.clusters);
  result.embedding_rank = r;
  result.diag.gamma_size = static_cast<int>(trimmed.gamma.size());
  result.diag.singvals.assign(svd.s.data(), svd.s.data() + std::min<int>(r, svd.r()));
  if (out_embedding) *out_embedding = std::move(emb);
  return result;
}

}  // namespace

std::pair<int, TrimmedCounts> alg1_spectral_count(const Trajectory& traj,
                                                  const Thresholds& th) {
  CountMatrix counts = build_counts(traj);
  TrimmedCounts trimmed = trim(counts);
  int k_spec = alg1_spectral_count(trimmed, th);
  return {k_spec, std::move(trimmed)};
}

int alg1_spectral_count(const TrimmedCounts& trimmed, const Thresholds& th) {
  return count_singvals_above(trimmed.dense(), th.gamma);
}

EstimateResult alg2_density_count(const TrimmedCounts& trimmed, int r,
                                  const Thresholds& th,
                                  Embedding* out_embedding) {
  if (r < 1) throw Error(ErrorKind::Config, "alg2 needs r >= 1");
  SvdResult svd = svd_of_trimmed(trimmed, r);
  return alg2_from_svd(svd, r, th, trimmed, out_embedding);
}

Labeling alg3_complete(const Embedding& embedding,
                       const EstimateResult& result) {
  if (result.k_hat < 1) {
    throw Error(ErrorKind::NoCenters, "no centers to complete against");
  }
  const auto n = static_cast<size_t>(embedding.x_hat.rows());
  Labeling labeling;
  labeling.labels.assign(n, Labeling::kUnassigned);
  for (int k = 0; k < result.k_hat; ++k) {
    for (uint32_t x : result.clusters[static_cast<size_t>(k)]) {
      labeling.labels[x] = k;
    }
  }
  for (size_t x = 0; x < n; ++x) {
    if (labeling.labels[x] != Labeling::kUnassigned) continue;
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (int k = 0; k < result.k_hat; ++k) {
      double d = (embedding.x_hat.row(static_cast<Eigen::Index>(x)) -
                  embedding.x_hat.row(result.centers[static_cast<size_t>(k)]))
                     .squaredNorm();
      if (d < best_d) {  // ties keep the smallest k
        best_d = d;
        best = k;
      }
    }
    labeling.labels[x] = best;
  }
  return labeling;
}

FullEstimate estimate_full(const Trajectory& traj, const Thresholds& th,
                           std::optional<int> r_override) {
  auto [k_spec, trimmed] = alg1_spectral_count(traj, th);
  int r = r_override.value_or(std::max(k_spec, 1));
  r = std::min<int>(r, static_cast<int>(traj.n));

  FullEstimate full;
  SvdResult svd = svd_of_trimmed(trimmed, r);
  int avail = svd.nonzero_count();
  if (avail < 1) {
    throw Error(ErrorKind::EmptyEmbedding, "count matrix has no signal");
  }
  if (avail < r) r = avail;  // caller-side reduction on EmptyEmbedding
  full.result = alg2_from_svd(svd, r, th, trimmed, &full.embedding);
  full.result.diag.k_spec = k_spec;
  full.labeling = alg3_complete(full.embedding, full.result);
  return full;
}

int max_eigengap_index(const std::vector<double>& moduli) {
  const size_t n = moduli.size();
  if (n < 2) throw Error(ErrorKind::Config, "need at least two eigenvalues");
  const double tol = 1e-10 * std::max(1.0, moduli[0]);
  double best_gap = -std::numeric_limits<double>::infinity();
  int best_i = 2;
  for (size_t i = 2; i <= n; ++i) {
    double gap = moduli[i - 2] - moduli[i - 1];
    if (gap > best_gap + tol) {
      best_gap = gap;
      best_i = static_cast<int>(i);
    }
  }
  return best_i;
}

int megh_estimate(const CountMatrix& counts) {
  if (counts.ell < 1) throw Error(ErrorKind::Config, "empty trajectory");
  const uint32_t n = counts.n;
  DegreeProfile deg = degrees(counts);
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (const auto& [key, v] : counts.entries) {
    m(static_cast<Eigen::Index>(key / n), static_cast<Eigen::Index>(key % n)) = v;
  }
  const double ell = static_cast<double>(counts.ell);
  for (uint32_t x = 0; x < n; ++x) {
    for (uint32_t y = 0; y < n; ++y) {
      m(x, y) -= deg.d_in[x] * static_cast<double>(deg.d_out[y]) / ell;
    }
  }
  Eigen::EigenSolver<Eigen::MatrixXd> solver(m, /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorKind::EigenFailure, "eigenvalue iteration failed");
  }
  std::vector<double> moduli(n);
  for (uint32_t i = 0; i < n; ++i) moduli[i] = std::abs(solver.eigenvalues()(i));
  std::sort(moduli.begin(), moduli.end(), std::greater<>());
  return max_eigengap_index(moduli);
}

namespace {

struct CandidateFit {
  std::vector<int32_t> labels;   // all n states
  Eigen::MatrixXd p_hat;         // k x k, smoothed MLE
  std::vector<int64_t> sizes;    // |V_hat_j| from labels
  int k = 0;
};

Trajectory slice_trajectory(const Trajectory& traj, size_t first,
                            size_t count) {
  Trajectory out;
  out.n = traj.n;
  out.seed = traj.seed;
  out.states.assign(traj.states.begin() + static_cast<long>(first),
                    traj.states.begin() + static_cast<long>(first + count));
  out.ell = count - 1;
  return out;
}

// Greedy single-state reassignment hill-climb on the (smoothed) train
// likelihood; an approximation of the likelihood-improvement step of the
// cited clustering algorithm, capped at 20 sweeps.
void improve_labels(const std::vector<uint32_t>& states,
                    std::vector<int32_t>& labels, int k, uint32_t n) {
  const size_t obs = states.size();
  const double ell = static_cast<double>(obs - 1);
  const double smooth = 1.0 / ell;

  std::vector<std::vector<size_t>> pairs_of(n);
  for (size_t t = 0; t + 1 < obs; ++t) {
    uint32_t a = states[t], b = states[t + 1];
    pairs_of[a].push_back(t);
    if (b != a) pairs_of[b].push_back(t);
  }

  Eigen::MatrixXd trans = Eigen::MatrixXd::Zero(k, k);
  std::vector<double> in_visits(static_cast<size_t>(k), 0.0);
  std::vector<double> sizes(static_cast<size_t>(k), 0.0);
  for (size_t t = 0; t + 1 < obs; ++t) {
    int i = labels[states[t]];
    int j = labels[states[t + 1]];
    trans(i, j) += 1.0;
    in_visits[static_cast<size_t>(j)] += 1.0;
  }
  for (uint32_t x = 0; x < n; ++x) sizes[static_cast<size_t>(labels[x])] += 1.0;

  auto log_likelihood = [&]() {
    double ll = 0.0;
    for (int i = 0; i < k; ++i) {
      double row = trans.row(i).sum();
      for (int j = 0; j < k; ++j) {
        if (trans(i, j) > 0.0) {
          ll += trans(i, j) * std::log((trans(i, j) + smooth) / (row + k * smooth));
        }
      }
    }
    for (int j = 0; j < k; ++j) {
      if (in_visits[static_cast<size_t>(j)] > 0.0) {
        ll -= in_visits[static_cast<size_t>(j)] *
              std::log(std::max(sizes[static_cast<size_t>(j)], 1.0));
      }
    }
    return ll;
  };

  auto apply_move = [&](uint32_t x, int to, double direction) {
    // direction +1 applies x -> to, -1 reverts it; labels[x] still holds the
    // source label in both cases.
    int from = labels[x];
    for (size_t t : pairs_of[x]) {
      uint32_t sa = states[t], sb = states[t + 1];
      int la = (sa == x) ? from : labels[sa];
      int lb = (sb == x) ? from : labels[sb];
      int na = (sa == x) ? to : labels[sa];
      int nb = (sb == x) ? to : labels[sb];
      trans(la, lb) -= direction;
      trans(na, nb) += direction;
      in_visits[static_cast<size_t>(lb)] -= direction;
      in_visits[static_cast<size_t>(nb)] += direction;
    }
    sizes[static_cast<size_t>(from)] -= direction;
    sizes[static_cast<size_t>(to)] += direction;
  };

  const int max_sweeps = 20;
  double current = log_likelihood();
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    bool moved = false;
    for (uint32_t x = 0; x < n; ++x) {
      int from = labels[x];
      int best_to = from;
      double best_ll = current;
      for (int to = 0; to < k; ++to) {
        if (to == from) continue;
        apply_move(x, to, 1.0);
        double ll = log_likelihood();
        apply_move(x, to, -1.0);
        if (ll > best_ll + 1e-12) {
          best_ll = ll;
          best_to = to;
        }
      }
      if (best_to != from) {
        apply_move(x, best_to, 1.0);
        labels[x] = best_to;
        current = best_ll;
        moved = true;
      }
    }
    if (!moved) break;
  }
}

// Candidate clustering with exactly k clusters: counts of the fitted range,
// rank-k embedding, peeling without the rho stop, then completion.
CandidateFit fit_candidate(const Trajectory& range, int k, const Thresholds& base,
                           bool improve) {
  const uint32_t n = range.n;
  Thresholds th = Thresholds::resolve(base.a, base.b, base.c, n, range.ell);
  CountMatrix counts = build_counts(range);
  TrimmedCounts trimmed = trim(counts);

  CandidateFit fit;
  fit.k = k;
  SvdResult svd = svd_truncated(trimmed.dense(), std::min<int>(k, n));
  int r = std::max(1, std::min(svd.nonzero_count(), k));
  Embedding emb = embed(svd, r);
  auto nbhd = build_neighborhoods(emb.x_hat, th.h);
  PeelOutcome peeled = peel(nbhd, n, th.rho, k);

  EstimateResult partial;
  partial.k_hat = k;
  partial.centers = std::move(peeled.centers);
  partial.clusters = std::move(peeled.clusters);
  fit.labels = alg3_complete(emb, partial).labels;

  if (improve) improve_labels(range.states, fit.labels, k, n);

  const double ell = static_cast<double>(range.ell);
  const double smooth = 1.0 / ell;
  Eigen::MatrixXd trans = Eigen::MatrixXd::Zero(k, k);
  for (size_t t = 0; t + 1 < range.states.size(); ++t) {
    trans(fit.labels[range.states[t]], fit.labels[range.states[t + 1]]) += 1.0;
  }
  fit.p_hat.resize(k, k);
  for (int i = 0; i < k; ++i) {
    double row = trans.row(i).sum();
    for (int j = 0; j < k; ++j) {
      fit.p_hat(i, j) = (trans(i, j) + smooth) / (row + k * smooth);
    }
  }
  fit.sizes.assign(static_cast<size_t>(k), 0);
  for (uint32_t x = 0; x < n; ++x) ++fit.sizes[static_cast<size_t>(fit.labels[x])];
  return fit;
}

double score_range(const CandidateFit& fit, const Trajectory& traj,
                   size_t first, size_t last /*inclusive obs index*/) {
  double total = 0.0;
  for (size_t t = first; t < last; ++t) {
    int i = fit.labels[traj.states[t]];
    int j = fit.labels[traj.states[t + 1]];
    total += std::log(fit.p_hat(i, j) /
                      static_cast<double>(fit.sizes[static_cast<size_t>(j)]));
  }
  return total;
}

int holdout_estimate(const Trajectory& traj, int k_max, const Thresholds& th,
                     bool improve) {
  if (traj.ell < 4) throw Error(ErrorKind::Config, "need ell >= 4");
  if (k_max < 1) throw Error(ErrorKind::Config, "k_max must be >= 1");
  const size_t split = static_cast<size_t>(traj.ell / 2);  // floor(ell/2)
  const size_t train_obs = split + 1;
  const size_t val_obs = traj.states.size() - train_obs;
  if (train_obs < 2 || val_obs < 2) {
    throw Error(ErrorKind::DegenerateSplit, "a half has fewer than 2 observations");
  }
  Trajectory train = slice_trajectory(traj, 0, train_obs);

  int best_k = 1;
  double best_score = -std::numeric_limits<double>::infinity();
  for (int k = 1; k <= k_max; ++k) {
    CandidateFit fit = fit_candidate(train, k, th, improve);
    double score = score_range(fit, traj, split + 1, traj.states.size() - 1) /
                   static_cast<double>(split);
    if (score > best_score) {  // ties keep the smallest k
      best_score = score;
      best_k = k;
    }
  }
  return best_k;
}

}  // namespace

int llsc_estimate(const Trajectory& traj, int k_max, const Thresholds& th) {
  return holdout_estimate(traj, k_max, th, /*improve=*/false);
}

int llci_estimate(const Trajectory& traj, int k_max, const Thresholds& th) {
  return holdout_estimate(traj, k_max, th, /*improve=*/true);
}

int caic_estimate(const Trajectory& traj, int k_max, const Thresholds& th,
                  bool improve) {
  if (traj.ell < 2) throw Error(ErrorKind::Config, "need ell >= 2");
  if (k_max < 1) throw Error(ErrorKind::Config, "k_max must be >= 1");
  const double log_ell = std::log(static_cast<double>(traj.ell));
  const int n = static_cast<int>(traj.n);

  int best_k = 1;
  double best_caic = std::numeric_limits<double>::infinity();
  for (int k = 1; k <= k_max; ++k) {
    CandidateFit fit = fit_candidate(traj, k, th, improve);
    double ll = score_range(fit, traj, 0, traj.states.size() - 1);
    double caic = -2.0 * ll +
                  caic_degrees_of_freedom(n, k) * (log_ell - 1.0);
    if (caic < best_caic) {  // ties keep the smallest k
      best_caic = caic;
      best_k = k;
    }
  }
  return best_k;
}

bool is_known_estimator(const std::string& id) {
  return id == "alg2" || id == "alg1" || id == "megh" || id == "llsc" ||
         id == "llci" || id == "caic";
}

}  // namespace bmckit
