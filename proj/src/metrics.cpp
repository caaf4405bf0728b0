#include "bmckit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace bmckit {

Partition Partition::from_labels(std::vector<int32_t> labels, int k) {
  Partition part;
  int32_t max_label = -1;
  for (int32_t l : labels) {
    if (l < 0) throw Error(ErrorKind::Config, "negative label");
    max_label = std::max(max_label, l);
  }
  part.k = (k >= 0) ? k : max_label + 1;
  if (max_label >= part.k) throw Error(ErrorKind::Config, "label >= k");
  part.labels = std::move(labels);
  return part;
}

std::vector<int64_t> Partition::sizes() const {
  std::vector<int64_t> out(static_cast<size_t>(k), 0);
  for (int32_t l : labels) ++out[static_cast<size_t>(l)];
  return out;
}

double relative_accuracy(int k_hat, int k_true) {
  if (k_true < 1) throw Error(ErrorKind::Config, "k_true must be >= 1");
  return static_cast<double>(k_hat - k_true) / k_true;
}

double entropy(const Partition& part) {
  const double n = static_cast<double>(part.n());
  if (n < 1) throw Error(ErrorKind::Config, "empty partition");
  double h = 0.0;
  for (int64_t size : part.sizes()) {
    if (size > 0) {
      double f = size / n;
      h -= f * std::log(f);
    }
  }
  return h;
}

double normalized_entropy(const Partition& part) {
  if (part.k < 2) {
    throw Error(ErrorKind::NormalizeUndefined, "normalized entropy needs k >= 2");
  }
  return entropy(part) / std::log(static_cast<double>(part.k));
}

namespace {

std::vector<std::vector<int64_t>> contingency(const Partition& a,
                                              const Partition& b) {
  std::vector<std::vector<int64_t>> table(
      static_cast<size_t>(a.k), std::vector<int64_t>(static_cast<size_t>(b.k), 0));
  for (size_t x = 0; x < a.n(); ++x) {
    ++table[static_cast<size_t>(a.labels[x])][static_cast<size_t>(b.labels[x])];
  }
  return table;
}

}  // namespace

double mutual_information(const Partition& a, const Partition& b) {
  if (a.n() != b.n()) throw Error(ErrorKind::Config, "partition size mismatch");
  const double n = static_cast<double>(a.n());
  auto table = contingency(a, b);
  auto sa = a.sizes();
  auto sb = b.sizes();
  double mi = 0.0;
  for (int i = 0; i < a.k; ++i) {
    for (int j = 0; j < b.k; ++j) {
      int64_t nij = table[static_cast<size_t>(i)][static_cast<size_t>(j)];
      if (nij > 0) {
        mi += (nij / n) * std::log(n * nij /
                                   (static_cast<double>(sa[static_cast<size_t>(i)]) *
                                    sb[static_cast<size_t>(j)]));
      }
    }
  }
  return mi;
}

// Fixed-marginal hypergeometric closed form for the expectation of MI over
// independent uniformly random partitions with the given part sizes.
double expected_mutual_information(const Partition& a, const Partition& b) {
  if (a.n() != b.n()) throw Error(ErrorKind::Config, "partition size mismatch");
  const int64_t n = static_cast<int64_t>(a.n());
  const double nd = static_cast<double>(n);
  auto sa = a.sizes();
  auto sb = b.sizes();

  auto lfact = [](int64_t m) { return std::lgamma(static_cast<double>(m) + 1.0); };
  const double log_n_fact = lfact(n);

  double emi = 0.0;
  for (int64_t ai : sa) {
    if (ai == 0) continue;
    for (int64_t bj : sb) {
      if (bj == 0) continue;
      const int64_t lo = std::max<int64_t>(1, ai + bj - n);
      const int64_t hi = std::min(ai, bj);
      for (int64_t nij = lo; nij <= hi; ++nij) {
        double log_prob = lfact(ai) + lfact(bj) + lfact(n - ai) + lfact(n - bj) -
                          log_n_fact - lfact(nij) - lfact(ai - nij) -
                          lfact(bj - nij) - lfact(n - ai - bj + nij);
        double term = (nij / nd) *
                      std::log(nd * nij / (static_cast<double>(ai) * bj));
        emi += term * std::exp(log_prob);
      }
    }
  }
  return emi;
}

AmiResult ami(const Partition& a, const Partition& b) {
  const double ha = entropy(a);
  const double hb = entropy(b);
  if (ha * hb == 0.0) return {0.0, true};
  const double mi = mutual_information(a, b);
  const double emi = expected_mutual_information(a, b);
  const double denom = std::sqrt(ha * hb) - emi;
  if (denom == 0.0) return {0.0, true};
  return {(mi - emi) / denom, false};
}

namespace {

// Hungarian algorithm (Jonker-Volgenant potentials) for a max-weight perfect
// matching on a square matrix. Returns assignment truth -> est.
std::vector<int> hungarian_max(const std::vector<std::vector<int64_t>>& weight) {
  const int m = static_cast<int>(weight.size());
  // convert to min-cost
  int64_t top = 0;
  for (const auto& row : weight) {
    for (int64_t w : row) top = std::max(top, w);
  }
  std::vector<double> u(static_cast<size_t>(m + 1), 0.0), v(static_cast<size_t>(m + 1), 0.0);
  std::vector<int> match(static_cast<size_t>(m + 1), 0);  // column -> row
  for (int i = 1; i <= m; ++i) {
    match[0] = i;
    int j0 = 0;
    std::vector<double> minv(static_cast<size_t>(m + 1),
                             std::numeric_limits<double>::infinity());
    std::vector<int> way(static_cast<size_t>(m + 1), 0);
    std::vector<char> used(static_cast<size_t>(m + 1), 0);
    do {
      used[static_cast<size_t>(j0)] = 1;
      int i0 = match[static_cast<size_t>(j0)];
      double delta = std::numeric_limits<double>::infinity();
      int j1 = 0;
      for (int j = 1; j <= m; ++j) {
        if (used[static_cast<size_t>(j)]) continue;
        double cost = static_cast<double>(top - weight[static_cast<size_t>(i0 - 1)][static_cast<size_t>(j - 1)]);
        double cur = cost - u[static_cast<size_t>(i0)] - v[static_cast<size_t>(j)];
        if (cur < minv[static_cast<size_t>(j)]) {
          minv[static_cast<size_t>(j)] = cur;
          way[static_cast<size_t>(j)] = j0;
        }
        if (minv[static_cast<size_t>(j)] < delta) {
          delta = minv[static_cast<size_t>(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= m; ++j) {
        if (used[static_cast<size_t>(j)]) {
          u[static_cast<size_t>(match[static_cast<size_t>(j)])] += delta;
          v[static_cast<size_t>(j)] -= delta;
        } else {
          minv[static_cast<size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (match[static_cast<size_t>(j0)] != 0);
    do {
      int j1 = way[static_cast<size_t>(j0)];
      match[static_cast<size_t>(j0)] = match[static_cast<size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> assignment(static_cast<size_t>(m), -1);
  for (int j = 1; j <= m; ++j) {
    assignment[static_cast<size_t>(match[static_cast<size_t>(j)] - 1)] = j - 1;
  }
  return assignment;
}

std::vector<int> best_permutation_brute(const std::vector<std::vector<int64_t>>& overlap) {
  const int m = static_cast<int>(overlap.size());
  std::vector<int> perm(static_cast<size_t>(m));
  std::iota(perm.begin(), perm.end(), 0);
  int64_t best = -1;
  std::vector<int> best_perm = perm;
  do {
    int64_t total = 0;
    for (int k = 0; k < m; ++k) {
      total += overlap[static_cast<size_t>(k)][static_cast<size_t>(perm[static_cast<size_t>(k)])];
    }
    if (total > best) {
      best = total;
      best_perm = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best_perm;
}

}  // namespace

MisclassReport misclassification(const Partition& truth, const Partition& est) {
  if (truth.n() != est.n()) throw Error(ErrorKind::Config, "partition size mismatch");
  const int m = std::max(truth.k, est.k);  // pad with empty parts

  std::vector<std::vector<int64_t>> overlap(
      static_cast<size_t>(m), std::vector<int64_t>(static_cast<size_t>(m), 0));
  for (size_t x = 0; x < truth.n(); ++x) {
    ++overlap[static_cast<size_t>(truth.labels[x])][static_cast<size_t>(est.labels[x])];
  }

  std::vector<int> perm = (m <= 8) ? best_permutation_brute(overlap)
                                   : hungarian_max(overlap);
  int64_t matched = 0;
  for (int k = 0; k < m; ++k) {
    matched += overlap[static_cast<size_t>(k)][static_cast<size_t>(perm[static_cast<size_t>(k)])];
  }
  MisclassReport report;
  report.misclassified = static_cast<int64_t>(truth.n()) - matched;
  report.permutation = std::move(perm);
  return report;
}

ComparisonReport compare_partitions(const Partition& truth, const Partition& est) {
  ComparisonReport report;
  report.relative_accuracy = relative_accuracy(est.k, truth.k);
  AmiResult am = ami(truth, est);
  report.ami_value = am.value;
  report.ami_degenerate = am.degenerate;
  report.mi = mutual_information(truth, est);
  report.entropy_a = entropy(truth);
  report.entropy_b = entropy(est);
  MisclassReport mis = misclassification(truth, est);
  report.misclassified_count = mis.misclassified;
  report.optimal_permutation = std::move(mis.permutation);
  return report;
}

}  // namespace bmckit
