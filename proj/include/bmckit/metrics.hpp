#pragma once

#include <cstdint>
#include <vector>

#include "bmckit/error.hpp"

namespace bmckit {

struct Partition {
  std::vector<int32_t> labels;
  int k = 0;  // number of clusters; empty clusters allowed

  size_t n() const { return labels.size(); }
  static Partition from_labels(std::vector<int32_t> labels, int k = -1);
  std::vector<int64_t> sizes() const;
};

// (k_hat - k_true) / k_true
double relative_accuracy(int k_hat, int k_true);

// H = -sum (|A_k|/n) ln(|A_k|/n), with 0 ln 0 = 0.
double entropy(const Partition& part);

// H / ln k; throws NormalizeUndefined for k = 1.
double normalized_entropy(const Partition& part);

double mutual_information(const Partition& a, const Partition& b);

// E[MI] over independent random partitions with the same part sizes
// (hypergeometric model over contingency cells).
double expected_mutual_information(const Partition& a, const Partition& b);

struct AmiResult {
  double value = 0.0;
  bool degenerate = false;  // H(a) H(b) = 0; value forced to 0
};

AmiResult ami(const Partition& a, const Partition& b);

struct MisclassReport {
  int64_t misclassified = 0;
  std::vector<int> permutation;  // truth part k matched to est part perm[k]
};

// |E| = n - max_gamma sum_k |V_hat_{gamma(k)} \cap V_k|; brute force up to 8
// parts, maximum-weight bipartite matching beyond. Both partitions are padded
// with empty parts to a common count.
MisclassReport misclassification(const Partition& truth, const Partition& est);

struct ComparisonReport {
  double relative_accuracy = 0.0;
  double ami_value = 0.0;
  bool ami_degenerate = false;
  double mi = 0.0;
  double entropy_a = 0.0;
  double entropy_b = 0.0;
  int64_t misclassified_count = 0;
  std::vector<int> optimal_permutation;
};

ComparisonReport compare_partitions(const Partition& truth,
                                    const Partition& est);

}  // namespace bmckit
