#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <unordered_map>
#include <vector>

#include "bmckit/model.hpp"

namespace bmckit {

// Sparse transition counts N_hat: (x, y) -> number of observed x -> y steps.
// Values are stored as doubles so that exact expected-count matrices can be
// fed through the same spectral path in tests.
struct CountMatrix {
  uint32_t n = 0;
  uint64_t ell = 0;
  std::unordered_map<uint64_t, double> entries;

  uint64_t key(uint32_t x, uint32_t y) const {
    return static_cast<uint64_t>(x) * n + y;
  }
  double at(uint32_t x, uint32_t y) const {
    auto it = entries.find(key(x, y));
    return it == entries.end() ? 0.0 : it->second;
  }
  void add(uint32_t x, uint32_t y, double v) { entries[key(x, y)] += v; }
};

CountMatrix build_counts(const Trajectory& traj);

// Trimmed counts: the floor(n exp(-ell/n)) states with the largest column
// sums (in-counts) are removed; their rows and columns read as zero.
struct TrimmedCounts {
  CountMatrix base;
  std::vector<uint32_t> gamma;  // sorted removed states
  std::vector<char> removed;    // length n mask

  bool is_removed(uint32_t x) const { return removed[x] != 0; }
  double at(uint32_t x, uint32_t y) const {
    if (removed[x] || removed[y]) return 0.0;
    return base.at(x, y);
  }
  Eigen::MatrixXd dense() const;
};

// Column-sum ranking with smallest-index tie-break, so equal inputs always
// produce the same trim set.
TrimmedCounts trim(const CountMatrix& counts);

// Wraps a matrix untouched (empty trim set); test hook for exact matrices.
TrimmedCounts wrap_untrimmed(CountMatrix counts);

struct DegreeProfile {
  std::vector<int64_t> d_in;
  std::vector<int64_t> d_out;
};

DegreeProfile degrees(const CountMatrix& counts);

}  // namespace bmckit
