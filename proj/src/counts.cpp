#include "bmckit/counts.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace bmckit {

CountMatrix build_counts(const Trajectory& traj) {
  CountMatrix counts;
  counts.n = traj.n;
  counts.ell = traj.ell;
  counts.entries.reserve(traj.states.size());
  for (uint64_t t = 0; t < traj.ell; ++t) {
    counts.add(traj.states[static_cast<size_t>(t)],
               traj.states[static_cast<size_t>(t) + 1], 1.0);
  }
  return counts;
}

TrimmedCounts trim(const CountMatrix& counts) {
  const uint32_t n = counts.n;
  const auto trim_size = static_cast<size_t>(
      std::floor(n * std::exp(-static_cast<double>(counts.ell) / n)));

  TrimmedCounts out;
  out.base = counts;
  out.removed.assign(n, 0);
  if (trim_size == 0) return out;

  // Column sums do not change as states are removed (the pseudocode sums over
  // all x), so the iterative removal equals taking the top column sums
  // directly, smallest index first on ties.
  std::vector<double> col_sums(n, 0.0);
  for (const auto& [key, v] : counts.entries) {
    col_sums[static_cast<size_t>(key % n)] += v;
  }
  std::vector<uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0u);
  std::partial_sort(order.begin(), order.begin() + static_cast<long>(trim_size),
                    order.end(), [&](uint32_t a, uint32_t b) {
                      if (col_sums[a] != col_sums[b]) return col_sums[a] > col_sums[b];
                      return a < b;
                    });
  out.gamma.assign(order.begin(), order.begin() + static_cast<long>(trim_size));
  std::sort(out.gamma.begin(), out.gamma.end());
  for (uint32_t x : out.gamma) out.removed[x] = 1;
  return out;
}

TrimmedCounts wrap_untrimmed(CountMatrix counts) {
  TrimmedCounts out;
  out.removed.assign(counts.n, 0);
  out.base = std::move(counts);
  return out;
}

Eigen::MatrixXd TrimmedCounts::dense() const {
  const uint32_t n = base.n;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (const auto& [key, v] : base.entries) {
    const auto x = static_cast<uint32_t>(key / n);
    const auto y = static_cast<uint32_t>(key % n);
    if (!removed[x] && !removed[y]) a(x, y) = v;
  }
  return a;
}

DegreeProfile degrees(const CountMatrix& counts) {
  DegreeProfile profile;
  profile.d_in.assign(counts.n, 0);
  profile.d_out.assign(counts.n, 0);
  for (const auto& [key, v] : counts.entries) {
    const auto x = static_cast<size_t>(key / counts.n);
    const auto y = static_cast<size_t>(key % counts.n);
    profile.d_out[x] += static_cast<int64_t>(std::llround(v));
    profile.d_in[y] += static_cast<int64_t>(std::llround(v));
  }
  return profile;
}

}  // namespace bmckit
