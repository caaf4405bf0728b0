#pragma once

#include <optional>
#include <string>
#include <vector>

#include "bmckit/counts.hpp"
#include "bmckit/linalg.hpp"
#include "bmckit/model.hpp"

namespace bmckit {

// Threshold parameterization: gamma = (ell/n)^c, n h^2 = (ell/n)^{1+a},
// rho = n / (ell/n)^{a-b}. Defaults a = 9/10, b = 1/10, c = 3/4.
struct Thresholds {
  double a = 0.9;
  double b = 0.1;
  double c = 0.75;
  double gamma = 0.0;
  double h = 0.0;
  double rho = 0.0;

  static Thresholds resolve(double a, double b, double c, uint32_t n,
                            uint64_t ell);
};

struct EstimateDiagnostics {
  int k_spec = -1;
  int gamma_size = 0;
  std::vector<double> singvals;  // retained singular values
};

struct EstimateResult {
  int k_hat = 0;
  std::vector<uint32_t> centers;                 // z*_k
  std::vector<std::vector<uint32_t>> clusters;   // partial clustering V_k
  int embedding_rank = 0;
  EstimateDiagnostics diag;
};

struct Labeling {
  static constexpr int32_t kUnassigned = -1;
  std::vector<int32_t> labels;
};

// Step 1: count singular values of the trimmed count matrix >= gamma.
// Returns the count together with the trimmed counts for reuse downstream.
std::pair<int, TrimmedCounts> alg1_spectral_count(const Trajectory& traj,
                                                  const Thresholds& th);

int alg1_spectral_count(const TrimmedCounts& trimmed, const Thresholds& th);

// Step 2: rank-r spectral embedding, neighborhoods of radius h, then greedy
// peeling of the largest unassigned neighborhood while the stored set has at
// least rho states. The final below-threshold set is discarded. Throws
// EmptyEmbedding when r exceeds the number of nonzero singular values.
EstimateResult alg2_density_count(const TrimmedCounts& trimmed, int r,
                                  const Thresholds& th,
                                  Embedding* out_embedding = nullptr);

// Step 3: single-pass nearest-center completion, ties to the smallest k.
Labeling alg3_complete(const Embedding& embedding,
                       const EstimateResult& result);

struct FullEstimate {
  EstimateResult result;
  Labeling labeling;
  Embedding embedding;
};

// ALG1 -> ALG2 with r = r_override if given else max(k_spec, 1) -> ALG3.
// If r exceeds the available nonzero singular values it is reduced to them.
FullEstimate estimate_full(const Trajectory& traj, const Thresholds& th,
                           std::optional<int> r_override = std::nullopt);

// Maximum eigengap on the modularity matrix M = N - d_in d_out^T / ell:
// returns argmax_{i>=2} (|lambda_{i-1}| - |lambda_i|) of the modulus-sorted
// eigenvalues, smallest index on ties (relative tolerance 1e-10).
int megh_estimate(const CountMatrix& counts);

int max_eigengap_index(const std::vector<double>& moduli);

// Cross-validated log-likelihood: fit candidate clusterings with k clusters
// on the first half, score per-step ln(p_hat / |V_hat|) on the second half,
// return the argmax (smallest k on ties).
int llsc_estimate(const Trajectory& traj, int k_max, const Thresholds& th);

// LLSC plus a greedy single-state reassignment hill-climb (at most 20
// sweeps) of the train likelihood before scoring.
int llci_estimate(const Trajectory& traj, int k_max, const Thresholds& th);

// CAIC(k) = -2 sum ln(p_hat/|V_hat|) + DF(k)(ln ell - 1), DF(k) = n + k(k-1),
// fit on all data; returns the argmin. With improve = true the candidate
// fits run the same hill-climb as llci (making the estimate depend on the
// state visiting order, so it is no longer relabeling invariant).
int caic_estimate(const Trajectory& traj, int k_max, const Thresholds& th,
                  bool improve = false);

inline int caic_degrees_of_freedom(int n, int k) { return n + k * (k - 1); }

// Estimator ids accepted by the CLI and harness: "alg2" (full pipeline),
// "alg1", "megh", "llsc", "llci", "caic".
bool is_known_estimator(const std::string& id);

}  // namespace bmckit
