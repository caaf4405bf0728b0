#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "bmckit/error.hpp"
#include "bmckit/rng.hpp"

namespace bmckit {

// Cluster-level model: K clusters, row-stochastic K x K transition matrix p,
// limiting cluster fractions alpha.
struct BmcParams {
  int k = 0;
  Eigen::MatrixXd p;      // K x K, rows sum to 1
  Eigen::VectorXd alpha;  // length K, positive, sums to 1
};

// Throws NotStochastic / NotIrreducible / BadAlpha.
void validate_params(const BmcParams& params);

// Unique stationary vector of an irreducible stochastic matrix, by power
// iteration to an infinity-norm residual <= tol. Throws NoConvergence when
// the cap is hit (near-periodic chains); callers may fall back to
// stationary_by_linear_solve.
Eigen::VectorXd stationary_distribution(const Eigen::MatrixXd& p,
                                        int max_iter = 100000,
                                        double tol = 1e-12);

// Direct solve of pi^T p = pi^T, sum(pi) = 1. Works for periodic chains.
Eigen::VectorXd stationary_by_linear_solve(const Eigen::MatrixXd& p);

// State-level realization. States are laid out contiguously by cluster:
// cluster k owns indices [offset_k, offset_k + size_k).
struct BmcInstance {
  BmcParams params;
  int n = 0;
  std::vector<int> sigma;          // state -> cluster
  std::vector<int> cluster_sizes;  // |V_k|
  std::vector<int> cluster_offsets;
  Eigen::VectorXd pi;  // stationary vector of p

  // Pi_x = pi_{sigma(x)} / |V_{sigma(x)}|
  double stationary_mass(int x) const {
    const int k = sigma[static_cast<size_t>(x)];
    return pi(k) / cluster_sizes[static_cast<size_t>(k)];
  }
  std::vector<double> full_stationary() const;
};

// Sizes follow |V_k| = floor(n alpha_k) for k >= 2 with the remainder in
// cluster 1. Throws ClusterTooSmall when any implied size is < 1.
BmcInstance build_instance(const BmcParams& params, int n);

struct Trajectory {
  std::vector<uint32_t> states;  // length ell + 1
  uint64_t ell = 0;
  uint32_t n = 0;
  uint64_t seed = 0;
};

enum class StartDistribution { Stationary, FixedZero, Uniform };

struct PerturbationSpec {
  double epsilon = 0.0;  // mixture weight toward the uniform chain
};

// Samples X_0 from the start distribution (stationary by default), then
// steps x -> cluster j ~ p_{sigma(x),.} -> uniform state within V_j.
Trajectory simulate(const BmcInstance& instance, uint64_t ell, uint64_t seed,
                    StartDistribution start = StartDistribution::Stationary);

// P = (1 - eps) P_bmc + eps P_uniform. The mixture coin is only drawn when
// eps > 0, so eps = 0 consumes the same random stream as simulate and
// reproduces it exactly.
Trajectory simulate_perturbed(const BmcInstance& instance,
                              const PerturbationSpec& spec, uint64_t ell,
                              uint64_t seed,
                              StartDistribution start = StartDistribution::Stationary);

// Random ensembles. Alpha defaults: uniform simplex for the uniform and
// low-rank ensembles, stationary for reversible, 1/K for assortative.
BmcParams sample_uniform_ensemble(int k, Rng& rng);
BmcParams sample_lowrank_ensemble(int k, int d, Rng& rng);
BmcParams sample_reversible_ensemble(int k, Rng& rng);
BmcParams sample_assortative_ensemble(int k, double p0, Rng& rng);

// Example dot-product family: K=3, v1 = a(1,0), v2 = b(1,1), v3 = a(0,1);
// rank(p) = 2. Alpha is set to the stationary vector (a, 2b, a)/(2(a+b)).
BmcParams dot_product_example_params(double a, double b);

// Information quantity I(alpha, p): minimum over ordered pairs i != j of a
// divergence between the transition profiles of clusters i and j. Zero terms
// follow 0 ln(0/q) = 0; a positive mass against a zero one gives +infinity.
double information_quantity(const BmcParams& params);

// First t >= 1 with max_i (1/2) sum_j |pi_j - (p^t)_{i,j}| below 1/4,
// evaluated on the K x K cluster chain (the n-state TV distance depends on x
// only through sigma(x)). Throws NoMixing past the cap.
int mixing_time(const BmcParams& params, int cap = 100000);

}  // namespace bmckit
