#pragma once

#include <Eigen/Dense>

#include "bmckit/error.hpp"

namespace bmckit {

// Top-r singular triplets, singular values non-increasing.
struct SvdResult {
  Eigen::MatrixXd u;  // n x r, orthonormal columns
  Eigen::VectorXd s;  // length r
  Eigen::MatrixXd v;  // n x r, orthonormal columns

  int r() const { return static_cast<int>(s.size()); }
  // Number of singular values above the numerical-rank cutoff.
  int nonzero_count(double rel_tol = 1e-12) const;
};

// Dense (BDC) SVD up to n = 4096; blocked subspace iteration on A^T A with
// reorthogonalization above that. The iterative path verifies the per-triplet
// residual ||A v_i - s_i u_i|| <= 1e-8 s_1 and throws NoConvergence if the
// iteration cap is reached first.
SvdResult svd_truncated(const Eigen::MatrixXd& a, int r);

// The large-n iterative path, callable directly for testing.
SvdResult svd_truncated_iterative(const Eigen::MatrixXd& a, int r);

struct Inertia {
  int positive = 0;
  int zero = 0;
  int negative = 0;
};

// Inertia of a symmetric matrix via a Bunch-Kaufman LDL^T factorization with
// 1x1 and 2x2 pivots. Entries of D within +-zero_tol count as zero; a 2x2
// block with negative determinant contributes one positive and one negative
// eigenvalue, otherwise the trace sign decides both.
Inertia ldlt_inertia(Eigen::MatrixXd b, double zero_tol);

// |{i : sigma_i(A) >= gamma}| by Sylvester's law: factor A^T A - gamma^2 I
// and count non-negative diagonal blocks. Equality at the threshold resolves
// as >= through a relative slack of 1e-12 gamma^2. Falls back to direct SVD
// counting if the factorization produces non-finite values.
int count_singvals_above(const Eigen::MatrixXd& a, double gamma);

// 2r-column spectral embedding [s_1 u_1, ..., s_r u_r, s_1 v_1, ..., s_r v_r].
struct Embedding {
  Eigen::MatrixXd x_hat;  // n x 2r
  int r = 0;
};

Embedding embed(const SvdResult& svd, int r);

// Rank-r approximation R = U_r S_r V_r^T and the concatenation
// R0 = [R, R^T], accessed row-wise from the factors without materializing
// the n x 2n matrix.
struct LowRankPair {
  Eigen::MatrixXd u;
  Eigen::VectorXd s;
  Eigen::MatrixXd v;
  int r = 0;

  Eigen::VectorXd row0(int x) const;  // (R_{x,.}, R^T_{x,.}) of length 2n
  Eigen::MatrixXd dense() const;      // R itself, for small-n tests
};

LowRankPair lowrank_rows(const SvdResult& svd, int r);

}  // namespace bmckit
