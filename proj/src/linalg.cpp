#include "bmckit/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>

#include "bmckit/rng.hpp"

namespace bmckit {

namespace {

constexpr int kDenseSvdLimit = 4096;
constexpr int kInertiaDenseLimit = 4096;

SvdResult svd_dense(const Eigen::MatrixXd& a, int r) {
  Eigen::BDCSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  SvdResult out;
  out.u = svd.matrixU().leftCols(r);
  out.s = svd.singularValues().head(r);
  out.v = svd.matrixV().leftCols(r);
  return out;
}

// Gram-Schmidt with a second pass; columns are orthonormalized in place.
void orthonormalize(Eigen::MatrixXd& q) {
  for (int pass = 0; pass < 2; ++pass) {
    for (int j = 0; j < q.cols(); ++j) {
      for (int i = 0; i < j; ++i) {
        q.col(j) -= q.col(i).dot(q.col(j)) * q.col(i);
      }
      double norm = q.col(j).norm();
      if (norm > 0.0) q.col(j) /= norm;
    }
  }
}

// Blocked subspace iteration on A^T A with reorthogonalization; used above
// the dense cutoff. The block carries a few extra columns for convergence.
SvdResult svd_subspace(const Eigen::MatrixXd& a, int r) {
  const int n = static_cast<int>(a.rows());
  const int block = std::min(n, r + 8);
  Rng rng(0x5bd1e995u);  // fixed seed: results are a pure function of a, r
  Eigen::MatrixXd q(n, block);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < block; ++j) q(i, j) = rng.normal();
  }
  orthonormalize(q);

  const int max_iter = 300;
  for (int iter = 0; iter < max_iter; ++iter) {
    Eigen::MatrixXd z = a * q;
    q = a.transpose() * z;
    orthonormalize(q);

    // Rayleigh-Ritz on the current subspace.
    Eigen::MatrixXd aq = a * q;
    Eigen::BDCSVD<Eigen::MatrixXd> small(aq, Eigen::ComputeThinU | Eigen::ComputeThinV);
    Eigen::MatrixXd u = small.matrixU().leftCols(r);
    Eigen::VectorXd s = small.singularValues().head(r);
    Eigen::MatrixXd v = q * small.matrixV().leftCols(r);

    double scale = std::max(small.singularValues()(0), 1e-300);
    bool converged = true;
    for (int i = 0; i < r; ++i) {
      // ||A v - s u|| vanishes by construction of the Rayleigh-Ritz triplet;
      // the transposed residual is the one that detects non-convergence.
      double resid = (a.transpose() * u.col(i) - s(i) * v.col(i)).norm() +
                     (a * v.col(i) - s(i) * u.col(i)).norm();
      if (resid > 1e-8 * scale) {
        converged = false;
        break;
      }
    }
    if (converged) {
      SvdResult out;
      out.u = std::move(u);
      out.s = std::move(s);
      out.v = std::move(v);
      return out;
    }
  }
  throw Error(ErrorKind::NoConvergence, "subspace iteration did not converge");
}

}  // namespace

int SvdResult::nonzero_count(double rel_tol) const {
  if (s.size() == 0) return 0;
  const double cutoff = rel_tol * std::max(s(0), 0.0);
  int count = 0;
  for (int i = 0; i < s.size(); ++i) {
    if (s(i) > cutoff && s(i) > 0.0) ++count;
  }
  return count;
}

SvdResult svd_truncated(const Eigen::MatrixXd& a, int r) {
  const int n = static_cast<int>(a.rows());
  if (r < 1 || r > n) throw Error(ErrorKind::Config, "need 1 <= r <= n");
  if (n <= kDenseSvdLimit) return svd_dense(a, r);
  return svd_subspace(a, r);
}

SvdResult svd_truncated_iterative(const Eigen::MatrixXd& a, int r) {
  const int n = static_cast<int>(a.rows());
  if (r < 1 || r > n) throw Error(ErrorKind::Config, "need 1 <= r <= n");
  return svd_subspace(a, r);
}

Inertia ldlt_inertia(Eigen::MatrixXd b, double zero_tol) {
  const Eigen::Index n = b.rows();
  const double alpha = (1.0 + std::sqrt(17.0)) / 8.0;
  Inertia inertia;

  auto classify1 = [&](double d) {
    if (d > zero_tol) {
      ++inertia.positive;
    } else if (d < -zero_tol) {
      ++inertia.negative;
    } else {
      ++inertia.zero;
    }
  };

  auto swap_sym = [&](Eigen::Index i, Eigen::Index j) {
    if (i == j) return;
    b.row(i).swap(b.row(j));
    b.col(i).swap(b.col(j));
  };

  Eigen::Index k = 0;
  while (k < n) {
    const Eigen::Index m = n - k;
    if (m == 1) {
      classify1(b(k, k));
      break;
    }

    // Largest off-diagonal magnitude in the pivot column.
    Eigen::Index r_idx = k;
    double lambda = 0.0;
    for (Eigen::Index i = k + 1; i < n; ++i) {
      double v = std::abs(b(i, k));
      if (v > lambda) {
        lambda = v;
        r_idx = i;
      }
    }

    bool two_by_two = false;
    if (std::abs(b(k, k)) >= alpha * lambda || lambda == 0.0) {
      // keep the 1x1 pivot at k
    } else {
      double sigma_r = 0.0;
      for (Eigen::Index i = k; i < n; ++i) {
        if (i == r_idx) continue;
        sigma_r = std::max(sigma_r, std::abs(b(i, r_idx)));
      }
      if (std::abs(b(k, k)) * sigma_r >= alpha * lambda * lambda) {
        // keep the 1x1 pivot at k
      } else if (std::abs(b(r_idx, r_idx)) >= alpha * sigma_r) {
        swap_sym(k, r_idx);
      } else {
        swap_sym(k + 1, r_idx);
        two_by_two = true;
      }
    }

    if (!two_by_two) {
      const double d = b(k, k);
      classify1(d);
      if (d != 0.0 && m > 1) {
        Eigen::VectorXd w = b.col(k).segment(k + 1, m - 1);
        b.bottomRightCorner(m - 1, m - 1).noalias() -= (1.0 / d) * w * w.transpose();
      }
      // d == 0 only when the whole remaining column vanished; nothing to
      // eliminate in that case.
      ++k;
    } else {
      const double e00 = b(k, k);
      const double e01 = b(k + 1, k);
      const double e11 = b(k + 1, k + 1);
      const double det = e00 * e11 - e01 * e01;
      const double tr = e00 + e11;
      // det < 0: one positive, one negative; otherwise the trace sign decides
      // both. Equivalent bookkeeping via the closed-form eigenvalue pair.
      const double disc = std::sqrt(std::max((e00 - e11) * (e00 - e11) + 4.0 * e01 * e01, 0.0));
      classify1(0.5 * (tr + disc));
      classify1(0.5 * (tr - disc));
      if (m > 2 && det != 0.0) {
        Eigen::MatrixXd w = b.block(k + 2, k, m - 2, 2);
        Eigen::Matrix2d einv;
        einv << e11, -e01, -e01, e00;
        einv /= det;
        Eigen::MatrixXd z = w * einv;
        b.bottomRightCorner(m - 2, m - 2).noalias() -= z * w.transpose();
      }
      k += 2;
    }
  }

  if (inertia.positive + inertia.zero + inertia.negative != n || !b.allFinite()) {
    throw Error(ErrorKind::FactorizationBreakdown, "LDL^T produced non-finite values");
  }
  return inertia;
}

namespace {

int count_by_svd(const Eigen::MatrixXd& a, double gamma) {
  Eigen::BDCSVD<Eigen::MatrixXd> svd(a);
  const auto& s = svd.singularValues();
  const double cutoff = gamma * (1.0 - 1e-12);
  int count = 0;
  for (int i = 0; i < s.size(); ++i) {
    if (s(i) >= cutoff) ++count;
  }
  return count;
}

int count_iterative(const Eigen::MatrixXd& a, double gamma) {
  const int n = static_cast<int>(a.rows());
  int r = 8;
  for (;;) {
    SvdResult svd = svd_truncated(a, std::min(r, n));
    const double cutoff = gamma * (1.0 - 1e-12);
    int count = 0;
    for (int i = 0; i < svd.s.size(); ++i) {
      if (svd.s(i) >= cutoff) ++count;
    }
    if (count < svd.s.size() || r >= n) return count;
    r *= 2;  // every computed value cleared the threshold; look deeper
  }
}

}  // namespace

int count_singvals_above(const Eigen::MatrixXd& a, double gamma) {
  if (!(gamma > 0.0)) throw Error(ErrorKind::Config, "gamma must be positive");
  const Eigen::Index n = a.rows();
  if (n > kInertiaDenseLimit) return count_iterative(a, gamma);

  const double g2 = gamma * gamma;
  Eigen::MatrixXd b = a.transpose() * a;
  b.diagonal().array() -= g2;
  try {
    Inertia inertia = ldlt_inertia(std::move(b), 1e-12 * g2);
    return inertia.positive + inertia.zero;  // ">=" keeps exact ties
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::FactorizationBreakdown) throw;
    return count_by_svd(a, gamma);
  }
}

Embedding embed(const SvdResult& svd, int r) {
  if (r < 1 || r > svd.r()) throw Error(ErrorKind::Config, "embed: bad r");
  const Eigen::Index n = svd.u.rows();
  Embedding out;
  out.r = r;
  out.x_hat.resize(n, 2 * r);
  for (int j = 0; j < r; ++j) {
    out.x_hat.col(j) = svd.s(j) * svd.u.col(j);
    out.x_hat.col(r + j) = svd.s(j) * svd.v.col(j);
  }
  return out;
}

LowRankPair lowrank_rows(const SvdResult& svd, int r) {
  if (r < 1 || r > svd.r()) throw Error(ErrorKind::Config, "lowrank_rows: bad r");
  LowRankPair out;
  out.u = svd.u.leftCols(r);
  out.s = svd.s.head(r);
  out.v = svd.v.leftCols(r);
  out.r = r;
  return out;
}

Eigen::VectorXd LowRankPair::row0(int x) const {
  const Eigen::Index n = u.rows();
  Eigen::VectorXd out(2 * n);
  // R_{x,.} = (u_x .* s) V^T and (R^T)_{x,.} = (v_x .* s) U^T
  Eigen::VectorXd su = u.row(x).transpose().cwiseProduct(s);
  Eigen::VectorXd sv = v.row(x).transpose().cwiseProduct(s);
  out.head(n) = v * su;
  out.tail(n) = u * sv;
  return out;
}

Eigen::MatrixXd LowRankPair::dense() const {
  return u * s.asDiagonal() * v.transpose();
}

}  // namespace bmckit
