#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/SVD>
#include <cmath>

#include "bmckit/counts.hpp"
#include "bmckit/linalg.hpp"
#include "bmckit/rng.hpp"

using namespace bmckit;

namespace {

Eigen::MatrixXd random_matrix(int n, Rng& rng, double scale = 1.0) {
  Eigen::MatrixXd a(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) a(i, j) = scale * rng.normal();
  }
  return a;
}

int svd_count_oracle(const Eigen::MatrixXd& a, double gamma) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
  int count = 0;
  for (int i = 0; i < svd.singularValues().size(); ++i) {
    if (svd.singularValues()(i) >= gamma * (1.0 - 1e-12)) ++count;
  }
  return count;
}

// Expected count matrix N = ell C~ diag(pi) p C~^T of an instance.
Eigen::MatrixXd expected_counts(const BmcInstance& inst, double ell) {
  Eigen::MatrixXd n_mat(inst.n, inst.n);
  for (int x = 0; x < inst.n; ++x) {
    for (int y = 0; y < inst.n; ++y) {
      n_mat(x, y) = ell * inst.stationary_mass(x) *
                    inst.params.p(inst.sigma[x], inst.sigma[y]) /
                    inst.cluster_sizes[inst.sigma[y]];
    }
  }
  return n_mat;
}

}  // namespace

TEST_CASE("svd_truncated on simple matrices") {
  Eigen::MatrixXd d = Eigen::Vector3d(3, 2, 1).asDiagonal();
  auto svd = svd_truncated(d, 2);
  CHECK(svd.s(0) == doctest::Approx(3.0));
  CHECK(svd.s(1) == doctest::Approx(2.0));
  CHECK((svd.u.transpose() * svd.u - Eigen::MatrixXd::Identity(2, 2))
            .cwiseAbs()
            .maxCoeff() < 1e-8);

  Eigen::VectorXd a(4), b(4);
  a << 1, 2, 3, 4;
  b << 4, 3, 2, 1;
  Eigen::MatrixXd rank1 = a * b.transpose();
  auto s1 = svd_truncated(rank1, 3);
  CHECK(s1.s(0) == doctest::Approx(a.norm() * b.norm()));
  CHECK(s1.s(1) < 1e-10 * s1.s(0));
}

TEST_CASE("expected count matrix of the dot-product example has rank 2") {
  auto inst = build_instance(dot_product_example_params(1.0, 1.0), 60);
  Eigen::MatrixXd n_mat = expected_counts(inst, 5000.0);
  auto svd = svd_truncated(n_mat, 4);
  CHECK(svd.s(0) > 1.0);
  CHECK(svd.s(1) > 1.0);
  CHECK(svd.s(2) < 1e-9 * svd.s(0));
  CHECK(svd.s(3) < 1e-9 * svd.s(0));
}

TEST_CASE("iterative SVD path agrees with the dense one") {
  Rng rng(21);
  Eigen::MatrixXd a = random_matrix(300, rng);
  // plant well-separated top values above the noise edge (~2 sqrt(n))
  for (int i = 0; i < 4; ++i) {
    Eigen::VectorXd u(300), v(300);
    for (int j = 0; j < 300; ++j) {
      u(j) = rng.normal();
      v(j) = rng.normal();
    }
    a += (500.0 - 100.0 * i) * u.normalized() * v.normalized().transpose();
  }
  auto dense = svd_truncated(a, 4);
  auto iter = svd_truncated_iterative(a, 4);
  for (int i = 0; i < 4; ++i) {
    CHECK(iter.s(i) == doctest::Approx(dense.s(i)).epsilon(1e-7));
    double resid = (a.transpose() * iter.u.col(i) - iter.s(i) * iter.v.col(i)).norm();
    CHECK(resid <= 1e-8 * iter.s(0));
  }
}

TEST_CASE("ldlt inertia equals eigenvalue signs on random symmetric matrices") {
  Rng rng(17);
  for (int rep = 0; rep < 25; ++rep) {
    int n = 20 + static_cast<int>(rng.uniform_int(20));
    Eigen::MatrixXd m = random_matrix(n, rng);
    Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
    Inertia inertia = ldlt_inertia(sym, 1e-12);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
    int pos = 0, neg = 0;
    for (int i = 0; i < n; ++i) {
      if (es.eigenvalues()(i) > 0) ++pos;
      if (es.eigenvalues()(i) < 0) ++neg;
    }
    CHECK(inertia.positive == pos);
    CHECK(inertia.negative == neg);
    CHECK(inertia.zero == n - pos - neg);
  }
}

TEST_CASE("count_singvals_above on fixed matrices") {
  Eigen::MatrixXd d = Eigen::Vector3d(5, 3, 1).asDiagonal();
  CHECK(count_singvals_above(d, 2.0) == 2);
  CHECK(count_singvals_above(d, 6.0) == 0);
  CHECK(count_singvals_above(d, 5.0) == 1);  // exact tie counts as >=
  CHECK(count_singvals_above(d, 1.0) == 3);
  CHECK(count_singvals_above(d, 0.5) == 3);
}

TEST_CASE("count_singvals_above matches the SVD oracle on random matrices") {
  Rng rng(8);
  for (int rep = 0; rep < 30; ++rep) {
    Eigen::MatrixXd a = random_matrix(30, rng, 2.0);
    for (int g = 0; g < 3; ++g) {
      double gamma = 0.5 + 10.0 * rng.uniform();
      CHECK(count_singvals_above(a, gamma) == svd_count_oracle(a, gamma));
    }
  }
}

TEST_CASE("count_singvals_above is monotone in gamma and scale invariant") {
  Rng rng(33);
  Eigen::MatrixXd a = random_matrix(25, rng, 3.0);
  int prev = 25;
  for (double gamma = 0.5; gamma < 40.0; gamma *= 1.7) {
    int count = count_singvals_above(a, gamma);
    CHECK(count <= prev);
    prev = count;
    for (double c : {0.5, 3.0, 11.0}) {
      CHECK(count_singvals_above(c * a, c * gamma) == count);
    }
  }
}

TEST_CASE("embedding columns are scaled singular vectors") {
  SvdResult svd;
  svd.u = Eigen::MatrixXd::Zero(3, 1);
  svd.u(0, 0) = 1.0;
  svd.v = Eigen::MatrixXd::Zero(3, 1);
  svd.v(1, 0) = 1.0;
  svd.s = Eigen::VectorXd::Constant(1, 2.0);
  auto emb = embed(svd, 1);
  CHECK(emb.x_hat(0, 0) == 2.0);
  CHECK(emb.x_hat(1, 1) == 2.0);
  CHECK(emb.x_hat.cwiseAbs().sum() == 4.0);

  // doubling s(0) doubles columns 0 and r
  svd.s(0) = 4.0;
  auto emb2 = embed(svd, 1);
  CHECK((emb2.x_hat - 2.0 * emb.x_hat).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("low-rank pair reproduces the matrix at full rank") {
  Eigen::MatrixXd d = Eigen::Vector3d(3, 2, 1).asDiagonal();
  auto svd = svd_truncated(d, 3);
  auto pair = lowrank_rows(svd, 3);
  CHECK((pair.dense() - d).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("Frobenius error of the truncation equals the singular tail") {
  Rng rng(44);
  Eigen::MatrixXd a = random_matrix(20, rng);
  auto svd = svd_truncated(a, 20);
  for (int r : {1, 3, 7}) {
    auto pair = lowrank_rows(svd, r);
    double err = (pair.dense() - a).squaredNorm();
    double tail = svd.s.tail(20 - r).squaredNorm();
    CHECK(err == doctest::Approx(tail).epsilon(1e-8));
  }
}

TEST_CASE("row distances of R0 equal embedding row distances") {
  Rng rng(55);
  for (int r : {1, 2, 5}) {
    BmcParams params;
    params.k = 3;
    params.p.resize(3, 3);
    params.p << 0.6, 0.3, 0.1, 0.2, 0.5, 0.3, 0.3, 0.3, 0.4;
    params.alpha = Eigen::VectorXd::Constant(3, 1.0 / 3);
    auto inst = build_instance(params, 50);
    auto traj = simulate(inst, 2500, 100 + static_cast<uint64_t>(r));
    auto trimmed = trim(build_counts(traj));
    auto svd = svd_truncated(trimmed.dense(), r);
    auto emb = embed(svd, r);
    auto pair = lowrank_rows(svd, r);
    for (int trial = 0; trial < 40; ++trial) {
      int x = static_cast<int>(rng.uniform_int(50));
      int y = static_cast<int>(rng.uniform_int(50));
      double d_pair = (pair.row0(x) - pair.row0(y)).norm();
      double d_emb = (emb.x_hat.row(x) - emb.x_hat.row(y)).norm();
      CHECK(std::abs(d_pair - d_emb) <= 1e-8 * svd.s(0));
    }
  }
}
