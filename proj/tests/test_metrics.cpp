#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "bmckit/metrics.hpp"
#include "bmckit/rng.hpp"

using namespace bmckit;

namespace {

Partition part(std::vector<int32_t> labels, int k = -1) {
  return Partition::from_labels(std::move(labels), k);
}

std::vector<int32_t> shuffled(const std::vector<int32_t>& labels, Rng& rng) {
  std::vector<int32_t> out = labels;
  for (size_t i = out.size(); i > 1; --i) {
    size_t j = rng.uniform_int(i);
    std::swap(out[i - 1], out[j]);
  }
  return out;
}

}  // namespace

TEST_CASE("relative accuracy is the signed relative error") {
  CHECK(relative_accuracy(3, 3) == 0.0);
  CHECK(relative_accuracy(9, 10) == doctest::Approx(-0.1));
  CHECK(relative_accuracy(6, 3) == doctest::Approx(1.0));
}

TEST_CASE("entropy of a partition") {
  CHECK(entropy(part({0, 0, 0, 0}, 2)) == 0.0);
  CHECK(normalized_entropy(part({0, 0, 1, 1, 2, 2})) == doctest::Approx(1.0));
  double h = entropy(part({0, 0, 0, 1}));
  CHECK(h == doctest::Approx(-(0.75 * std::log(0.75) + 0.25 * std::log(0.25)))
                 .epsilon(1e-12));
  CHECK_THROWS_AS(normalized_entropy(part({0, 0, 0}, 1)), Error);

  // invariant under label permutation
  CHECK(entropy(part({1, 1, 1, 0})) == doctest::Approx(h).epsilon(1e-15));
}

TEST_CASE("mutual information on the documented cases") {
  auto a = part({0, 0, 1, 1});
  CHECK(mutual_information(a, a) == doctest::Approx(std::log(2.0)));
  CHECK(mutual_information(a, part({0, 0, 0, 0}, 1)) == 0.0);
  // crossing blocks of size 2: every intersection has size 1, each term 0
  CHECK(mutual_information(a, part({0, 1, 0, 1})) == doctest::Approx(0.0));
}

TEST_CASE("AMI is 1 on identical partitions and 0 when degenerate") {
  auto a = part({0, 0, 1, 1, 2, 2, 0, 1, 2, 0});
  auto self = ami(a, a);
  CHECK_FALSE(self.degenerate);
  CHECK(self.value == doctest::Approx(1.0).epsilon(1e-9));

  auto single = part({0, 0, 0, 0, 0, 0, 0, 0, 0, 0}, 1);
  auto degenerate = ami(a, single);
  CHECK(degenerate.degenerate);
  CHECK(degenerate.value == 0.0);
}

TEST_CASE("AMI is symmetric") {
  Rng rng(6);
  std::vector<int32_t> la(30), lb(30);
  for (auto& l : la) l = static_cast<int32_t>(rng.uniform_int(3));
  for (auto& l : lb) l = static_cast<int32_t>(rng.uniform_int(4));
  auto a = part(la), b = part(lb);
  CHECK(ami(a, b).value == doctest::Approx(ami(b, a).value).epsilon(1e-10));
}

TEST_CASE("expected MI closed form matches a shuffle Monte Carlo") {
  Rng rng(12);
  std::vector<int32_t> la = {0, 0, 0, 0, 1, 1, 1, 2, 2, 2, 2, 2};
  std::vector<int32_t> lb = {0, 0, 1, 1, 1, 0, 2, 2, 2, 1, 0, 1};
  auto a = part(la), b = part(lb);
  double closed = expected_mutual_information(a, b);

  const int shuffles = 20000;
  double total = 0.0, total_sq = 0.0;
  for (int s = 0; s < shuffles; ++s) {
    double mi = mutual_information(a, part(shuffled(lb, rng), b.k));
    total += mi;
    total_sq += mi * mi;
  }
  double mean = total / shuffles;
  double se = std::sqrt((total_sq / shuffles - mean * mean) / shuffles);
  CHECK(std::abs(mean - closed) <= 4.0 * se + 1e-12);
}

TEST_CASE("AMI against shuffled labels hovers near zero") {
  Rng rng(19);
  std::vector<int32_t> labels(60);
  for (size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<int32_t>(i % 3);
  auto truth = part(labels);
  double total = 0.0;
  const int reps = 100;
  for (int s = 0; s < reps; ++s) {
    total += ami(truth, part(shuffled(labels, rng), 3)).value;
  }
  CHECK(std::abs(total / reps) < 0.05);
}

TEST_CASE("misclassification on the documented cases") {
  auto truth = part({0, 0, 0, 1, 1, 1});
  CHECK(misclassification(truth, truth).misclassified == 0);

  auto swapped = part({1, 1, 1, 0, 0, 0});
  CHECK(misclassification(truth, swapped).misclassified == 0);

  auto est = part({0, 0, 1, 0, 1, 1});  // {0,1,3} vs {2,4,5}
  CHECK(misclassification(truth, est).misclassified == 2);
}

TEST_CASE("misclassification pads unequal cluster counts") {
  auto truth = part({0, 0, 1, 1, 2, 2});
  auto est = part({0, 0, 1, 1, 1, 1});  // K_hat = 2 < K = 3
  auto rep = misclassification(truth, est);
  CHECK(rep.misclassified == 2);
  CHECK(rep.permutation.size() == 3);
}

TEST_CASE("matching equals exhaustive search and ignores relabeling") {
  Rng rng(41);
  for (int rep = 0; rep < 40; ++rep) {
    const int n = 24;
    const int ka = 2 + static_cast<int>(rng.uniform_int(5));
    const int kb = 2 + static_cast<int>(rng.uniform_int(5));
    std::vector<int32_t> la(n), lb(n);
    for (auto& l : la) l = static_cast<int32_t>(rng.uniform_int(ka));
    for (auto& l : lb) l = static_cast<int32_t>(rng.uniform_int(kb));
    auto truth = part(la, ka), est = part(lb, kb);

    // brute force over permutations of the padded parts
    const int m = std::max(ka, kb);
    std::vector<std::vector<int64_t>> overlap(m, std::vector<int64_t>(m, 0));
    for (int x = 0; x < n; ++x) ++overlap[la[x]][lb[x]];
    std::vector<int> perm(m);
    std::iota(perm.begin(), perm.end(), 0);
    int64_t best = -1;
    do {
      int64_t v = 0;
      for (int k = 0; k < m; ++k) v += overlap[k][perm[k]];
      best = std::max(best, v);
    } while (std::next_permutation(perm.begin(), perm.end()));

    CHECK(misclassification(truth, est).misclassified == n - best);

    // relabeling est's ids cannot change the count
    std::vector<int32_t> rot(lb.size());
    for (size_t i = 0; i < lb.size(); ++i) rot[i] = (lb[i] + 1) % kb;
    CHECK(misclassification(truth, part(rot, kb)).misclassified == n - best);
  }
}

TEST_CASE("hungarian path agrees with brute force at nine or more parts") {
  Rng rng(52);
  const int n = 60, k = 9;  // > 8 triggers the matching path
  std::vector<int32_t> la(n), lb(n);
  for (auto& l : la) l = static_cast<int32_t>(rng.uniform_int(k));
  for (auto& l : lb) l = static_cast<int32_t>(rng.uniform_int(k));
  auto truth = part(la, k), est = part(lb, k);

  std::vector<std::vector<int64_t>> overlap(k, std::vector<int64_t>(k, 0));
  for (int x = 0; x < n; ++x) ++overlap[la[x]][lb[x]];
  std::vector<int> perm(k);
  std::iota(perm.begin(), perm.end(), 0);
  int64_t best = -1;
  do {
    int64_t v = 0;
    for (int t = 0; t < k; ++t) v += overlap[t][perm[t]];
    best = std::max(best, v);
  } while (std::next_permutation(perm.begin(), perm.end()));

  CHECK(misclassification(truth, est).misclassified == n - best);
}

TEST_CASE("comparison report bundles the pieces") {
  auto truth = part({0, 0, 1, 1});
  auto est = part({1, 1, 0, 0});
  auto report = compare_partitions(truth, est);
  CHECK(report.relative_accuracy == 0.0);
  CHECK(report.misclassified_count == 0);
  CHECK(report.ami_value == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(report.entropy_a == doctest::Approx(std::log(2.0)));
}
