#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "bmckit/estimators.hpp"
#include "bmckit/harness.hpp"
#include "bmckit/metrics.hpp"
#include "bmckit/model.hpp"

namespace py = pybind11;
using namespace bmckit;

namespace {

BmcParams make_params(const Eigen::MatrixXd& p, const Eigen::VectorXd& alpha) {
  BmcParams params;
  params.k = static_cast<int>(p.rows());
  params.p = p;
  params.alpha = alpha;
  return params;
}

Trajectory traj_from_array(py::array_t<uint32_t, py::array::c_style | py::array::forcecast> states,
                           uint32_t n) {
  auto buf = states.unchecked<1>();
  Trajectory traj;
  traj.n = n;
  traj.states.resize(static_cast<size_t>(buf.shape(0)));
  for (py::ssize_t i = 0; i < buf.shape(0); ++i) {
    traj.states[static_cast<size_t>(i)] = buf(i);
  }
  if (traj.states.size() < 2) throw Error(ErrorKind::Config, "trajectory too short");
  traj.ell = traj.states.size() - 1;
  return traj;
}

py::array_t<uint32_t> to_array(const std::vector<uint32_t>& v) {
  py::array_t<uint32_t> out(static_cast<py::ssize_t>(v.size()));
  auto buf = out.mutable_unchecked<1>();
  for (size_t i = 0; i < v.size(); ++i) buf(static_cast<py::ssize_t>(i)) = v[i];
  return out;
}

Partition partition_from(const std::vector<int32_t>& labels) {
  return Partition::from_labels(labels);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Cluster-count estimation for block Markov chain trajectories";

  py::register_exception<Error>(m, "BmckitError");

  m.def("validate_params",
        [](const Eigen::MatrixXd& p, const Eigen::VectorXd& alpha) {
          validate_params(make_params(p, alpha));
        },
        py::arg("p"), py::arg("alpha"));

  m.def("stationary_distribution",
        [](const Eigen::MatrixXd& p) { return stationary_distribution(p); },
        py::arg("p"));

  m.def("information_quantity",
        [](const Eigen::MatrixXd& p, const Eigen::VectorXd& alpha) {
          return information_quantity(make_params(p, alpha));
        },
        py::arg("p"), py::arg("alpha"));

  m.def("mixing_time",
        [](const Eigen::MatrixXd& p, const Eigen::VectorXd& alpha) {
          return mixing_time(make_params(p, alpha));
        },
        py::arg("p"), py::arg("alpha"));

  m.def("dot_product_example", [](double a, double b) {
    BmcParams params = dot_product_example_params(a, b);
    return py::make_tuple(params.p, params.alpha);
  },
  py::arg("a") = 1.0, py::arg("b") = 1.0);

  m.def("sample_ensemble",
        [](const std::string& kind, int k, uint64_t seed, int d, double p0) {
          Rng rng(seed);
          BmcParams params;
          if (kind == "uniform") {
            params = sample_uniform_ensemble(k, rng);
          } else if (kind == "lowrank") {
            params = sample_lowrank_ensemble(k, d, rng);
          } else if (kind == "reversible") {
            params = sample_reversible_ensemble(k, rng);
          } else if (kind == "assortative") {
            params = sample_assortative_ensemble(k, p0, rng);
          } else {
            throw Error(ErrorKind::Config, "unknown ensemble " + kind);
          }
          return py::make_tuple(params.p, params.alpha);
        },
        py::arg("kind"), py::arg("k"), py::arg("seed"), py::arg("d") = 1,
        py::arg("p0") = 0.8);

  m.def("build_instance_sizes",
        [](const Eigen::MatrixXd& p, const Eigen::VectorXd& alpha, int n) {
          return build_instance(make_params(p, alpha), n).cluster_sizes;
        },
        py::arg("p"), py::arg("alpha"), py::arg("n"));

  m.def("simulate",
        [](const Eigen::MatrixXd& p, const Eigen::VectorXd& alpha, int n,
           uint64_t ell, uint64_t seed, double epsilon) {
          BmcInstance inst = build_instance(make_params(p, alpha), n);
          Trajectory traj = epsilon > 0.0
                                ? simulate_perturbed(inst, {epsilon}, ell, seed)
                                : simulate(inst, ell, seed);
          return to_array(traj.states);
        },
        py::arg("p"), py::arg("alpha"), py::arg("n"), py::arg("ell"),
        py::arg("seed"), py::arg("epsilon") = 0.0);

  m.def("estimate",
        [](py::array_t<uint32_t, py::array::c_style | py::array::forcecast> states,
           uint32_t n, double a, double b, double c, py::object r_override) {
          Trajectory traj = traj_from_array(states, n);
          Thresholds th = Thresholds::resolve(a, b, c, n, traj.ell);
          std::optional<int> r;
          if (!r_override.is_none()) r = r_override.cast<int>();
          FullEstimate full = estimate_full(traj, th, r);
          py::dict out;
          out["k_hat"] = full.result.k_hat;
          out["k_spec"] = full.result.diag.k_spec;
          out["embedding_rank"] = full.result.embedding_rank;
          out["centers"] = full.result.centers;
          out["labels"] = full.labeling.labels;
          out["singular_values"] = full.result.diag.singvals;
          return out;
        },
        py::arg("states"), py::arg("n"), py::arg("a") = 0.9, py::arg("b") = 0.1,
        py::arg("c") = 0.75, py::arg("r") = py::none());

  m.def("estimate_k",
        [](py::array_t<uint32_t, py::array::c_style | py::array::forcecast> states,
           uint32_t n, const std::string& estimator, int k_max, double a,
           double b, double c) {
          Trajectory traj = traj_from_array(states, n);
          Thresholds th = Thresholds::resolve(a, b, c, n, traj.ell);
          if (estimator == "alg1") return alg1_spectral_count(traj, th).first;
          if (estimator == "alg2") return estimate_full(traj, th).result.k_hat;
          if (estimator == "megh") return megh_estimate(build_counts(traj));
          if (estimator == "llsc") return llsc_estimate(traj, k_max, th);
          if (estimator == "llci") return llci_estimate(traj, k_max, th);
          if (estimator == "caic") return caic_estimate(traj, k_max, th);
          throw Error(ErrorKind::Config, "unknown estimator " + estimator);
        },
        py::arg("states"), py::arg("n"), py::arg("estimator"),
        py::arg("k_max") = 15, py::arg("a") = 0.9, py::arg("b") = 0.1,
        py::arg("c") = 0.75);

  m.def("megh_estimate",
        [](py::array_t<uint32_t, py::array::c_style | py::array::forcecast> states,
           uint32_t n) {
          return megh_estimate(build_counts(traj_from_array(states, n)));
        },
        py::arg("states"), py::arg("n"));

  m.def("llsc_estimate",
        [](py::array_t<uint32_t, py::array::c_style | py::array::forcecast> states,
           uint32_t n, int k_max, double a, double b, double c) {
          Trajectory traj = traj_from_array(states, n);
          return llsc_estimate(traj, k_max, Thresholds::resolve(a, b, c, n, traj.ell));
        },
        py::arg("states"), py::arg("n"), py::arg("k_max") = 15,
        py::arg("a") = 0.9, py::arg("b") = 0.1, py::arg("c") = 0.75);

  m.def("caic_estimate",
        [](py::array_t<uint32_t, py::array::c_style | py::array::forcecast> states,
           uint32_t n, int k_max, double a, double b, double c) {
          Trajectory traj = traj_from_array(states, n);
          return caic_estimate(traj, k_max, Thresholds::resolve(a, b, c, n, traj.ell));
        },
        py::arg("states"), py::arg("n"), py::arg("k_max") = 15,
        py::arg("a") = 0.9, py::arg("b") = 0.1, py::arg("c") = 0.75);

  m.def("count_singvals_above", &count_singvals_above, py::arg("matrix"),
        py::arg("gamma"));

  m.def("spectral_embedding",
        [](const Eigen::MatrixXd& a, int r) {
          return embed(svd_truncated(a, r), r).x_hat;
        },
        py::arg("matrix"), py::arg("r"));

  m.def("entropy",
        [](const std::vector<int32_t>& labels) { return entropy(partition_from(labels)); },
        py::arg("labels"));

  m.def("normalized_entropy",
        [](const std::vector<int32_t>& labels) {
          return normalized_entropy(partition_from(labels));
        },
        py::arg("labels"));

  m.def("mutual_information",
        [](const std::vector<int32_t>& a, const std::vector<int32_t>& b) {
          return mutual_information(partition_from(a), partition_from(b));
        },
        py::arg("a"), py::arg("b"));

  m.def("ami",
        [](const std::vector<int32_t>& a, const std::vector<int32_t>& b) {
          return ami(partition_from(a), partition_from(b)).value;
        },
        py::arg("a"), py::arg("b"));

  m.def("misclassification",
        [](const std::vector<int32_t>& truth, const std::vector<int32_t>& est) {
          MisclassReport report =
              misclassification(partition_from(truth), partition_from(est));
          return py::make_tuple(report.misclassified, report.permutation);
        },
        py::arg("truth"), py::arg("est"));
}
