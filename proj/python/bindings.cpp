#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "nmetro/bbc.hpp"
#include "nmetro/chain.hpp"
#include "nmetro/kernel.hpp"
#include "nmetro/simulation.hpp"
#include "nmetro/stopping.hpp"

namespace py = pybind11;
using namespace nmetro;

namespace {

ChoiceKernel kernel_arg(const Eigen::MatrixXd& rho) { return validate_kernel(rho); }

ExplorationMatrix exploration_arg(const Eigen::MatrixXd& q) {
  return ExplorationMatrix::from_grid(q);
}

BBCModel tabular_model(const Eigen::MatrixXd& rho, const Eigen::MatrixXd& rt_mean,
                       bool geometric) {
  const auto k = kernel_arg(rho);
  const auto n = k.size();
  std::vector<ResponseTimeDist> laws;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double m = i == j ? 1.0 : rt_mean(i, j);
      laws.push_back(geometric ? ResponseTimeDist::geometric(m)
                               : ResponseTimeDist::constant(static_cast<long>(m)));
    }
  }
  return BBCModel(TabularBBC(k, std::move(laws)));
}

}  // namespace

PYBIND11_MODULE(_nmetro, m) {
  m.doc() = "Metropolis multialternative choice: kernels, chains, stopping times";

  // Messages start with the error code name, e.g. "NotTransitive: ...".
  py::register_exception<Error>(m, "NmetroError", PyExc_ValueError);

  m.attr("DEFAULT_SEED") = kDefaultSeed;

  m.def("validate_kernel", [](const Eigen::MatrixXd& rho) { return validate_kernel(rho).grid(); },
        py::arg("rho"));
  m.def("is_positive", [](const Eigen::MatrixXd& rho) { return is_positive(kernel_arg(rho)); });
  m.def("is_unbiased",
        [](const Eigen::MatrixXd& rho, double tol) { return is_unbiased(kernel_arg(rho), tol); },
        py::arg("rho"), py::arg("tol") = kDefaultTolerance);
  m.def(
      "check_transitivity",
      [](const Eigen::MatrixXd& rho, double tol) {
        const auto r = check_transitivity(kernel_arg(rho), tol);
        py::dict d;
        d["max_cycle_discrepancy"] = r.max_cycle_discrepancy;
        d["worst_triple"] = r.worst_triple;
        d["is_transitive"] = r.is_transitive;
        return d;
      },
      py::arg("rho"), py::arg("tol") = kDefaultTolerance);
  m.def(
      "hastings_decompose",
      [](const Eigen::MatrixXd& rho, double tol, std::size_t reference) {
        const auto d = hastings_decompose(kernel_arg(rho), tol, reference);
        return py::make_tuple(d.pi, d.s.to_matrix(), d.unbiased);
      },
      py::arg("rho"), py::arg("tol") = kDefaultTolerance, py::arg("reference") = 0);
  m.def(
      "luce_kernel",
      [](const Eigen::VectorXd& pi, std::optional<Eigen::MatrixXd> s) {
        std::optional<SymmetricPairGrid> grid;
        if (s) grid = SymmetricPairGrid::from_matrix(*s);
        return luce_kernel(pi, grid).grid();
      },
      py::arg("pi"), py::arg("s") = py::none());

  m.def("build_transition", [](const Eigen::MatrixXd& q, const Eigen::MatrixXd& rho) {
    return build_transition(exploration_arg(q), kernel_arg(rho)).grid();
  });
  m.def("stationary_distribution", [](const Eigen::MatrixXd& mm) {
    return stationary_distribution(TransitionMatrix::from_grid(mm));
  });
  m.def("detailed_balance_residual", [](const Eigen::MatrixXd& mm, const Eigen::VectorXd& pi) {
    return detailed_balance_residual(TransitionMatrix::from_grid(mm), pi).residual;
  });
  m.def("kolmogorov_residual", [](const Eigen::MatrixXd& mm) {
    return kolmogorov_residual(TransitionMatrix::from_grid(mm)).residual;
  });
  m.def("spectral_decompose", [](const Eigen::MatrixXd& mm, const Eigen::VectorXd& pi) {
    const auto sd = spectral_decompose(TransitionMatrix::from_grid(mm), pi);
    return py::make_tuple(sd.eigenvalues, sd.eigenvectors, sd.reconstruction_error);
  });

  m.def("choice_probabilities", [](const Eigen::MatrixXd& mm, const Eigen::VectorXd& mu,
                                   const std::string& stopping) {
    return choice_probabilities(TransitionMatrix::from_grid(mm), mu, StoppingTime::parse(stopping));
  });
  m.def("mean_decision_time",
        [](const Eigen::MatrixXd& mm, const Eigen::VectorXd& mu, const Eigen::VectorXd& tau,
           const std::string& stopping) {
          return mean_decision_time(TransitionMatrix::from_grid(mm), mu, tau,
                                    StoppingTime::parse(stopping));
        });
  m.def("conditional_iteration_time", [](const Eigen::MatrixXd& q, const Eigen::MatrixXd& rt) {
    return conditional_iteration_time(exploration_arg(q), rt);
  });
  m.def("time_weighted_stationary",
        [](const Eigen::VectorXd& pi, const Eigen::MatrixXd& q, const Eigen::MatrixXd& rt) {
          return time_weighted_stationary(pi, exploration_arg(q), rt);
        });

  m.def(
      "estimate_ou_kernel",
      [](std::vector<double> values, double lambda, double drift, double sigma, double beta,
         long trials, std::uint64_t seed, unsigned workers) {
        OUParams p;
        p.values = std::move(values);
        p.lambda = lambda;
        p.drift = DriftSchedule::constant(drift);
        p.sigma = sigma;
        p.beta = beta;
        py::gil_scoped_release release;
        const auto est = estimate_kernel(BBCModel(p), trials, seed, workers);
        py::gil_scoped_acquire acquire;
        py::dict d;
        d["rho"] = est.kernel.grid();
        d["rt_mean"] = est.rt_mean;
        d["rt_var"] = est.rt_var;
        d["stderr"] = est.std_error;
        d["censored_frac"] = est.censored_frac;
        return d;
      },
      py::arg("values"), py::arg("lambda_") = 0.0, py::arg("drift") = 1.0, py::arg("sigma") = 1.0,
      py::arg("beta") = 1.0, py::arg("trials") = 100000, py::arg("seed") = kDefaultSeed,
      py::arg("workers") = 0);

  m.def(
      "simulate_choice",
      [](const Eigen::MatrixXd& rho, const Eigen::MatrixXd& q, const Eigen::VectorXd& mu,
         const Eigen::MatrixXd& rt_mean, const std::string& stopping, long trials,
         std::uint64_t seed, bool geometric_rt) {
        const ProcessSpec spec{mu, exploration_arg(q), tabular_model(rho, rt_mean, geometric_rt)};
        const auto est =
            estimate_choice_distribution(spec, StoppingTime::parse(stopping), trials, seed);
        return py::make_tuple(est.frequencies, est.mean_time);
      },
      py::arg("rho"), py::arg("q"), py::arg("mu"), py::arg("rt_mean"), py::arg("stopping"),
      py::arg("trials") = 100000, py::arg("seed") = kDefaultSeed, py::arg("geometric_rt") = false);

  m.def(
      "conjecture",
      [](const Eigen::MatrixXd& rho, const Eigen::MatrixXd& q, const Eigen::VectorXd& mu,
         const Eigen::MatrixXd& rt_mean, std::vector<double> deadlines, long trials,
         std::uint64_t seed, bool geometric_rt) {
        const ProcessSpec spec{mu, exploration_arg(q), tabular_model(rho, rt_mean, geometric_rt)};
        const auto r = conjecture_experiment(spec, deadlines, trials, seed);
        py::dict d;
        d["tv"] = r.tv_distance;
        d["stderr"] = r.tv_stderr;
        d["pi"] = r.pi;
        d["pi_star"] = r.pi_star;
        return d;
      },
      py::arg("rho"), py::arg("q"), py::arg("mu"), py::arg("rt_mean"), py::arg("deadlines"),
      py::arg("trials") = 100000, py::arg("seed") = kDefaultSeed, py::arg("geometric_rt") = false);
}
