#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <utility>
#include <variant>
#include <vector>

#include "nmetro/kernel.hpp"
#include "nmetro/random.hpp"

namespace nmetro {

/// Drift scale mu(t). A table holds its last value past the end.
class DriftSchedule {
 public:
  DriftSchedule() = default;
  static DriftSchedule constant(double value);
  static DriftSchedule table(std::vector<double> values);

  double at(long t) const {
    return t < static_cast<long>(values_.size()) ? values_[t] : values_.back();
  }
  bool is_constant() const { return values_.size() == 1; }
  const std::vector<double>& values() const { return values_; }

 private:
  std::vector<double> values_{1.0};
};

/// Discrete-time Ornstein-Uhlenbeck evidence accumulator
///   X(t+1) = X(t) - lambda X(t) + (v_i - v_j) mu(t) + sigma eps(t)
/// stopped when |X| first reaches beta.
struct OUParams {
  std::vector<double> values;
  double lambda = 0.0;
  DriftSchedule drift;
  double sigma = 1.0;
  double beta = 1.0;
  long max_steps = 1'000'000;

  void validate() const;
};

struct BBCSampleOutcome {
  std::size_t choice = 0;
  long response_time = 1;
  bool censored = false;
};

BBCSampleOutcome simulate_ou_trial(const OUParams& p, std::size_t proposal,
                                   std::size_t incumbent, RandomStream& rng);

/// Response-time law for one ordered pair of a tabular model, on {1, 2, ...}.
class ResponseTimeDist {
 public:
  static ResponseTimeDist constant(long steps);
  /// Geometric on {1, 2, ...} with the given mean (>= 1).
  static ResponseTimeDist geometric(double mean);
  static ResponseTimeDist table(std::vector<std::pair<long, double>> pmf);

  double mean() const;
  double variance() const;
  long sample(RandomStream& rng) const;

  struct Constant {
    long steps;
  };
  struct Geometric {
    double mean;
  };
  struct Table {
    std::vector<std::pair<long, double>> pmf;
  };
  const std::variant<Constant, Geometric, Table>& variant() const {
    return law_;
  }

 private:
  explicit ResponseTimeDist(std::variant<Constant, Geometric, Table> law)
      : law_(std::move(law)) {}
  std::variant<Constant, Geometric, Table> law_;
};

/// Test device: choices drawn straight from a kernel, response times from a
/// per-pair law independent of the choice.
struct TabularBBC {
  ChoiceKernel kernel;
  std::vector<ResponseTimeDist> rt;  ///< row-major n*n, entry (i, j) at i*n+j

  /// Same law for every ordered pair.
  TabularBBC(ChoiceKernel k, const ResponseTimeDist& common);
  TabularBBC(ChoiceKernel k, std::vector<ResponseTimeDist> per_pair);

  const ResponseTimeDist& rt_law(std::size_t i, std::size_t j) const {
    return rt[i * kernel.size() + j];
  }
  Eigen::MatrixXd rt_mean() const;
};

class BBCModel {
 public:
  BBCModel(OUParams ou);
  BBCModel(TabularBBC tabular);

  std::size_t size() const;
  bool is_tabular() const { return std::holds_alternative<TabularBBC>(model_); }
  const std::variant<OUParams, TabularBBC>& variant() const { return model_; }

  /// Exact kernel and mean response times, available for tabular models.
  std::optional<ChoiceKernel> exact_kernel() const;
  std::optional<Eigen::MatrixXd> exact_rt_mean() const;

 private:
  std::variant<OUParams, TabularBBC> model_;
};

BBCSampleOutcome sample_bbc(const BBCModel& model, std::size_t proposal,
                            std::size_t incumbent, RandomStream& rng);

struct KernelEstimate {
  ChoiceKernel kernel;
  Eigen::MatrixXd rt_mean;  ///< over uncensored trials, zero diagonal
  Eigen::MatrixXd rt_var;
  Eigen::MatrixXd std_error;  ///< binomial standard error of each frequency
  Eigen::MatrixXd censored_frac;
  long trials_per_pair = 0;
};

inline constexpr std::uint64_t kDefaultSeed = 20210521;

/// Runs `trials_per_pair` trials on every ordered pair. Trial t of pair (i,j)
/// uses its own stream, so the result does not depend on `workers`.
KernelEstimate estimate_kernel(const BBCModel& model, long trials_per_pair,
                               std::uint64_t seed = kDefaultSeed,
                               unsigned workers = 0);

Eigen::MatrixXd mean_rt_matrix(const KernelEstimate& est);

}  // namespace nmetro
