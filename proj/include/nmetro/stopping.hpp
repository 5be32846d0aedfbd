#pragma once

#include <Eigen/Dense>

#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "nmetro/chain.hpp"
#include "nmetro/random.hpp"

namespace nmetro {

/// Distribution of the iteration count N, supported on {1, 2, ...}.
class StoppingTime {
 public:
  struct Fixed {
    long iterations;
  };
  struct Geometric {
    double continuation;  ///< Pr[N = m] = (1 - c) c^(m-1)
  };
  /// N - 1 ~ Poisson(lambda); see README for the mean convention.
  struct PoissonShifted {
    double lambda;
  };
  struct Custom {
    std::vector<std::pair<long, double>> pmf;  ///< sorted by m, merged
  };
  using Variant = std::variant<Fixed, Geometric, PoissonShifted, Custom>;

  static StoppingTime fixed(long iterations);
  static StoppingTime geometric(double continuation);
  static StoppingTime poisson_shifted(double lambda);
  static StoppingTime custom(std::vector<std::pair<long, double>> pmf);

  /// "fixed:25", "geometric:0.5", "poisson:3.0". "custom:@file" is resolved
  /// by the io layer.
  static StoppingTime parse(std::string_view spec);

  const Variant& variant() const { return variant_; }
  std::string describe() const;

  double pmf(long m) const;
  /// Pr[N >= n].
  double tail(long n) const;
  double mean() const;

  /// E[N; N > k], which bounds every series remainder past horizon k.
  double truncated_mean_excess(long k) const;
  /// Smallest k with truncated_mean_excess(k) < tol.
  long horizon(double tol) const;

  /// E[x^(N-1)], the scalar version of the choice operator.
  double generating(double x) const;

  long sample(RandomStream& rng) const;

 private:
  explicit StoppingTime(Variant v) : variant_(std::move(v)) {}
  Variant variant_;
};

inline constexpr double kSeriesTolerance = 1e-12;

/// tau_j = sum_i Q(i|j) RT(i,j), the expected duration of one iteration with
/// incumbent j.
Eigen::VectorXd conditional_iteration_time(const ExplorationMatrix& q,
                                           const Eigen::MatrixXd& rt_mean);

struct SeriesResult {
  Eigen::VectorXd p;
  double truncation_tail = 0.0;  ///< Pr[N > horizon]
};

/// sum_m Pr[N=m] M^(m-1) mu by direct summation.
SeriesResult choice_probabilities_series(const TransitionMatrix& m,
                                         const Eigen::VectorXd& mu,
                                         const StoppingTime& st,
                                         double tol = kSeriesTolerance);

/// Choice distribution of the stopped algorithm. Geometric stopping solves
/// (I - zM) x = (1 - z) mu; shifted Poisson applies exp(lambda (M - I)).
Eigen::VectorXd choice_probabilities(const TransitionMatrix& m,
                                     const Eigen::VectorXd& mu,
                                     const StoppingTime& st);

/// Mean decision time as sum_m Pr[N=m] tau' (sum_{n<=m} M^(n-1)) mu.
double mean_decision_time_double_sum(const TransitionMatrix& m,
                                     const Eigen::VectorXd& mu,
                                     const Eigen::VectorXd& tau,
                                     const StoppingTime& st,
                                     double tol = kSeriesTolerance);

/// Mean decision time as tau' (sum_n Pr[N>=n] M^(n-1)) mu.
double mean_decision_time_tail_sum(const TransitionMatrix& m,
                                   const Eigen::VectorXd& mu,
                                   const Eigen::VectorXd& tau,
                                   const StoppingTime& st,
                                   double tol = kSeriesTolerance);

double mean_decision_time(const TransitionMatrix& m, const Eigen::VectorXd& mu,
                          const Eigen::VectorXd& tau, const StoppingTime& st);

struct StoppedChoiceResult {
  Eigen::VectorXd p;
  double mean_decision_time = 0.0;
  double truncation_tail = 0.0;
};

StoppedChoiceResult analyze_stopped(const TransitionMatrix& m,
                                    const Eigen::VectorXd& mu,
                                    const Eigen::VectorXd& tau,
                                    const StoppingTime& st);

/// p_N through the eigenvalue series of a reversible chain.
Eigen::VectorXd choice_probabilities_spectral(const SpectralDecomposition& sd,
                                              const Eigen::VectorXd& mu,
                                              const StoppingTime& st);

/// exp(A) by scaling and squaring of a Taylor polynomial.
Eigen::MatrixXd expm(const Eigen::MatrixXd& a);

/// exp(lambda (M - I)) mu, i.e. e^-lambda e^(lambda M) mu.
Eigen::VectorXd poisson_operator_apply(const TransitionMatrix& m,
                                       const Eigen::VectorXd& mu,
                                       double lambda);

/// Same quantity summed term by term with the Poisson remainder below tol.
Eigen::VectorXd poisson_series_apply(const TransitionMatrix& m,
                                     const Eigen::VectorXd& mu, double lambda,
                                     double tol = 1e-16);

/// pi*(j) proportional to pi(j) sum_{i != j} Q(i|j) RT(i,j). Requires a null
/// exploration diagonal.
Eigen::VectorXd time_weighted_stationary(const Eigen::VectorXd& pi,
                                         const ExplorationMatrix& q,
                                         const Eigen::MatrixXd& rt_mean);

}  // namespace nmetro
