#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstddef>
#include <optional>
#include <vector>

#include "nmetro/error.hpp"

namespace nmetro {

inline constexpr double kDefaultTolerance = 1e-9;

/// Binary stochastic choice kernel on a menu {0, ..., n-1}.
///
/// Entry (i, j) with i != j is rho(i|j), the probability that proposal i is
/// accepted against incumbent j. The diagonal is not part of the kernel; it
/// holds the sentinel 1 and no diagnostic reads it.
class ChoiceKernel {
 public:
  /// Validates off-diagonal entries and overwrites the diagonal with 1.
  static ChoiceKernel from_grid(const Eigen::MatrixXd& raw);

  std::size_t size() const { return static_cast<std::size_t>(rho_.rows()); }
  double operator()(std::size_t i, std::size_t j) const { return rho_(i, j); }
  const Eigen::MatrixXd& grid() const { return rho_; }

  /// Copy with the diagonal replaced by `diag`. Used to check that
  /// diagnostics ignore the diagonal.
  ChoiceKernel with_diagonal(const Eigen::VectorXd& diag) const;

 private:
  explicit ChoiceKernel(Eigen::MatrixXd rho) : rho_(std::move(rho)) {}
  Eigen::MatrixXd rho_;
};

ChoiceKernel validate_kernel(const Eigen::MatrixXd& raw);

bool is_positive(const ChoiceKernel& k);
bool is_unbiased(const ChoiceKernel& k, double tol = kDefaultTolerance);

struct TransitivityReport {
  double max_cycle_discrepancy = 0.0;
  std::array<std::size_t, 3> worst_triple{0, 0, 0};
  bool is_transitive = true;
};

/// Product rule rho(j|i)rho(k|j)rho(i|k) = rho(k|i)rho(j|k)rho(i|j), checked
/// on unordered triples i < j < k.
TransitivityReport check_transitivity(const ChoiceKernel& k,
                                      double tol = kDefaultTolerance);

/// Positive reals indexed by unordered pairs {i, j}, i != j. Symmetry is
/// structural: s(i, j) and s(j, i) read the same slot.
class SymmetricPairGrid {
 public:
  SymmetricPairGrid() = default;
  SymmetricPairGrid(std::size_t n, double fill);

  static SymmetricPairGrid from_matrix(const Eigen::MatrixXd& m,
                                       double tol = 1e-12);

  std::size_t size() const { return n_; }
  double operator()(std::size_t i, std::size_t j) const;
  void set(std::size_t i, std::size_t j, double value);

  /// Dense view with zero diagonal.
  Eigen::MatrixXd to_matrix() const;

 private:
  std::size_t slot(std::size_t i, std::size_t j) const;
  std::size_t n_ = 0;
  std::vector<double> values_;
};

struct HastingsDecomposition {
  Eigen::VectorXd pi;
  SymmetricPairGrid s;
  bool unbiased = false;
};

class NotTransitiveError : public Error {
 public:
  explicit NotTransitiveError(const TransitivityReport& report);
  const TransitivityReport& report() const { return report_; }

 private:
  TransitivityReport report_;
};

/// Writes a positive transitive kernel as rho(i|j) = s(i,j) pi(i)/(pi(i)+pi(j)).
/// `reference` selects the alternative i* used to build pi from ratios.
HastingsDecomposition hastings_decompose(const ChoiceKernel& k,
                                         double tol = kDefaultTolerance,
                                         std::size_t reference = 0);

/// Inverse of hastings_decompose. Without `s`, builds the Luce kernel (s = 1).
ChoiceKernel luce_kernel(const Eigen::VectorXd& pi,
                         const std::optional<SymmetricPairGrid>& s = {});

/// Throws InvalidDistribution unless `p` is a probability vector.
void require_distribution(const Eigen::VectorXd& p, bool full_support,
                          double tol = 1e-12);

}  // namespace nmetro
