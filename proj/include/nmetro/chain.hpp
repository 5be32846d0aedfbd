#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstddef>
#include <utility>

#include "nmetro/kernel.hpp"

namespace nmetro {

/// Column-stochastic proposal matrix: column j is Q(.|j).
class ExplorationMatrix {
 public:
  static ExplorationMatrix from_grid(const Eigen::MatrixXd& raw);
  /// Off-diagonal 1/(n-1), zero diagonal.
  static ExplorationMatrix uniform(std::size_t n);

  std::size_t size() const { return static_cast<std::size_t>(q_.rows()); }
  double operator()(std::size_t i, std::size_t j) const { return q_(i, j); }
  const Eigen::MatrixXd& grid() const { return q_; }

 private:
  explicit ExplorationMatrix(Eigen::MatrixXd q) : q_(std::move(q)) {}
  Eigen::MatrixXd q_;
};

struct NicenessReport {
  bool is_symmetric = false;
  double min_offdiag = 0.0;
  bool is_nice = false;
};

NicenessReport niceness(const ExplorationMatrix& q);

std::pair<ExplorationMatrix, NicenessReport> validate_exploration(
    const Eigen::MatrixXd& raw);

/// Left-stochastic Metropolis matrix, M(i|j) = Q(i|j) rho(i|j) off the
/// diagonal and the rejection mass on it.
class TransitionMatrix {
 public:
  /// Wraps an arbitrary column-stochastic matrix.
  static TransitionMatrix from_grid(const Eigen::MatrixXd& raw);

  std::size_t size() const { return static_cast<std::size_t>(m_.rows()); }
  double operator()(std::size_t i, std::size_t j) const { return m_(i, j); }
  const Eigen::MatrixXd& grid() const { return m_; }

 private:
  friend TransitionMatrix build_transition(const ExplorationMatrix&,
                                           const ChoiceKernel&);
  explicit TransitionMatrix(Eigen::MatrixXd m) : m_(std::move(m)) {}
  Eigen::MatrixXd m_;
};

TransitionMatrix build_transition(const ExplorationMatrix& q,
                                  const ChoiceKernel& k);

/// Strong connectivity of the positive-entry digraph plus aperiodicity.
bool is_ergodic(const TransitionMatrix& m);

struct StationarySolution {
  Eigen::VectorXd pi;
  double residual = 0.0;       ///< ||M pi - pi||_inf
  double reciprocal_condition = 0.0;
};

/// Dense LU on (M - I) with one balance row replaced by the normalization.
StationarySolution solve_stationary(const TransitionMatrix& m);
Eigen::VectorXd stationary_distribution(const TransitionMatrix& m);

struct DetailedBalanceCheck {
  double residual = 0.0;
  std::array<std::size_t, 2> witness{0, 0};
};

struct KolmogorovCheck {
  double residual = 0.0;
  std::array<std::size_t, 3> witness{0, 0, 0};
};

struct BalanceReport {
  DetailedBalanceCheck detailed_balance;
  KolmogorovCheck kolmogorov;
};

DetailedBalanceCheck detailed_balance_residual(const TransitionMatrix& m,
                                               const Eigen::VectorXd& pi);
/// Cycle-product gap over distinct triples; the diagonal never enters.
KolmogorovCheck kolmogorov_residual(const TransitionMatrix& m);
BalanceReport balance_report(const TransitionMatrix& m,
                             const Eigen::VectorXd& pi);

inline constexpr double kReversibilityTolerance = 1e-9;

/// Eigendecomposition M = U diag(lambda) U^{-1} of a reversible chain, via
/// the symmetric similarity S(i,j) = M(i|j) sqrt(pi(j)/pi(i)).
struct SpectralDecomposition {
  Eigen::VectorXd eigenvalues;  ///< descending
  Eigen::MatrixXd eigenvectors;  ///< U; column 0 equals pi
  Eigen::MatrixXd inverse;       ///< U^{-1}
  double reconstruction_error = 0.0;

  /// U diag(f(lambda)) U^{-1}.
  template <typename F>
  Eigen::MatrixXd apply(F&& f) const {
    Eigen::VectorXd scaled(eigenvalues.size());
    for (Eigen::Index k = 0; k < eigenvalues.size(); ++k) {
      scaled(k) = f(eigenvalues(k));
    }
    return eigenvectors * scaled.asDiagonal() * inverse;
  }
};

SpectralDecomposition spectral_decompose(const TransitionMatrix& m,
                                         const Eigen::VectorXd& pi);

}  // namespace nmetro
