#include "nmetro/chain.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <string>
#include <vector>

namespace nmetro {

namespace {

constexpr double kStochasticTolerance = 1e-12;

void require_square(const Eigen::MatrixXd& raw, const char* what) {
  if (raw.rows() != raw.cols()) {
    throw Error(ErrorCode::NonSquare, std::string(what) + " must be square");
  }
  if (raw.rows() < 2) {
    throw Error(ErrorCode::NonSquare,
                std::string(what) + " needs at least 2 alternatives");
  }
}

void require_column_stochastic(const Eigen::MatrixXd& raw) {
  for (Eigen::Index j = 0; j < raw.cols(); ++j) {
    for (Eigen::Index i = 0; i < raw.rows(); ++i) {
      if (!(raw(i, j) >= 0.0)) {
        throw Error(ErrorCode::NegativeEntry,
                    "entry (" + std::to_string(i) + "," + std::to_string(j) +
                        ") is negative");
      }
    }
    const double total = raw.col(j).sum();
    if (std::abs(total - 1.0) > kStochasticTolerance) {
      throw Error(ErrorCode::ColumnNotStochastic,
                  "column " + std::to_string(j) + " sums to " +
                      std::to_string(total));
    }
  }
}

// Breadth-first levels from node 0 following edges j -> i when M(i|j) > 0.
std::vector<long> bfs_levels(const Eigen::MatrixXd& m, bool reverse) {
  const auto n = m.rows();
  std::vector<long> level(static_cast<std::size_t>(n), -1);
  std::queue<Eigen::Index> frontier;
  level[0] = 0;
  frontier.push(0);
  while (!frontier.empty()) {
    const auto from = frontier.front();
    frontier.pop();
    for (Eigen::Index to = 0; to < n; ++to) {
      const double w = reverse ? m(from, to) : m(to, from);
      if (w > 0.0 && level[static_cast<std::size_t>(to)] < 0) {
        level[static_cast<std::size_t>(to)] =
            level[static_cast<std::size_t>(from)] + 1;
        frontier.push(to);
      }
    }
  }
  return level;
}

}  // namespace

ExplorationMatrix ExplorationMatrix::from_grid(const Eigen::MatrixXd& raw) {
  require_square(raw, "exploration matrix");
  require_column_stochastic(raw);
  return ExplorationMatrix(raw);
}

ExplorationMatrix ExplorationMatrix::uniform(std::size_t n) {
  if (n < 2) {
    throw Error(ErrorCode::NonSquare, "exploration matrix needs n >= 2");
  }
  Eigen::MatrixXd q = Eigen::MatrixXd::Constant(
      static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n),
      1.0 / static_cast<double>(n - 1));
  q.diagonal().setZero();
  return ExplorationMatrix(std::move(q));
}

NicenessReport niceness(const ExplorationMatrix& q) {
  NicenessReport report;
  const auto n = q.size();
  report.is_symmetric = true;
  report.min_offdiag = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      report.min_offdiag = std::min(report.min_offdiag, q(i, j));
      if (std::abs(q(i, j) - q(j, i)) > kStochasticTolerance) {
        report.is_symmetric = false;
      }
    }
  }
  report.is_nice = report.is_symmetric && report.min_offdiag > 0.0;
  return report;
}

std::pair<ExplorationMatrix, NicenessReport> validate_exploration(
    const Eigen::MatrixXd& raw) {
  auto q = ExplorationMatrix::from_grid(raw);
  auto report = niceness(q);
  return {std::move(q), report};
}

TransitionMatrix TransitionMatrix::from_grid(const Eigen::MatrixXd& raw) {
  require_square(raw, "transition matrix");
  require_column_stochastic(raw);
  return TransitionMatrix(raw);
}

TransitionMatrix build_transition(const ExplorationMatrix& q,
                                  const ChoiceKernel& k) {
  if (q.size() != k.size()) {
    throw Error(ErrorCode::DimensionMismatch,
                "exploration matrix and kernel sizes differ");
  }
  const auto n = q.size();
  Eigen::MatrixXd m(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double moved = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (i == j) continue;
      m(i, j) = q(i, j) * k(i, j);
      moved += m(i, j);
    }
    m(j, j) = 1.0 - moved;
  }
  if (is_positive(k) && niceness(q).is_nice && !(m.minCoeff() > 0.0)) {
    throw Error(ErrorCode::NumericalFailure,
                "positive kernel with nice exploration produced a zero entry");
  }
  return TransitionMatrix(std::move(m));
}

bool is_ergodic(const TransitionMatrix& m) {
  const auto& grid = m.grid();
  const auto forward = bfs_levels(grid, false);
  const auto backward = bfs_levels(grid, true);
  for (std::size_t i = 0; i < forward.size(); ++i) {
    if (forward[i] < 0 || backward[i] < 0) return false;
  }
  // Period = gcd of level[from] + 1 - level[to] over all edges.
  long period = 0;
  const auto n = grid.rows();
  for (Eigen::Index from = 0; from < n; ++from) {
    for (Eigen::Index to = 0; to < n; ++to) {
      if (grid(to, from) > 0.0) {
        const long gap = forward[static_cast<std::size_t>(from)] + 1 -
                         forward[static_cast<std::size_t>(to)];
        period = std::gcd(period, std::labs(gap));
      }
    }
  }
  return period == 1;
}

StationarySolution solve_stationary(const TransitionMatrix& m) {
  if (!is_ergodic(m)) {
    throw Error(ErrorCode::NotErgodic,
                "chain is reducible or periodic; stationary law not unique");
  }
  const auto n = static_cast<Eigen::Index>(m.size());
  Eigen::MatrixXd system = m.grid() - Eigen::MatrixXd::Identity(n, n);
  system.row(0).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  rhs(0) = 1.0;

  Eigen::PartialPivLU<Eigen::MatrixXd> lu(system);
  Eigen::VectorXd pi = lu.solve(rhs);
  // One step of iterative refinement.
  pi += lu.solve(rhs - system * pi);
  pi /= pi.sum();

  StationarySolution out;
  out.residual = (m.grid() * pi - pi).cwiseAbs().maxCoeff();
  out.reciprocal_condition = lu.rcond();
  out.pi = std::move(pi);
  return out;
}

Eigen::VectorXd stationary_distribution(const TransitionMatrix& m) {
  return solve_stationary(m).pi;
}

DetailedBalanceCheck detailed_balance_residual(const TransitionMatrix& m,
                                               const Eigen::VectorXd& pi) {
  if (static_cast<std::size_t>(pi.size()) != m.size()) {
    throw Error(ErrorCode::DimensionMismatch, "pi and M sizes differ");
  }
  require_distribution(pi, /*full_support=*/false, 1e-9);
  DetailedBalanceCheck check;
  const auto n = m.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double gap = std::abs(m(i, j) * pi(j) - m(j, i) * pi(i));
      if (gap > check.residual) {
        check.residual = gap;
        check.witness = {i, j};
      }
    }
  }
  return check;
}

KolmogorovCheck kolmogorov_residual(const TransitionMatrix& m) {
  KolmogorovCheck check;
  const auto n = m.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      for (std::size_t k = j + 1; k < n; ++k) {
        const double forward = m(j, i) * m(k, j) * m(i, k);
        const double backward = m(k, i) * m(j, k) * m(i, j);
        const double gap = std::abs(forward - backward);
        if (gap > check.residual) {
          check.residual = gap;
          check.witness = {i, j, k};
        }
      }
    }
  }
  return check;
}

BalanceReport balance_report(const TransitionMatrix& m,
                             const Eigen::VectorXd& pi) {
  return {detailed_balance_residual(m, pi), kolmogorov_residual(m)};
}

SpectralDecomposition spectral_decompose(const TransitionMatrix& m,
                                         const Eigen::VectorXd& pi) {
  const auto balance = detailed_balance_residual(m, pi);
  if (balance.residual > kReversibilityTolerance) {
    throw Error(ErrorCode::NotReversible,
                "detailed balance residual " + std::to_string(balance.residual));
  }
  require_distribution(pi, /*full_support=*/true, 1e-9);

  const Eigen::VectorXd root = pi.cwiseSqrt();
  const Eigen::VectorXd inv_root = root.cwiseInverse();
  Eigen::MatrixXd sym = inv_root.asDiagonal() * m.grid() * root.asDiagonal();
  sym = 0.5 * (sym + sym.transpose()).eval();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym);
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorCode::NumericalFailure, "symmetric eigensolve failed");
  }
  SpectralDecomposition out;
  out.eigenvalues = solver.eigenvalues().reverse();
  const Eigen::MatrixXd basis = solver.eigenvectors().rowwise().reverse();
  out.eigenvectors = root.asDiagonal() * basis;
  out.inverse = basis.transpose() * inv_root.asDiagonal();

  // Scale the Perron column to pi itself.
  const double scale = out.eigenvectors.col(0).sum();
  out.eigenvectors.col(0) /= scale;
  out.inverse.row(0) *= scale;

  const Eigen::MatrixXd rebuilt =
      out.eigenvectors * out.eigenvalues.asDiagonal() * out.inverse;
  out.reconstruction_error = (rebuilt - m.grid()).cwiseAbs().maxCoeff();
  return out;
}

}  // namespace nmetro
