#include "nmetro/kernel.hpp"

#include <cmath>
#include <sstream>

namespace nmetro {

namespace {

std::string pair_label(std::size_t i, std::size_t j) {
  std::ostringstream os;
  os << "(" << i << "," << j << ")";
  return os.str();
}

}  // namespace

ChoiceKernel ChoiceKernel::from_grid(const Eigen::MatrixXd& raw) {
  if (raw.rows() != raw.cols()) {
    throw Error(ErrorCode::NonSquare, "kernel grid must be square");
  }
  if (raw.rows() < 2) {
    throw Error(ErrorCode::NonSquare, "kernel needs at least 2 alternatives");
  }
  const auto n = static_cast<std::size_t>(raw.rows());
  Eigen::MatrixXd rho = raw;
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < n; ++i) {
      if (i == j) continue;
      const double v = rho(i, j);
      if (!(v >= 0.0 && v <= 1.0)) {
        throw Error(ErrorCode::EntryOutOfRange,
                    "rho" + pair_label(i, j) + " not in [0,1]");
      }
    }
    rho(j, j) = 1.0;
  }
  return ChoiceKernel(std::move(rho));
}

ChoiceKernel ChoiceKernel::with_diagonal(const Eigen::VectorXd& diag) const {
  Eigen::MatrixXd rho = rho_;
  rho.diagonal() = diag;
  return ChoiceKernel(std::move(rho));
}

ChoiceKernel validate_kernel(const Eigen::MatrixXd& raw) {
  return ChoiceKernel::from_grid(raw);
}

bool is_positive(const ChoiceKernel& k) {
  const auto n = k.size();
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < n; ++i) {
      if (i != j && !(k(i, j) > 0.0 && k(i, j) < 1.0)) return false;
    }
  }
  return true;
}

bool is_unbiased(const ChoiceKernel& k, double tol) {
  const auto n = k.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (std::abs(1.0 - k(i, j) - k(j, i)) > tol) return false;
    }
  }
  return true;
}

TransitivityReport check_transitivity(const ChoiceKernel& k, double tol) {
  TransitivityReport report;
  const auto n = k.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      for (std::size_t l = j + 1; l < n; ++l) {
        const double forward = k(j, i) * k(l, j) * k(i, l);
        const double backward = k(l, i) * k(j, l) * k(i, j);
        const double gap = std::abs(forward - backward);
        if (gap > report.max_cycle_discrepancy) {
          report.max_cycle_discrepancy = gap;
          report.worst_triple = {i, j, l};
        }
      }
    }
  }
  report.is_transitive = report.max_cycle_discrepancy <= tol;
  return report;
}

SymmetricPairGrid::SymmetricPairGrid(std::size_t n, double fill)
    : n_(n), values_(n * (n - 1) / 2, fill) {}

SymmetricPairGrid SymmetricPairGrid::from_matrix(const Eigen::MatrixXd& m,
                                                 double tol) {
  if (m.rows() != m.cols()) {
    throw Error(ErrorCode::NonSquare, "s grid must be square");
  }
  const auto n = static_cast<std::size_t>(m.rows());
  SymmetricPairGrid s(n, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (std::abs(m(i, j) - m(j, i)) > tol) {
        throw Error(ErrorCode::InvalidParameter,
                    "s" + pair_label(i, j) + " is not symmetric");
      }
      if (!(m(i, j) > 0.0)) {
        throw Error(ErrorCode::InvalidParameter,
                    "s" + pair_label(i, j) + " must be positive");
      }
      s.set(i, j, m(i, j));
    }
  }
  return s;
}

std::size_t SymmetricPairGrid::slot(std::size_t i, std::size_t j) const {
  if (i > j) std::swap(i, j);
  // Row-major upper triangle without the diagonal.
  return i * (2 * n_ - i - 1) / 2 + (j - i - 1);
}

double SymmetricPairGrid::operator()(std::size_t i, std::size_t j) const {
  return values_[slot(i, j)];
}

void SymmetricPairGrid::set(std::size_t i, std::size_t j, double value) {
  values_[slot(i, j)] = value;
}

Eigen::MatrixXd SymmetricPairGrid::to_matrix() const {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n_, n_);
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t j = i + 1; j < n_; ++j) {
      m(i, j) = m(j, i) = (*this)(i, j);
    }
  }
  return m;
}

NotTransitiveError::NotTransitiveError(const TransitivityReport& report)
    : Error(ErrorCode::NotTransitive,
            "max cycle discrepancy " +
                std::to_string(report.max_cycle_discrepancy) + " at triple (" +
                std::to_string(report.worst_triple[0]) + "," +
                std::to_string(report.worst_triple[1]) + "," +
                std::to_string(report.worst_triple[2]) + ")"),
      report_(report) {}

HastingsDecomposition hastings_decompose(const ChoiceKernel& k, double tol,
                                         std::size_t reference) {
  const auto n = k.size();
  if (reference >= n) {
    throw Error(ErrorCode::InvalidParameter, "reference alternative out of range");
  }
  if (!is_positive(k)) {
    throw Error(ErrorCode::NotPositive,
                "decomposition requires 0 < rho(i|j) < 1 off the diagonal");
  }
  const auto report = check_transitivity(k, tol);
  if (!report.is_transitive) throw NotTransitiveError(report);

  HastingsDecomposition out;
  out.pi.resize(static_cast<Eigen::Index>(n));
  for (std::size_t j = 0; j < n; ++j) {
    out.pi(j) = j == reference ? 1.0 : k(j, reference) / k(reference, j);
  }
  out.pi /= out.pi.sum();

  out.s = SymmetricPairGrid(n, 1.0);
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double value = k(i, j) * (out.pi(i) + out.pi(j)) / out.pi(i);
      out.s.set(i, j, value);
      worst = std::max(worst, std::abs(value - 1.0));
    }
  }
  out.unbiased = worst <= tol;
  return out;
}

void require_distribution(const Eigen::VectorXd& p, bool full_support,
                          double tol) {
  if (p.size() == 0) {
    throw Error(ErrorCode::InvalidDistribution, "empty distribution");
  }
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (!(p(i) >= 0.0) || (full_support && !(p(i) > 0.0))) {
      throw Error(ErrorCode::InvalidDistribution,
                  full_support ? "entries must be strictly positive"
                               : "entries must be nonnegative");
    }
  }
  if (std::abs(p.sum() - 1.0) > tol) {
    throw Error(ErrorCode::InvalidDistribution, "entries must sum to 1");
  }
}

ChoiceKernel luce_kernel(const Eigen::VectorXd& pi,
                         const std::optional<SymmetricPairGrid>& s) {
  require_distribution(pi, /*full_support=*/true);
  const auto n = static_cast<std::size_t>(pi.size());
  if (n < 2) {
    throw Error(ErrorCode::NonSquare, "kernel needs at least 2 alternatives");
  }
  if (s && s->size() != n) {
    throw Error(ErrorCode::DimensionMismatch, "s and pi sizes differ");
  }
  Eigen::MatrixXd rho = Eigen::MatrixXd::Ones(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const double scale = s ? (*s)(i, j) : 1.0;
      rho(i, j) = scale * pi(i) / (pi(i) + pi(j));
    }
  }
  return ChoiceKernel::from_grid(rho);
}

}  // namespace nmetro
