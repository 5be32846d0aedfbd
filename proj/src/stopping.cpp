#include "nmetro/stopping.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <sstream>

namespace nmetro {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double poisson_log_pmf(double lambda, long k) {
  return -lambda + static_cast<double>(k) * std::log(lambda) -
         std::lgamma(static_cast<double>(k) + 1.0);
}

double poisson_pmf(double lambda, long k) {
  if (k < 0) return 0.0;
  if (lambda == 0.0) return k == 0 ? 1.0 : 0.0;
  return std::exp(poisson_log_pmf(lambda, k));
}

// Pr[P >= k] for P ~ Poisson(lambda).
double poisson_upper(double lambda, long k) {
  if (k <= 0) return 1.0;
  if (lambda == 0.0) return 0.0;
  if (static_cast<double>(k) <= lambda) {
    double below = 0.0;
    for (long j = 0; j < k; ++j) below += poisson_pmf(lambda, j);
    return std::max(0.0, 1.0 - below);
  }
  // Terms decrease monotonically past the mode.
  double sum = 0.0;
  for (long j = k;; ++j) {
    const double term = poisson_pmf(lambda, j);
    sum += term;
    if (term == 0.0 || term <= sum * 1e-20) break;
  }
  return sum;
}

double parse_number(std::string_view text, std::string_view spec) {
  double value = 0.0;
  const auto* first = text.data();
  const auto* last = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    throw Error(ErrorCode::ParseError,
                "bad number in stopping spec '" + std::string(spec) + "'");
  }
  return value;
}

void require_vector(const Eigen::VectorXd& v, std::size_t n, const char* what) {
  if (static_cast<std::size_t>(v.size()) != n) {
    throw Error(ErrorCode::DimensionMismatch,
                std::string(what) + " has the wrong length");
  }
}

}  // namespace

StoppingTime StoppingTime::fixed(long iterations) {
  if (iterations < 1) {
    throw Error(ErrorCode::OutOfSupport, "fixed stopping needs N >= 1");
  }
  return StoppingTime(Fixed{iterations});
}

StoppingTime StoppingTime::geometric(double continuation) {
  if (!(continuation >= 0.0 && continuation < 1.0)) {
    throw Error(ErrorCode::InvalidDistribution,
                "geometric continuation must lie in [0,1)");
  }
  return StoppingTime(Geometric{continuation});
}

StoppingTime StoppingTime::poisson_shifted(double lambda) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw Error(ErrorCode::InvalidDistribution,
                "poisson mean must be finite and nonnegative");
  }
  return StoppingTime(PoissonShifted{lambda});
}

StoppingTime StoppingTime::custom(std::vector<std::pair<long, double>> pmf) {
  if (pmf.empty()) {
    throw Error(ErrorCode::InvalidDistribution, "custom pmf is empty");
  }
  std::map<long, double> merged;
  double total = 0.0;
  for (const auto& [m, p] : pmf) {
    if (m < 1) {
      throw Error(ErrorCode::OutOfSupport, "custom pmf has support below 1");
    }
    if (!(p >= 0.0) || !std::isfinite(p)) {
      throw Error(ErrorCode::InvalidDistribution,
                  "custom pmf has a negative or non-finite mass");
    }
    merged[m] += p;
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw Error(ErrorCode::InvalidDistribution, "custom pmf does not sum to 1");
  }
  Custom c;
  c.pmf.assign(merged.begin(), merged.end());
  return StoppingTime(std::move(c));
}

StoppingTime StoppingTime::parse(std::string_view spec) {
  const auto colon = spec.find(':');
  if (colon == std::string_view::npos) {
    throw Error(ErrorCode::ParseError,
                "stopping spec must look like kind:value, got '" +
                    std::string(spec) + "'");
  }
  const auto kind = spec.substr(0, colon);
  const auto value = spec.substr(colon + 1);
  if (kind == "fixed") {
    const double m = parse_number(value, spec);
    if (m != std::floor(m)) {
      throw Error(ErrorCode::ParseError, "fixed stopping needs an integer");
    }
    return fixed(static_cast<long>(m));
  }
  if (kind == "geometric") return geometric(parse_number(value, spec));
  if (kind == "poisson") return poisson_shifted(parse_number(value, spec));
  if (kind == "deadline") {
    throw Error(ErrorCode::InvalidParameter,
                "a clock deadline is not independent of the comparisons; it "
                "has no analytic stopping law (use simulation)");
  }
  if (kind == "custom") {
    throw Error(ErrorCode::ParseError,
                "custom stopping specs must be loaded from a pmf file");
  }
  throw Error(ErrorCode::ParseError,
              "unknown stopping kind '" + std::string(kind) + "'");
}

std::string StoppingTime::describe() const {
  std::ostringstream os;
  os.precision(17);
  std::visit(overloaded{
                 [&](const Fixed& f) { os << "fixed:" << f.iterations; },
                 [&](const Geometric& g) { os << "geometric:" << g.continuation; },
                 [&](const PoissonShifted& p) { os << "poisson:" << p.lambda; },
                 [&](const Custom& c) { os << "custom(" << c.pmf.size() << ")"; },
             },
             variant_);
  return os.str();
}

double StoppingTime::pmf(long m) const {
  if (m < 1) throw Error(ErrorCode::OutOfSupport, "Pr[N=m] needs m >= 1");
  return std::visit(
      overloaded{
          [&](const Fixed& f) { return m == f.iterations ? 1.0 : 0.0; },
          [&](const Geometric& g) {
            return (1.0 - g.continuation) *
                   std::pow(g.continuation, static_cast<double>(m - 1));
          },
          [&](const PoissonShifted& p) { return poisson_pmf(p.lambda, m - 1); },
          [&](const Custom& c) {
            for (const auto& [support, mass] : c.pmf) {
              if (support == m) return mass;
            }
            return 0.0;
          },
      },
      variant_);
}

double StoppingTime::tail(long n) const {
  if (n < 1) throw Error(ErrorCode::OutOfSupport, "Pr[N>=n] needs n >= 1");
  return std::visit(
      overloaded{
          [&](const Fixed& f) { return n <= f.iterations ? 1.0 : 0.0; },
          [&](const Geometric& g) {
            return std::pow(g.continuation, static_cast<double>(n - 1));
          },
          [&](const PoissonShifted& p) { return poisson_upper(p.lambda, n - 1); },
          [&](const Custom& c) {
            double mass = 0.0;
            for (const auto& [support, p] : c.pmf) {
              if (support >= n) mass += p;
            }
            return mass;
          },
      },
      variant_);
}

double StoppingTime::mean() const {
  return truncated_mean_excess(0);
}

double StoppingTime::truncated_mean_excess(long k) const {
  return std::visit(
      overloaded{
          [&](const Fixed& f) {
            return f.iterations > k ? static_cast<double>(f.iterations) : 0.0;
          },
          [&](const Geometric& g) {
            const double c = g.continuation;
            return std::pow(c, static_cast<double>(k)) *
                   (static_cast<double>(k) + 1.0 / (1.0 - c));
          },
          [&](const PoissonShifted& p) {
            return poisson_upper(p.lambda, k) +
                   p.lambda * poisson_upper(p.lambda, k - 1);
          },
          [&](const Custom& c) {
            double sum = 0.0;
            for (const auto& [support, mass] : c.pmf) {
              if (support > k) sum += static_cast<double>(support) * mass;
            }
            return sum;
          },
      },
      variant_);
}

long StoppingTime::horizon(double tol) const {
  if (const auto* f = std::get_if<Fixed>(&variant_)) return f->iterations;
  if (const auto* c = std::get_if<Custom>(&variant_)) return c->pmf.back().first;
  constexpr long kLimit = 1L << 40;
  long hi = 1;
  while (truncated_mean_excess(hi) >= tol) {
    if (hi >= kLimit) {
      throw Error(ErrorCode::TailNotSummable,
                  "stopping tail does not fall below tolerance");
    }
    hi *= 2;
  }
  long lo = hi / 2;  // excess(lo) >= tol unless lo == 0
  while (hi - lo > 1) {
    const long mid = lo + (hi - lo) / 2;
    if (truncated_mean_excess(mid) < tol) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return std::max(hi, 1L);
}

double StoppingTime::generating(double x) const {
  return std::visit(
      overloaded{
          [&](const Fixed& f) {
            return std::pow(x, static_cast<double>(f.iterations - 1));
          },
          [&](const Geometric& g) {
            return (1.0 - g.continuation) / (1.0 - g.continuation * x);
          },
          [&](const PoissonShifted& p) { return std::exp(p.lambda * (x - 1.0)); },
          [&](const Custom& c) {
            double sum = 0.0;
            for (const auto& [support, mass] : c.pmf) {
              sum += mass * std::pow(x, static_cast<double>(support - 1));
            }
            return sum;
          },
      },
      variant_);
}

long StoppingTime::sample(RandomStream& rng) const {
  return std::visit(
      overloaded{
          [&](const Fixed& f) { return f.iterations; },
          [&](const Geometric& g) -> long {
            if (g.continuation == 0.0) return 1;
            return 1 + static_cast<long>(std::floor(std::log(rng.uniform()) /
                                                    std::log(g.continuation)));
          },
          [&](const PoissonShifted& p) -> long {
            if (p.lambda == 0.0) return 1;
            std::poisson_distribution<long> draw(p.lambda);
            return 1 + draw(rng);
          },
          [&](const Custom& c) -> long {
            const double u = rng.uniform();
            double cumulative = 0.0;
            for (const auto& [support, mass] : c.pmf) {
              cumulative += mass;
              if (u < cumulative) return support;
            }
            return c.pmf.back().first;
          },
      },
      variant_);
}

Eigen::VectorXd conditional_iteration_time(const ExplorationMatrix& q,
                                           const Eigen::MatrixXd& rt_mean) {
  const auto n = q.size();
  if (static_cast<std::size_t>(rt_mean.rows()) != n ||
      static_cast<std::size_t>(rt_mean.cols()) != n) {
    throw Error(ErrorCode::DimensionMismatch,
                "mean response time grid does not match the menu");
  }
  Eigen::VectorXd tau = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < n; ++i) {
      if (i == j) continue;  // self-proposals take no time
      if (!(rt_mean(i, j) >= 0.0)) {
        throw Error(ErrorCode::InvalidParameter,
                    "mean response times must be nonnegative");
      }
      tau(j) += q(i, j) * rt_mean(i, j);
    }
  }
  return tau;
}

namespace {

void check_inputs(const TransitionMatrix& m, const Eigen::VectorXd& mu) {
  require_vector(mu, m.size(), "initial distribution");
  require_distribution(mu, /*full_support=*/false, 1e-10);
}

void check_tau(const TransitionMatrix& m, const Eigen::VectorXd& tau) {
  require_vector(tau, m.size(), "iteration time vector");
  if (tau.size() > 0 && !(tau.minCoeff() >= 0.0)) {
    throw Error(ErrorCode::InvalidParameter, "iteration times must be >= 0");
  }
}

void check_finite_mean(const StoppingTime& st) {
  if (!std::isfinite(st.mean())) {
    throw Error(ErrorCode::InfiniteExpectation, "E[N] is not finite");
  }
}

Eigen::MatrixXd identity_like(const TransitionMatrix& m) {
  const auto n = static_cast<Eigen::Index>(m.size());
  return Eigen::MatrixXd::Identity(n, n);
}

}  // namespace

SeriesResult choice_probabilities_series(const TransitionMatrix& m,
                                         const Eigen::VectorXd& mu,
                                         const StoppingTime& st, double tol) {
  check_inputs(m, mu);
  const long horizon = st.horizon(tol);
  SeriesResult out;
  out.p = Eigen::VectorXd::Zero(mu.size());
  Eigen::VectorXd state = mu;
  for (long step = 1; step <= horizon; ++step) {
    out.p += st.pmf(step) * state;
    if (step < horizon) state = m.grid() * state;
  }
  out.truncation_tail = st.tail(horizon + 1);
  return out;
}

Eigen::VectorXd choice_probabilities(const TransitionMatrix& m,
                                     const Eigen::VectorXd& mu,
                                     const StoppingTime& st) {
  check_inputs(m, mu);
  return std::visit(
      overloaded{
          [&](const StoppingTime::Fixed& f) -> Eigen::VectorXd {
            Eigen::VectorXd state = mu;
            for (long step = 1; step < f.iterations; ++step) {
              state = m.grid() * state;
            }
            return state;
          },
          [&](const StoppingTime::Geometric& g) -> Eigen::VectorXd {
            const Eigen::MatrixXd system =
                identity_like(m) - g.continuation * m.grid();
            return Eigen::PartialPivLU<Eigen::MatrixXd>(system).solve(
                (1.0 - g.continuation) * mu);
          },
          [&](const StoppingTime::PoissonShifted& p) -> Eigen::VectorXd {
            return poisson_operator_apply(m, mu, p.lambda);
          },
          [&](const StoppingTime::Custom&) -> Eigen::VectorXd {
            return choice_probabilities_series(m, mu, st).p;
          },
      },
      st.variant());
}

double mean_decision_time_double_sum(const TransitionMatrix& m,
                                     const Eigen::VectorXd& mu,
                                     const Eigen::VectorXd& tau,
                                     const StoppingTime& st, double tol) {
  check_inputs(m, mu);
  check_tau(m, tau);
  check_finite_mean(st);
  const long horizon = st.horizon(tol);
  Eigen::VectorXd state = mu;
  double elapsed = 0.0;  // tau' sum_{n<=m} M^(n-1) mu
  double total = 0.0;
  for (long step = 1; step <= horizon; ++step) {
    elapsed += tau.dot(state);
    total += st.pmf(step) * elapsed;
    if (step < horizon) state = m.grid() * state;
  }
  return total;
}

double mean_decision_time_tail_sum(const TransitionMatrix& m,
                                   const Eigen::VectorXd& mu,
                                   const Eigen::VectorXd& tau,
                                   const StoppingTime& st, double tol) {
  check_inputs(m, mu);
  check_tau(m, tau);
  check_finite_mean(st);
  const long horizon = st.horizon(tol);
  Eigen::VectorXd state = mu;
  double total = 0.0;
  for (long step = 1; step <= horizon; ++step) {
    total += st.tail(step) * tau.dot(state);
    if (step < horizon) state = m.grid() * state;
  }
  return total;
}

double mean_decision_time(const TransitionMatrix& m, const Eigen::VectorXd& mu,
                          const Eigen::VectorXd& tau, const StoppingTime& st) {
  if (const auto* g = std::get_if<StoppingTime::Geometric>(&st.variant())) {
    check_inputs(m, mu);
    check_tau(m, tau);
    const Eigen::MatrixXd system = identity_like(m) - g->continuation * m.grid();
    return tau.dot(Eigen::PartialPivLU<Eigen::MatrixXd>(system).solve(mu));
  }
  return mean_decision_time_tail_sum(m, mu, tau, st);
}

StoppedChoiceResult analyze_stopped(const TransitionMatrix& m,
                                    const Eigen::VectorXd& mu,
                                    const Eigen::VectorXd& tau,
                                    const StoppingTime& st) {
  StoppedChoiceResult out;
  out.p = choice_probabilities(m, mu, st);
  out.mean_decision_time = mean_decision_time(m, mu, tau, st);
  if (std::holds_alternative<StoppingTime::PoissonShifted>(st.variant())) {
    out.truncation_tail = st.tail(st.horizon(kSeriesTolerance) + 1);
  }
  return out;
}

Eigen::VectorXd choice_probabilities_spectral(const SpectralDecomposition& sd,
                                              const Eigen::VectorXd& mu,
                                              const StoppingTime& st) {
  if (mu.size() != sd.eigenvalues.size()) {
    throw Error(ErrorCode::DimensionMismatch,
                "initial distribution has the wrong length");
  }
  return sd.apply([&](double x) { return st.generating(x); }) * mu;
}

Eigen::MatrixXd expm(const Eigen::MatrixXd& a) {
  const auto n = a.rows();
  const double norm = a.cwiseAbs().colwise().sum().maxCoeff();
  int squarings = 0;
  if (norm > 0.5) {
    squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
  }
  const Eigen::MatrixXd scaled = a / std::ldexp(1.0, squarings);
  Eigen::MatrixXd result = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd term = Eigen::MatrixXd::Identity(n, n);
  for (int k = 1; k <= 40; ++k) {
    term = (term * scaled) / static_cast<double>(k);
    result += term;
    if (term.cwiseAbs().maxCoeff() < 1e-18) break;
  }
  for (int s = 0; s < squarings; ++s) result = (result * result).eval();
  return result;
}

Eigen::VectorXd poisson_operator_apply(const TransitionMatrix& m,
                                       const Eigen::VectorXd& mu,
                                       double lambda) {
  check_inputs(m, mu);
  if (lambda < 1e-2) return poisson_series_apply(m, mu, lambda);
  const Eigen::MatrixXd generator = lambda * (m.grid() - identity_like(m));
  return expm(generator) * mu;
}

Eigen::VectorXd poisson_series_apply(const TransitionMatrix& m,
                                     const Eigen::VectorXd& mu, double lambda,
                                     double tol) {
  check_inputs(m, mu);
  if (!(lambda >= 0.0)) {
    throw Error(ErrorCode::InvalidDistribution, "poisson mean must be >= 0");
  }
  Eigen::VectorXd state = mu;
  Eigen::VectorXd out = Eigen::VectorXd::Zero(mu.size());
  for (long k = 0;; ++k) {
    const double weight = poisson_pmf(lambda, k);
    out += weight * state;
    // Remainder past k is at most w_{k+1} / (1 - lambda/(k+2)) once k+2 > lambda.
    const double next = poisson_pmf(lambda, k + 1);
    const double ratio = lambda / static_cast<double>(k + 2);
    if (ratio < 1.0 && next / (1.0 - ratio) < tol) break;
    state = m.grid() * state;
  }
  return out;
}

Eigen::VectorXd time_weighted_stationary(const Eigen::VectorXd& pi,
                                         const ExplorationMatrix& q,
                                         const Eigen::MatrixXd& rt_mean) {
  const auto n = q.size();
  require_vector(pi, n, "stationary distribution");
  require_distribution(pi, /*full_support=*/true, 1e-9);
  for (std::size_t j = 0; j < n; ++j) {
    if (q(j, j) != 0.0) {
      throw Error(ErrorCode::DiagonalNotNull,
                  "exploration matrix must not re-propose the incumbent (Q(" +
                      std::to_string(j) + "|" + std::to_string(j) + ") != 0)");
    }
  }
  const Eigen::VectorXd tau = conditional_iteration_time(q, rt_mean);
  Eigen::VectorXd weighted = pi.cwiseProduct(tau);
  const double total = weighted.sum();
  if (!(total > 0.0)) {
    throw Error(ErrorCode::ZeroNormalizer,
                "every alternative has zero expected iteration time");
  }
  return weighted / total;
}

}  // namespace nmetro
