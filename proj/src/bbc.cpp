#include "nmetro/bbc.hpp"

#include <cmath>
#include <string>

#include "parallel.hpp"

namespace nmetro {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void require_pair(std::size_t n, std::size_t i, std::size_t j) {
  if (i == j) {
    throw Error(ErrorCode::SamePair,
                "proposal and incumbent are both " + std::to_string(i));
  }
  if (i >= n || j >= n) {
    throw Error(ErrorCode::InvalidParameter, "alternative index out of range");
  }
}

}  // namespace

DriftSchedule DriftSchedule::constant(double value) {
  return table({value});
}

DriftSchedule DriftSchedule::table(std::vector<double> values) {
  if (values.empty()) {
    throw Error(ErrorCode::InvalidParameter, "drift schedule is empty");
  }
  for (double v : values) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw Error(ErrorCode::InvalidParameter,
                  "drift schedule entries must be finite and >= 0");
    }
  }
  DriftSchedule s;
  s.values_ = std::move(values);
  return s;
}

void OUParams::validate() const {
  if (values.size() < 2) {
    throw Error(ErrorCode::InvalidParameter, "need at least 2 alternatives");
  }
  for (double v : values) {
    if (!std::isfinite(v)) {
      throw Error(ErrorCode::InvalidParameter, "values must be finite");
    }
  }
  if (!(lambda >= 0.0 && lambda < 1.0)) {
    throw Error(ErrorCode::InvalidParameter, "lambda must lie in [0,1)");
  }
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw Error(ErrorCode::InvalidParameter, "sigma must be positive");
  }
  if (!(beta > 0.0) || !std::isfinite(beta)) {
    throw Error(ErrorCode::InvalidParameter, "beta must be positive");
  }
  if (max_steps < 1) {
    throw Error(ErrorCode::InvalidParameter, "max_steps must be >= 1");
  }
}

BBCSampleOutcome simulate_ou_trial(const OUParams& p, std::size_t proposal,
                                   std::size_t incumbent, RandomStream& rng) {
  require_pair(p.values.size(), proposal, incumbent);
  const double strength = p.values[proposal] - p.values[incumbent];
  const double keep = 1.0 - p.lambda;
  double x = 0.0;
  for (long t = 0; t < p.max_steps; ++t) {
    x = keep * x + strength * p.drift.at(t) + p.sigma * rng.normal();
    if (x >= p.beta) return {proposal, t + 1, false};
    if (x <= -p.beta) return {incumbent, t + 1, false};
  }
  BBCSampleOutcome out{incumbent, p.max_steps, true};
  if (x > 0.0 || (x == 0.0 && rng.uniform() < 0.5)) out.choice = proposal;
  return out;
}

ResponseTimeDist ResponseTimeDist::constant(long steps) {
  if (steps < 1) {
    throw Error(ErrorCode::InvalidParameter, "response times are >= 1 step");
  }
  return ResponseTimeDist(Constant{steps});
}

ResponseTimeDist ResponseTimeDist::geometric(double mean) {
  if (!(mean >= 1.0) || !std::isfinite(mean)) {
    throw Error(ErrorCode::InvalidParameter,
                "geometric response time needs a finite mean >= 1");
  }
  return ResponseTimeDist(Geometric{mean});
}

ResponseTimeDist ResponseTimeDist::table(
    std::vector<std::pair<long, double>> pmf) {
  if (pmf.empty()) {
    throw Error(ErrorCode::InvalidDistribution, "response time pmf is empty");
  }
  double total = 0.0;
  for (const auto& [steps, mass] : pmf) {
    if (steps < 1) {
      throw Error(ErrorCode::InvalidParameter, "response times are >= 1 step");
    }
    if (!(mass >= 0.0)) {
      throw Error(ErrorCode::InvalidDistribution, "negative response time mass");
    }
    total += mass;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw Error(ErrorCode::InvalidDistribution,
                "response time pmf does not sum to 1");
  }
  return ResponseTimeDist(Table{std::move(pmf)});
}

double ResponseTimeDist::mean() const {
  return std::visit(
      overloaded{
          [](const Constant& c) { return static_cast<double>(c.steps); },
          [](const Geometric& g) { return g.mean; },
          [](const Table& t) {
            double sum = 0.0;
            for (const auto& [steps, mass] : t.pmf) sum += steps * mass;
            return sum;
          },
      },
      law_);
}

double ResponseTimeDist::variance() const {
  return std::visit(
      overloaded{
          [](const Constant&) { return 0.0; },
          [](const Geometric& g) {
            const double success = 1.0 / g.mean;
            return (1.0 - success) / (success * success);
          },
          [this](const Table& t) {
            const double m = mean();
            double sum = 0.0;
            for (const auto& [steps, mass] : t.pmf) {
              sum += mass * (steps - m) * (steps - m);
            }
            return sum;
          },
      },
      law_);
}

long ResponseTimeDist::sample(RandomStream& rng) const {
  return std::visit(
      overloaded{
          [](const Constant& c) { return c.steps; },
          [&](const Geometric& g) -> long {
            if (g.mean == 1.0) return 1;
            const double fail = 1.0 - 1.0 / g.mean;
            return 1 + static_cast<long>(
                           std::floor(std::log(rng.uniform()) / std::log(fail)));
          },
          [&](const Table& t) -> long {
            const double u = rng.uniform();
            double cumulative = 0.0;
            for (const auto& [steps, mass] : t.pmf) {
              cumulative += mass;
              if (u < cumulative) return steps;
            }
            return t.pmf.back().first;
          },
      },
      law_);
}

TabularBBC::TabularBBC(ChoiceKernel k, const ResponseTimeDist& common)
    : kernel(std::move(k)), rt(kernel.size() * kernel.size(), common) {}

TabularBBC::TabularBBC(ChoiceKernel k, std::vector<ResponseTimeDist> per_pair)
    : kernel(std::move(k)), rt(std::move(per_pair)) {
  if (rt.size() != kernel.size() * kernel.size()) {
    throw Error(ErrorCode::DimensionMismatch,
                "need one response time law per ordered pair");
  }
}

Eigen::MatrixXd TabularBBC::rt_mean() const {
  const auto n = kernel.size();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j) out(i, j) = rt_law(i, j).mean();
    }
  }
  return out;
}

BBCModel::BBCModel(OUParams ou) : model_(std::move(ou)) {
  std::get<OUParams>(model_).validate();
}

BBCModel::BBCModel(TabularBBC tabular) : model_(std::move(tabular)) {}

std::size_t BBCModel::size() const {
  return std::visit(
      overloaded{
          [](const OUParams& p) { return p.values.size(); },
          [](const TabularBBC& t) { return t.kernel.size(); },
      },
      model_);
}

std::optional<ChoiceKernel> BBCModel::exact_kernel() const {
  if (const auto* t = std::get_if<TabularBBC>(&model_)) return t->kernel;
  return std::nullopt;
}

std::optional<Eigen::MatrixXd> BBCModel::exact_rt_mean() const {
  if (const auto* t = std::get_if<TabularBBC>(&model_)) return t->rt_mean();
  return std::nullopt;
}

BBCSampleOutcome sample_bbc(const BBCModel& model, std::size_t proposal,
                            std::size_t incumbent, RandomStream& rng) {
  return std::visit(
      overloaded{
          [&](const OUParams& p) {
            return simulate_ou_trial(p, proposal, incumbent, rng);
          },
          [&](const TabularBBC& t) {
            require_pair(t.kernel.size(), proposal, incumbent);
            BBCSampleOutcome out;
            out.choice = rng.uniform() < t.kernel(proposal, incumbent)
                             ? proposal
                             : incumbent;
            out.response_time = t.rt_law(proposal, incumbent).sample(rng);
            return out;
          },
      },
      model.variant());
}

KernelEstimate estimate_kernel(const BBCModel& model, long trials_per_pair,
                               std::uint64_t seed, unsigned workers) {
  if (trials_per_pair < 1) {
    throw Error(ErrorCode::InvalidParameter, "trials_per_pair must be >= 1");
  }
  const auto n = model.size();
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < n; ++i) {
      if (i != j) pairs.emplace_back(i, j);
    }
  }

  struct PairTally {
    long accepted = 0;
    long uncensored = 0;
    double rt_sum = 0.0;
    double rt_sumsq = 0.0;
  };
  std::vector<PairTally> tallies(pairs.size());

  detail::parallel_chunks(
      pairs.size(), detail::resolve_workers(workers),
      [&](std::size_t, std::size_t begin, std::size_t end) {
        for (std::size_t p = begin; p < end; ++p) {
          const auto [i, j] = pairs[p];
          const auto sub = static_cast<std::uint32_t>(i * n + j);
          PairTally tally;
          for (long t = 0; t < trials_per_pair; ++t) {
            auto rng = RandomStream::keyed(seed, StreamFamily::BbcEstimate, sub,
                                           static_cast<std::uint64_t>(t));
            const auto outcome = sample_bbc(model, i, j, rng);
            if (outcome.censored) continue;
            ++tally.uncensored;
            if (outcome.choice == i) ++tally.accepted;
            const auto rt = static_cast<double>(outcome.response_time);
            tally.rt_sum += rt;
            tally.rt_sumsq += rt * rt;
          }
          tallies[p] = tally;
        }
      });

  Eigen::MatrixXd freq = Eigen::MatrixXd::Ones(n, n);
  KernelEstimate est{ChoiceKernel::from_grid(freq),
                     Eigen::MatrixXd::Zero(n, n),
                     Eigen::MatrixXd::Zero(n, n),
                     Eigen::MatrixXd::Zero(n, n),
                     Eigen::MatrixXd::Zero(n, n),
                     trials_per_pair};
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const auto [i, j] = pairs[p];
    const auto& tally = tallies[p];
    if (tally.uncensored == 0) {
      throw Error(ErrorCode::AllCensored,
                  "every trial of pair (" + std::to_string(i) + "," +
                      std::to_string(j) + ") hit max_steps");
    }
    const auto count = static_cast<double>(tally.uncensored);
    const double rate = static_cast<double>(tally.accepted) / count;
    freq(i, j) = rate;
    est.std_error(i, j) = std::sqrt(rate * (1.0 - rate) / count);
    est.rt_mean(i, j) = tally.rt_sum / count;
    est.rt_var(i, j) =
        tally.uncensored > 1
            ? std::max(0.0, (tally.rt_sumsq - count * est.rt_mean(i, j) *
                                                  est.rt_mean(i, j)) /
                                (count - 1.0))
            : 0.0;
    est.censored_frac(i, j) =
        1.0 - count / static_cast<double>(trials_per_pair);
  }
  est.kernel = ChoiceKernel::from_grid(freq);
  return est;
}

Eigen::MatrixXd mean_rt_matrix(const KernelEstimate& est) {
  Eigen::MatrixXd out = est.rt_mean;
  out.diagonal().setZero();
  return out;
}

}  // namespace nmetro
