#include "nmetro/simulation.hpp"

#include <cmath>
#include <string>

#include "parallel.hpp"

namespace nmetro {

namespace {

std::size_t draw_categorical(const Eigen::VectorXd& cumulative,
                             RandomStream& rng) {
  const double u = rng.uniform() * cumulative(cumulative.size() - 1);
  for (Eigen::Index k = 0; k < cumulative.size(); ++k) {
    if (u < cumulative(k)) return static_cast<std::size_t>(k);
  }
  return static_cast<std::size_t>(cumulative.size() - 1);
}

// Cumulative sums of mu and of every column of Q, built once per call.
struct Samplers {
  Eigen::VectorXd mu;
  std::vector<Eigen::VectorXd> columns;
  std::vector<bool> absorbing;

  explicit Samplers(const ProcessSpec& spec) {
    mu = spec.mu;
    for (Eigen::Index k = 1; k < mu.size(); ++k) mu(k) += mu(k - 1);
    const auto n = spec.q.size();
    for (std::size_t j = 0; j < n; ++j) {
      Eigen::VectorXd col = spec.q.grid().col(static_cast<Eigen::Index>(j));
      for (Eigen::Index k = 1; k < col.size(); ++k) col(k) += col(k - 1);
      columns.push_back(std::move(col));
      absorbing.push_back(spec.q(j, j) >= 1.0);
    }
  }
};

struct RunResult {
  std::size_t choice;
  long clock;
};

RunResult run_core(const ProcessSpec& spec, const Samplers& samplers,
                   const StoppingTime& st, RandomStream& rng,
                   ChainTrace* trace) {
  const long iterations = st.sample(rng);
  std::size_t incumbent = draw_categorical(samplers.mu, rng);
  long clock = 0;
  if (trace) {
    trace->incumbents.assign(1, incumbent);
    trace->clock.assign(1, 0);
    trace->iteration_times.clear();
    trace->iterations_run = iterations;
  }
  for (long n = 1; n <= iterations; ++n) {
    const std::size_t proposal = draw_categorical(samplers.columns[incumbent], rng);
    std::size_t outcome = incumbent;
    long elapsed = 0;  // self-proposals are timeless no-ops
    if (proposal != incumbent) {
      const auto sample = sample_bbc(spec.bbc, proposal, incumbent, rng);
      outcome = sample.choice;
      elapsed = sample.response_time;
    }
    clock += elapsed;
    if (trace) {
      trace->iteration_times.push_back(elapsed);
      trace->clock.push_back(clock);
    }
    if (n == iterations) {
      if (trace) trace->last_outcome = outcome;
      break;
    }
    incumbent = outcome;
    if (trace) trace->incumbents.push_back(incumbent);
  }
  if (trace) trace->final_choice = incumbent;
  return {incumbent, clock};
}

std::size_t deadline_core(const ProcessSpec& spec, const Samplers& samplers,
                          double deadline, RandomStream& rng,
                          DeadlineMode mode) {
  std::size_t incumbent = draw_categorical(samplers.mu, rng);
  long clock = 0;
  for (;;) {
    if (samplers.absorbing[incumbent]) return incumbent;
    const std::size_t proposal = draw_categorical(samplers.columns[incumbent], rng);
    if (proposal == incumbent) continue;
    const auto sample = sample_bbc(spec.bbc, proposal, incumbent, rng);
    if (static_cast<double>(clock + sample.response_time) > deadline) {
      return mode == DeadlineMode::AtDeadline ? incumbent : sample.choice;
    }
    clock += sample.response_time;
    incumbent = sample.choice;
  }
}

}  // namespace

void ProcessSpec::validate() const {
  const auto n = q.size();
  if (static_cast<std::size_t>(mu.size()) != n || bbc.size() != n) {
    throw Error(ErrorCode::DimensionMismatch,
                "initial law, exploration matrix and BBC model sizes differ");
  }
  require_distribution(mu, /*full_support=*/false, 1e-10);
}

ChainTrace run_chain(const ProcessSpec& spec, const StoppingTime& st,
                     RandomStream& rng) {
  spec.validate();
  const Samplers samplers(spec);
  ChainTrace trace;
  run_core(spec, samplers, st, rng, &trace);
  return trace;
}

ChoiceEstimate estimate_choice_distribution(const ProcessSpec& spec,
                                            const StoppingTime& st, long trials,
                                            std::uint64_t seed,
                                            unsigned workers) {
  if (trials < 1) {
    throw Error(ErrorCode::InvalidParameter, "trials must be >= 1");
  }
  spec.validate();
  const Samplers samplers(spec);
  const auto n = static_cast<Eigen::Index>(spec.q.size());
  const unsigned threads = detail::resolve_workers(workers);

  // Integer tallies make the aggregate independent of the chunking.
  struct Tally {
    std::vector<long> counts;
    __int128 clock_sum = 0;
    __int128 clock_sumsq = 0;
  };
  std::vector<Tally> tallies(threads);
  detail::parallel_chunks(
      static_cast<std::size_t>(trials), threads,
      [&](std::size_t chunk, std::size_t begin, std::size_t end) {
        Tally tally;
        tally.counts.assign(static_cast<std::size_t>(n), 0);
        for (std::size_t t = begin; t < end; ++t) {
          auto rng = RandomStream::keyed(seed, StreamFamily::ChoiceEstimate, 0, t);
          const auto run = run_core(spec, samplers, st, rng, nullptr);
          ++tally.counts[run.choice];
          tally.clock_sum += run.clock;
          tally.clock_sumsq += static_cast<__int128>(run.clock) * run.clock;
        }
        tallies[chunk] = std::move(tally);
      });

  std::vector<long> counts(static_cast<std::size_t>(n), 0);
  __int128 clock_sum = 0;
  __int128 clock_sumsq = 0;
  for (const auto& tally : tallies) {
    for (std::size_t k = 0; k < tally.counts.size(); ++k) {
      counts[k] += tally.counts[k];
    }
    clock_sum += tally.clock_sum;
    clock_sumsq += tally.clock_sumsq;
  }

  const auto total = static_cast<double>(trials);
  ChoiceEstimate out;
  out.trials = trials;
  out.frequencies.resize(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    out.frequencies(k) = static_cast<double>(counts[static_cast<std::size_t>(k)]) / total;
  }
  out.mean_time = static_cast<double>(clock_sum) / total;
  if (trials > 1) {
    Eigen::VectorXd se(n);
    for (Eigen::Index k = 0; k < n; ++k) {
      const double p = out.frequencies(k);
      se(k) = std::sqrt(p * (1.0 - p) / total);
    }
    out.frequency_stderr = se;
    const double centered =
        static_cast<double>(clock_sumsq) - total * out.mean_time * out.mean_time;
    out.time_stderr = std::sqrt(std::max(0.0, centered / (total - 1.0)) / total);
  }
  return out;
}

std::size_t run_deadline_trial(const ProcessSpec& spec, double deadline,
                               RandomStream& rng, DeadlineMode mode) {
  if (!(deadline > 0.0)) {
    throw Error(ErrorCode::NonPositiveDeadline, "deadline must be positive");
  }
  spec.validate();
  const Samplers samplers(spec);
  return deadline_core(spec, samplers, deadline, rng, mode);
}

double total_variation(const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
  if (p.size() != q.size()) {
    throw Error(ErrorCode::DimensionMismatch, "distribution lengths differ");
  }
  return 0.5 * (p - q).cwiseAbs().sum();
}

ConjectureResult conjecture_experiment(const ProcessSpec& spec,
                                       const std::vector<double>& deadlines,
                                       long trials, std::uint64_t seed,
                                       const ConjectureOptions& options) {
  if (trials < 1) {
    throw Error(ErrorCode::InvalidParameter, "trials must be >= 1");
  }
  for (double d : deadlines) {
    if (!(d > 0.0)) {
      throw Error(ErrorCode::NonPositiveDeadline, "deadlines must be positive");
    }
  }
  spec.validate();

  std::optional<ChoiceKernel> kernel = spec.bbc.exact_kernel();
  std::optional<Eigen::MatrixXd> rt_mean = spec.bbc.exact_rt_mean();
  if (!kernel || !rt_mean) {
    const auto est =
        estimate_kernel(spec.bbc, options.kernel_trials, seed, options.workers);
    kernel = est.kernel;
    rt_mean = mean_rt_matrix(est);
  }
  if (!is_positive(*kernel)) {
    throw Error(ErrorCode::NotPositive, "the BBC kernel must be positive");
  }

  ConjectureResult out;
  out.deadlines = deadlines;
  out.trials = trials;
  out.pi = stationary_distribution(build_transition(spec.q, *kernel));
  out.pi_star = time_weighted_stationary(out.pi, spec.q, *rt_mean);

  const Samplers samplers(spec);
  const auto n = static_cast<std::size_t>(spec.q.size());
  const unsigned threads = detail::resolve_workers(options.workers);
  const auto total = static_cast<double>(trials);
  for (std::size_t d = 0; d < deadlines.size(); ++d) {
    std::vector<std::vector<long>> partial(threads);
    detail::parallel_chunks(
        static_cast<std::size_t>(trials), threads,
        [&](std::size_t chunk, std::size_t begin, std::size_t end) {
          std::vector<long> counts(n, 0);
          for (std::size_t t = begin; t < end; ++t) {
            auto rng = RandomStream::keyed(seed, StreamFamily::Deadline,
                                           static_cast<std::uint32_t>(d), t);
            ++counts[deadline_core(spec, samplers, deadlines[d], rng,
                                   options.mode)];
          }
          partial[chunk] = std::move(counts);
        });
    Eigen::VectorXd freq = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    for (const auto& counts : partial) {
      for (std::size_t k = 0; k < counts.size(); ++k) {
        freq(static_cast<Eigen::Index>(k)) += static_cast<double>(counts[k]);
      }
    }
    freq /= total;
    double se = 0.0;
    for (Eigen::Index k = 0; k < freq.size(); ++k) {
      se += std::sqrt(freq(k) * (1.0 - freq(k)) / total);
    }
    out.tv_distance.push_back(total_variation(freq, out.pi_star));
    out.tv_stderr.push_back(0.5 * se);
    out.empirical.push_back(std::move(freq));
  }
  return out;
}

}  // namespace nmetro
