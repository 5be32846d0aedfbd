#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "nmetro/bbc.hpp"
#include "nmetro/chain.hpp"
#include "nmetro/stopping.hpp"

namespace nmetro {

/// Inputs of the Metropolis decision process: first-fixation law mu,
/// explorer Q and the binary comparator.
struct ProcessSpec {
  Eigen::VectorXd mu;
  ExplorationMatrix q;
  BBCModel bbc;

  void validate() const;
};

/// One run of the algorithm. Iteration n (1-based) has incumbent
/// incumbents[n-1] and lasts iteration_times[n-1] steps; clock[n] is the time
/// after it. The outcome of the last comparison is timed but not adopted.
struct ChainTrace {
  std::vector<std::size_t> incumbents;
  std::vector<long> iteration_times;
  std::vector<long> clock;
  std::size_t final_choice = 0;
  std::size_t last_outcome = 0;
  long iterations_run = 0;
};

/// Draws N from `st` first, then runs exactly N iterations.
ChainTrace run_chain(const ProcessSpec& spec, const StoppingTime& st,
                     RandomStream& rng);

struct ChoiceEstimate {
  Eigen::VectorXd frequencies;
  double mean_time = 0.0;
  /// Absent for a single trial.
  std::optional<Eigen::VectorXd> frequency_stderr;
  std::optional<double> time_stderr;
  long trials = 0;
};

ChoiceEstimate estimate_choice_distribution(const ProcessSpec& spec,
                                            const StoppingTime& st, long trials,
                                            std::uint64_t seed = kDefaultSeed,
                                            unsigned workers = 0);

enum class DeadlineMode {
  /// Read the incumbent at clock T; the straddling comparison never resolves.
  AtDeadline,
  /// Let the straddling comparison finish and report its outcome.
  FinishComparison,
};

std::size_t run_deadline_trial(const ProcessSpec& spec, double deadline,
                               RandomStream& rng,
                               DeadlineMode mode = DeadlineMode::AtDeadline);

struct ConjectureOptions {
  unsigned workers = 0;
  /// Trials per pair used to estimate the kernel of a non-tabular BBC.
  long kernel_trials = 100'000;
  DeadlineMode mode = DeadlineMode::AtDeadline;
};

struct ConjectureResult {
  std::vector<double> deadlines;
  std::vector<double> tv_distance;
  std::vector<double> tv_stderr;
  std::vector<Eigen::VectorXd> empirical;
  long trials = 0;
  Eigen::VectorXd pi;
  Eigen::VectorXd pi_star;
};

double total_variation(const Eigen::VectorXd& p, const Eigen::VectorXd& q);

/// Compares the incumbent law at each clock deadline with the
/// time-weighted stationary distribution pi*.
ConjectureResult conjecture_experiment(const ProcessSpec& spec,
                                       const std::vector<double>& deadlines,
                                       long trials,
                                       std::uint64_t seed = kDefaultSeed,
                                       const ConjectureOptions& options = {});

}  // namespace nmetro
