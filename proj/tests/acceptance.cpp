// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria.

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "nmetro/bbc.hpp"
#include "nmetro/chain.hpp"
#include "nmetro/kernel.hpp"
#include "nmetro/simulation.hpp"
#include "nmetro/stopping.hpp"
#include "oracles.hpp"

using namespace nmetro;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

ChoiceKernel to_kernel(const oracle::Mat& k) { return ChoiceKernel::from_grid(k.to_eigen()); }
ExplorationMatrix to_q(const oracle::Mat& q) { return ExplorationMatrix::from_grid(q.to_eigen()); }

// ------------------------------------------------------------ shared batteries

struct TransitiveCase {
  oracle::Vec pi;
  oracle::Mat s;
  bool unit_s;
  oracle::Mat kernel;
};

// Kernels built from a random pi and random admissible s; every fifth has
// s = 1 so both sides of the unbiasedness equivalence occur.
std::vector<TransitiveCase> transitive_battery(std::mt19937_64& gen, int count) {
  std::vector<TransitiveCase> out;
  for (int c = 0; c < count; ++c) {
    const std::size_t n = 3 + static_cast<std::size_t>(c) % 6;
    TransitiveCase tc;
    tc.pi = oracle::dirichlet(gen, n);
    tc.unit_s = c % 5 == 0;
    tc.s = tc.unit_s ? oracle::Mat(n, 1.0) : oracle::admissible_s(gen, tc.pi);
    tc.kernel = oracle::hastings_kernel(tc.pi, &tc.s);
    out.push_back(std::move(tc));
  }
  return out;
}

SymmetricPairGrid to_pairs(const oracle::Mat& s) {
  SymmetricPairGrid g(s.n, 1.0);
  for (std::size_t i = 0; i < s.n; ++i)
    for (std::size_t j = i + 1; j < s.n; ++j) g.set(i, j, s(i, j));
  return g;
}

struct ErgodicCase {
  oracle::Mat m;
  oracle::Vec mu;
  oracle::Vec tau;
};

std::vector<ErgodicCase> ergodic_battery() {
  std::mt19937_64 gen(303);
  std::uniform_real_distribution<double> u(0.5, 3.0);
  std::vector<ErgodicCase> out;
  for (int c = 0; c < 20; ++c) {
    const std::size_t n = 2 + static_cast<std::size_t>(c) % 9;
    ErgodicCase ec;
    ec.m = oracle::positive_stochastic(gen, n);
    ec.mu = oracle::dirichlet(gen, n);
    ec.tau.resize(n);
    for (auto& t : ec.tau) t = u(gen);
    out.push_back(std::move(ec));
  }
  return out;
}

// ------------------------------------------------------------ criteria

Outcome criterion1() {
  const auto start = Clock::now();
  std::mt19937_64 gen(101);
  const auto battery = transitive_battery(gen, 50);
  double worst_transitive = 0.0;
  for (const auto& tc : battery) {
    const auto q = oracle::nice_exploration(gen, tc.pi.size());
    const auto m = build_transition(to_q(q), to_kernel(tc.kernel));
    worst_transitive = std::max(worst_transitive, kolmogorov_residual(m).residual);
  }

  std::uniform_real_distribution<double> size(1e-2, 5e-2);
  double smallest_perturbed = 1e300;
  int perturbed_ok = 0, scaled_ok = 0;
  std::size_t worst_n = 0;
  for (int c = 0; c < 50; ++c) {
    const std::size_t n = 3 + static_cast<std::size_t>(c) % 6;
    const auto pi = oracle::dirichlet(gen, n);
    const auto s = oracle::admissible_s(gen, pi);
    auto k = oracle::hastings_kernel(pi, &s);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::size_t i = pick(gen), j = pick(gen);
    while (j == i) j = pick(gen);
    double delta = size(gen);
    if (k(i, j) + delta >= 1.0) delta = -delta;
    k(i, j) += delta;
    const auto q = oracle::nice_exploration(gen, n);
    const auto kernel = to_kernel(k);
    const double r = kolmogorov_residual(build_transition(to_q(q), kernel)).residual;
    if (r >= 1e-4) ++perturbed_ok;
    // Diagnostic only: the gap scaled by the cube of the smallest proposal.
    double q_min = 1.0;
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = 0; b < n; ++b)
        if (a != b) q_min = std::min(q_min, q(a, b));
    const double gap = check_transitivity(kernel).max_cycle_discrepancy;
    if (gap > 0.0 && r >= gap * q_min * q_min * q_min * (1.0 - 1e-9)) ++scaled_ok;
    if (r < smallest_perturbed) {
      smallest_perturbed = r;
      worst_n = n;
    }
  }
  const double elapsed = seconds_since(start);
  const bool pass = worst_transitive <= 1e-10 && perturbed_ok == 50 && elapsed < 5.0;
  return {pass, "transitive max residual " + fmt("%.2e", worst_transitive) +
                    "; perturbed with residual >= 1e-4: " + std::to_string(perturbed_ok) +
                    "/50, smallest " + fmt("%.2e", smallest_perturbed) + " at n=" +
                    std::to_string(worst_n) +
                    "; residual >= gap*min(Q)^3 on " + std::to_string(scaled_ok) + "/50; " +
                    fmt("%.2f s", elapsed)};
}

Outcome criterion2() {
  const auto start = Clock::now();
  std::mt19937_64 gen(202);
  const auto battery = transitive_battery(gen, 50);
  double worst = 0.0;
  for (const auto& tc : battery) {
    const auto k = to_kernel(tc.kernel);
    const auto d = hastings_decompose(k);
    for (int rep = 0; rep < 3; ++rep) {
      const auto q = oracle::nice_exploration(gen, tc.pi.size());
      const auto pi = stationary_distribution(build_transition(to_q(q), k));
      worst = std::max(worst, (pi - d.pi).cwiseAbs().maxCoeff());
      worst = std::max(worst, oracle::max_abs_diff(oracle::from_eigen(pi), tc.pi));
    }
  }
  const double elapsed = seconds_since(start);
  return {worst <= 1e-10 && elapsed < 5.0,
          "max |pi_decomp - pi_stationary| " + fmt("%.2e", worst) + "; " + fmt("%.2f s", elapsed)};
}

Outcome criterion3() {
  double worst = 0.0;
  for (const auto& ec : ergodic_battery()) {
    const auto m = TransitionMatrix::from_grid(ec.m.to_eigen());
    for (double z : {0.1, 0.5, 0.9}) {
      const auto closed = choice_probabilities(m, oracle::to_eigen(ec.mu), StoppingTime::geometric(z));
      const auto series = oracle::choice_series(
          ec.m, ec.mu, [z](long k) { return oracle::geometric_pmf(z, k); }, 1.0 / (1.0 - z));
      worst = std::max(worst, oracle::max_abs_diff(oracle::from_eigen(closed), series));
    }
  }
  return {worst < 1e-10, "max deviation " + fmt("%.2e", worst)};
}

Outcome criterion4() {
  double worst = 0.0;
  for (const auto& ec : ergodic_battery()) {
    const auto m = TransitionMatrix::from_grid(ec.m.to_eigen());
    for (double lambda : {0.5, 3.0, 10.0}) {
      const auto closed =
          choice_probabilities(m, oracle::to_eigen(ec.mu), StoppingTime::poisson_shifted(lambda));
      const auto series = oracle::choice_series(
          ec.m, ec.mu, [lambda](long k) { return oracle::poisson_shifted_pmf(lambda, k); },
          1.0 + lambda);
      worst = std::max(worst, oracle::max_abs_diff(oracle::from_eigen(closed), series));
    }
  }
  return {worst < 1e-10, "max deviation " + fmt("%.2e", worst)};
}

Outcome criterion5() {
  double worst = 0.0, worst_oracle = 0.0;
  for (const auto& ec : ergodic_battery()) {
    const auto m = TransitionMatrix::from_grid(ec.m.to_eigen());
    const auto mu = oracle::to_eigen(ec.mu);
    const auto tau = oracle::to_eigen(ec.tau);
    std::vector<std::pair<StoppingTime, std::function<double(long)>>> laws;
    double means[6];
    int idx = 0;
    for (double z : {0.1, 0.5, 0.9}) {
      laws.emplace_back(StoppingTime::geometric(z), [z](long k) { return oracle::geometric_pmf(z, k); });
      means[idx++] = 1.0 / (1.0 - z);
    }
    for (double l : {0.5, 3.0, 10.0}) {
      laws.emplace_back(StoppingTime::poisson_shifted(l),
                        [l](long k) { return oracle::poisson_shifted_pmf(l, k); });
      means[idx++] = 1.0 + l;
    }
    for (std::size_t c = 0; c < laws.size(); ++c) {
      const double a = mean_decision_time_double_sum(m, mu, tau, laws[c].first);
      const double b = mean_decision_time_tail_sum(m, mu, tau, laws[c].first);
      worst = std::max(worst, std::abs(a - b) / std::abs(b));
      const double brute = oracle::mean_time_double_sum(ec.m, ec.mu, ec.tau, laws[c].second, means[c]);
      worst_oracle = std::max(worst_oracle, std::abs(b - brute) / std::abs(brute));
    }
  }
  return {worst < 1e-10 && worst_oracle < 1e-10,
          "double-sum vs tail-sum relative gap " + fmt("%.2e", worst) +
              "; vs brute-force oracle " + fmt("%.2e", worst_oracle)};
}

Outcome criterion6() {
  double worst = 0.0;
  for (const auto& ec : ergodic_battery()) {
    const auto m = TransitionMatrix::from_grid(ec.m.to_eigen());
    const auto mu = oracle::to_eigen(ec.mu);
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(ec.mu.size()));
    const std::pair<StoppingTime, double> cases[] = {
        {StoppingTime::fixed(1), 1.0},           {StoppingTime::fixed(25), 25.0},
        {StoppingTime::geometric(0.1), 1 / 0.9}, {StoppingTime::geometric(0.5), 2.0},
        {StoppingTime::geometric(0.9), 10.0},    {StoppingTime::poisson_shifted(0.5), 1.5},
        {StoppingTime::poisson_shifted(3), 4.0}, {StoppingTime::poisson_shifted(10), 11.0}};
    for (const auto& [st, expected] : cases) {
      worst = std::max(worst, std::abs(mean_decision_time(m, mu, ones, st) - expected));
    }
  }
  return {worst < 1e-12, "max |T - E[N]| " + fmt("%.2e", worst)};
}

Outcome criterion7() {
  const auto start = Clock::now();
  const auto k = to_kernel(oracle::k3());
  const auto q = to_q(oracle::q3());
  const auto rt = oracle::rt_fixture();
  std::vector<ResponseTimeDist> laws;
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      laws.push_back(i == j ? ResponseTimeDist::constant(1) : ResponseTimeDist::geometric(rt(i, j)));
  const ProcessSpec spec{Eigen::VectorXd::Constant(3, 1.0 / 3.0), q, BBCModel(TabularBBC(k, laws))};
  const auto m = build_transition(q, k);
  const auto tau = conditional_iteration_time(q, rt.to_eigen());

  const long trials = 100000;
  double worst_z = 0.0, worst_time_z = 0.0;
  for (const auto& st : {StoppingTime::geometric(0.5), StoppingTime::fixed(25),
                         StoppingTime::poisson_shifted(3)}) {
    const auto exact = analyze_stopped(m, spec.mu, tau, st);
    const auto mc = estimate_choice_distribution(spec, st, trials, kDefaultSeed, 0);
    for (Eigen::Index i = 0; i < 3; ++i) {
      const double sigma = std::sqrt(exact.p(i) * (1 - exact.p(i)) / trials);
      worst_z = std::max(worst_z, std::abs(mc.frequencies(i) - exact.p(i)) / sigma);
    }
    worst_time_z = std::max(worst_time_z, std::abs(mc.mean_time - exact.mean_decision_time) / *mc.time_stderr);
  }
  const double elapsed = seconds_since(start);
  return {worst_z <= 4.0 && worst_time_z <= 4.0 && elapsed < 30.0,
          "max |z| choice " + fmt("%.2f", worst_z) + ", mean time " + fmt("%.2f", worst_time_z) +
              "; " + fmt("%.2f s", elapsed)};
}

Outcome criterion8() {
  std::mt19937_64 gen(808);
  std::uniform_real_distribution<double> u(1e-3, 1.0 - 1e-3);
  double min_entry = 1.0, min_gap = 1.0;
  for (int c = 0; c < 100; ++c) {
    const std::size_t n = 2 + static_cast<std::size_t>(c) % 9;
    oracle::Mat k(n, 1.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i != j) k(i, j) = u(gen);
    const auto q = oracle::nice_exploration(gen, n);
    const auto m = build_transition(to_q(q), to_kernel(k));
    min_entry = std::min(min_entry, m.grid().minCoeff());
    for (std::size_t j = 0; j < n; ++j) min_gap = std::min(min_gap, m(j, j) - q(j, j));
  }
  return {min_entry > 0.0 && min_gap > 0.0,
          "min entry of M " + fmt("%.2e", min_entry) + ", min M(j|j)-Q(j|j) " + fmt("%.2e", min_gap)};
}

Outcome criterion9() {
  std::mt19937_64 gen(101);  // same battery as criterion 1
  const auto battery = transitive_battery(gen, 50);
  double worst_pi = 0.0, worst_s = 0.0;
  int agree = 0;
  for (const auto& tc : battery) {
    const auto k = luce_kernel(oracle::to_eigen(tc.pi), to_pairs(tc.s));
    const auto d = hastings_decompose(k);
    worst_pi = std::max(worst_pi, oracle::max_abs_diff(oracle::from_eigen(d.pi), tc.pi));
    double s_dev = 0.0;
    for (std::size_t i = 0; i < tc.pi.size(); ++i)
      for (std::size_t j = 0; j < tc.pi.size(); ++j)
        if (i != j) {
          worst_s = std::max(worst_s, std::abs(d.s(i, j) - tc.s(i, j)));
          s_dev = std::max(s_dev, std::abs(d.s(i, j) - 1.0));
        }
    const bool s_is_one = s_dev <= 1e-9;
    if (is_unbiased(k, 1e-9) == s_is_one && s_is_one == tc.unit_s) ++agree;
  }
  return {worst_pi <= 1e-10 && worst_s <= 1e-10 && agree == 50,
          "round trip pi " + fmt("%.2e", worst_pi) + ", s " + fmt("%.2e", worst_s) +
              "; unbiased <=> s=1 on " + std::to_string(agree) + "/50"};
}

Outcome criterion10() {
  OUParams sym;
  sym.values = {0.3, 0.3, 0.3};
  sym.beta = 5.0;
  const long trials = 100000;
  const auto est = estimate_kernel(BBCModel(sym), trials, kDefaultSeed, 0);
  double worst_z = 0.0;
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      if (i != j) worst_z = std::max(worst_z, std::abs(est.kernel(i, j) - 0.5) / std::sqrt(0.25 / trials));

  OUParams drift;
  drift.values = {0.1, 0.0};
  drift.beta = 10.0;
  const auto fit = estimate_kernel(BBCModel(drift), 1000000, kDefaultSeed, 0);
  const double ref = oracle::ou_accept_frequency(0.1, 1.0, 10.0, 0.0, 1000000, 1234567);
  const double gap = std::abs(fit.kernel(0, 1) - ref);
  return {worst_z <= 4.0 && gap <= 0.01,
          "symmetric max |z| " + fmt("%.2f", worst_z) + "; drift estimate " +
              fmt("%.4f", fit.kernel(0, 1)) + " vs oracle " + fmt("%.4f", ref) +
              " (logistic anchor 0.8808)"};
}

Outcome criterion11() {
  const auto start = Clock::now();
  const auto k = to_kernel(oracle::k3());
  const auto q = to_q(oracle::q3());
  const auto rt = oracle::rt_fixture();
  std::vector<ResponseTimeDist> laws;
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      laws.push_back(i == j ? ResponseTimeDist::constant(1) : ResponseTimeDist::geometric(rt(i, j)));
  // Start from the least likely alternative so the approach to pi* is visible.
  const ProcessSpec spec{Eigen::Vector3d(0, 0, 1), q, BBCModel(TabularBBC(k, laws))};
  const auto r = conjecture_experiment(spec, {10, 50, 250, 1250}, 100000, kDefaultSeed);

  const Eigen::Vector3d target(0.571429, 0.257143, 0.171429);
  const bool target_ok = (r.pi_star - target).cwiseAbs().maxCoeff() < 1e-6;
  bool monotone = true;
  std::ostringstream tv;
  for (std::size_t d = 0; d < r.deadlines.size(); ++d) {
    tv << (d ? ", " : "") << fmt("%.4f", r.tv_distance[d]);
    if (d > 0) {
      const double noise = 4.0 * std::hypot(r.tv_stderr[d], r.tv_stderr[d - 1]);
      if (r.tv_distance[d] > r.tv_distance[d - 1] + noise) monotone = false;
    }
  }
  const double elapsed = seconds_since(start);
  const bool pass = target_ok && monotone && r.tv_distance.back() < 0.02 && elapsed < 120.0;
  return {pass, "TV at T=10,50,250,1250: " + tv.str() + (monotone ? "" : " (not monotone)") +
                    "; " + fmt("%.1f s", elapsed)};
}

Outcome criterion12() {
  std::mt19937_64 gen(1212);
  std::vector<std::pair<oracle::Mat, oracle::Mat>> fixtures{{oracle::k3(), oracle::q3()}};
  const auto battery = transitive_battery(gen, 20);
  for (const auto& tc : battery) fixtures.emplace_back(tc.kernel, oracle::nice_exploration(gen, tc.pi.size()));
  double worst = 0.0;
  for (const auto& [kern, expl] : fixtures) {
    const auto m = build_transition(to_q(expl), to_kernel(kern));
    const auto sd = spectral_decompose(m, stationary_distribution(m));
    const auto mu = oracle::to_eigen(oracle::dirichlet(gen, kern.n));
    for (const auto& st : {StoppingTime::fixed(1), StoppingTime::fixed(25), StoppingTime::geometric(0.5),
                           StoppingTime::geometric(0.9), StoppingTime::poisson_shifted(3),
                           StoppingTime::poisson_shifted(10)}) {
      const auto spectral = choice_probabilities_spectral(sd, mu, st);
      const auto direct = choice_probabilities_series(m, mu, st, 1e-15).p;
      worst = std::max(worst, (spectral - direct).cwiseAbs().maxCoeff());
    }
  }
  return {worst <= 1e-9, "max |spectral - direct| " + fmt("%.2e", worst)};
}

}  // namespace

int main() {
  const std::function<Outcome()> criteria[] = {criterion1, criterion2, criterion3,  criterion4,
                                               criterion5, criterion6, criterion7,  criterion8,
                                               criterion9, criterion10, criterion11, criterion12};
  int failed = 0;
  for (std::size_t c = 0; c < std::size(criteria); ++c) {
    Outcome o;
    try {
      o = criteria[c]();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::printf("%s criterion %zu: %s\n", o.pass ? "PASS" : "FAIL", c + 1, o.detail.c_str());
    std::fflush(stdout);
  }
  return failed;
}
