#include <doctest.h>

#include "nmetro/bbc.hpp"
#include "oracles.hpp"

using namespace nmetro;

namespace {

template <typename F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error raised");
  return ErrorCode::NumericalFailure;
}

OUParams ou(std::vector<double> values, double beta) {
  OUParams p;
  p.values = std::move(values);
  p.beta = beta;
  return p;
}

}  // namespace

TEST_CASE("OU parameter validation") {
  CHECK_NOTHROW(ou({0, 1}, 1).validate());
  CHECK(code_of([] { ou({0}, 1).validate(); }) == ErrorCode::InvalidParameter);
  CHECK(code_of([] { ou({0, 1}, 0).validate(); }) == ErrorCode::InvalidParameter);
  auto p = ou({0, 1}, 1);
  p.lambda = 1.0;
  CHECK(code_of([&] { p.validate(); }) == ErrorCode::InvalidParameter);
  p = ou({0, 1}, 1);
  p.sigma = 0.0;
  CHECK(code_of([&] { p.validate(); }) == ErrorCode::InvalidParameter);
  auto rng = RandomStream::keyed(1, StreamFamily::Adhoc, 0, 0);
  CHECK(code_of([&] { simulate_ou_trial(ou({0, 1}, 1), 1, 1, rng); }) == ErrorCode::SamePair);
}

TEST_CASE("tiny threshold decides in one step") {
  const auto p = ou({0, 0.3, 1}, 1e-4);
  auto rng = RandomStream::keyed(1, StreamFamily::Adhoc, 0, 0);
  for (int t = 0; t < 2000; ++t) {
    const auto out = simulate_ou_trial(p, 2, 0, rng);
    CHECK(out.response_time == 1);
    CHECK_FALSE(out.censored);
  }
}

TEST_CASE("drift schedule") {
  const auto d = DriftSchedule::table({1.0, 0.5, 0.25});
  CHECK(d.at(0) == 1.0);
  CHECK(d.at(2) == 0.25);
  CHECK(d.at(100) == 0.25);
  CHECK(DriftSchedule::constant(2.0).at(7) == 2.0);
  CHECK(code_of([] { DriftSchedule::table({}); }) == ErrorCode::InvalidParameter);
}

TEST_CASE("censoring keeps the sign of the evidence") {
  auto p = ou({0, 5}, 1e9);
  p.max_steps = 3;
  auto rng = RandomStream::keyed(4, StreamFamily::Adhoc, 0, 0);
  const auto out = simulate_ou_trial(p, 1, 0, rng);
  CHECK(out.censored);
  CHECK(out.response_time == 3);
  CHECK(out.choice == 1);
  CHECK(code_of([&] { estimate_kernel(BBCModel(p), 10, 1, 1); }) == ErrorCode::AllCensored);
}

TEST_CASE("equal values give a fair coin") {
  const auto est = estimate_kernel(BBCModel(ou({0.2, 0.2, 0.2}, 2.0)), 20000, 3, 0);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) {
      if (i == j) continue;
      CHECK(std::abs(est.kernel(i, j) - 0.5) < 4.0 * std::sqrt(0.25 / 20000));
      CHECK(est.std_error(i, j) == doctest::Approx(std::sqrt(est.kernel(i, j) * (1 - est.kernel(i, j)) / 20000)));
      CHECK(est.rt_mean(i, j) > 1.0);
    }
  CHECK(est.trials_per_pair == 20000);
}

TEST_CASE("estimate does not depend on the worker count") {
  const BBCModel model(ou({0.0, 0.4, 0.9}, 1.5));
  const auto a = estimate_kernel(model, 3000, 99, 1);
  const auto b = estimate_kernel(model, 3000, 99, 3);
  CHECK(a.kernel.grid() == b.kernel.grid());
  CHECK(a.rt_mean == b.rt_mean);
  CHECK(a.rt_var == b.rt_var);
}

TEST_CASE("OU drift against the std:: oracle") {
  auto p = ou({0.1, 0.0}, 10.0);
  const auto est = estimate_kernel(BBCModel(p), 20000, 5, 0);
  const double ref = oracle::ou_accept_frequency(0.1, 1.0, 10.0, 0.0, 20000, 77);
  const double se = std::sqrt(2.0 * ref * (1 - ref) / 20000);
  CHECK(std::abs(est.kernel(0, 1) - ref) < 4.0 * se);
}

TEST_CASE("response time laws") {
  CHECK(ResponseTimeDist::constant(3).mean() == 3.0);
  CHECK(ResponseTimeDist::constant(3).variance() == 0.0);
  const auto g = ResponseTimeDist::geometric(2.0);
  CHECK(g.mean() == 2.0);
  CHECK(g.variance() == doctest::Approx(2.0));
  const auto t = ResponseTimeDist::table({{1, 0.5}, {3, 0.5}});
  CHECK(t.mean() == 2.0);
  CHECK(t.variance() == 1.0);
  CHECK(code_of([] { ResponseTimeDist::geometric(0.5); }) == ErrorCode::InvalidParameter);
  CHECK(code_of([] { ResponseTimeDist::table({{1, 0.5}}); }) == ErrorCode::InvalidDistribution);

  auto rng = RandomStream::keyed(8, StreamFamily::Adhoc, 0, 0);
  double s = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const long x = g.sample(rng);
    REQUIRE(x >= 1);
    s += static_cast<double>(x);
  }
  CHECK(std::abs(s / n - 2.0) < 4.0 * std::sqrt(2.0 / n));
}

TEST_CASE("tabular model") {
  const auto k = ChoiceKernel::from_grid(oracle::k3().to_eigen());
  const TabularBBC tab(k, ResponseTimeDist::constant(1));
  const BBCModel model(tab);
  CHECK(model.is_tabular());
  CHECK(model.exact_kernel()->grid() == k.grid());
  const auto rt = *model.exact_rt_mean();
  CHECK(rt(0, 1) == 1.0);
  CHECK(rt(1, 1) == 0.0);
  CHECK_FALSE(BBCModel(ou({0, 1}, 1)).exact_kernel());

  const auto est = estimate_kernel(model, 40000, 1, 0);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      if (i != j) CHECK(std::abs(est.kernel(i, j) - k(i, j)) < 4.0 * std::sqrt(0.25 / 40000));
  CHECK(mean_rt_matrix(est)(0, 1) == 1.0);
}
