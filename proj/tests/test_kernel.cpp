#include <doctest.h>

#include <random>

#include "nmetro/kernel.hpp"
#include "oracles.hpp"

using namespace nmetro;

namespace {

ChoiceKernel k3() { return ChoiceKernel::from_grid(oracle::k3().to_eigen()); }

ChoiceKernel perturbed_k3() {
  Eigen::MatrixXd g = oracle::k3().to_eigen();
  g(1, 0) = 0.5;
  return ChoiceKernel::from_grid(g);
}

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

}  // namespace

TEST_CASE("validate_kernel") {
  Eigen::MatrixXd two(2, 2);
  two << 9, 0.5, 0.5, 9;
  const auto k = validate_kernel(two);
  CHECK(k(0, 0) == 1.0);
  CHECK(k(0, 1) == 0.5);

  Eigen::MatrixXd bad = oracle::k3().to_eigen();
  bad(1, 0) = 1.2;
  CHECK(code_of([&] { validate_kernel(bad); }) == ErrorCode::EntryOutOfRange);
  CHECK(code_of([] { validate_kernel(Eigen::MatrixXd::Zero(2, 3)); }) ==
        ErrorCode::NonSquare);
  CHECK(code_of([] { validate_kernel(Eigen::MatrixXd::Zero(1, 1)); }) ==
        ErrorCode::NonSquare);

  const auto fixture = k3();
  CHECK(fixture(0, 1) == doctest::Approx(0.625));
  CHECK(fixture(2, 0) == doctest::Approx(2.0 / 7.0));
}

TEST_CASE("positivity and unbiasedness") {
  CHECK(is_positive(k3()));
  Eigen::MatrixXd g = oracle::k3().to_eigen();
  g(0, 1) = 0.0;
  CHECK_FALSE(is_positive(validate_kernel(g)));
  g(0, 1) = 1.0;
  CHECK_FALSE(is_positive(validate_kernel(g)));

  CHECK(is_unbiased(k3(), 1e-12));
  g = oracle::k3().to_eigen();
  g(0, 1) = g(1, 0) = 0.4;
  CHECK_FALSE(is_unbiased(validate_kernel(g), 1e-12));
  CHECK(is_unbiased(validate_kernel(g), 1.0));
}

TEST_CASE("transitivity") {
  Eigen::MatrixXd two(2, 2);
  two << 1, 0.9, 0.3, 1;
  const auto r2 = check_transitivity(validate_kernel(two));
  CHECK(r2.max_cycle_discrepancy == 0.0);
  CHECK(r2.is_transitive);

  const auto r3 = check_transitivity(k3());
  CHECK(r3.max_cycle_discrepancy < 1e-15);
  CHECK(r3.is_transitive);

  const auto rp = check_transitivity(perturbed_k3(), 1e-9);
  CHECK(rp.max_cycle_discrepancy == doctest::Approx(0.5 * 0.4 * 5.0 / 7.0 - 0.75 / 7.0));
  CHECK(rp.max_cycle_discrepancy == doctest::Approx(0.0357143).epsilon(1e-5));
  CHECK_FALSE(rp.is_transitive);
  CHECK(rp.worst_triple == std::array<std::size_t, 3>{0, 1, 2});
}

TEST_CASE("transitivity never reads the diagonal") {
  std::mt19937_64 gen(3);
  for (int rep = 0; rep < 20; ++rep) {
    const std::size_t n = 3 + rep % 5;
    Eigen::MatrixXd g = Eigen::MatrixXd::Random(n, n).cwiseAbs();
    const auto k = validate_kernel(g);
    const auto a = check_transitivity(k);
    const auto b = check_transitivity(k.with_diagonal(Eigen::VectorXd::Random(n) * 7.0));
    CHECK(a.max_cycle_discrepancy == b.max_cycle_discrepancy);
    CHECK(a.worst_triple == b.worst_triple);
  }
}

TEST_CASE("hastings decomposition") {
  const auto d = hastings_decompose(k3());
  CHECK(oracle::max_abs_diff(oracle::from_eigen(d.pi), oracle::kPi3) < 1e-12);
  CHECK(d.unbiased);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      if (i != j) CHECK(d.s(i, j) == doctest::Approx(1.0));

  oracle::Mat half(3, 0.5);
  const auto scaled =
      hastings_decompose(ChoiceKernel::from_grid(oracle::hastings_kernel(oracle::kPi3, &half).to_eigen()));
  CHECK(oracle::max_abs_diff(oracle::from_eigen(scaled.pi), oracle::kPi3) < 1e-12);
  CHECK(scaled.s(0, 2) == doctest::Approx(0.5));
  CHECK_FALSE(scaled.unbiased);

  CHECK(code_of([] { hastings_decompose(perturbed_k3()); }) == ErrorCode::NotTransitive);
  try {
    hastings_decompose(perturbed_k3());
  } catch (const NotTransitiveError& e) {
    CHECK(e.report().max_cycle_discrepancy > 0.03);
  }
  Eigen::MatrixXd g = oracle::k3().to_eigen();
  g(0, 1) = 0.0;
  CHECK(code_of([&] { hastings_decompose(validate_kernel(g)); }) == ErrorCode::NotPositive);
}

TEST_CASE("round trip, reference independence and unbiasedness equivalence") {
  std::mt19937_64 gen(11);
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t n = 2 + rep % 7;
    const auto pi = oracle::dirichlet(gen, n);
    const bool unit = rep % 3 == 0;
    oracle::Mat s = unit ? oracle::Mat(n, 1.0) : oracle::admissible_s(gen, pi);
    const auto expected = oracle::hastings_kernel(pi, &s);

    SymmetricPairGrid sg(n, 1.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) sg.set(i, j, s(i, j));
    const auto k = luce_kernel(oracle::to_eigen(pi), sg);
    CHECK((k.grid() - expected.to_eigen()).cwiseAbs().maxCoeff() < 1e-15);
    CHECK(is_positive(k));
    CHECK(check_transitivity(k).is_transitive);

    const auto d = hastings_decompose(k);
    CHECK(oracle::max_abs_diff(oracle::from_eigen(d.pi), pi) < 1e-10);
    double s_err = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i != j) s_err = std::max(s_err, std::abs(d.s(i, j) - s(i, j)));
    CHECK(s_err < 1e-10);
    CHECK(d.unbiased == unit);
    CHECK(is_unbiased(k) == d.unbiased);

    for (std::size_t ref = 1; ref < n; ++ref) {
      const auto other = hastings_decompose(k, kDefaultTolerance, ref);
      CHECK((other.pi - d.pi).cwiseAbs().maxCoeff() < 1e-10);
    }
  }
}

TEST_CASE("luce_kernel") {
  const auto k = luce_kernel(oracle::to_eigen(oracle::kPi3));
  CHECK((k.grid() - oracle::k3().to_eigen()).cwiseAbs().maxCoeff() < 1e-15);

  Eigen::VectorXd two(2);
  two << 0.5, 0.5;
  CHECK(luce_kernel(two)(0, 1) == 0.5);

  two << 0.9, 0.1;
  SymmetricPairGrid s(2, 3.0);
  CHECK(code_of([&] { luce_kernel(two, s); }) == ErrorCode::EntryOutOfRange);
  two << 0.9, 0.2;
  CHECK(code_of([&] { luce_kernel(two); }) == ErrorCode::InvalidDistribution);
  two << 1.0, 0.0;
  CHECK(code_of([&] { luce_kernel(two); }) == ErrorCode::InvalidDistribution);
}

TEST_CASE("symmetric pair grid") {
  SymmetricPairGrid s(4, 1.0);
  s.set(3, 1, 2.5);
  CHECK(s(1, 3) == 2.5);
  CHECK(s(3, 1) == 2.5);
  const auto m = s.to_matrix();
  CHECK(m(1, 3) == 2.5);
  CHECK(m(2, 2) == 0.0);
  Eigen::MatrixXd asym = m;
  asym(0, 1) = 7.0;
  CHECK(code_of([&] { SymmetricPairGrid::from_matrix(asym); }) != ErrorCode::NumericalFailure);
}
