#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "spdechar/paths.hpp"
#include "spdechar/rng.hpp"

using namespace spdechar;
using paths::BrownianEnsemble;
using paths::sample_brownian;

TEST_CASE("inverse normal CDF round-trips through erfc") {
  auto Phi = [](double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); };
  for (double p : {1e-12, 1e-6, 0.01, 0.2, 0.5, 0.7, 0.99, 1 - 1e-9}) {
    const double x = rng::normal_inv_cdf(p);
    CHECK(Phi(x) == doctest::Approx(p).epsilon(1e-12));
  }
  CHECK(rng::normal_inv_cdf(0.5) == 0.0);
}

TEST_CASE("identical inputs give bitwise-identical ensembles") {
  const auto a = sample_brownian(8, 16, 1.0, 12345, 1);
  const auto b = sample_brownian(8, 16, 1.0, 12345, 1);
  CHECK((a.dB[0] - b.dB[0]).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.B[0] - b.B[0]).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("generation is independent of the thread count") {
  const auto a = sample_brownian(37, 9, 0.7, 99, 2, 1);
  const auto b = sample_brownian(37, 9, 0.7, 99, 2, 4);
  for (int c = 0; c < 2; ++c)
    CHECK((a.dB[c] - b.dB[c]).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("partial sums start at zero and accumulate exactly") {
  const auto e = sample_brownian(5, 31, 2.0, 7, 1);
  for (int m = 0; m < 5; ++m) {
    CHECK(e.B[0](m, 0) == 0.0);
    double s = 0.0;
    for (int n = 0; n < 31; ++n) {
      s += e.dB[0](m, n);
      CHECK(e.B[0](m, n + 1) == s);  // bitwise: same summation order
    }
  }
}

TEST_CASE("one-step ensemble matches the CLT and chi-square envelopes") {
  const int M = 100000;
  {
    const auto e = sample_brownian(M, 1, 1.0, 2024, 1);
    const double mean = e.dB[0].sum() / M;
    CHECK(std::abs(mean) <= 5.0 / std::sqrt(static_cast<double>(M)));
  }
  {
    const auto e = sample_brownian(M, 1, 4.0, 2025, 1);
    const double mean = e.dB[0].sum() / M;
    const double var = (e.dB[0].array() - mean).square().sum() / (M - 1);
    CHECK(std::abs(var - 4.0) <= 5.0 * std::sqrt(2.0 / M) * 4.0);
  }
}

TEST_CASE("terminal variance within five standard errors of T") {
  const int M = 20000;
  const double T = 1.5;
  const auto e = sample_brownian(M, 8, T, 31415, 1);
  const auto bt = e.B[0].col(8);
  const double mean = bt.sum() / M;
  const double var = (bt.array() - mean).square().sum() / (M - 1);
  CHECK(std::abs(var - T) <= 5.0 * std::sqrt(2.0 / M) * T);
}

TEST_CASE("paths are empirically independent") {
  const int M = 100000;
  const auto e = sample_brownian(M, 4, 1.0, 777, 1);
  const auto bt = e.B[0].col(4);
  const double mean = bt.sum() / M;
  double cov = 0.0, var = 0.0;
  for (int m = 0; m + 1 < M; ++m) {
    cov += (bt(m) - mean) * (bt(m + 1) - mean);
    var += (bt(m) - mean) * (bt(m) - mean);
  }
  const double corr = cov / var;
  CHECK(std::abs(corr) <= 5.0 / std::sqrt(static_cast<double>(M)));
}

TEST_CASE("refining N with the same seed uses a fresh stream") {
  const auto coarse = sample_brownian(4, 2, 1.0, 5, 1);
  const auto fine = sample_brownian(4, 4, 1.0, 5, 1);
  // fine increments summed pairwise should NOT reproduce the coarse draw
  double max_dev = 0.0;
  for (int m = 0; m < 4; ++m)
    max_dev = std::max(max_dev, std::abs(coarse.dB[0](m, 0) -
                                         (fine.dB[0](m, 0) + fine.dB[0](m, 1))));
  CHECK(max_dev > 1e-8);
}

TEST_CASE("coarsen sums fine increments exactly") {
  const auto fine = sample_brownian(6, 32, 0.5, 11, 1);
  const auto coarse = paths::coarsen(fine, 4);
  CHECK(coarse.n_steps == 8);
  CHECK(coarse.dt == doctest::Approx(4 * fine.dt));
  for (int m = 0; m < 6; ++m)
    for (int q = 0; q < 8; ++q) {
      double s = 0.0;
      for (int i = 0; i < 4; ++i) s += fine.dB[0](m, 4 * q + i);
      CHECK(coarse.dB[0](m, q) == s);  // bitwise: same order of summation
    }
  // terminal values coincide up to re-association only
  for (int m = 0; m < 6; ++m)
    CHECK(coarse.B[0](m, 8) ==
          doctest::Approx(fine.B[0](m, 32)).epsilon(1e-14));
}

TEST_CASE("time_index accepts grid times and rejects others") {
  const auto e = sample_brownian(1, 10, 1.0, 3, 1);
  CHECK(e.time_index(0.3) == 3);
  CHECK(e.time_index(1.0) == 10);
  CHECK_THROWS_AS(e.time_index(0.35), std::invalid_argument);
}

TEST_CASE("invalid arguments are rejected") {
  CHECK_THROWS_AS(sample_brownian(0, 1, 1.0, 1, 1), std::invalid_argument);
  CHECK_THROWS_AS(sample_brownian(1, 0, 1.0, 1, 1), std::invalid_argument);
  CHECK_THROWS_AS(sample_brownian(1, 1, -1.0, 1, 1), std::invalid_argument);
  CHECK_THROWS_WITH_AS(sample_brownian(1, 1, 1.0, 1, 3),
                       doctest::Contains("unsupported dimension"),
                       std::invalid_argument);
}
