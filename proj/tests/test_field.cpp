#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "spdechar/field.hpp"
#include "spdechar/grid.hpp"
#include "spdechar/rng.hpp"

using namespace spdechar;
using field::CutoffSpec;
using field::MollifierKernel;

namespace {
std::vector<double> linspace_vec(double a, double b, int n) {
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = a + (b - a) * i / (n - 1);
  return v;
}
}  // namespace

TEST_CASE("linear growth: zero field holds with ratio 0") {
  const auto b = field::make_drift("zero");
  const auto rep = field::verify_linear_growth(b, linspace_vec(-10, 10, 201), 0.5);
  CHECK(rep.holds);
  CHECK(rep.worst_ratio == 0.0);
}

TEST_CASE("linear growth: b=x maximizes |x|/(1+|x|) at the boundary") {
  const auto b = field::make_drift("linear(1)");
  const auto rep = field::verify_linear_growth(b, linspace_vec(-10, 10, 201), 1.0);
  CHECK(rep.holds);
  CHECK(rep.worst_ratio == doctest::Approx(10.0 / 11.0).epsilon(1e-12));
  CHECK(std::abs(rep.argmax) == doctest::Approx(10.0));
}

TEST_CASE("linear growth: b=x^2 fails with ratio 25/6 at x=5") {
  field::DriftField b;
  b.b1 = [](double x) { return x * x; };
  const auto rep = field::verify_linear_growth(b, linspace_vec(-5, 5, 101), 1.0);
  CHECK_FALSE(rep.holds);
  CHECK(rep.worst_ratio == doctest::Approx(25.0 / 6.0).epsilon(1e-12));
}

TEST_CASE("linear growth: non-finite evaluation names the point") {
  field::DriftField b;
  b.b1 = [](double x) { return 1.0 / x; };
  CHECK_THROWS_WITH_AS(field::verify_linear_growth(b, {1.0, 0.0}, 1.0),
                       doctest::Contains("x=0"), std::runtime_error);
}

TEST_CASE("mollify preserves constants and linear functions") {
  const auto kernel = MollifierKernel::standard(0.1);
  const auto c = GridFunction::sample(-2, 2, 513, [](double) { return 3.25; });
  const auto mc = field::mollify(c, kernel);
  for (int j = 0; j < c.size(); ++j)
    CHECK(mc.v[j] == doctest::Approx(3.25).epsilon(1e-13));

  const auto lin = GridFunction::sample(-2, 2, 513, [](double x) { return x; });
  const auto ml = field::mollify(lin, kernel);
  for (int j = 0; j < lin.size(); ++j) {
    if (std::abs(lin.x(j)) > 2 - 0.15) continue;  // interior only
    CHECK(ml.v[j] == doctest::Approx(lin.x(j)).epsilon(1e-12));
  }
}

TEST_CASE("mollify of x^2 adds exactly the discrete second moment") {
  const auto kernel = MollifierKernel::standard(0.1);
  const auto f = GridFunction::sample(-2, 2, 513, [](double x) { return x * x; });
  const auto mf = field::mollify(f, kernel);
  const double m2d = field::discrete_second_moment(kernel, f.h);
  // sampled m2 close to the closed-form eps^2/11
  CHECK(m2d == doctest::Approx(0.1 * 0.1 / 11.0).epsilon(0.02));
  for (int j = 0; j < f.size(); ++j) {
    if (std::abs(f.x(j)) > 2 - 0.15) continue;
    CHECK(mf.v[j] == doctest::Approx(f.x(j) * f.x(j) + m2d).epsilon(1e-11));
  }
}

TEST_CASE("mollify rejects an unresolved kernel") {
  const auto f = GridFunction::sample(-1, 1, 17, [](double x) { return x; });
  CHECK_THROWS_AS(field::mollify(f, MollifierKernel::standard(0.2)),
                  std::invalid_argument);
}

TEST_CASE("mollification is linear") {
  const auto kernel = MollifierKernel::standard(0.08);
  for (std::uint64_t trial = 0; trial < 20; ++trial) {
    auto rnd = [&](std::uint64_t i) {
      return 2.0 * rng::to_unit(rng::keyed(42, trial, i, 0)) - 1.0;
    };
    GridFunction f = GridFunction::zeros(-1, 1, 257);
    GridFunction g = GridFunction::zeros(-1, 1, 257);
    for (int j = 0; j < f.size(); ++j) {
      f.v[j] = rnd(2 * j);
      g.v[j] = rnd(2 * j + 1);
    }
    const double a = 2.0 * rnd(1000), b = -1.5 * rnd(1001);
    GridFunction combo = f;
    combo.v = a * f.v + b * g.v;
    const auto lhs = field::mollify(combo, kernel);
    const auto mf = field::mollify(f, kernel);
    const auto mg = field::mollify(g, kernel);
    for (int j = 0; j < f.size(); ++j)
      CHECK(lhs.v[j] ==
            doctest::Approx(a * mf.v[j] + b * mg.v[j]).epsilon(1e-12));
  }
}

TEST_CASE("discrete derivative commutes with discrete convolution") {
  const auto kernel = MollifierKernel::standard(0.1);
  const auto f = GridFunction::sample(-2, 2, 513, [](double x) { return std::sin(3 * x); });
  const auto mf = field::mollify(f, kernel);
  GridFunction df = f;
  df.v = f.deriv_central();
  const auto mdf = field::mollify(df, kernel);
  const Eigen::ArrayXd dmf = mf.deriv_central();
  for (int j = 0; j < f.size(); ++j) {
    if (std::abs(f.x(j)) > 2 - 0.15) continue;
    CHECK(dmf[j] == doctest::Approx(mdf.v[j]).epsilon(1e-12));
  }
  // against the analytic derivative the defect is the O(h^2) truncation
  const auto danalytic =
      GridFunction::sample(-2, 2, 513, [](double x) { return 3 * std::cos(3 * x); });
  const auto mda = field::mollify(danalytic, kernel);
  const double h = f.h;
  for (int j = 0; j < f.size(); ++j) {
    if (std::abs(f.x(j)) > 2 - 0.15) continue;
    CHECK(std::abs(dmf[j] - mda.v[j]) <= 27.0 / 6.0 * h * h * 1.5);
  }
}

TEST_CASE("mollifying twice commutes in the kernel widths") {
  const auto f = GridFunction::sample(-2, 2, 1025, [](double x) { return std::exp(-x * x); });
  const auto k1 = MollifierKernel::standard(0.1);
  const auto k2 = MollifierKernel::standard(0.05);
  const auto a = field::mollify(field::mollify(f, k1), k2);
  const auto b = field::mollify(field::mollify(f, k2), k1);
  for (int j = 0; j < f.size(); ++j) {
    if (std::abs(f.x(j)) > 2 - 0.35) continue;
    CHECK(a.v[j] == doctest::Approx(b.v[j]).epsilon(1e-12));
  }
}

TEST_CASE("kernel invariants: symmetric, nonnegative, unit mass") {
  for (int power : {2, 4}) {
    const MollifierKernel k{power, 0.3};
    double mass = 0.0;
    const int n = 20001;
    const double h = 2.0 / (n - 1);
    for (int i = 0; i < n; ++i) {
      const double z = -1.0 + i * h;
      const double d = k.unit_density(z);
      CHECK(d >= 0.0);
      CHECK(d == doctest::Approx(k.unit_density(-z)).epsilon(1e-14));
      mass += ((i == 0 || i == n - 1) ? 0.5 : 1.0) * d * h;
    }
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(k.unit_density(1.0) == 0.0);
    CHECK(k.m2() == doctest::Approx(1.0 / (2.0 * power + 3.0)));
  }
}

TEST_CASE("two kernel shapes agree on the mollification limit") {
  const auto f = GridFunction::sample(-2, 2, 2049, [](double x) { return std::sin(2 * x); });
  const MollifierKernel k4{4, 0.05};
  const MollifierKernel k2{2, 0.05};
  const auto a = field::mollify(f, k4);
  const auto b = field::mollify(f, k2);
  // both are f + O(eps^2), so they differ by O(eps^2) as well
  for (int j = 0; j < f.size(); ++j) {
    if (std::abs(f.x(j)) > 2 - 0.1) continue;
    CHECK(std::abs(a.v[j] - b.v[j]) <= 0.05 * 0.05 * 4.0);
  }
}

TEST_CASE("cutoff: unit plateau, vanishing tail, intermediate bound") {
  const CutoffSpec cut1{1.0};
  const auto one = GridFunction::sample(-3, 3, 769, [](double) { return 1.0; });
  const auto c1 = field::compose_cutoff(one, cut1);
  for (int j = 0; j < one.size(); ++j) {
    const double x = one.x(j);
    if (std::abs(x) <= 1.0) CHECK(c1.v[j] == 1.0);
    if (std::abs(x) >= 2.0) CHECK(c1.v[j] == 0.0);
    CHECK(c1.v[j] >= 0.0);
    CHECK(c1.v[j] <= 1.0);
  }

  const auto zero = GridFunction::sample(-3, 3, 769, [](double) { return 0.0; });
  const auto c0 = field::compose_cutoff(zero, cut1);
  CHECK(c0.v.abs().maxCoeff() == 0.0);

  const CutoffSpec cut4{4.0};
  const auto lin = GridFunction::sample(-9, 9, 2305, [](double x) { return x; });
  const auto c4 = field::compose_cutoff(lin, cut4);
  const double at3 = c4.interp(3.0);
  CHECK(at3 >= 0.0);
  CHECK(at3 <= 3.0);
  CHECK(at3 == doctest::Approx(3.0));  // |3| < R=4, eta = 1

  CHECK_THROWS_AS(field::compose_cutoff(one, CutoffSpec{2.0}), std::invalid_argument);
}

TEST_CASE("lps exponent arithmetic and strictness") {
  const auto a = field::lps_exponent({4.0, 8.0, 1});
  CHECK(a.value == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(a.satisfied);

  const auto b = field::lps_exponent({2.0, 2.0, 2});
  CHECK(b.value == doctest::Approx(2.0).epsilon(1e-15));
  CHECK_FALSE(b.satisfied);

  const auto c = field::lps_exponent({1e9, 2.0, 1});
  CHECK(c.value == doctest::Approx(1.0).epsilon(1e-6));
  CHECK_FALSE(c.satisfied);  // boundary excluded by the strict inequality

  CHECK_THROWS_AS(field::lps_exponent({1.5, 4.0, 1}), std::out_of_range);
}

TEST_CASE("named drift families carry their growth constants") {
  const auto tanh_drift = field::make_drift("tanh(0.01)");
  const auto rep =
      field::verify_linear_growth(tanh_drift, linspace_vec(-20, 20, 401), 0.01);
  CHECK(rep.holds);

  const auto holder = field::make_drift("holder(0.5)", 0.02);
  CHECK(holder.growth_k == doctest::Approx(0.01).epsilon(1e-12));
  const auto hrep =
      field::verify_linear_growth(holder, linspace_vec(-20, 20, 801), holder.growth_k);
  CHECK(hrep.holds);
  CHECK(hrep.worst_ratio == doctest::Approx(0.01).epsilon(1e-3));

  CHECK_THROWS_AS(field::make_drift("holder(1.5)"), std::invalid_argument);
  CHECK_THROWS_AS(field::make_drift("nosuch"), std::invalid_argument);

  const auto rot = field::make_drift("rotation");
  CHECK(rot.dim == 2);
  CHECK(rot.divergence_free);
  // trace(Db) = 0 pointwise
  const Eigen::Matrix2d J = rot.deriv2(Eigen::Vector2d(0.3, -1.2));
  CHECK(J.trace() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("grid-backed drift interpolates values and derivative") {
  const auto g = GridFunction::sample(-2, 2, 1025, [](double x) { return std::tanh(x); });
  const auto d = field::drift_from_grid(g, 1.0);
  CHECK(d.eval(0.37) == doctest::Approx(std::tanh(0.37)).epsilon(1e-5));
  const double sech2 = 1.0 - std::tanh(0.37) * std::tanh(0.37);
  CHECK(d.deriv(0.37) == doctest::Approx(sech2).epsilon(1e-3));
}
