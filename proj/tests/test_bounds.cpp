#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "spdechar/bounds.hpp"
#include "spdechar/field.hpp"
#include "spdechar/paths.hpp"

using namespace spdechar;
using bounds::BoundConstants;
using bounds::compute_constants;
using paths::BrownianEnsemble;

namespace {
BrownianEnsemble zero_noise(int n_steps, double T) {
  std::vector<Eigen::MatrixXd> inc = {Eigen::MatrixXd::Zero(1, n_steps)};
  return BrownianEnsemble::from_increments(T, 0, std::move(inc));
}

// closed form of the c1 integral: with a = 1/(2T) - 8k and th = 8k,
//   c1 = e^{th^2/4a} sqrt(1/(2a)) (1 + erf(th/(2 sqrt(a)))).
double c1_closed_form(double k, double T) {
  const double a = 1.0 / (2.0 * T) - 8.0 * k;
  const double th = 8.0 * k;
  return std::exp(th * th / (4.0 * a)) * std::sqrt(1.0 / (2.0 * a)) *
         (1.0 + std::erf(th / (2.0 * std::sqrt(a))));
}

double c2_closed_form(double k, double T) {
  const double a = 1.0 / (2.0 * T) - 792.0 * T * k * k;
  return 4.0 * std::sqrt(1.0 / (2.0 * a));
}
}  // namespace

TEST_CASE("constants at k=0: closed-form Gaussian values") {
  const BoundConstants c = compute_constants(0.0, 1.0);
  CHECK(c.c1_converges);
  CHECK(c.c2_converges);
  CHECK(c.c1 == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(c.c2 == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(c.k1 == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
  CHECK(c.k2 == 0.0);
  // for general T at k=0: c1 = sqrt(T), c2 = 4 sqrt(T)
  const BoundConstants ct = compute_constants(0.0, 0.25);
  CHECK(ct.c1 == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(ct.c2 == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("constants at k=0.01, T=1 against the quadrature-free closed forms") {
  const BoundConstants c = compute_constants(0.01, 1.0);
  CHECK(c.c1_converges);  // 16kT = 0.16
  CHECK(c.c2_converges);  // 1584 T^2 k^2 = 0.1584
  CHECK(c.c1 == doctest::Approx(c1_closed_form(0.01, 1.0)).epsilon(1e-11));
  CHECK(c.c2 == doctest::Approx(c2_closed_form(0.01, 1.0)).epsilon(1e-11));
  // frozen reference values (30-digit quadrature)
  CHECK(c.c1 == doctest::Approx(1.1714361978272881).epsilon(1e-11));
  CHECK(c.c2 == doctest::Approx(4.3602072019694734).epsilon(1e-11));
  CHECK(c.k1 == doctest::Approx(1.5795581446951908).epsilon(1e-10));
  CHECK(c.k2 == doctest::Approx(0.0398).epsilon(1e-14));
  CHECK(c.k2 >= 2.0 * c.k);
}

TEST_CASE("divergent state: k=1, T=1 fails both guards") {
  const BoundConstants c = compute_constants(1.0, 1.0);
  CHECK_FALSE(c.c1_converges);
  CHECK_FALSE(c.c2_converges);
  CHECK(c.divergent());
  CHECK(std::isinf(c.c1));
  CHECK(std::isinf(c.k1));
  CHECK(std::isinf(c.k2));
  CHECK_THROWS_AS(c.weight_w(), std::invalid_argument);
}

TEST_CASE("quadrature self-consistency under refinement") {
  const BoundConstants a = compute_constants(0.015, 0.8);
  bounds::QuadratureOptions opts;
  opts.rel_tol = 1e-14;
  opts.z_scale = 2.0;
  const BoundConstants b = compute_constants(0.015, 0.8, opts);
  CHECK(std::abs(a.c1 - b.c1) / a.c1 <= 1e-10);
  CHECK(std::abs(a.c2 - b.c2) / a.c2 <= 1e-10);
}

TEST_CASE("constants are nondecreasing in k") {
  const BoundConstants a = compute_constants(0.0, 1.0);
  const BoundConstants b = compute_constants(0.005, 1.0);
  const BoundConstants c = compute_constants(0.01, 1.0);
  CHECK(a.c1 <= b.c1);
  CHECK(b.c1 <= c.c1);
  CHECK(a.c2 <= b.c2);
  CHECK(b.c2 <= c.c2);
  CHECK(a.k1 <= b.k1);
  CHECK(b.k1 <= c.k1);
  CHECK(a.k2 <= b.k2);
  CHECK(b.k2 <= c.k2);
}

TEST_CASE("inverse Jacobian moment: zero drift gives exactly 1") {
  const auto b = field::make_drift("zero");
  const auto W = paths::sample_brownian(512, 20, 1.0, 7777, 1);
  const BoundConstants c0 = compute_constants(0.0, 1.0);
  for (double t : {0.25, 1.0}) {
    const auto est = bounds::mc_inverse_jacobian_moment(b, 0.3, t, W, &c0);
    CHECK(est.estimate == 1.0);  // J is identically one
    CHECK(est.std_error == 0.0);
    CHECK(est.bound_holds);
    // bound sqrt(2) t^{-3/8} >= 1 for t <= 2^{4/3}
    CHECK(*est.bound >= 1.0);
  }
}

TEST_CASE("inverse Jacobian moment: OU drift is deterministic e^{2t}") {
  const auto b = field::make_drift("ou");
  const auto W = paths::sample_brownian(64, 200, 0.02, 123, 1);
  const auto est = bounds::mc_inverse_jacobian_moment(b, 0.0, 0.02, W);
  CHECK(est.estimate == doctest::Approx(std::exp(0.04)).epsilon(1e-12));
  CHECK(est.std_error <= 1e-14);
  CHECK_FALSE(est.tainted);
}

TEST_CASE("inverse Jacobian moment: tanh(0.01) stays below the bound") {
  const auto b = field::make_drift("tanh(0.01)");
  const BoundConstants c = compute_constants(0.01, 1.0);
  const auto W = paths::sample_brownian(10000, 256, 1.0, 999, 1);
  const auto est = bounds::mc_inverse_jacobian_moment(b, 0.0, 0.25, W, &c);
  CHECK(est.bound_holds);
  CHECK(est.ci_high <= *est.bound);
  CHECK(est.estimate == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("p-th Jacobian moments: unit for zero drift, exponential for OU") {
  const auto zero = field::make_drift("zero");
  const auto W = paths::sample_brownian(128, 10, 0.5, 31, 1);
  for (double p : {1.0, 2.0, 4.0})
    CHECK(bounds::mc_jacobian_moment_p(zero, 0.0, 0.5, p, W).estimate == 1.0);

  const auto ou = field::make_drift("ou");
  const auto W2 = paths::sample_brownian(32, 100, 0.1, 32, 1);
  const auto est = bounds::mc_jacobian_moment_p(ou, 0.5, 0.1, 2.0, W2);
  CHECK(est.estimate == doctest::Approx(std::exp(-0.2)).epsilon(1e-12));

  const auto tanh_drift = field::make_drift("tanh(0.01)");
  const auto W3 = paths::sample_brownian(10000, 100, 0.5, 33, 1);
  const auto e4 = bounds::mc_jacobian_moment_p(tanh_drift, 0.0, 0.5, 4.0, W3);
  CHECK(e4.std_error / e4.estimate < 0.05);

  CHECK_THROWS_AS(bounds::mc_jacobian_moment_p(zero, 0.0, 0.5, 0.5, W),
                  std::invalid_argument);
}

TEST_CASE("fourth moment of the Brownian flow matches the Gaussian expansion") {
  const auto b = field::make_drift("zero");
  const auto W = paths::sample_brownian(100000, 1, 1.0, 2027, 1);
  // x = 0: E B_1^4 = 3, so the max-ratio constant is at least 3
  const auto at0 = bounds::mc_flow_fourth_moment(b, 0.0, 1.0, W);
  CHECK(std::abs(at0.estimate.estimate - 3.0) <=
        2.5758293035489004 * at0.estimate.std_error);
  CHECK(at0.ratio >= 2.5);

  // x = 10: E(x+B)^4 = x^4 + 6x^2 + 3 = 10603, ratio ~ 1.006
  const auto at10 = bounds::mc_flow_fourth_moment(b, 10.0, 1.0, W);
  CHECK(std::abs(at10.estimate.estimate - 10603.0) <=
        2.5758293035489004 * at10.estimate.std_error);
  CHECK(at10.ratio == doctest::Approx(1.0602).epsilon(0.01));

  // deterministic contraction: |x e^{-t}|^4 <= |x|^4
  const auto ou = field::make_drift("ou");
  const auto W0 = zero_noise(1000, 1.0);
  const auto det = bounds::mc_flow_fourth_moment(ou, 2.0, 1.0, W0);
  CHECK(det.estimate.estimate <= 16.0);
  CHECK(det.estimate.estimate ==
        doctest::Approx(std::pow(2.0 * std::exp(-1.0), 4.0)).epsilon(5e-3));
}

TEST_CASE("least-squares scale and affine fit helpers") {
  const std::vector<double> xs = {1.0, 2.0, 4.0};
  const std::vector<double> ys = {2.0, 4.0, 8.0};
  CHECK(bounds::fit_scale(xs, ys) == doctest::Approx(2.0).epsilon(1e-14));
  const auto fit = bounds::fit_affine({0.0, 1.0, 2.0}, {1.0, 3.0, 5.0});
  CHECK(fit.intercept == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(fit.slope == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(fit.max_residual <= 1e-12);
}

TEST_CASE("weighted a-priori check: zero datum, shift oracle, eps stability") {
  const auto zero_drift = field::make_drift("zero");
  const BoundConstants c0 = compute_constants(0.0, 0.25);
  const Eigen::VectorXd knots = Eigen::VectorXd::LinSpaced(577, -9.0, 9.0);

  // u0 = 0: lhs and ratio vanish
  const GridFunction u0z = GridFunction::zeros(-8, 8, 2049, "u0");
  const auto Wsmall = paths::sample_brownian(16, 16, 0.25, 4242, 1);
  const auto zrep = bounds::weighted_apriori_check(u0z, zero_drift, 0.2, Wsmall, c0, knots);
  CHECK(zrep.lhs == 0.0);
  CHECK(zrep.ratio == 0.0);

  // zero drift: the pipeline must reproduce the direct Brownian shift
  const auto u0 = GridFunction::sample(-8, 8, 2049,
                                       solution::make_initial("bump(0,1)"), "u0");
  const auto W = paths::sample_brownian(1000, 16, 0.25, 515, 1);
  const auto rep = bounds::weighted_apriori_check(u0, zero_drift, 0.2, W, c0, knots);
  CHECK(rep.ratio > 0.0);
  CHECK(std::isfinite(rep.ratio));

  // direct-shift oracle with the same paths and the same mollified datum
  const auto kernel = field::MollifierKernel::standard(0.2);
  const GridFunction u0e = field::mollify(u0, kernel);
  const auto mu = solution::WeightSpec::mu();
  double oracle = 0.0;
  for (int m = 0; m < W.n_paths; ++m) {
    double acc = 0.0;
    for (int n = 0; n <= W.n_steps; ++n) {
      GridFunction shifted = u0e.like_zero();
      for (int j = 0; j < shifted.size(); ++j)
        shifted.v[j] = u0e.interp(shifted.x(j) - W.B[0](m, n));
      const double wt = (n == 0 || n == W.n_steps) ? 0.5 : 1.0;
      acc += wt * solution::weighted_norm_sq(shifted, mu).value;
    }
    oracle += acc * W.dt;
  }
  oracle /= W.n_paths;
  CHECK(rep.lhs == doctest::Approx(oracle).epsilon(1e-8));

  // tanh(0.01): ratio varies by <= 10% across the eps sweep
  const auto b = field::make_drift("tanh(0.01)");
  const BoundConstants c1 = compute_constants(0.01, 1.0);
  const auto W2 = paths::sample_brownian(200, 16, 0.25, 516, 1);
  double rmin = 1e300, rmax = 0.0;
  for (double eps : {0.2, 0.1, 0.05}) {
    const auto r = bounds::weighted_apriori_check(u0, b, eps, W2, c1, knots);
    rmin = std::min(rmin, r.ratio);
    rmax = std::max(rmax, r.ratio);
  }
  CHECK(rmax / rmin - 1.0 <= 0.10);
}
