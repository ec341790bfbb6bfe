#include "spdechar/bounds.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "spdechar/flow.hpp"
#include "spdechar/parallel.hpp"

namespace spdechar::bounds {

namespace {

constexpr double kZ99 = 2.5758293035489004;  // 99% two-sided normal quantile

// adaptive Simpson on [a,b]
double simpson_rec(const std::function<double(double)>& f, double a, double b,
                   double fa, double fm, double fb, double whole, double tol,
                   int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  if (depth <= 0 || std::abs(left + right - whole) < 15.0 * tol)
    return left + right + (left + right - whole) / 15.0;
  return simpson_rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) +
         simpson_rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1);
}

double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double tol) {
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return simpson_rec(f, a, b, fa, fm, fb, whole, tol, 48);
}

// int_0^inf exp(-a z^2 + th z) dz computed as 2 * int_0^Z with Z chosen so
// that the analytic tail bound e^{-aZ^2+thZ}/(2aZ-th) is < 1e-12 of the
// running value.
double gaussian_integral(double a, double th, const QuadratureOptions& opts) {
  auto f = [a, th](double z) { return std::exp(-a * z * z + th * z); };
  // exponent <= -60 at the cutoff
  double Z = (th + std::sqrt(th * th + 4.0 * a * 60.0)) / (2.0 * a);
  Z = std::max(Z, 1.0) * opts.z_scale;
  double value = adaptive_simpson(f, 0.0, Z, opts.rel_tol);
  for (int it = 0; it < 60; ++it) {
    const double tail = f(Z) / (2.0 * a * Z - th);
    if (tail < 1e-12 * value) break;
    const double Z2 = 2.0 * Z;
    value += adaptive_simpson(f, Z, Z2, opts.rel_tol * value);
    Z = Z2;
  }
  return value;
}

}  // namespace

double BoundConstants::eq0_bound(double x, double t) const {
  return k1 * std::pow(t, -3.0 / 8.0) * std::exp(k2 * x * x);
}

BoundConstants compute_constants(double k, double T, QuadratureOptions opts) {
  if (k < 0.0 || !(T > 0.0))
    throw std::invalid_argument("compute_constants: need k >= 0 and T > 0");
  BoundConstants c;
  c.k = k;
  c.T = T;
  const double inv2T = 1.0 / (2.0 * T);
  const double a1 = inv2T - 8.0 * k;          // c1 exponent: 8k(|z|+z^2) - z^2/2T
  const double a2 = inv2T - 792.0 * T * k * k;
  c.c1_converges = 16.0 * k * T < 1.0;
  c.c2_converges = 1584.0 * T * T * k * k < 1.0;
  const double inf = std::numeric_limits<double>::infinity();
  const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * M_PI);
  c.c1 = c.c1_converges ? 2.0 * inv_sqrt_2pi * gaussian_integral(a1, 8.0 * k, opts)
                        : inf;
  c.c2 = c.c2_converges ? 8.0 * inv_sqrt_2pi * gaussian_integral(a2, 0.0, opts)
                        : inf;
  if (c.divergent()) {
    c.k1 = inf;
    c.k2 = inf;
  } else {
    c.k1 = std::sqrt(c.c1) * std::pow(c.c2, 0.25) * std::exp(99.0 * T * k * k);
    c.k2 = 2.0 * (k + 99.0 * T * k * k);
  }
  return c;
}

namespace {

struct SampleStats {
  double mean = 0.0;
  double std_error = 0.0;
  int n = 0;
};

SampleStats reduce(const std::vector<double>& vals) {
  SampleStats s;
  s.n = static_cast<int>(vals.size());
  if (s.n == 0) return s;
  s.mean = pairwise_sum(vals.data(), vals.size()) / s.n;
  if (s.n > 1) {
    std::vector<double> sq(vals.size());
    for (std::size_t i = 0; i < vals.size(); ++i) {
      const double d = vals[i] - s.mean;
      sq[i] = d * d;
    }
    const double var = pairwise_sum(sq.data(), sq.size()) / (s.n - 1);
    s.std_error = std::sqrt(var / s.n);
  }
  return s;
}

MomentEstimate moment_from_flow(const field::DriftField& b, double x, double t,
                                const paths::BrownianEnsemble& W, double power,
                                bool fourth_of_position, int threads) {
  Eigen::VectorXd x0(1);
  x0[0] = x;
  flow::FlowOptions opts;
  opts.threads = threads;
  flow::FlowEnsemble f = flow::forward_flow(b, W, x0, opts);
  if (!fourth_of_position) flow::jacobian(f);
  const int n = W.time_index(t);

  MomentEstimate est;
  est.x = x;
  est.t = t;
  std::vector<double> vals;
  vals.reserve(W.n_paths);
  for (int m = 0; m < W.n_paths; ++m) {
    if (!f.path_ok[m]) {
      est.n_bad++;
      continue;
    }
    double v;
    if (fourth_of_position) {
      const double Xt = f.pos[0][n](m, 0);
      v = Xt * Xt * Xt * Xt;
    } else {
      v = std::exp(power * f.log_jac[n](m, 0));
    }
    if (!std::isfinite(v)) {
      est.n_bad++;
      continue;
    }
    vals.push_back(v);
  }
  est.tainted = est.n_bad > 0;
  const SampleStats s = reduce(vals);
  est.n_samples = s.n;
  est.estimate = s.mean;
  est.std_error = s.std_error;
  est.ci_low = s.mean - kZ99 * s.std_error;
  est.ci_high = s.mean + kZ99 * s.std_error;
  return est;
}

}  // namespace

MomentEstimate mc_inverse_jacobian_moment(const field::DriftField& b, double x,
                                          double t, const paths::BrownianEnsemble& W,
                                          const BoundConstants* constants,
                                          int threads) {
  MomentEstimate est = moment_from_flow(b, x, t, W, -2.0, false, threads);
  if (constants != nullptr && !constants->divergent()) {
    est.bound = constants->eq0_bound(x, t);
    est.bound_holds = est.ci_high <= *est.bound;
  }
  return est;
}

MomentEstimate mc_jacobian_moment_p(const field::DriftField& b, double x, double t,
                                    double p, const paths::BrownianEnsemble& W,
                                    int threads) {
  if (p < 1.0) throw std::invalid_argument("mc_jacobian_moment_p: need p >= 1");
  return moment_from_flow(b, x, t, W, p, false, threads);
}

FourthMoment mc_flow_fourth_moment(const field::DriftField& b, double x, double t,
                                   const paths::BrownianEnsemble& W, int threads) {
  FourthMoment out;
  out.estimate = moment_from_flow(b, x, t, W, 0.0, true, threads);
  const double T = W.horizon;
  out.ratio = out.estimate.estimate / (x * x * x * x + T * T * T * T);
  return out;
}

AffineFit fit_affine(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size() || xs.size() < 2)
    throw std::invalid_argument("fit_affine: need matching lists, size >= 2");
  const int n = static_cast<int>(xs.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = 0; i < n; ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  AffineFit fit;
  fit.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  fit.intercept = (sy - fit.slope * sx) / n;
  for (int i = 0; i < n; ++i)
    fit.max_residual = std::max(fit.max_residual,
                                std::abs(ys[i] - fit.intercept - fit.slope * xs[i]));
  return fit;
}

double fit_scale(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size() || xs.empty())
    throw std::invalid_argument("fit_scale: need matching nonempty lists");
  double num = 0, den = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    num += xs[i] * ys[i];
    den += xs[i] * xs[i];
  }
  return num / den;
}

AprioriReport weighted_apriori_check(const GridFunction& u0,
                                     const field::DriftField& b, double eps,
                                     const paths::BrownianEnsemble& W,
                                     const BoundConstants& constants,
                                     const Eigen::VectorXd& flow_knots,
                                     int threads) {
  if (constants.divergent())
    throw std::invalid_argument(
        "weighted_apriori_check: constants diverge, the w-weight is undefined");

  const field::MollifierKernel kernel = field::MollifierKernel::standard(eps);
  const field::CutoffSpec cut{1.0 / eps};

  // regularized coefficients b_eps = eta_eps (b * rho_eps), same for u0
  GridFunction b_grid = u0.like_zero();
  for (int j = 0; j < b_grid.size(); ++j) b_grid.v[j] = b.eval(b_grid.x(j));
  GridFunction b_eps = field::mollify(b_grid, kernel);
  if (b_eps.x_min <= -2.0 / eps && b_eps.x_max() >= 2.0 / eps)
    b_eps = field::compose_cutoff(b_eps, cut);
  GridFunction u0_eps = field::mollify(u0, kernel);
  if (u0_eps.x_min <= -2.0 / eps && u0_eps.x_max() >= 2.0 / eps)
    u0_eps = field::compose_cutoff(u0_eps, cut);

  const field::DriftField drift_eps =
      field::drift_from_grid(b_eps, b.growth_k, b.name + "_eps");

  flow::FlowOptions fopts;
  fopts.threads = threads;
  flow::FlowEnsemble flw = flow::forward_flow(drift_eps, W, flow_knots, fopts);
  flow::jacobian(flw);

  const solution::WeightSpec mu = solution::WeightSpec::mu();
  AprioriReport rep;

  std::vector<double> per_path;
  per_path.reserve(W.n_paths);
  bool tail_warning = false;
  for (int m = 0; m < W.n_paths; ++m) {
    if (!flw.path_ok[m]) {
      rep.tainted = true;
      continue;
    }
    // trapezoid in t of ||u_eps(t)||^2_{L^2(mu)}
    double acc = 0.0;
    for (int n = 0; n <= W.n_steps; ++n) {
      const GridFunction u = solution::continuity_solution(u0_eps, flw, m, n);
      const solution::WeightedNorm nm = solution::weighted_norm_sq(u, mu);
      tail_warning = tail_warning || nm.tail_warning;
      const double wt = (n == 0 || n == W.n_steps) ? 0.5 : 1.0;
      acc += wt * nm.value;
    }
    per_path.push_back(acc * W.dt);
  }
  rep.lhs = per_path.empty()
                ? 0.0
                : pairwise_sum(per_path.data(), per_path.size()) /
                      static_cast<double>(per_path.size());

  const solution::WeightedNorm rhs = solution::weighted_norm_sq(u0, constants.weight_w());
  rep.tail_warning = tail_warning || rhs.tail_warning;
  rep.rhs_scale = rhs.value;
  rep.ratio = rep.rhs_scale > 0.0 ? rep.lhs / rep.rhs_scale : 0.0;
  return rep;
}

}  // namespace spdechar::bounds
