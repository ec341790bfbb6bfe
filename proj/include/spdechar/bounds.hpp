#pragma once
#include <optional>
#include <vector>

#include "spdechar/field.hpp"
#include "spdechar/grid.hpp"
#include "spdechar/paths.hpp"
#include "spdechar/solution.hpp"

namespace spdechar::bounds {

/// Explicit constants of the negative-moment estimate
///   E[|dX_t/dx|^{-2}] <= k1 * t^{-3/8} * exp(k2 x^2),
/// with c1, c2 Gaussian-type integrals evaluated by quadrature:
///   c1 = 1/sqrt(2 pi) * int exp(8k(|z|+z^2) - z^2/(2T)) dz
///   c2 = 4/sqrt(2 pi) * int exp(792 T k^2 z^2 - z^2/(2T)) dz
///   k1 = sqrt(c1) * c2^{1/4} * exp(99 T k^2),   k2 = 2(k + 99 T k^2).
/// The integrals converge iff 16kT < 1 resp. 1584 T^2 k^2 < 1; a failed
/// guard is a reported divergent state (constants +inf), not an error.
struct BoundConstants {
  double k = 0.0;
  double T = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;
  double k1 = 0.0;
  double k2 = 0.0;
  bool c1_converges = false;
  bool c2_converges = false;

  bool divergent() const { return !(c1_converges && c2_converges); }
  double eq0_bound(double x, double t) const;
  solution::WeightSpec weight_w() const { return solution::WeightSpec::w(k2); }
};

struct QuadratureOptions {
  double rel_tol = 1e-13;
  double z_scale = 1.0;  // multiplies the automatically chosen cutoff Z
};

BoundConstants compute_constants(double k, double T, QuadratureOptions opts = {});

/// One Monte Carlo moment estimate with its 99% confidence interval
/// (half-width 2.576 * stderr). `bound` is filled when constants were
/// supplied and converge; bound_holds compares the upper CI edge.
struct MomentEstimate {
  double x = 0.0;
  double t = 0.0;
  int n_samples = 0;
  double estimate = 0.0;
  double std_error = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  bool tainted = false;  // non-finite samples or guard-box blowups occurred
  int n_bad = 0;
  std::optional<double> bound;
  bool bound_holds = true;
};

MomentEstimate mc_inverse_jacobian_moment(const field::DriftField& b, double x,
                                          double t, const paths::BrownianEnsemble& W,
                                          const BoundConstants* constants = nullptr,
                                          int threads = 0);

MomentEstimate mc_jacobian_moment_p(const field::DriftField& b, double x, double t,
                                    double p, const paths::BrownianEnsemble& W,
                                    int threads = 0);

struct FourthMoment {
  MomentEstimate estimate;
  double ratio = 0.0;  // estimate / (|x|^4 + T^4)
};

FourthMoment mc_flow_fourth_moment(const field::DriftField& b, double x, double t,
                                   const paths::BrownianEnsemble& W, int threads = 0);

struct AffineFit {
  double intercept = 0.0;
  double slope = 0.0;
  double max_residual = 0.0;
};

AffineFit fit_affine(const std::vector<double>& xs, const std::vector<double>& ys);

/// Least-squares constant C through the origin for y ~ C * x.
double fit_scale(const std::vector<double>& xs, const std::vector<double>& ys);

/// Monte Carlo check of the weighted a-priori estimate: lhs is the path
/// average of int_0^T ||u_eps(t)||^2_{L^2(mu)} dt for the mollified
/// problem, rhs_scale is ||u0||^2_{L^2(w)}.
struct AprioriReport {
  double lhs = 0.0;
  double rhs_scale = 0.0;
  double ratio = 0.0;
  bool tainted = false;
  bool tail_warning = false;
};

AprioriReport weighted_apriori_check(const GridFunction& u0,
                                     const field::DriftField& b, double eps,
                                     const paths::BrownianEnsemble& W,
                                     const BoundConstants& constants,
                                     const Eigen::VectorXd& flow_knots,
                                     int threads = 0);

}  // namespace spdechar::bounds
