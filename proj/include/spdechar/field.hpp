#pragma once
#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "spdechar/grid.hpp"

namespace spdechar::field {

/// A velocity field b together with the structural data the estimates need:
/// a declared linear-growth constant k (|b(x)| <= k(1+|x|)), an optional
/// analytic spatial derivative, and a divergence-free flag.
struct DriftField {
  int dim = 1;
  std::string name = "custom";
  std::function<double(double)> b1;
  std::function<double(double)> db1;  // optional analytic derivative
  std::function<Eigen::Vector2d(const Eigen::Vector2d&)> b2;
  std::function<Eigen::Matrix2d(const Eigen::Vector2d&)> jac2;  // optional
  double growth_k = 0.0;
  bool divergence_free = false;
  double fd_step = 1e-5;  // finite-difference step when no derivative given

  double eval(double x) const { return b1(x); }

  double deriv(double x) const {
    if (db1) return db1(x);
    return (b1(x + fd_step) - b1(x - fd_step)) / (2.0 * fd_step);
  }

  Eigen::Vector2d eval2(const Eigen::Vector2d& x) const { return b2(x); }

  Eigen::Matrix2d deriv2(const Eigen::Vector2d& x) const {
    if (jac2) return jac2(x);
    Eigen::Matrix2d J;
    for (int c = 0; c < 2; ++c) {
      Eigen::Vector2d e = Eigen::Vector2d::Zero();
      e[c] = fd_step;
      J.col(c) = (b2(x + e) - b2(x - e)) / (2.0 * fd_step);
    }
    return J;
  }
};

/// Named analytic families selectable from the CLI config:
///   zero | linear(a) | ou | tanh(k) | rotation | holder(alpha)
/// `scale` multiplies the field (and its declared growth constant).
DriftField make_drift(const std::string& spec, double scale = 1.0);

/// Wrap a grid-sampled field (e.g. a mollified drift) as a DriftField.
/// Evaluation is linear interpolation with edge continuation; the
/// derivative comes from central differences of the samples.
DriftField drift_from_grid(const GridFunction& g, double growth_k,
                           std::string name = "grid");

/// Symmetric compact bump rho(z) ~ (1-z^2)^power on [-1,1], rescaled to
/// width eps. Closed-form unit second moment m2 = 1/(2*power+3).
struct MollifierKernel {
  int power = 4;
  double eps = 0.1;

  double m2() const { return 1.0 / (2.0 * power + 3.0); }
  double unit_density(double z) const;  // normalized on [-1,1]

  static MollifierKernel standard(double eps) { return MollifierKernel{4, eps}; }
};

/// Kernel weights sampled on a grid of spacing h and renormalized to sum
/// to 1 (index i runs over offsets i*h, |i| <= eps/h). Exposed so tests
/// can use the discrete moments the convolution actually applies.
std::vector<double> sampled_weights(const MollifierKernel& k, double h);
double discrete_second_moment(const MollifierKernel& k, double h);

/// Smooth cutoff eta_R(x) = eta(x/R): identically 1 on |x| <= R,
/// identically 0 on |x| >= 2R, C^inf in between.
struct CutoffSpec {
  double radius = 1.0;
  double eta(double x) const;  // profile of |x|/R
};

struct LpsQuery {
  double p = 2.0;
  double q = 2.0;
  int dim = 1;
};

struct LpsResult {
  double value = 0.0;
  bool satisfied = false;
};

struct GrowthReport {
  bool holds = false;
  double worst_ratio = 0.0;
  double argmax = 0.0;
};

/// max over samples of |b(x)| / (1+|x|) compared against k.
GrowthReport verify_linear_growth(const DriftField& b,
                                  const std::vector<double>& samples, double k);

/// Discrete convolution with the renormalized sampled kernel. Requires
/// h <= eps/4; edge values continue outside the grid.
GridFunction mollify(const GridFunction& f, const MollifierKernel& kernel);

GridFunction2 mollify(const GridFunction2& f, const MollifierKernel& kernel);

/// Pointwise product with eta_R. The grid must cover [-2R, 2R].
GridFunction compose_cutoff(const GridFunction& f, const CutoffSpec& cut);

/// d/p + 2/q, satisfied iff strictly below 1; requires p,q in [2,inf).
LpsResult lps_exponent(const LpsQuery& qry);

}  // namespace spdechar::field
