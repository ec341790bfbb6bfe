#pragma once
#include <functional>
#include <string>

#include "spdechar/field.hpp"
#include "spdechar/flow.hpp"
#include "spdechar/grid.hpp"

namespace spdechar::solution {

/// Weights for the two weighted L^2 spaces in play:
///   mu(x) = (1+|x|)^2   and   w(x) = exp(2*k2*x^2).
struct WeightSpec {
  enum class Kind { mu, w };
  Kind kind = Kind::mu;
  double k2 = 0.0;

  double eval(double x) const {
    if (kind == Kind::mu) {
      const double a = 1.0 + std::abs(x);
      return a * a;
    }
    return std::exp(2.0 * k2 * x * x);
  }

  static WeightSpec mu() { return WeightSpec{Kind::mu, 0.0}; }

  /// Requires a finite k2, i.e. the convergence guards passed.
  static WeightSpec w(double k2);
};

/// Smooth compactly supported test function: the polynomial bump
/// phi(x) = amp*(1-z^2)^4, z=(x-c)/s, with analytic phi', phi'' and exact
/// primitive theta(x) = int_{-inf}^x phi (constant to the right of the
/// support). General profiles (e.g. cutoff-composed) plug in through the
/// std::function members; theta may be absent for those.
struct TestFunction {
  std::function<double(double)> phi;
  std::function<double(double)> dphi;
  std::function<double(double)> ddphi;
  std::function<double(double)> theta;
  double support_lo = 0.0;
  double support_hi = 0.0;

  static TestFunction bump(double center, double halfwidth, double amplitude = 1.0);

  /// phi * eta_R with analytic product derivatives (used by localization
  /// experiments; theta is not carried).
  static TestFunction bump_with_cutoff(double center, double halfwidth,
                                       const field::CutoffSpec& cut,
                                       double amplitude = 1.0);
};

/// Tensor-product bump for the 2-D weak form, with gradient and Laplacian.
struct TestFunction2 {
  double cx = 0.0, cy = 0.0, s = 1.0, amp = 1.0;
  double phi(double x, double y) const;
  double dphi_dx(double x, double y) const;
  double dphi_dy(double x, double y) const;
  double laplacian(double x, double y) const;
};

/// Named initial conditions: gauss(c,s) | bump(c,s) | step_smoothed(c,s).
std::function<double(double)> make_initial(const std::string& spec);

/// u(t,x) = u0(psi_t(x)) on u0's grid, psi the interpolated inverse flow.
GridFunction transport_solution(const GridFunction& u0,
                                const flow::FlowEnsemble& flw, int m, int t_index);

/// u(t,x) = u0(psi_t(x)) / J(t, psi_t(x)): the continuity form. Uses the
/// 1-D identity J = exp(int b'(X_s) ds), with J interpolated linearly in
/// its initial point. Requires jacobian(flw) to have run.
GridFunction continuity_solution(const GridFunction& u0,
                                 const flow::FlowEnsemble& flw, int m, int t_index);

/// Same, but evaluated on the nodes of `target` (its values are ignored);
/// lets a wide u0 lookup table feed a narrow evaluation window.
GridFunction continuity_solution_on(const GridFunction& u0, const GridFunction& target,
                                    const flow::FlowEnsemble& flw, int m, int t_index);

/// 2-D transport solution on u0's grid via the backward equation driven by
/// the same increments (no monotone inverse exists in 2-D).
GridFunction2 transport_solution_2d(const GridFunction2& u0,
                                    const field::DriftField& b,
                                    const paths::BrownianEnsemble& W, int m,
                                    int t_index, int threads = 0);

/// V(x_j) = cumulative trapezoid of u from x_min.
GridFunction primitive(const GridFunction& u);

struct WeightedNorm {
  double value = 0.0;
  bool tail_warning = false;  // boundary integrand above 1e-8 of its max
};

WeightedNorm weighted_norm_sq(const GridFunction& u, const WeightSpec& w);

double mass(const GridFunction& u);

double l2_norm_sq(const GridFunction2& u);

/// int |grad u|^2 by central differences (H^1 diagnostic).
double grad_norm_sq(const GridFunction2& u);

}  // namespace spdechar::solution
