#pragma once
#include <functional>
#include <vector>

#include "spdechar/field.hpp"
#include "spdechar/grid.hpp"

namespace spdechar::commutator {

enum class NormKind { l1_window, l2_window };

struct Window {
  double lo = -2.0;
  double hi = 2.0;
};

struct DecayCurve {
  std::vector<double> eps;    // strictly decreasing
  std::vector<double> norms;  // nonnegative
  NormKind kind = NormKind::l2_window;
  Window window;
  double slope = 0.0;  // fitted in log-log
};

/// R_eps(f,g) = f * d/dx(rho_eps * g) - rho_eps * (f * dg/dx).
/// Derivatives are central differences on the grid; f and g share it.
GridFunction commutator_lebris_lions(const GridFunction& f, const GridFunction& g,
                                     const field::MollifierKernel& kernel);

/// 2-D variant, summing over coordinates: f = (fx, fy).
GridFunction2 commutator_lebris_lions(const GridFunction2& fx,
                                      const GridFunction2& fy,
                                      const GridFunction2& g,
                                      const field::MollifierKernel& kernel);

/// R_eps(V,b) = b_eps * d/dx(V_eps) - rho_eps * (b * dV/dx): both factors
/// of the first product are mollified here, unlike the Le Bris-Lions form.
GridFunction commutator_primitive(const GridFunction& b, const GridFunction& V,
                                  const field::MollifierKernel& kernel);

double window_norm(const GridFunction& r, NormKind kind, const Window& win);

/// Evaluate `build(eps)` over a decreasing eps list, recording window norms
/// and the log-log slope. Any single-eps failure aborts naming that eps.
DecayCurve decay_curve(const std::function<GridFunction(double)>& build,
                       const std::vector<double>& eps_list, NormKind kind,
                       const Window& win);

}  // namespace spdechar::commutator
