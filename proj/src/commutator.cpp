#include "spdechar/commutator.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace spdechar::commutator {

GridFunction commutator_lebris_lions(const GridFunction& f, const GridFunction& g,
                                     const field::MollifierKernel& kernel) {
  if (f.size() != g.size() || std::abs(f.h - g.h) > 1e-15)
    throw std::invalid_argument("commutator: f and g must share the grid");
  const GridFunction gs = field::mollify(g, kernel);
  GridFunction fg = g.like_zero();
  const Eigen::ArrayXd dg = g.deriv_central();
  fg.v = f.v * dg;
  const GridFunction fgs = field::mollify(fg, kernel);
  GridFunction out = g.like_zero();
  out.tag = "R_eps";
  out.v = f.v * gs.deriv_central() - fgs.v;
  return out;
}

GridFunction2 commutator_lebris_lions(const GridFunction2& fx,
                                      const GridFunction2& fy,
                                      const GridFunction2& g,
                                      const field::MollifierKernel& kernel) {
  const GridFunction2 gs = field::mollify(g, kernel);
  const int n = g.nx(), m = g.ny();
  auto ddx = [&](const GridFunction2& u, int i, int j) {
    const int il = std::max(i - 1, 0), ih = std::min(i + 1, n - 1);
    return (u.v(ih, j) - u.v(il, j)) / ((ih - il) * u.hx);
  };
  auto ddy = [&](const GridFunction2& u, int i, int j) {
    const int jl = std::max(j - 1, 0), jh = std::min(j + 1, m - 1);
    return (u.v(i, jh) - u.v(i, jl)) / ((jh - jl) * u.hy);
  };
  GridFunction2 fdg = g;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j)
      fdg.v(i, j) = fx.v(i, j) * ddx(g, i, j) + fy.v(i, j) * ddy(g, i, j);
  const GridFunction2 fdgs = field::mollify(fdg, kernel);
  GridFunction2 out = g;
  out.tag = "R_eps";
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j)
      out.v(i, j) = fx.v(i, j) * ddx(gs, i, j) + fy.v(i, j) * ddy(gs, i, j) -
                    fdgs.v(i, j);
  return out;
}

GridFunction commutator_primitive(const GridFunction& b, const GridFunction& V,
                                  const field::MollifierKernel& kernel) {
  if (b.size() != V.size() || std::abs(b.h - V.h) > 1e-15)
    throw std::invalid_argument("commutator: b and V must share the grid");
  const GridFunction bs = field::mollify(b, kernel);
  const GridFunction Vs = field::mollify(V, kernel);
  GridFunction bdV = V.like_zero();
  bdV.v = b.v * V.deriv_central();
  const GridFunction bdVs = field::mollify(bdV, kernel);
  GridFunction out = V.like_zero();
  out.tag = "R_eps";
  out.v = bs.v * Vs.deriv_central() - bdVs.v;
  return out;
}

double window_norm(const GridFunction& r, NormKind kind, const Window& win) {
  if (!(win.lo < win.hi))
    throw std::invalid_argument("window_norm: empty window");
  if (win.lo < r.x_min || win.hi > r.x_max())
    throw std::invalid_argument("window_norm: window exceeds the grid");
  const int j0 = static_cast<int>(std::ceil((win.lo - r.x_min) / r.h - 1e-12));
  const int j1 = static_cast<int>(std::floor((win.hi - r.x_min) / r.h + 1e-12));
  double s = 0.0;
  for (int j = j0; j <= j1; ++j) {
    const double wq = (j == j0 || j == j1) ? 0.5 : 1.0;
    const double a = (kind == NormKind::l1_window) ? std::abs(r.v[j]) : r.v[j] * r.v[j];
    s += wq * a;
  }
  s *= r.h;
  return (kind == NormKind::l1_window) ? s : std::sqrt(s);
}

DecayCurve decay_curve(const std::function<GridFunction(double)>& build,
                       const std::vector<double>& eps_list, NormKind kind,
                       const Window& win) {
  if (eps_list.size() < 2)
    throw std::invalid_argument("decay_curve: need at least two eps values");
  for (std::size_t i = 1; i < eps_list.size(); ++i)
    if (!(eps_list[i] < eps_list[i - 1]))
      throw std::invalid_argument("decay_curve: eps list must be strictly decreasing");

  DecayCurve curve;
  curve.kind = kind;
  curve.window = win;
  for (double e : eps_list) {
    GridFunction r;
    try {
      r = build(e);
    } catch (const std::exception& ex) {
      std::ostringstream msg;
      msg << "decay_curve: failure at eps=" << e << ": " << ex.what();
      throw std::runtime_error(msg.str());
    }
    curve.eps.push_back(e);
    curve.norms.push_back(window_norm(r, kind, win));
  }

  // least-squares slope of log(norm) against log(eps)
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const int n = static_cast<int>(curve.eps.size());
  for (int i = 0; i < n; ++i) {
    const double lx = std::log(curve.eps[i]);
    const double ly = std::log(std::max(curve.norms[i], 1e-300));
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  curve.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return curve;
}

}  // namespace spdechar::commutator
