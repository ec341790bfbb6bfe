#include "spdechar/solution.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace spdechar::solution {

WeightSpec WeightSpec::w(double k2) {
  if (!std::isfinite(k2))
    throw std::invalid_argument(
        "WeightSpec::w: k2 is not finite (convergence guards failed)");
  return WeightSpec{Kind::w, k2};
}

namespace {

// z - 4/3 z^3 + 6/5 z^5 - 4/7 z^7 + 1/9 z^9, the antiderivative of (1-z^2)^4
double bump_antideriv(double z) {
  const double z2 = z * z;
  return z * (1.0 + z2 * (-4.0 / 3.0 + z2 * (6.0 / 5.0 + z2 * (-4.0 / 7.0 + z2 / 9.0))));
}
constexpr double kBumpArea = 256.0 / 315.0;  // int_{-1}^{1} (1-z^2)^4 dz

}  // namespace

TestFunction TestFunction::bump(double c, double s, double amp) {
  TestFunction f;
  f.support_lo = c - s;
  f.support_hi = c + s;
  f.phi = [c, s, amp](double x) {
    const double z = (x - c) / s;
    if (std::abs(z) >= 1.0) return 0.0;
    const double u = 1.0 - z * z;
    return amp * u * u * u * u;
  };
  f.dphi = [c, s, amp](double x) {
    const double z = (x - c) / s;
    if (std::abs(z) >= 1.0) return 0.0;
    const double u = 1.0 - z * z;
    return amp * -8.0 * z * u * u * u / s;
  };
  f.ddphi = [c, s, amp](double x) {
    const double z = (x - c) / s;
    if (std::abs(z) >= 1.0) return 0.0;
    const double u = 1.0 - z * z;
    return amp * (-8.0 * u * u * u + 48.0 * z * z * u * u) / (s * s);
  };
  f.theta = [c, s, amp](double x) {
    const double z = (x - c) / s;
    if (z <= -1.0) return 0.0;
    if (z >= 1.0) return amp * s * kBumpArea;
    return amp * s * (bump_antideriv(z) + kBumpArea / 2.0);
  };
  return f;
}

TestFunction TestFunction::bump_with_cutoff(double c, double s,
                                            const field::CutoffSpec& cut,
                                            double amp) {
  TestFunction base = bump(c, s, amp);
  TestFunction f;
  f.support_lo = std::max(base.support_lo, -2.0 * cut.radius);
  f.support_hi = std::min(base.support_hi, 2.0 * cut.radius);
  // eta has no closed-form derivative worth carrying; differentiate the
  // product numerically at a step far below every grid used here
  const double he = 1e-6;
  auto eta = [cut](double x) { return cut.eta(x); };
  f.phi = [base, eta](double x) { return base.phi(x) * eta(x); };
  f.dphi = [base, eta, he](double x) {
    const double deta = (eta(x + he) - eta(x - he)) / (2.0 * he);
    return base.dphi(x) * eta(x) + base.phi(x) * deta;
  };
  f.ddphi = [base, eta, he](double x) {
    const double e0 = eta(x);
    const double deta = (eta(x + he) - eta(x - he)) / (2.0 * he);
    const double d2eta = (eta(x + he) - 2.0 * e0 + eta(x - he)) / (he * he);
    return base.ddphi(x) * e0 + 2.0 * base.dphi(x) * deta + base.phi(x) * d2eta;
  };
  return f;
}

double TestFunction2::phi(double x, double y) const {
  auto b = [this](double z) {
    if (std::abs(z) >= 1.0) return 0.0;
    const double u = 1.0 - z * z;
    return u * u * u * u;
  };
  return amp * b((x - cx) / s) * b((y - cy) / s);
}

namespace {
double b1d(double z) {
  if (std::abs(z) >= 1.0) return 0.0;
  const double u = 1.0 - z * z;
  return u * u * u * u;
}
double db1d(double z) {
  if (std::abs(z) >= 1.0) return 0.0;
  const double u = 1.0 - z * z;
  return -8.0 * z * u * u * u;
}
double ddb1d(double z) {
  if (std::abs(z) >= 1.0) return 0.0;
  const double u = 1.0 - z * z;
  return -8.0 * u * u * u + 48.0 * z * z * u * u;
}
}  // namespace

double TestFunction2::dphi_dx(double x, double y) const {
  return amp * db1d((x - cx) / s) / s * b1d((y - cy) / s);
}
double TestFunction2::dphi_dy(double x, double y) const {
  return amp * b1d((x - cx) / s) * db1d((y - cy) / s) / s;
}
double TestFunction2::laplacian(double x, double y) const {
  const double zx = (x - cx) / s, zy = (y - cy) / s;
  return amp * (ddb1d(zx) * b1d(zy) + b1d(zx) * ddb1d(zy)) / (s * s);
}

std::function<double(double)> make_initial(const std::string& spec) {
  const auto open = spec.find('(');
  const auto close = spec.rfind(')');
  if (open == std::string::npos || close == std::string::npos || close < open)
    throw std::invalid_argument("initial condition spec: expected name(c,s) in '" + spec + "'");
  const std::string name = spec.substr(0, open);
  const std::string args = spec.substr(open + 1, close - open - 1);
  const auto comma = args.find(',');
  if (comma == std::string::npos)
    throw std::invalid_argument("initial condition spec: expected two arguments in '" + spec + "'");
  double c, s;
  try {
    c = std::stod(args.substr(0, comma));
    s = std::stod(args.substr(comma + 1));
  } catch (const std::exception&) {
    throw std::invalid_argument("initial condition spec: bad numeric argument in '" + spec + "'");
  }
  if (!(s > 0.0))
    throw std::invalid_argument("initial condition spec: width must be positive");
  if (name == "gauss") {
    return [c, s](double x) {
      const double z = (x - c) / s;
      return std::exp(-0.5 * z * z);
    };
  }
  if (name == "bump") {
    return [c, s](double x) {
      const double z = (x - c) / s;
      if (std::abs(z) >= 1.0) return 0.0;
      const double u = 1.0 - z * z;
      return u * u * u * u;
    };
  }
  if (name == "step_smoothed") {
    return [c, s](double x) { return 0.5 * (1.0 + std::tanh((x - c) / s)); };
  }
  throw std::invalid_argument("initial condition spec: unknown family '" + name +
                              "' (expected gauss|bump|step_smoothed)");
}

GridFunction transport_solution(const GridFunction& u0,
                                const flow::FlowEnsemble& flw, int m, int t_index) {
  const flow::InverseFlow inv = flow::inverse_flow(flw, m, t_index);
  GridFunction out = u0.like_zero();
  out.tag = "u";
  bool clamped = false;
  for (int j = 0; j < u0.size(); ++j) {
    const double y = inv.eval(u0.x(j), clamped);
    out.v[j] = u0.interp(y, clamped);
  }
  out.out_of_range = clamped;
  return out;
}

GridFunction continuity_solution_on(const GridFunction& u0, const GridFunction& target,
                                    const flow::FlowEnsemble& flw, int m, int t_index) {
  if (!flw.has_jacobian)
    throw std::logic_error("continuity_solution: jacobian() has not been run");
  const flow::InverseFlow inv = flow::inverse_flow(flw, m, t_index);
  Eigen::VectorXd jrow(flw.n_points());
  for (int j = 0; j < flw.n_points(); ++j) jrow[j] = flw.jac(m, t_index, j);
  GridFunction out = target.like_zero();
  out.tag = "u";
  bool clamped = false;
  for (int j = 0; j < out.size(); ++j) {
    const double y = inv.eval(out.x(j), clamped);
    const double jy = interp_knots(flw.x0, jrow, y, clamped);
    if (jy < 1e-12) {
      std::ostringstream msg;
      msg << "continuity_solution: interpolated Jacobian " << jy
          << " below 1e-12 at y=" << y;
      throw std::runtime_error(msg.str());
    }
    out.v[j] = u0.interp(y, clamped) / jy;
  }
  out.out_of_range = clamped;
  return out;
}

GridFunction continuity_solution(const GridFunction& u0,
                                 const flow::FlowEnsemble& flw, int m, int t_index) {
  return continuity_solution_on(u0, u0, flw, m, t_index);
}

GridFunction2 transport_solution_2d(const GridFunction2& u0,
                                    const field::DriftField& b,
                                    const paths::BrownianEnsemble& W, int m,
                                    int t_index, int threads) {
  const int n = u0.nx(), mm = u0.ny();
  Eigen::MatrixXd queries(n * mm, 2);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < mm; ++j) {
      queries(i * mm + j, 0) = u0.x(i);
      queries(i * mm + j, 1) = u0.y(j);
    }
  const Eigen::MatrixXd mapped = flow::backward_map_2d(b, W, m, t_index, queries, threads);
  GridFunction2 out = u0;
  out.tag = "u";
  bool clamped = false;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < mm; ++j)
      out.v(i, j) = u0.interp(mapped(i * mm + j, 0), mapped(i * mm + j, 1), clamped);
  out.out_of_range = clamped;
  return out;
}

GridFunction primitive(const GridFunction& u) {
  GridFunction V = u.like_zero();
  V.tag = "V";
  for (int j = 1; j < u.size(); ++j)
    V.v[j] = V.v[j - 1] + 0.5 * u.h * (u.v[j - 1] + u.v[j]);
  return V;
}

WeightedNorm weighted_norm_sq(const GridFunction& u, const WeightSpec& w) {
  GridFunction g = u.like_zero();
  for (int j = 0; j < u.size(); ++j) g.v[j] = u.v[j] * u.v[j] * w.eval(u.x(j));
  WeightedNorm out;
  out.value = trapezoid(g);
  const double peak = g.v.maxCoeff();
  if (peak > 0.0 &&
      std::max(g.v[0], g.v[g.size() - 1]) > 1e-8 * peak)
    out.tail_warning = true;
  return out;
}

double mass(const GridFunction& u) { return trapezoid(u); }

double l2_norm_sq(const GridFunction2& u) {
  GridFunction2 sq = u;
  sq.v = u.v.cwiseProduct(u.v);
  return trapezoid(sq);
}

double grad_norm_sq(const GridFunction2& u) {
  const int n = u.nx(), m = u.ny();
  GridFunction2 g = u;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) {
      const int il = std::max(i - 1, 0), ih = std::min(i + 1, n - 1);
      const int jl = std::max(j - 1, 0), jh = std::min(j + 1, m - 1);
      const double gx = (u.v(ih, j) - u.v(il, j)) / ((ih - il) * u.hx);
      const double gy = (u.v(i, jh) - u.v(i, jl)) / ((jh - jl) * u.hy);
      g.v(i, j) = gx * gx + gy * gy;
    }
  return trapezoid(g);
}

}  // namespace spdechar::solution
