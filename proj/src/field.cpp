#include "spdechar/field.hpp"

#include <cmath>
#include <memory>
#include <sstream>
#include <stdexcept>

namespace spdechar::field {

namespace {

// "name" or "name(arg)" -> {name, arg}
std::pair<std::string, std::optional<double>> split_spec(const std::string& s) {
  const auto open = s.find('(');
  if (open == std::string::npos) return {s, std::nullopt};
  const auto close = s.rfind(')');
  if (close == std::string::npos || close < open)
    throw std::invalid_argument("drift spec: unbalanced parentheses in '" + s + "'");
  const std::string name = s.substr(0, open);
  const std::string arg = s.substr(open + 1, close - open - 1);
  try {
    return {name, std::stod(arg)};
  } catch (const std::exception&) {
    throw std::invalid_argument("drift spec: bad numeric argument in '" + s + "'");
  }
}

}  // namespace

DriftField make_drift(const std::string& spec, double scale) {
  auto [name, arg] = split_spec(spec);
  DriftField d;
  d.name = spec;
  if (name == "zero") {
    d.b1 = [](double) { return 0.0; };
    d.db1 = [](double) { return 0.0; };
    d.growth_k = 0.0;
    d.divergence_free = true;
  } else if (name == "linear") {
    const double a = arg.value_or(1.0);
    d.b1 = [a, scale](double x) { return scale * a * x; };
    d.db1 = [a, scale](double) { return scale * a; };
    d.growth_k = std::abs(scale * a);
  } else if (name == "ou") {
    d.b1 = [scale](double x) { return -scale * x; };
    d.db1 = [scale](double) { return -scale; };
    d.growth_k = std::abs(scale);
  } else if (name == "tanh") {
    const double k = arg.value_or(1.0);
    d.b1 = [k, scale](double x) { return scale * k * std::tanh(x); };
    d.db1 = [k, scale](double x) {
      const double c = std::cosh(x);
      return scale * k / (c * c);
    };
    d.growth_k = std::abs(scale * k);
  } else if (name == "rotation") {
    d.dim = 2;
    d.b2 = [scale](const Eigen::Vector2d& x) {
      return Eigen::Vector2d(-scale * x[1], scale * x[0]);
    };
    d.jac2 = [scale](const Eigen::Vector2d&) {
      Eigen::Matrix2d J;
      J << 0.0, -scale, scale, 0.0;
      return J;
    };
    d.growth_k = std::abs(scale);
    d.divergence_free = true;
  } else if (name == "holder") {
    const double alpha = arg.value_or(0.5);
    if (!(alpha > 0.0 && alpha < 1.0))
      throw std::invalid_argument("drift spec: holder exponent must lie in (0,1)");
    d.b1 = [alpha, scale](double x) {
      return scale * std::copysign(std::pow(std::abs(x), alpha), x);
    };
    // sup_x |x|^alpha / (1+|x|) = alpha^alpha (1-alpha)^(1-alpha)
    d.growth_k = std::abs(scale) * std::pow(alpha, alpha) *
                 std::pow(1.0 - alpha, 1.0 - alpha);
  } else {
    throw std::invalid_argument("drift spec: unknown family '" + name +
                                "' (expected zero|linear|ou|tanh|rotation|holder)");
  }
  return d;
}

DriftField drift_from_grid(const GridFunction& g, double growth_k, std::string name) {
  auto values = std::make_shared<GridFunction>(g);
  auto deriv = std::make_shared<GridFunction>(g);
  deriv->v = g.deriv_central();
  DriftField d;
  d.name = std::move(name);
  d.b1 = [values](double x) { return values->interp(x); };
  d.db1 = [deriv](double x) { return deriv->interp(x); };
  d.growth_k = growth_k;
  return d;
}

double MollifierKernel::unit_density(double z) const {
  if (std::abs(z) >= 1.0) return 0.0;
  // int_{-1}^{1} (1-z^2)^p dz = B(1/2, p+1)
  const double norm = std::beta(0.5, power + 1.0);
  return std::pow(1.0 - z * z, power) / norm;
}

std::vector<double> sampled_weights(const MollifierKernel& k, double h) {
  if (!(k.eps > 0.0)) throw std::invalid_argument("mollifier: eps must be positive");
  if (h > k.eps / 4.0 * (1.0 + 1e-12)) {
    std::ostringstream msg;
    msg << "mollify: grid spacing h=" << h << " exceeds eps/4=" << k.eps / 4.0
        << "; the kernel is unresolved";
    throw std::invalid_argument(msg.str());
  }
  const int K = static_cast<int>(k.eps / h * (1.0 + 1e-14));
  std::vector<double> w(2 * K + 1);
  double sum = 0.0;
  for (int i = 0; i <= K; ++i) {
    const double wi = k.unit_density(i * h / k.eps) / k.eps * h;
    w[K + i] = wi;
    w[K - i] = wi;  // exact symmetry by construction
    sum += (i == 0) ? wi : 2.0 * wi;
  }
  for (double& wi : w) wi /= sum;
  return w;
}

double discrete_second_moment(const MollifierKernel& k, double h) {
  const auto w = sampled_weights(k, h);
  const int K = (static_cast<int>(w.size()) - 1) / 2;
  double m = 0.0;
  for (int i = 1; i <= K; ++i) m += 2.0 * w[K + i] * (i * h) * (i * h);
  return m;
}

GridFunction mollify(const GridFunction& f, const MollifierKernel& kernel) {
  const auto w = sampled_weights(kernel, f.h);
  const int K = (static_cast<int>(w.size()) - 1) / 2;
  const int n = f.size();
  GridFunction out = f;
  auto at = [&](int j) { return f.v[std::min(std::max(j, 0), n - 1)]; };
  for (int j = 0; j < n; ++j) {
    double s = w[K] * at(j);
    for (int i = 1; i <= K; ++i) s += w[K + i] * (at(j - i) + at(j + i));
    out.v[j] = s;
  }
  return out;
}

GridFunction2 mollify(const GridFunction2& f, const MollifierKernel& kernel) {
  // separable tensor-product convolution, one pass per axis
  if (std::abs(f.hx - f.hy) > 1e-15 * std::abs(f.hx))
    throw std::invalid_argument("mollify: 2-D grid must have hx == hy");
  const auto w = sampled_weights(kernel, f.hx);
  const int K = (static_cast<int>(w.size()) - 1) / 2;
  const int n = f.nx(), m = f.ny();
  GridFunction2 tmp = f, out = f;
  auto clampi = [](int j, int hi) { return std::min(std::max(j, 0), hi); };
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) {
      double s = w[K] * f.v(clampi(i, n - 1), j);
      for (int q = 1; q <= K; ++q)
        s += w[K + q] * (f.v(clampi(i - q, n - 1), j) + f.v(clampi(i + q, n - 1), j));
      tmp.v(i, j) = s;
    }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) {
      double s = w[K] * tmp.v(i, clampi(j, m - 1));
      for (int q = 1; q <= K; ++q)
        s += w[K + q] * (tmp.v(i, clampi(j - q, m - 1)) + tmp.v(i, clampi(j + q, m - 1)));
      out.v(i, j) = s;
    }
  return out;
}

double CutoffSpec::eta(double x) const {
  const double s = std::abs(x) / radius;
  if (s <= 1.0) return 1.0;
  if (s >= 2.0) return 0.0;
  const double t = s - 1.0;  // in (0,1)
  const double a = std::exp(-1.0 / (1.0 - t));
  const double b = std::exp(-1.0 / t);
  return a / (a + b);
}

GridFunction compose_cutoff(const GridFunction& f, const CutoffSpec& cut) {
  if (!(cut.radius > 0.0)) throw std::invalid_argument("cutoff: radius must be positive");
  if (f.x_min > -2.0 * cut.radius || f.x_max() < 2.0 * cut.radius) {
    std::ostringstream msg;
    msg << "compose_cutoff: grid [" << f.x_min << ", " << f.x_max()
        << "] does not cover [-2R, 2R] with R=" << cut.radius;
    throw std::invalid_argument(msg.str());
  }
  GridFunction out = f;
  for (int j = 0; j < f.size(); ++j) out.v[j] = f.v[j] * cut.eta(f.x(j));
  return out;
}

GrowthReport verify_linear_growth(const DriftField& b,
                                  const std::vector<double>& samples, double k) {
  if (samples.empty())
    throw std::invalid_argument("verify_linear_growth: empty sample set");
  GrowthReport rep;
  rep.worst_ratio = -1.0;
  for (double x : samples) {
    const double bx = b.eval(x);
    if (!std::isfinite(bx)) {
      std::ostringstream msg;
      msg << "verify_linear_growth: drift not finite at x=" << x;
      throw std::runtime_error(msg.str());
    }
    const double r = std::abs(bx) / (1.0 + std::abs(x));
    if (r > rep.worst_ratio) {
      rep.worst_ratio = r;
      rep.argmax = x;
    }
  }
  rep.holds = rep.worst_ratio <= k;
  return rep;
}

LpsResult lps_exponent(const LpsQuery& qry) {
  if (qry.p < 2.0 || qry.q < 2.0)
    throw std::out_of_range("lps_exponent: requires p,q in [2,inf)");
  LpsResult r;
  r.value = qry.dim / qry.p + 2.0 / qry.q;
  r.satisfied = r.value < 1.0;
  return r;
}

}  // namespace spdechar::field
