#pragma once
#include <Eigen/Dense>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>

namespace spdechar {

/// Scalar samples on a uniform 1-D grid x_j = x_min + j*h.
/// Evaluation between nodes is linear; outside the grid the edge value
/// continues (and the out_of_range flag is raised on the function the
/// clamped value feeds into).
struct GridFunction {
  double x_min = 0.0;
  double h = 1.0;
  Eigen::ArrayXd v;
  std::string tag;
  bool out_of_range = false;

  int size() const { return static_cast<int>(v.size()); }
  double x(int j) const { return x_min + j * h; }
  double x_max() const { return x_min + (size() - 1) * h; }

  static GridFunction zeros(double a, double b, int n, std::string tag = {}) {
    if (n < 2 || !(b > a)) throw std::invalid_argument("GridFunction: need n >= 2 and x_max > x_min");
    GridFunction g;
    g.x_min = a;
    g.h = (b - a) / (n - 1);
    g.v = Eigen::ArrayXd::Zero(n);
    g.tag = std::move(tag);
    return g;
  }

  static GridFunction sample(double a, double b, int n,
                             const std::function<double(double)>& f,
                             std::string tag = {}) {
    GridFunction g = zeros(a, b, n, std::move(tag));
    for (int j = 0; j < n; ++j) g.v[j] = f(g.x(j));
    return g;
  }

  GridFunction like_zero() const {
    GridFunction g = *this;
    g.v.setZero();
    return g;
  }

  double interp(double xq) const {
    bool ignored = false;
    return interp(xq, ignored);
  }

  double interp(double xq, bool& clamped) const {
    const int n = size();
    const double s = (xq - x_min) / h;
    if (s <= 0.0) {
      clamped = clamped || (s < 0.0);
      return v[0];
    }
    if (s >= n - 1) {
      clamped = clamped || (s > n - 1);
      return v[n - 1];
    }
    const int j = static_cast<int>(s);
    const double t = s - j;
    return v[j] + t * (v[j + 1] - v[j]);
  }

  /// Central differences inside, one-sided at the two ends.
  Eigen::ArrayXd deriv_central() const {
    const int n = size();
    Eigen::ArrayXd d(n);
    d[0] = (v[1] - v[0]) / h;
    d[n - 1] = (v[n - 1] - v[n - 2]) / h;
    for (int j = 1; j + 1 < n; ++j) d[j] = (v[j + 1] - v[j - 1]) / (2.0 * h);
    return d;
  }
};

inline double trapezoid(const GridFunction& f) {
  const int n = f.size();
  double s = 0.5 * (f.v[0] + f.v[n - 1]);
  for (int j = 1; j + 1 < n; ++j) s += f.v[j];
  return s * f.h;
}

/// Linear interpolation over an arbitrary strictly increasing knot vector.
inline double interp_knots(const Eigen::VectorXd& xs, const Eigen::VectorXd& ys,
                           double q, bool& clamped) {
  const Eigen::Index n = xs.size();
  if (q <= xs[0]) {
    clamped = clamped || (q < xs[0]);
    return ys[0];
  }
  if (q >= xs[n - 1]) {
    clamped = clamped || (q > xs[n - 1]);
    return ys[n - 1];
  }
  Eigen::Index lo = 0, hi = n - 1;
  while (hi - lo > 1) {
    const Eigen::Index mid = (lo + hi) / 2;
    (xs[mid] <= q ? lo : hi) = mid;
  }
  const double t = (q - xs[lo]) / (xs[lo + 1] - xs[lo]);
  return ys[lo] + t * (ys[lo + 1] - ys[lo]);
}

/// Samples on a uniform 2-D tensor grid; v(i,j) = f(x_i, y_j).
struct GridFunction2 {
  double x_min = 0.0, y_min = 0.0;
  double hx = 1.0, hy = 1.0;
  Eigen::MatrixXd v;  // rows: x index, cols: y index
  std::string tag;
  bool out_of_range = false;

  int nx() const { return static_cast<int>(v.rows()); }
  int ny() const { return static_cast<int>(v.cols()); }
  double x(int i) const { return x_min + i * hx; }
  double y(int j) const { return y_min + j * hy; }

  static GridFunction2 zeros(double ax, double bx, int nx, double ay, double by,
                             int ny, std::string tag = {}) {
    if (nx < 2 || ny < 2) throw std::invalid_argument("GridFunction2: need nx,ny >= 2");
    GridFunction2 g;
    g.x_min = ax;
    g.y_min = ay;
    g.hx = (bx - ax) / (nx - 1);
    g.hy = (by - ay) / (ny - 1);
    g.v = Eigen::MatrixXd::Zero(nx, ny);
    g.tag = std::move(tag);
    return g;
  }

  static GridFunction2 sample(double ax, double bx, int nx, double ay, double by,
                              int ny, const std::function<double(double, double)>& f,
                              std::string tag = {}) {
    GridFunction2 g = zeros(ax, bx, nx, ay, by, ny, std::move(tag));
    for (int i = 0; i < nx; ++i)
      for (int j = 0; j < ny; ++j) g.v(i, j) = f(g.x(i), g.y(j));
    return g;
  }

  double interp(double xq, double yq, bool& clamped) const {
    const int n = nx(), m = ny();
    double sx = (xq - x_min) / hx;
    double sy = (yq - y_min) / hy;
    if (sx < 0.0 || sx > n - 1 || sy < 0.0 || sy > m - 1) clamped = true;
    sx = std::min(std::max(sx, 0.0), static_cast<double>(n - 1));
    sy = std::min(std::max(sy, 0.0), static_cast<double>(m - 1));
    int i = std::min(static_cast<int>(sx), n - 2);
    int j = std::min(static_cast<int>(sy), m - 2);
    const double tx = sx - i, ty = sy - j;
    return (1 - tx) * ((1 - ty) * v(i, j) + ty * v(i, j + 1)) +
           tx * ((1 - ty) * v(i + 1, j) + ty * v(i + 1, j + 1));
  }

  double interp(double xq, double yq) const {
    bool ignored = false;
    return interp(xq, yq, ignored);
  }
};

inline double trapezoid(const GridFunction2& f) {
  const int n = f.nx(), m = f.ny();
  double s = 0.0;
  for (int i = 0; i < n; ++i) {
    const double wx = (i == 0 || i == n - 1) ? 0.5 : 1.0;
    double rs = 0.5 * (f.v(i, 0) + f.v(i, m - 1));
    for (int j = 1; j + 1 < m; ++j) rs += f.v(i, j);
    s += wx * rs;
  }
  return s * f.hx * f.hy;
}

}  // namespace spdechar
