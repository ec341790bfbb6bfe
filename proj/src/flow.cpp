#include "spdechar/flow.hpp"

#include <cmath>
#include <mutex>
#include <sstream>
#include <stdexcept>

#include "spdechar/parallel.hpp"

namespace spdechar::flow {

namespace {

double default_guard(double max_abs_x0, double k, double T) {
  return 10.0 * (1.0 + max_abs_x0) * std::exp(k * T);
}

void check_dims(const field::DriftField& b, const paths::BrownianEnsemble& W, int dim) {
  if (b.dim != dim)
    throw std::invalid_argument("forward_flow: drift dimension mismatch");
  if (W.dim != dim)
    throw std::invalid_argument("forward_flow: ensemble dimension mismatch");
}

}  // namespace

FlowEnsemble forward_flow(const field::DriftField& b,
                          const paths::BrownianEnsemble& W,
                          const Eigen::VectorXd& x_grid, FlowOptions opts) {
  check_dims(b, W, 1);
  if (x_grid.size() == 0) throw std::invalid_argument("forward_flow: empty initial grid");

  FlowEnsemble f;
  f.dim = 1;
  f.n_paths = W.n_paths;
  f.n_steps = W.n_steps;
  f.dt = W.dt;
  f.drift = b;
  f.x0 = x_grid;
  f.path_ok.assign(W.n_paths, 1);
  f.guard_box = opts.guard_box.value_or(
      default_guard(x_grid.cwiseAbs().maxCoeff(), b.growth_k, W.horizon));

  // advisory: dt * (local Lipschitz bound) < 0.5
  double lip = 0.0;
  for (int j = 0; j < x_grid.size(); ++j)
    lip = std::max(lip, std::abs(b.deriv(x_grid[j])));
  f.dt_advisory_ok = f.dt * lip < 0.5;

  const int J = static_cast<int>(x_grid.size());
  f.pos.resize(1);
  f.pos[0].assign(W.n_steps + 1, Eigen::MatrixXd(W.n_paths, J));
  for (int m = 0; m < W.n_paths; ++m) f.pos[0][0].row(m) = x_grid.transpose();

  std::mutex blow_mutex;
  parallel_for(W.n_paths, opts.threads, [&](int lo, int hi) {
    std::vector<BlowUp> local;
    for (int m = lo; m < hi; ++m) {
      bool ok = true;
      for (int n = 0; n < W.n_steps; ++n) {
        auto cur = f.pos[0][n].row(m);
        auto nxt = f.pos[0][n + 1].row(m);
        if (!ok) {
          nxt = cur;
          continue;
        }
        const double dBn = W.dB[0](m, n);
        for (int j = 0; j < J; ++j) {
          const double x = cur(j);
          const double xn = x + b.eval(x) * f.dt + dBn;
          nxt(j) = xn;
          if (ok && std::abs(xn) > f.guard_box) {
            local.push_back({m, n + 1, j});
            ok = false;
          }
        }
      }
      if (!ok) {
        std::scoped_lock lk(blow_mutex);
        f.path_ok[m] = 0;
      }
    }
    if (!local.empty()) {
      std::scoped_lock lk(blow_mutex);
      f.blowups.insert(f.blowups.end(), local.begin(), local.end());
    }
  });
  return f;
}

FlowEnsemble forward_flow_2d(const field::DriftField& b,
                             const paths::BrownianEnsemble& W,
                             const Eigen::MatrixXd& x_grid, FlowOptions opts) {
  check_dims(b, W, 2);
  if (x_grid.rows() == 0 || x_grid.cols() != 2)
    throw std::invalid_argument("forward_flow_2d: initial grid must be J x 2");

  FlowEnsemble f;
  f.dim = 2;
  f.n_paths = W.n_paths;
  f.n_steps = W.n_steps;
  f.dt = W.dt;
  f.drift = b;
  f.x0_2 = x_grid;
  f.path_ok.assign(W.n_paths, 1);
  f.guard_box = opts.guard_box.value_or(default_guard(
      x_grid.rowwise().norm().maxCoeff(), b.growth_k, W.horizon));
  f.dt_advisory_ok = f.dt * std::abs(b.growth_k) < 0.5;

  const int J = static_cast<int>(x_grid.rows());
  f.pos.resize(2);
  for (int c = 0; c < 2; ++c) {
    f.pos[c].assign(W.n_steps + 1, Eigen::MatrixXd(W.n_paths, J));
    for (int m = 0; m < W.n_paths; ++m)
      f.pos[c][0].row(m) = x_grid.col(c).transpose();
  }

  std::mutex blow_mutex;
  parallel_for(W.n_paths, opts.threads, [&](int lo, int hi) {
    std::vector<BlowUp> local;
    for (int m = lo; m < hi; ++m) {
      bool ok = true;
      for (int n = 0; n < W.n_steps; ++n) {
        if (!ok) {
          f.pos[0][n + 1].row(m) = f.pos[0][n].row(m);
          f.pos[1][n + 1].row(m) = f.pos[1][n].row(m);
          continue;
        }
        const double dB0 = W.dB[0](m, n), dB1 = W.dB[1](m, n);
        for (int j = 0; j < J; ++j) {
          Eigen::Vector2d x(f.pos[0][n](m, j), f.pos[1][n](m, j));
          const Eigen::Vector2d bx = b.eval2(x);
          const Eigen::Vector2d xn = x + bx * f.dt + Eigen::Vector2d(dB0, dB1);
          f.pos[0][n + 1](m, j) = xn[0];
          f.pos[1][n + 1](m, j) = xn[1];
          if (ok && xn.norm() > f.guard_box) {
            local.push_back({m, n + 1, j});
            ok = false;
          }
        }
      }
      if (!ok) {
        std::scoped_lock lk(blow_mutex);
        f.path_ok[m] = 0;
      }
    }
    if (!local.empty()) {
      std::scoped_lock lk(blow_mutex);
      f.blowups.insert(f.blowups.end(), local.begin(), local.end());
    }
  });
  return f;
}

void jacobian(FlowEnsemble& f) {
  const int J = f.n_points();
  if (f.dim == 1) {
    f.log_jac.assign(f.n_steps + 1, Eigen::MatrixXd::Zero(f.n_paths, J));
    for (int n = 0; n < f.n_steps; ++n) {
      for (int m = 0; m < f.n_paths; ++m)
        for (int j = 0; j < J; ++j)
          f.log_jac[n + 1](m, j) =
              f.log_jac[n](m, j) + f.drift.deriv(f.pos[0][n](m, j)) * f.dt;
    }
  } else {
    std::array<Eigen::MatrixXd, 4> id = {
        Eigen::MatrixXd::Ones(f.n_paths, J), Eigen::MatrixXd::Zero(f.n_paths, J),
        Eigen::MatrixXd::Zero(f.n_paths, J), Eigen::MatrixXd::Ones(f.n_paths, J)};
    f.jac2.assign(f.n_steps + 1, id);
    for (int n = 0; n < f.n_steps; ++n) {
      for (int m = 0; m < f.n_paths; ++m)
        for (int j = 0; j < J; ++j) {
          Eigen::Vector2d x(f.pos[0][n](m, j), f.pos[1][n](m, j));
          Eigen::Matrix2d D = f.jac_matrix(m, n, j);
          D += f.dt * f.drift.deriv2(x) * D;
          if (D.determinant() <= 0.0) {
            std::ostringstream msg;
            msg << "jacobian: det(DX) <= 0 at path " << m << ", step " << n + 1
                << ", point " << j << "; dt is too coarse";
            throw std::runtime_error(msg.str());
          }
          f.jac2[n + 1][0](m, j) = D(0, 0);
          f.jac2[n + 1][1](m, j) = D(0, 1);
          f.jac2[n + 1][2](m, j) = D(1, 0);
          f.jac2[n + 1][3](m, j) = D(1, 1);
        }
    }
  }
  f.has_jacobian = true;
}

double InverseFlow::eval(double x, bool& clamped) const {
  const Eigen::Index n = knots_x.size();
  if (x <= knots_x[0]) {
    clamped = clamped || (x < knots_x[0]);
    return knots_y[0];
  }
  if (x >= knots_x[n - 1]) {
    clamped = clamped || (x > knots_x[n - 1]);
    return knots_y[n - 1];
  }
  Eigen::Index lo = 0, hi = n - 1;
  while (hi - lo > 1) {
    const Eigen::Index mid = (lo + hi) / 2;
    (knots_x[mid] <= x ? lo : hi) = mid;
  }
  if (knots_x[lo] == x) return knots_y[lo];
  const double t = (x - knots_x[lo]) / (knots_x[lo + 1] - knots_x[lo]);
  return knots_y[lo] + t * (knots_y[lo + 1] - knots_y[lo]);
}

InverseFlow inverse_flow(const FlowEnsemble& flow, int m, int t_index) {
  if (flow.dim != 1)
    throw std::invalid_argument("inverse_flow: 1-D only");
  if (m < 0 || m >= flow.n_paths || t_index < 0 || t_index > flow.n_steps)
    throw std::out_of_range("inverse_flow: path or time index out of range");
  const int J = flow.n_points();
  InverseFlow inv;
  inv.knots_x.resize(J);
  inv.knots_y = flow.x0;
  for (int j = 0; j < J; ++j) {
    inv.knots_x[j] = flow.pos[0][t_index](m, j);
    if (j > 0 && !(inv.knots_x[j] > inv.knots_x[j - 1])) {
      std::ostringstream msg;
      msg << "inverse_flow: monotonicity violated at path " << m << ", t_index "
          << t_index << ", point " << j << "; use a smaller dt";
      throw std::runtime_error(msg.str());
    }
  }
  return inv;
}

Eigen::Matrix2d cofactor_transpose(const Eigen::Matrix2d& DX) {
  Eigen::Matrix2d A;
  A << DX(1, 1), -DX(0, 1), -DX(1, 0), DX(0, 0);
  return A;
}

Eigen::MatrixXd backward_map_2d(const field::DriftField& b,
                                const paths::BrownianEnsemble& W, int m,
                                int t_index, const Eigen::MatrixXd& queries,
                                int threads) {
  if (W.dim != 2 || b.dim != 2)
    throw std::invalid_argument("backward_map_2d: needs a 2-D field and ensemble");
  Eigen::MatrixXd out(queries.rows(), 2);
  const double dt = W.dt;
  parallel_for(static_cast<int>(queries.rows()), threads, [&](int lo, int hi) {
    for (int q = lo; q < hi; ++q) {
      Eigen::Vector2d y = queries.row(q).transpose();
      for (int n = t_index - 1; n >= 0; --n) {
        y -= b.eval2(y) * dt + Eigen::Vector2d(W.dB[0](m, n), W.dB[1](m, n));
      }
      out.row(q) = y.transpose();
    }
  });
  return out;
}

Eigen::ArrayXd forward_det_2d(const field::DriftField& b,
                              const paths::BrownianEnsemble& W, int m,
                              int t_index, const Eigen::MatrixXd& points,
                              int threads) {
  if (W.dim != 2 || b.dim != 2)
    throw std::invalid_argument("forward_det_2d: needs a 2-D field and ensemble");
  Eigen::ArrayXd det(points.rows());
  const double dt = W.dt;
  parallel_for(static_cast<int>(points.rows()), threads, [&](int lo, int hi) {
    for (int q = lo; q < hi; ++q) {
      Eigen::Vector2d x = points.row(q).transpose();
      Eigen::Matrix2d D = Eigen::Matrix2d::Identity();
      for (int n = 0; n < t_index; ++n) {
        D += dt * b.deriv2(x) * D;
        x += b.eval2(x) * dt + Eigen::Vector2d(W.dB[0](m, n), W.dB[1](m, n));
      }
      det[q] = D.determinant();
    }
  });
  return det;
}

}  // namespace spdechar::flow
