#pragma once
#include <Eigen/Dense>
#include <array>
#include <optional>
#include <vector>

#include "spdechar/field.hpp"
#include "spdechar/paths.hpp"

namespace spdechar::flow {

struct BlowUp {
  int path = 0;
  int step = 0;
  int point = 0;
};

struct FlowOptions {
  std::optional<double> guard_box;  // default: 10*(1+max|x0|)*exp(k*T)
  int threads = 0;
};

/// Euler-Maruyama characteristics X_{t_n}(x_j) for every path of a
/// Brownian ensemble, plus (after jacobian()) the variational derivative.
/// 1-D Jacobians are accumulated in log space, so J > 0 by construction
/// and J^{-2} statistics cannot overflow. Write-once per phase
/// (trajectories, then Jacobians), immutable afterwards.
struct FlowEnsemble {
  int dim = 1;
  int n_paths = 0;
  int n_steps = 0;
  double dt = 0.0;
  field::DriftField drift;
  Eigen::VectorXd x0;                        // 1-D initial points (J)
  Eigen::MatrixXd x0_2;                      // 2-D initial points (J x 2)
  std::vector<std::vector<Eigen::MatrixXd>> pos;  // [coord][n]: M x J
  std::vector<Eigen::MatrixXd> log_jac;           // 1-D: [n]: M x J
  std::vector<std::array<Eigen::MatrixXd, 4>> jac2;  // 2-D DX, row-major
  std::vector<BlowUp> blowups;
  std::vector<char> path_ok;
  bool dt_advisory_ok = true;
  bool has_jacobian = false;
  double guard_box = 0.0;

  int n_points() const {
    return dim == 1 ? static_cast<int>(x0.size()) : static_cast<int>(x0_2.rows());
  }
  double jac(int m, int n, int j) const { return std::exp(log_jac[n](m, j)); }
  Eigen::Matrix2d jac_matrix(int m, int n, int j) const {
    Eigen::Matrix2d D;
    D << jac2[n][0](m, j), jac2[n][1](m, j), jac2[n][2](m, j), jac2[n][3](m, j);
    return D;
  }
};

FlowEnsemble forward_flow(const field::DriftField& b,
                          const paths::BrownianEnsemble& W,
                          const Eigen::VectorXd& x_grid, FlowOptions opts = {});

FlowEnsemble forward_flow_2d(const field::DriftField& b,
                             const paths::BrownianEnsemble& W,
                             const Eigen::MatrixXd& x_grid, FlowOptions opts = {});

/// Fill the variational derivative along the stored trajectories.
/// 1-D: log J_{n+1} = log J_n + b'(X_n) dt. 2-D: Euler on
/// d(DX) = Db(X) DX dt with det(DX) > 0 checked each step.
void jacobian(FlowEnsemble& flow);

/// Monotone piecewise-linear inverse of x |-> X_{t}(x) built from the
/// knots (X(x_j), x_j); exact at knots, clamped (with a flag) outside
/// the image range. 1-D only; this realizes the backward flow without a
/// second SDE solve.
struct InverseFlow {
  Eigen::VectorXd knots_x;  // X values, strictly increasing
  Eigen::VectorXd knots_y;  // initial grid

  double eval(double x, bool& clamped) const;
  double eval(double x) const {
    bool ignored = false;
    return eval(x, ignored);
  }
};

InverseFlow inverse_flow(const FlowEnsemble& flow, int m, int t_index);

/// adj(DX): satisfies DX * cofactor_transpose(DX) = det(DX) * I.
Eigen::Matrix2d cofactor_transpose(const Eigen::Matrix2d& DX);

/// Streaming evaluators for large 2-D grids (nothing stored per step).
/// backward_map_2d integrates the backward equation
///   Y_n = Y_{n+1} - b(Y_{n+1}) dt - dB_n
/// from t_index down to 0 for every query point.
Eigen::MatrixXd backward_map_2d(const field::DriftField& b,
                                const paths::BrownianEnsemble& W, int m,
                                int t_index, const Eigen::MatrixXd& queries,
                                int threads = 0);

/// det DX_{t}(x) per initial point, streaming variational Euler.
Eigen::ArrayXd forward_det_2d(const field::DriftField& b,
                              const paths::BrownianEnsemble& W, int m,
                              int t_index, const Eigen::MatrixXd& points,
                              int threads = 0);

}  // namespace spdechar::flow
