#include "spdechar/weakform.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "spdechar/parallel.hpp"

namespace spdechar::weakform {

double ResidualSeries::sup_abs() const {
  double s = 0.0;
  for (double v : r) s = std::max(s, std::abs(v));
  return s;
}

ResidualSeries ito_residual_continuity(const std::vector<GridFunction>& u_series,
                                       const field::DriftField& b,
                                       const solution::TestFunction& phi, int m,
                                       const paths::BrownianEnsemble& W) {
  if (static_cast<int>(u_series.size()) != W.n_steps + 1)
    throw std::invalid_argument(
        "ito_residual_continuity: u_series and ensemble time grids do not align");
  const int N = W.n_steps;
  const GridFunction& g0 = u_series[0];

  ResidualSeries out;
  out.dt = W.dt;
  out.h = g0.h;
  out.t.resize(N + 1);
  out.r.resize(N + 1);
  out.pairing.resize(N + 1);
  out.drift_cum.assign(N + 1, 0.0);
  out.mart_cum.assign(N + 1, 0.0);
  out.lap_cum.assign(N + 1, 0.0);

  // the test function and drift are time-independent: sample them once
  const int J = g0.size();
  Eigen::ArrayXd wphi(J), wbdphi(J), wdphi(J), wddphi(J);
  for (int j = 0; j < J; ++j) {
    const double x = g0.x(j);
    const double w = ((j == 0 || j == J - 1) ? 0.5 : 1.0) * g0.h;
    wphi[j] = w * phi.phi(x);
    wdphi[j] = w * phi.dphi(x);
    wbdphi[j] = wdphi[j] * b.eval(x);
    wddphi[j] = w * phi.ddphi(x);
  }

  double drift = 0.0, mart = 0.0, lap = 0.0;
  for (int n = 0; n <= N; ++n) {
    const GridFunction& u = u_series[n];
    if (u.size() != J)
      throw std::invalid_argument("ito_residual_continuity: grids differ across time");
    out.t[n] = W.time(n);
    out.pairing[n] = (u.v * wphi).sum();
    out.drift_cum[n] = drift;
    out.mart_cum[n] = mart;
    out.lap_cum[n] = lap;
    out.r[n] = out.pairing[n] - out.pairing[0] - drift - mart - lap;
    if (n < N) {
      drift += (u.v * wbdphi).sum() * W.dt;
      mart += (u.v * wdphi).sum() * W.dB[0](m, n);
      lap += 0.5 * (u.v * wddphi).sum() * W.dt;
    }
  }
  return out;
}

ResidualSeries ito_residual_transport(const std::vector<GridFunction2>& u_series,
                                      const field::DriftField& b,
                                      const solution::TestFunction2& phi, int m,
                                      const paths::BrownianEnsemble& W) {
  if (static_cast<int>(u_series.size()) != W.n_steps + 1)
    throw std::invalid_argument(
        "ito_residual_transport: u_series and ensemble time grids do not align");
  if (W.dim != 2 || b.dim != 2)
    throw std::invalid_argument("ito_residual_transport: needs d=2");
  const int N = W.n_steps;
  const GridFunction2& g0 = u_series[0];

  ResidualSeries out;
  out.dt = W.dt;
  out.h = g0.hx;
  out.t.resize(N + 1);
  out.r.resize(N + 1);
  out.pairing.resize(N + 1);
  out.drift_cum.assign(N + 1, 0.0);
  out.mart_cum.assign(N + 1, 0.0);
  out.lap_cum.assign(N + 1, 0.0);

  // time-independent spatial samples: quadrature weight * phi, b, lap(phi)
  const int nx = g0.nx(), ny = g0.ny();
  Eigen::MatrixXd wphi(nx, ny), wlap(nx, ny), bx0(nx, ny), bx1(nx, ny);
  for (int i = 0; i < nx; ++i)
    for (int j = 0; j < ny; ++j) {
      const double x = g0.x(i), y = g0.y(j);
      const double wq = ((i == 0 || i == nx - 1) ? 0.5 : 1.0) *
                        ((j == 0 || j == ny - 1) ? 0.5 : 1.0) * g0.hx * g0.hy;
      wphi(i, j) = wq * phi.phi(x, y);
      wlap(i, j) = wq * phi.laplacian(x, y);
      const Eigen::Vector2d bv = b.eval2(Eigen::Vector2d(x, y));
      bx0(i, j) = bv[0];
      bx1(i, j) = bv[1];
    }

  double drift = 0.0, mart = 0.0, lap = 0.0;
  for (int n = 0; n <= N; ++n) {
    const GridFunction2& u = u_series[n];
    out.t[n] = W.time(n);
    out.pairing[n] = u.v.cwiseProduct(wphi).sum();
    out.drift_cum[n] = drift;
    out.mart_cum[n] = mart;
    out.lap_cum[n] = lap;
    // transport form: pairing(t) - pairing(0) + int b.grad(u) phi + int grad(u) phi dB
    //                 - 1/2 int u lap(phi)
    out.r[n] = out.pairing[n] - out.pairing[0] + drift + mart - lap;
    if (n < N) {
      double idrift = 0.0, im0 = 0.0, im1 = 0.0;
      for (int i = 0; i < nx; ++i)
        for (int j = 0; j < ny; ++j) {
          const int il = std::max(i - 1, 0), ih = std::min(i + 1, nx - 1);
          const int jl = std::max(j - 1, 0), jh = std::min(j + 1, ny - 1);
          const double ux = (u.v(ih, j) - u.v(il, j)) / ((ih - il) * u.hx);
          const double uy = (u.v(i, jh) - u.v(i, jl)) / ((jh - jl) * u.hy);
          idrift += (bx0(i, j) * ux + bx1(i, j) * uy) * wphi(i, j);
          im0 += ux * wphi(i, j);
          im1 += uy * wphi(i, j);
        }
      drift += idrift * W.dt;
      mart += im0 * W.dB[0](m, n) + im1 * W.dB[1](m, n);
      lap += 0.5 * u.v.cwiseProduct(wlap).sum() * W.dt;
    }
  }
  return out;
}

RefinementStudy residual_refinement_continuity(const field::DriftField& b,
                                               const GridFunction& u0,
                                               const GridFunction& window,
                                               const solution::TestFunction& phi,
                                               const paths::BrownianEnsemble& W_fine,
                                               const ResidualStudyOptions& opts) {
  RefinementStudy study;
  const int M = W_fine.n_paths;
  const int K = opts.checkpoints;
  for (int factor : opts.factors) {
    const paths::BrownianEnsemble W =
        factor == 1 ? W_fine : paths::coarsen(W_fine, factor);
    flow::FlowOptions fopts;
    fopts.threads = opts.threads;
    flow::FlowEnsemble flw = flow::forward_flow(b, W, opts.flow_knots, fopts);
    flow::jacobian(flw);
    std::vector<double> r2(static_cast<std::size_t>(M) * K, 0.0);
    parallel_for(M, opts.threads, [&](int lo, int hi) {
      for (int m = lo; m < hi; ++m) {
        std::vector<GridFunction> series;
        series.reserve(W.n_steps + 1);
        for (int n = 0; n <= W.n_steps; ++n)
          series.push_back(solution::continuity_solution_on(u0, window, flw, m, n));
        const ResidualSeries rs = ito_residual_continuity(series, b, phi, m, W);
        for (int k = 0; k < K; ++k) {
          const int idx = (k + 1) * W.n_steps / K;
          r2[static_cast<std::size_t>(m) * K + k] = rs.r[idx] * rs.r[idx];
        }
      }
    });
    double stat = 0.0;
    std::vector<double> col(M);
    for (int k = 0; k < K; ++k) {
      for (int m = 0; m < M; ++m) col[m] = r2[static_cast<std::size_t>(m) * K + k];
      stat = std::max(stat, std::sqrt(pairwise_sum(col.data(), col.size()) / M));
    }
    study.dt.push_back(W.dt);
    study.stat.push_back(stat);
  }
  return study;
}

std::vector<CompositionRecord> composition_identity_check(
    const GridFunction& V0, const field::DriftField& b,
    const field::MollifierKernel& kernel, int m, const paths::BrownianEnsemble& W,
    int t_index, const std::vector<double>& x_starts,
    const commutator::Window& window) {
  if (t_index < 0 || t_index > W.n_steps)
    throw std::out_of_range("composition_identity_check: t_index out of range");

  // initial density from the supplied primitive
  GridFunction u0 = V0.like_zero();
  u0.v = V0.deriv_central();
  u0.tag = "u0";

  GridFunction b_grid = V0.like_zero();
  for (int j = 0; j < b_grid.size(); ++j) b_grid.v[j] = b.eval(b_grid.x(j));
  const GridFunction b_eps_grid = field::mollify(b_grid, kernel);
  const field::DriftField b_eps =
      field::drift_from_grid(b_eps_grid, b.growth_k, b.name + "_eps");

  // flow of b driving u, flow of b_eps carrying the composition
  flow::FlowOptions fopts;
  Eigen::VectorXd knots(V0.size());
  for (int j = 0; j < V0.size(); ++j) knots[j] = V0.x(j);
  flow::FlowEnsemble flw_b = flow::forward_flow(b, W, knots, fopts);
  flow::jacobian(flw_b);

  Eigen::VectorXd starts(static_cast<Eigen::Index>(x_starts.size()));
  for (std::size_t i = 0; i < x_starts.size(); ++i) starts[static_cast<Eigen::Index>(i)] = x_starts[i];
  flow::FlowEnsemble flw_eps = flow::forward_flow(b_eps, W, starts, fopts);

  // per time step: V(s) = primitive(u(s)), V_eps = V * rho, R_eps(V,b)
  const GridFunction V0_eps = field::mollify(V0, kernel);
  std::vector<double> rhs(x_starts.size());
  for (std::size_t i = 0; i < x_starts.size(); ++i)
    rhs[i] = V0_eps.interp(starts[static_cast<Eigen::Index>(i)]);

  GridFunction V_eps_t;  // filled at t_index
  for (int n = 0; n <= t_index; ++n) {
    const GridFunction u = solution::continuity_solution(u0, flw_b, m, n);
    const GridFunction V = solution::primitive(u);
    if (n == t_index) V_eps_t = field::mollify(V, kernel);
    if (n < t_index) {
      const GridFunction R = commutator::commutator_primitive(b_grid, V, kernel);
      for (std::size_t i = 0; i < x_starts.size(); ++i) {
        const double Xs = flw_eps.pos[0][n](m, static_cast<int>(i));
        if (Xs < window.lo || Xs > window.hi) {
          std::ostringstream msg;
          msg << "composition_identity_check: trajectory from x=" << x_starts[i]
              << " left the commutator window at step " << n;
          throw std::runtime_error(msg.str());
        }
        rhs[i] += R.interp(Xs) * W.dt;
      }
    }
  }

  std::vector<CompositionRecord> records(x_starts.size());
  for (std::size_t i = 0; i < x_starts.size(); ++i) {
    CompositionRecord rec;
    rec.x = x_starts[i];
    rec.lhs = V_eps_t.interp(flw_eps.pos[0][t_index](m, static_cast<int>(i)));
    rec.rhs = rhs[i];
    rec.defect = std::abs(rec.lhs - rec.rhs);
    records[i] = rec;
  }
  return records;
}

namespace {

struct MollifiedProblem {
  GridFunction u0_eps;
  flow::FlowEnsemble flw;
};

MollifiedProblem build_problem(const field::DriftField& b, const GridFunction& u0,
                               double eps, const paths::BrownianEnsemble& W,
                               const Eigen::VectorXd& flow_knots, int threads) {
  const field::MollifierKernel kernel = field::MollifierKernel::standard(eps);
  // sample b on a grid fine enough for the kernel, well beyond the knots
  const double lo = flow_knots.minCoeff() - 2.0 * eps - 1.0;
  const double hi = flow_knots.maxCoeff() + 2.0 * eps + 1.0;
  const int n = static_cast<int>(std::ceil((hi - lo) / (eps / 8.0))) + 1;
  GridFunction b_grid = GridFunction::sample(
      lo, hi, n, [&b](double x) { return b.eval(x); }, "b");
  GridFunction b_eps = field::mollify(b_grid, kernel);
  if (b_eps.x_min <= -2.0 / eps && b_eps.x_max() >= 2.0 / eps)
    b_eps = field::compose_cutoff(b_eps, field::CutoffSpec{1.0 / eps});

  MollifiedProblem prob;
  prob.u0_eps = field::mollify(u0, kernel);
  if (prob.u0_eps.x_min <= -2.0 / eps && prob.u0_eps.x_max() >= 2.0 / eps)
    prob.u0_eps = field::compose_cutoff(prob.u0_eps, field::CutoffSpec{1.0 / eps});

  flow::FlowOptions fopts;
  fopts.threads = threads;
  prob.flw = flow::forward_flow(field::drift_from_grid(b_eps, b.growth_k, "b_eps"),
                                W, flow_knots, fopts);
  flow::jacobian(prob.flw);
  return prob;
}

}  // namespace

UniquenessResult uniqueness_experiment(const field::DriftField& b,
                                       const GridFunction& u0, double eps,
                                       const paths::BrownianEnsemble& W,
                                       const solution::WeightSpec& weight,
                                       const Eigen::VectorXd& flow_knots,
                                       const std::vector<int>& snapshot_indices,
                                       int threads) {
  const MollifiedProblem coarse = build_problem(b, u0, eps, W, flow_knots, threads);
  const MollifiedProblem fine = build_problem(b, u0, eps / 2.0, W, flow_knots, threads);

  UniquenessResult res;
  res.eps = eps;
  res.tainted = !coarse.flw.blowups.empty() || !fine.flw.blowups.empty();
  res.t.reserve(snapshot_indices.size());
  res.distance.assign(snapshot_indices.size(), 0.0);
  for (int idx : snapshot_indices) res.t.push_back(W.time(idx));

  std::vector<double> acc(snapshot_indices.size() * W.n_paths, 0.0);
  parallel_for(W.n_paths, threads, [&](int lo, int hi) {
    for (int m = lo; m < hi; ++m) {
      if (!coarse.flw.path_ok[m] || !fine.flw.path_ok[m]) continue;
      for (std::size_t s = 0; s < snapshot_indices.size(); ++s) {
        const int n = snapshot_indices[s];
        const GridFunction uc = solution::continuity_solution(coarse.u0_eps, coarse.flw, m, n);
        const GridFunction uf = solution::continuity_solution(fine.u0_eps, fine.flw, m, n);
        GridFunction diff = uc.like_zero();
        for (int j = 0; j < diff.size(); ++j) {
          const double d = uc.v[j] - uf.v[j];
          diff.v[j] = d * d * weight.eval(diff.x(j));
        }
        acc[s * W.n_paths + m] = trapezoid(diff);
      }
    }
  });
  for (std::size_t s = 0; s < snapshot_indices.size(); ++s)
    res.distance[s] =
        pairwise_sum(acc.data() + s * W.n_paths, static_cast<std::size_t>(W.n_paths)) /
        W.n_paths;
  return res;
}

UniquenessSweep uniqueness_sweep(const field::DriftField& b, const GridFunction& u0,
                                 const std::vector<double>& eps_list,
                                 const paths::BrownianEnsemble& W,
                                 const solution::WeightSpec& weight,
                                 const Eigen::VectorXd& flow_knots,
                                 const std::vector<int>& snapshot_indices,
                                 int threads) {
  if (eps_list.size() < 2)
    throw std::invalid_argument("uniqueness_sweep: need at least two eps values");
  UniquenessSweep sweep;
  for (double e : eps_list)
    sweep.pairs.push_back(uniqueness_experiment(b, u0, e, W, weight, flow_knots,
                                                snapshot_indices, threads));
  sweep.trend = 0.0;
  for (std::size_t i = 1; i < sweep.pairs.size(); ++i)
    for (std::size_t s = 0; s < snapshot_indices.size(); ++s) {
      const double prev = sweep.pairs[i - 1].distance[s];
      const double cur = sweep.pairs[i].distance[s];
      if (prev > 0.0) sweep.trend = std::max(sweep.trend, cur / prev);
    }
  return sweep;
}

}  // namespace spdechar::weakform
