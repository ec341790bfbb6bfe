#pragma once
#include <vector>

#include "spdechar/bounds.hpp"
#include "spdechar/commutator.hpp"
#include "spdechar/field.hpp"
#include "spdechar/flow.hpp"
#include "spdechar/grid.hpp"
#include "spdechar/paths.hpp"
#include "spdechar/solution.hpp"

namespace spdechar::weakform {

/// Pathwise defect of the Ito weak formulation, with the running terms
/// kept separately: r(t_n) = pairing(t_n) - pairing(0) - drift - martingale
/// - laplacian. r(0) == 0 exactly by construction.
struct ResidualSeries {
  std::vector<double> t;
  std::vector<double> r;
  std::vector<double> pairing;    // int u(t_n) phi dx
  std::vector<double> drift_cum;  // sum over j<n of (int u b phi') dt
  std::vector<double> mart_cum;   // sum over j<n of (int u phi') dB_j
  std::vector<double> lap_cum;    // 1/2 sum over j<n of (int u phi'') dt
  double dt = 0.0;
  double h = 0.0;

  double sup_abs() const;
};

/// Continuity form (1-D): left-point (Ito) evaluation in the stochastic
/// sum, trapezoid spatial integrals with analytic phi', phi''.
ResidualSeries ito_residual_continuity(const std::vector<GridFunction>& u_series,
                                       const field::DriftField& b,
                                       const solution::TestFunction& phi, int m,
                                       const paths::BrownianEnsemble& W);

/// Transport form (2-D, divergence-free b): the drift and noise terms
/// carry du/dx_i by central differences, the last term is
/// +1/2 int u * laplacian(phi).
ResidualSeries ito_residual_transport(const std::vector<GridFunction2>& u_series,
                                      const field::DriftField& b,
                                      const solution::TestFunction2& phi, int m,
                                      const paths::BrownianEnsemble& W);

/// Coupled dt-refinement study of the continuity-form residual. Each level
/// coarsens the same fine ensemble (increments summed exactly); the level
/// statistic is the max over shared checkpoint times of the path-RMS
/// residual. Pathwise sup ratios do not concentrate (the halving gain is a
/// root-mean-square statement), so the study aggregates over the ensemble.
struct RefinementStudy {
  std::vector<double> dt;    // per level, coarse to fine
  std::vector<double> stat;  // max over checkpoints of sqrt(mean_m r^2)
};

struct ResidualStudyOptions {
  Eigen::VectorXd flow_knots;
  std::vector<int> factors = {4, 2, 1};  // coarsening factors, must divide N
  int checkpoints = 8;
  int threads = 0;
};

RefinementStudy residual_refinement_continuity(const field::DriftField& b,
                                               const GridFunction& u0,
                                               const GridFunction& window,
                                               const solution::TestFunction& phi,
                                               const paths::BrownianEnsemble& W_fine,
                                               const ResidualStudyOptions& opts);

/// Pathwise composition identity along the mollified characteristics:
///   V_eps(t, X_t(x)) = V_eps(0, x) + int_0^t R_eps(V,b)(X_s, s) ds,
/// where V(s) is the primitive of the continuity solution u(s) driven by b
/// on the same path, V_eps = V * rho_eps, and X is the flow of b_eps.
struct CompositionRecord {
  double x = 0.0;
  double lhs = 0.0;
  double rhs = 0.0;
  double defect = 0.0;
};

std::vector<CompositionRecord> composition_identity_check(
    const GridFunction& V0, const field::DriftField& b,
    const field::MollifierKernel& kernel, int m, const paths::BrownianEnsemble& W,
    int t_index, const std::vector<double>& x_starts,
    const commutator::Window& window);

/// Shared-noise coupling of two mollification levels: distance(t) is the
/// path average of ||u_eps(t) - u_{eps/2}(t)||^2_{L^2(mu)}.
struct UniquenessResult {
  double eps = 0.0;
  std::vector<double> t;
  std::vector<double> distance;
  bool tainted = false;
};

UniquenessResult uniqueness_experiment(const field::DriftField& b,
                                       const GridFunction& u0, double eps,
                                       const paths::BrownianEnsemble& W,
                                       const solution::WeightSpec& weight,
                                       const Eigen::VectorXd& flow_knots,
                                       const std::vector<int>& snapshot_indices,
                                       int threads = 0);

struct UniquenessSweep {
  std::vector<UniquenessResult> pairs;  // one per eps in the list
  double trend = 0.0;  // max over t of distance ratios between successive pairs
};

UniquenessSweep uniqueness_sweep(const field::DriftField& b, const GridFunction& u0,
                                 const std::vector<double>& eps_list,
                                 const paths::BrownianEnsemble& W,
                                 const solution::WeightSpec& weight,
                                 const Eigen::VectorXd& flow_knots,
                                 const std::vector<int>& snapshot_indices,
                                 int threads = 0);

}  // namespace spdechar::weakform
