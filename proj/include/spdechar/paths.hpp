#pragma once
#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace spdechar::paths {

/// M seeded Brownian paths on the uniform grid t_n = n*T/N.
/// dB[c](m,n) is the increment of coordinate c over [t_n, t_{n+1}];
/// B[c](m,n) is the running sum, B[c](m,0) = 0 exactly.
///
/// Draws are keyed by (seed, path, step, coordinate, N), so the ensemble
/// is a pure function of its inputs, identical across thread counts, and
/// refining N opens a fresh stream (no pathwise refinement guarantee;
/// coupled refinement studies go through coarsen() instead).
struct BrownianEnsemble {
  int n_paths = 0;
  int n_steps = 0;
  int dim = 1;
  double horizon = 0.0;
  double dt = 0.0;
  std::uint64_t seed = 0;
  std::vector<Eigen::MatrixXd> dB;  // per coordinate: M x N
  std::vector<Eigen::MatrixXd> B;   // per coordinate: M x (N+1)

  double time(int n) const { return n * dt; }

  /// Index of the step with t_n == t (tolerant to rounding); throws when t
  /// does not lie on the grid.
  int time_index(double t) const;

  static BrownianEnsemble from_increments(double T, std::uint64_t seed,
                                          std::vector<Eigen::MatrixXd> increments);
};

BrownianEnsemble sample_brownian(int n_paths, int n_steps, double horizon,
                                 std::uint64_t seed, int dim = 1, int threads = 0);

/// Coarse ensemble whose increments are exact sums of the fine ones
/// (factor must divide n_steps). This is the coupling used by all
/// dt-refinement experiments.
BrownianEnsemble coarsen(const BrownianEnsemble& fine, int factor);

}  // namespace spdechar::paths
