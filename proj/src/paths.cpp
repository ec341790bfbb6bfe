#include "spdechar/paths.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "spdechar/parallel.hpp"
#include "spdechar/rng.hpp"

namespace spdechar::paths {

int BrownianEnsemble::time_index(double t) const {
  const double s = t / dt;
  const int n = static_cast<int>(std::lround(s));
  if (n < 0 || n > n_steps || std::abs(s - n) > 1e-9 * (1.0 + std::abs(s))) {
    std::ostringstream msg;
    msg << "time t=" << t << " is not on the ensemble grid (dt=" << dt << ")";
    throw std::invalid_argument(msg.str());
  }
  return n;
}

static void fill_partial_sums(BrownianEnsemble& e) {
  e.B.assign(e.dB.size(), Eigen::MatrixXd());
  for (std::size_t c = 0; c < e.dB.size(); ++c) {
    e.B[c].resize(e.n_paths, e.n_steps + 1);
    for (int m = 0; m < e.n_paths; ++m) {
      double s = 0.0;
      e.B[c](m, 0) = 0.0;
      for (int n = 0; n < e.n_steps; ++n) {
        s += e.dB[c](m, n);
        e.B[c](m, n + 1) = s;
      }
    }
  }
}

BrownianEnsemble BrownianEnsemble::from_increments(
    double T, std::uint64_t seed, std::vector<Eigen::MatrixXd> increments) {
  if (increments.empty() || increments.size() > 2)
    throw std::invalid_argument("from_increments: need 1 or 2 coordinate blocks");
  BrownianEnsemble e;
  e.dim = static_cast<int>(increments.size());
  e.n_paths = static_cast<int>(increments[0].rows());
  e.n_steps = static_cast<int>(increments[0].cols());
  e.horizon = T;
  e.dt = T / e.n_steps;
  e.seed = seed;
  e.dB = std::move(increments);
  fill_partial_sums(e);
  return e;
}

BrownianEnsemble sample_brownian(int n_paths, int n_steps, double horizon,
                                 std::uint64_t seed, int dim, int threads) {
  if (n_paths < 1 || n_steps < 1 || !(horizon > 0.0))
    throw std::invalid_argument("sample_brownian: need M >= 1, N >= 1, T > 0");
  if (dim != 1 && dim != 2)
    throw std::invalid_argument("sample_brownian: unsupported dimension (d must be 1 or 2)");

  BrownianEnsemble e;
  e.n_paths = n_paths;
  e.n_steps = n_steps;
  e.dim = dim;
  e.horizon = horizon;
  e.dt = horizon / n_steps;
  e.seed = seed;
  e.dB.assign(dim, Eigen::MatrixXd(n_paths, n_steps));

  const double sd = std::sqrt(e.dt);
  for (int c = 0; c < dim; ++c) {
    auto& block = e.dB[c];
    const std::uint64_t stream =
        (static_cast<std::uint64_t>(c) << 32) ^ static_cast<std::uint64_t>(n_steps);
    parallel_for(n_paths, threads, [&](int lo, int hi) {
      for (int m = lo; m < hi; ++m)
        for (int n = 0; n < n_steps; ++n)
          block(m, n) = sd * rng::keyed_normal(seed, static_cast<std::uint64_t>(m),
                                               static_cast<std::uint64_t>(n), stream);
    });
  }
  fill_partial_sums(e);
  return e;
}

BrownianEnsemble coarsen(const BrownianEnsemble& fine, int factor) {
  if (factor < 1 || fine.n_steps % factor != 0)
    throw std::invalid_argument("coarsen: factor must divide the step count");
  std::vector<Eigen::MatrixXd> inc(fine.dB.size());
  const int Nc = fine.n_steps / factor;
  for (std::size_t c = 0; c < fine.dB.size(); ++c) {
    inc[c].resize(fine.n_paths, Nc);
    for (int m = 0; m < fine.n_paths; ++m)
      for (int q = 0; q < Nc; ++q) {
        double s = 0.0;
        for (int i = 0; i < factor; ++i) s += fine.dB[c](m, q * factor + i);
        inc[c](m, q) = s;
      }
  }
  return BrownianEnsemble::from_increments(fine.horizon, fine.seed, std::move(inc));
}

}  // namespace spdechar::paths
