#pragma once

#include <cmath>

#include "cmlab/core.hpp"

namespace cmlab {

/// Stopping and relaxation parameters shared by the relaxation solvers.
struct SolveConfig {
  /// Stop once one full sweep lowers the energy by less than tol * energy.
  double tol = 1e-12;
  int max_sweeps = 200000;
  /// Over-relaxation factor in [1, 2). Ignored when auto_omega is set.
  double omega = 1.9;
  /// Pick the SOR factor per grid level from its resolution.
  bool auto_omega = true;
  /// Normalised-energy threshold for singular points. Half the k = 1
  /// tangent-map quantum 8 pi.
  double eps0_sq = 4.0 * pi;
  /// Number of coarser grids used to build the initial guess (0 = none).
  int coarse_levels = 3;

  void check() const {
    if (!(tol > 0.0)) throw InputError("SolveConfig: tol must be positive");
    if (max_sweeps < 1) throw InputError("SolveConfig: max_sweeps must be >= 1");
    if (!(omega >= 1.0 && omega < 2.0))
      throw InputError("SolveConfig: omega must lie in [1, 2)");
    if (!(eps0_sq > 0.0)) throw InputError("SolveConfig: eps0_sq must be positive");
    if (coarse_levels < 0) throw InputError("SolveConfig: coarse_levels < 0");
  }
};

/// SOR factor 2 / (1 + sin(pi / n)) for a problem resolved by n cells.
inline double optimal_omega(int cells) {
  const double w = 2.0 / (1.0 + std::sin(pi / cells));
  return w < 1.0 ? 1.0 : (w >= 2.0 ? 1.999 : w);
}

}  // namespace cmlab
