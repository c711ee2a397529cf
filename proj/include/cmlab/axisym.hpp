#pragma once

// Alternating projected relaxation for k-axially symmetric constraint maps
// u = rho (sin phi cos k theta, sin phi sin k theta, cos phi) on the unit
// ball with |u| >= 1 and boundary values lambda * g. Outputs are minimisers
// within the symmetric class only.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cmlab/config.hpp"
#include "cmlab/contour.hpp"
#include "cmlab/core.hpp"
#include "cmlab/quadrature.hpp"

namespace cmlab::axisym {

/// Boundary values lambda * g with g = (sin phi_b cos k theta,
/// sin phi_b sin k theta, cos phi_b), phi_b a function of the polar angle psi
/// of the boundary point (psi = 0 on the positive z-axis).
struct BoundaryData {
  int k = 1;
  double lambda = 1.5;
  /// Samples (angles[i], values[i]) of phi_b, angles increasing from 0 to pi.
  std::vector<double> angles;
  std::vector<double> values;

  /// Linear interpolation of the samples.
  double phi_b(double psi) const {
    if (psi <= angles.front()) return values.front();
    if (psi >= angles.back()) return values.back();
    const auto it = std::upper_bound(angles.begin(), angles.end(), psi);
    const std::size_t i = std::size_t(it - angles.begin()) - 1;
    const double t = (psi - angles[i]) / (angles[i + 1] - angles[i]);
    return values[i] + t * (values[i + 1] - values[i]);
  }

  /// Signed number of times phi_b covers [0, pi].
  int profile_degree() const {
    return int(std::lround((values.back() - values.front()) / pi));
  }

  /// Degree of the boundary map g on the sphere.
  int degree() const { return k * profile_degree(); }

  /// phi on the axis above (north) and below (south) the centre.
  double north() const { return values.front(); }
  double south() const { return values.back(); }

  void check() const {
    if (k < 1) throw InputError("BoundaryData: k must be >= 1");
    if (!(lambda >= 1.0)) throw InputError("BoundaryData: lambda must be >= 1");
    if (angles.size() < 2 || angles.size() != values.size())
      throw InputError("BoundaryData: need >= 2 matching angle/value samples");
    if (std::abs(angles.front()) > 1e-12 || std::abs(angles.back() - pi) > 1e-9)
      throw InputError("BoundaryData: angles must run from 0 to pi");
    for (std::size_t i = 1; i < angles.size(); ++i)
      if (!(angles[i] > angles[i - 1]))
        throw InputError("BoundaryData: angles must increase strictly");
    for (double v : values)
      if (!(v >= -1e-12 && v <= pi + 1e-12))
        throw InputError("BoundaryData: phi values must lie in [0, pi]");
    auto pole = [](double v) { return std::min(std::abs(v), std::abs(v - pi)) < 1e-9; };
    if (!pole(values.front()) || !pole(values.back()))
      throw InputError("BoundaryData: phi_b endpoints must lie in {0, pi}");
  }

  static BoundaryData from_samples(int k, double lambda, std::vector<double> angles,
                                   std::vector<double> values) {
    BoundaryData bd{k, lambda, std::move(angles), std::move(values)};
    bd.check();
    bd.values.front() = std::abs(bd.values.front()) < 1e-9 ? 0.0 : pi;
    bd.values.back() = std::abs(bd.values.back()) < 1e-9 ? 0.0 : pi;
    return bd;
  }

  /// phi_b(psi) = psi: g is the k-fold wrap of the identity.
  static BoundaryData identity(int k, double lambda) {
    return from_samples(k, lambda, {0.0, pi}, {0.0, pi});
  }
};

/// Level set {rho = 1 + tol} and its intersections with the axis.
struct FreeBoundary {
  std::vector<Polyline> contour;
  std::vector<double> axis_points;

  bool empty() const { return contour.empty() && axis_points.empty(); }
  std::size_t point_count() const {
    std::size_t n = 0;
    for (const auto& p : contour) n += p.size();
    return n;
  }
};

/// Residuals of the two Euler-Lagrange equations, measured with a
/// non-conservative central-difference stencil independent of the solver.
struct Residuals {
  double phi_max = 0.0;
  double phi_l2 = 0.0;
  double rho_max = 0.0;
  double rho_l2 = 0.0;
  std::size_t nodes = 0;
};

struct ConvergenceReport {
  /// discrete_energy after every full alternation on the finest grid, with
  /// the initial value first.
  std::vector<double> energy_history;
  /// Alternations spent on each grid, coarsest first.
  std::vector<int> level_sweeps;
  std::vector<int> level_resolution;
  bool converged = false;
  Residuals residuals;
  double residual_threshold = 0.0;
};

namespace detail {

struct Arm {
  int i, j;
  double w;
};

// Stencil arms of an active node with the edge weights of discrete_energy.
inline int arms(const AxiGrid& g, int i, int j, Arm* out) {
  const double h = g.h();
  int n = 0;
  out[n++] = {i + 1, j, (i + 0.5) * h};
  if (i > 0) out[n++] = {i - 1, j, (i - 0.5) * h};
  const double wv = i == 0 ? h / 8.0 : i * h;
  out[n++] = {i, j + 1, wv};
  out[n++] = {i, j - 1, wv};
  return n;
}

inline double omega_for(const AxiGrid& g, const SolveConfig& cfg) {
  return cfg.auto_omega ? optimal_omega(int(std::lround(2.0 * g.radius() / g.h())))
                        : cfg.omega;
}

inline double axis_value(const BoundaryData& bd, double z) {
  return z >= 0.0 ? bd.north() : bd.south();
}

// Sets axis and Dirichlet nodes from the boundary data.
inline void impose(AxiState& s, const BoundaryData& bd) {
  const AxiGrid& g = s.grid();
  for (int j = 0; j < g.nz(); ++j)
    for (int i = 0; i < g.nr(); ++i) {
      const NodeKind kind = g.kind(i, j);
      if (kind == NodeKind::axis) {
        s.phi(i, j) = axis_value(bd, g.z(j));
      } else if (kind == NodeKind::boundary || kind == NodeKind::exterior) {
        s.rho(i, j) = bd.lambda;
        s.phi(i, j) = bd.phi_b(std::atan2(g.r(i), g.z(j)));
      }
    }
}

}  // namespace detail

/// Initial guess: phi = phi_b of the polar angle, rho = 1 + (lambda - 1)
/// min(1, |x|^2). Axis nodes take phi_b(0) for z >= 0 and phi_b(pi) below.
inline AxiState init_state(GridPtr grid, const BoundaryData& bd) {
  bd.check();
  if (!grid) throw InputError("init_state: null grid");
  AxiState s{bd.k, ScalarField(grid, 1.0), ScalarField(grid, 0.0)};
  const AxiGrid& g = *grid;
  for (int j = 0; j < g.nz(); ++j)
    for (int i = 0; i < g.nr(); ++i) {
      const double r = g.r(i), z = g.z(j);
      const double q = std::min(1.0, (r * r + z * z) / (g.radius() * g.radius()));
      s.rho(i, j) = 1.0 + (bd.lambda - 1.0) * q;
      s.phi(i, j) = bd.phi_b(std::atan2(r, z));
    }
  detail::impose(s, bd);
  return s;
}

/// Outcome of one colour of a relaxation sweep.
struct SweepStats {
  std::size_t updated = 0;
  /// Decrease of discrete_energy, summed from the exact local changes.
  double drop = 0.0;
};

/// One colour of a red-black sweep for phi at frozen rho. Each off-axis node
/// takes a Newton step on its local energy (a majorising step where the
/// local energy is not convex), over-relaxed by omega, clamped to [0, pi]
/// and halved until the local energy does not increase. Axis nodes keep
/// their pinned pole value.
inline SweepStats relax_phi(AxiState& s, int parity, double omega = 1.0) {
  const AxiGrid& g = s.grid();
  const double h = g.h();
  const double k2 = double(s.k) * s.k;
  detail::Arm a[4];
  SweepStats st;
  long double drop = 0.0L;
  for (int j = 1; j + 1 < g.nz(); ++j)
    for (int i = 1 + ((j + 1 + parity) & 1); i + 1 < g.nr(); i += 2) {
      if (g.kind(i, j) != NodeKind::interior) continue;
      const int na = detail::arms(g, i, j, a);
      const double rp = s.rho(i, j), rp2 = rp * rp;
      double W = 0.0, S = 0.0;
      for (int q = 0; q < na; ++q) {
        const double rq = s.rho(a[q].i, a[q].j);
        const double m = a[q].w * 0.5 * (rp2 + rq * rq);
        W += m;
        S += m * s.phi(a[q].i, a[q].j);
      }
      // Local energy W x^2 - 2 S x + B sin^2 x; changes are formed without
      // cancellation.
      const double B = k2 * h * h * rp2 / g.r(i);
      const double p = s.phi(i, j);
      const double sn = std::sin(p), cs = std::cos(p);
      auto change = [&](double x) {
        return (x - p) * (W * (x + p) - 2.0 * S) + B * std::sin(x - p) * std::sin(x + p);
      };
      const double grad = 2.0 * (W * p - S) + 2.0 * B * sn * cs;
      const double curv = 2.0 * W + 2.0 * B * (cs * cs - sn * sn);
      const double denom = curv >= W ? curv : 2.0 * W + 2.0 * B;
      double step = -omega * grad / denom;
      for (int half = 0; half < 30; ++half) {
        const double cand = std::clamp(p + step, 0.0, pi);
        const double d = change(cand);
        if (d <= 0.0) {
          if (cand != p) ++st.updated;
          s.phi(i, j) = cand;
          drop -= d;
          break;
        }
        step *= 0.5;
      }
    }
  st.drop = 2.0 * pi * double(drop);
  return st;
}

/// One colour of a projected red-black sweep for rho at frozen phi: exact
/// minimisation of the local quadratic energy, over-relaxed by omega, then
/// clamped to rho >= 1. Axis nodes are included.
inline SweepStats relax_rho(AxiState& s, int parity, double omega = 1.0) {
  const AxiGrid& g = s.grid();
  const double h = g.h();
  const double k2 = double(s.k) * s.k;
  detail::Arm a[4];
  SweepStats st;
  long double drop = 0.0L;
  for (int j = 1; j + 1 < g.nz(); ++j)
    for (int i = (j + parity) & 1; i + 1 < g.nr(); i += 2) {
      if (!g.active(i, j)) continue;
      const int na = detail::arms(g, i, j, a);
      const double pp = s.phi(i, j);
      double A = 0.0, Srho = 0.0, C = 0.0;
      for (int q = 0; q < na; ++q) {
        const double dp = pp - s.phi(a[q].i, a[q].j);
        A += a[q].w;
        Srho += a[q].w * s.rho(a[q].i, a[q].j);
        C += 0.5 * a[q].w * dp * dp;
      }
      if (i > 0) {
        const double sn = std::sin(pp);
        C += k2 * h * h * sn * sn / g.r(i);
      }
      const double old = s.rho(i, j);
      const double target = Srho / (A + C);
      const double next = std::max(1.0, old + omega * (target - old));
      if (next != old) {
        ++st.updated;
        // Local energy (A + C)(x - target)^2 + const.
        drop += std::max(0.0, -(A + C) * (next - old) * (next + old - 2.0 * target));
      }
      s.rho(i, j) = next;
    }
  st.drop = 2.0 * pi * double(drop);
  return st;
}

/// Euler-Lagrange residuals at off-axis active nodes with rho > 1 + threshold
/// that lie at least `margin` h inside the outer circle (the first layers
/// next to the staircase Dirichlet nodes carry an O(1) consistency error):
///   phi: Lap' phi + 2 (D'rho . D'phi) / rho - k^2 sin(2 phi) / (2 r^2)
///   rho: Lap' rho - rho (|D'phi|^2 + k^2 sin^2(phi) / r^2)
/// The L2 norms carry the 3D weight 2 pi r h^2.
inline Residuals euler_lagrange_residuals(const AxiState& s, double threshold,
                                          double margin = 2.0) {
  const AxiGrid& g = s.grid();
  const double h = g.h(), h2 = h * h;
  const double k2 = double(s.k) * s.k;
  Residuals out;
  double sp = 0.0, sr = 0.0;
  for (int j = 1; j + 1 < g.nz(); ++j)
    for (int i = 1; i + 1 < g.nr(); ++i) {
      if (g.kind(i, j) != NodeKind::interior) continue;
      const double rho = s.rho(i, j);
      if (!(rho > 1.0 + threshold)) continue;
      const double r = g.r(i);
      if (g.radius() - std::hypot(r, g.z(j)) < margin * h) continue;
      auto lap = [&](const ScalarField& f) {
        const double c = f(i, j);
        return (f(i + 1, j) + f(i - 1, j) + f(i, j + 1) + f(i, j - 1) - 4.0 * c) / h2 +
               (f(i + 1, j) - f(i - 1, j)) / (2.0 * h * r);
      };
      const double rr = (s.rho(i + 1, j) - s.rho(i - 1, j)) / (2.0 * h);
      const double rz = (s.rho(i, j + 1) - s.rho(i, j - 1)) / (2.0 * h);
      const double pr = (s.phi(i + 1, j) - s.phi(i - 1, j)) / (2.0 * h);
      const double pz = (s.phi(i, j + 1) - s.phi(i, j - 1)) / (2.0 * h);
      const double p = s.phi(i, j);
      const double sn = std::sin(p);
      const double res_phi =
          lap(s.phi) + 2.0 * (rr * pr + rz * pz) / rho - k2 * std::sin(2.0 * p) / (2.0 * r * r);
      const double res_rho = lap(s.rho) - rho * (pr * pr + pz * pz + k2 * sn * sn / (r * r));
      out.phi_max = std::max(out.phi_max, std::abs(res_phi));
      out.rho_max = std::max(out.rho_max, std::abs(res_rho));
      sp += res_phi * res_phi * r;
      sr += res_rho * res_rho * r;
      ++out.nodes;
    }
  out.phi_l2 = std::sqrt(2.0 * pi * h2 * sp);
  out.rho_l2 = std::sqrt(2.0 * pi * h2 * sr);
  return out;
}

namespace detail {

struct LevelOutcome {
  int sweeps = 0;
  bool converged = false;
};

inline LevelOutcome relax_level(AxiState& s, const SolveConfig& cfg,
                                std::vector<double>* history) {
  const double omega = omega_for(s.grid(), cfg);
  double energy = discrete_energy(s);
  if (history) history->push_back(energy);
  LevelOutcome out;
  for (int sweep = 1; sweep <= cfg.max_sweeps; ++sweep) {
    const double drop = relax_phi(s, 0, omega).drop + relax_phi(s, 1, omega).drop +
                        relax_rho(s, 0, omega).drop + relax_rho(s, 1, omega).drop;
    energy = discrete_energy(s);
    if (history) history->push_back(energy);
    out.sweeps = sweep;
    if (drop < cfg.tol * std::abs(energy)) {
      out.converged = true;
      break;
    }
  }
  return out;
}

// Resolution G with grid == AxiGrid::half_disk(G, R), or 0.
inline int half_disk_resolution(const AxiGrid& g) {
  const int res = 2 * (g.nr() - 1);
  if (res < 8) return 0;
  try {
    if (AxiGrid::half_disk(res, g.radius()).same_layout(g)) return res;
  } catch (const InputError&) {
  }
  return 0;
}

inline void prolong(const AxiState& coarse, AxiState& fine, const BoundaryData& bd) {
  const AxiGrid& g = fine.grid();
  for (int j = 0; j < g.nz(); ++j)
    for (int i = 0; i < g.nr(); ++i) {
      if (!g.active(i, j)) continue;
      fine.rho(i, j) = std::max(1.0, quad::interpolate(coarse.rho, g.r(i), g.z(j)));
      fine.phi(i, j) = std::clamp(quad::interpolate(coarse.phi, g.r(i), g.z(j)), 0.0, pi);
    }
  impose(fine, bd);
}

}  // namespace detail

/// Minimises the discrete energy over rho >= 1 with the given boundary data
/// by alternating red-black sweeps (phi then rho) until one alternation
/// lowers the energy by less than cfg.tol times the energy. Half-disk grids
/// start from a chain of coarser solves. Non-convergence is flagged in the
/// report; the last iterate is returned either way.
inline std::pair<AxiState, ConvergenceReport> minimize(GridPtr grid, const BoundaryData& bd,
                                                       const SolveConfig& cfg) {
  cfg.check();
  bd.check();
  ConvergenceReport rep;
  std::vector<GridPtr> chain{grid};
  if (const int res = detail::half_disk_resolution(*grid); res > 0) {
    int r = res;
    for (int l = 0; l < cfg.coarse_levels && (r / 2) % 2 == 0 && r / 2 >= 16; ++l) {
      r /= 2;
      chain.push_back(make_grid(AxiGrid::half_disk(r, grid->radius())));
    }
  }
  std::optional<AxiState> prev;
  for (auto it = chain.rbegin(); it != chain.rend(); ++it) {
    AxiState s = init_state(*it, bd);
    if (prev) detail::prolong(*prev, s, bd);
    const bool finest = (*it == grid);
    auto out = detail::relax_level(s, cfg, finest ? &rep.energy_history : nullptr);
    rep.level_sweeps.push_back(out.sweeps);
    rep.level_resolution.push_back(2 * ((*it)->nr() - 1));
    if (finest) rep.converged = out.converged;
    prev = std::move(s);
  }
  rep.residual_threshold = 10.0 * grid->h();
  rep.residuals = euler_lagrange_residuals(*prev, rep.residual_threshold);
  return {std::move(*prev), std::move(rep)};
}

/// Marching-squares contour of rho = 1 + tol and the heights where the axis
/// column crosses that level.
inline FreeBoundary free_boundary(const AxiState& s, double tol) {
  const AxiGrid& g = s.grid();
  const double level = 1.0 + tol;
  FreeBoundary fb;
  fb.contour = level_set(s.rho, level);
  for (int j = 0; j + 1 < g.nz(); ++j) {
    if (!g.active(0, j) || !g.active(0, j + 1)) continue;
    const double a = s.rho(0, j) - level, b = s.rho(0, j + 1) - level;
    if ((a > 0.0) != (b > 0.0)) fb.axis_points.push_back(g.z(j) + a / (a - b) * g.h());
  }
  return fb;
}

/// Energy of u inside B_s(z0 e3), from the edge terms of discrete_energy
/// weighted by the fraction of an h-cell about each edge midpoint (or node)
/// inside the ball. Consistent with the minimised energy, so it stays
/// accurate next to a point singularity.
inline double ball_energy(const AxiState& s, double z0, double radius) {
  const AxiGrid& g = s.grid();
  const double h = g.h();
  const double k2 = double(s.k) * s.k;
  const int jlo = std::max(0, int(std::floor((z0 - radius - g.origin_z()) / h)) - 1);
  const int jhi = std::min(g.nz() - 1, int(std::ceil((z0 + radius - g.origin_z()) / h)) + 1);
  const int ihi = std::min(g.nr() - 1, int(std::ceil(radius / h)) + 1);
  long double sum = 0.0L;
  auto edge = [&](int i0, int j0, int i1, int j1, double w) {
    if (!g.known(i0, j0) || !g.known(i1, j1)) return;
    if (!g.active(i0, j0) && !g.active(i1, j1)) return;
    const double rm = 0.5 * (g.r(i0) + g.r(i1)), zm = 0.5 * (g.z(j0) + g.z(j1));
    const double frac = quad::detail::cell_fraction(std::max(rm, 0.5 * h), zm, h, z0, radius);
    if (frac <= 0.0) return;
    const double ra = s.rho(i0, j0), rb = s.rho(i1, j1);
    const double dr = ra - rb, dp = s.phi(i0, j0) - s.phi(i1, j1);
    sum += frac * w * (dr * dr + 0.5 * (ra * ra + rb * rb) * dp * dp);
  };
  for (int j = jlo; j <= jhi; ++j)
    for (int i = 0; i <= ihi; ++i) {
      if (i + 1 < g.nr()) edge(i, j, i + 1, j, (i + 0.5) * h);
      if (j + 1 < g.nz()) edge(i, j, i, j + 1, i == 0 ? h / 8.0 : i * h);
      if (i > 0 && g.active(i, j)) {
        const double frac = quad::detail::cell_fraction(g.r(i), g.z(j), h, z0, radius);
        if (frac <= 0.0) continue;
        const double sn = std::sin(s.phi(i, j)), rho = s.rho(i, j);
        sum += frac * k2 * h * h * rho * rho * sn * sn / g.r(i);
      }
    }
  return 2.0 * pi * double(sum);
}

/// r^{-1} \int_{B_r(z0 e3)} |Du|^2 (three dimensions).
inline double normalized_energy(const AxiState& s, double z0, double radius) {
  if (!(radius > 0.0)) throw InputError("normalized_energy: radius must be positive");
  return ball_energy(s, z0, radius) / radius;
}

/// Dyadic radii 4h, 8h, ... up to min(R/2, distance to the boundary - h),
/// returned largest first. Empty when even 4h does not fit.
inline std::vector<double> singular_scales(const AxiGrid& g, double z0) {
  const double cap = std::min(0.5 * g.radius(), g.radius() - std::abs(z0) - g.h());
  std::vector<double> out;
  for (double s = 4.0 * g.h(); s <= cap; s *= 2.0) out.push_back(s);
  std::reverse(out.begin(), out.end());
  return out;
}

/// Axis heights where the normalised energy stays >= cfg.eps0_sq at every
/// dyadic scale from the largest admissible one down to 4h. Candidates
/// closer than 4h to each other form one cluster, represented by its member
/// with the largest energy at 4h, so returned points (sorted by z) are more
/// than 4h apart.
inline std::vector<double> detect_singularities(const AxiState& s, const SolveConfig& cfg) {
  const AxiGrid& g = s.grid();
  struct Cand {
    double z, e;
  };
  std::vector<Cand> cands;
  for (int j = 0; j < g.nz(); ++j) {
    if (!g.active(0, j)) continue;
    const double z = g.z(j);
    const auto scales = singular_scales(g, z);
    if (scales.empty()) continue;
    const double e_small = normalized_energy(s, z, scales.back());
    if (e_small < cfg.eps0_sq) continue;
    bool all = true;
    for (std::size_t q = 0; q + 1 < scales.size() && all; ++q)
      all = normalized_energy(s, z, scales[q]) >= cfg.eps0_sq;
    if (all) cands.push_back({z, e_small});
  }
  // Heights midway between axis nodes whose pinned pole values differ.
  std::vector<double> flips;
  for (int j = 0; j + 1 < g.nz(); ++j)
    if (g.active(0, j) && g.active(0, j + 1) && s.phi(0, j) != s.phi(0, j + 1))
      flips.push_back(g.z(j) + 0.5 * g.h());
  const double base = 4.0 * g.h();
  std::vector<double> out;
  for (std::size_t a = 0; a < cands.size();) {
    std::size_t b = a, best = a;
    while (b + 1 < cands.size() && cands[b + 1].z - cands[b].z <= base + 1e-12) {
      ++b;
      if (cands[b].e > cands[best].e) best = b;
    }
    // The discrete singularity sits on the pole flip when the cluster has one.
    double z = cands[best].z;
    for (double f : flips)
      if (f >= cands[a].z - g.h() && f <= cands[b].z + g.h()) z = f;
    out.push_back(z);
    a = b + 1;
  }
  return out;
}

/// Singular values of Du at the node nearest to (r, z), largest first.
/// Off the axis the frame is (e_r, e_theta, e_z). On the axis the horizontal
/// block uses the complex-derivative coefficients
/// cos(phi) d_r phi +- k sin(phi) / r extrapolated to r = 0.
inline std::array<double, 3> differential_singular_values(const AxiState& s, double r,
                                                          double z) {
  const AxiGrid& g = s.grid();
  const int i = std::clamp(int(std::lround(r / g.h())), 0, g.nr() - 1);
  const int j = g.nearest_row(z);
  if (!g.active(i, j)) throw InputError("branch_rank: point outside the domain");
  const double k = s.k;
  Eigen::Matrix3d M = Eigen::Matrix3d::Zero();
  const double rho = s.rho(i, j);
  const double rz = cmlab::detail::d_z(s.rho, i, j);
  const double pz = cmlab::detail::d_z(s.phi, i, j);
  if (i == 0) {
    auto coeff = [&](int ii, double sign) {
      const double p = s.phi(ii, j);
      const double pr = (s.phi(ii + 1, j) - s.phi(ii - 1, j)) / (2.0 * g.h());
      return std::cos(p) * pr + sign * k * std::sin(p) / g.r(ii);
    };
    auto extrap = [&](double sign) {
      if (!g.active(2, j)) return coeff(1, sign);
      return 2.0 * coeff(1, sign) - coeff(2, sign);
    };
    const double cp = extrap(1.0), cm = extrap(-1.0);
    M(0, 0) = rho * (cp + cm);
    M(1, 1) = rho * (cp - cm);
    M(0, 2) = rho * pz;
    M(2, 2) = rz;
  } else {
    const double rr = cmlab::detail::d_r(s.rho, i, j, true);
    const double pr = cmlab::detail::d_r(s.phi, i, j, false);
    M(0, 0) = rr;
    M(0, 2) = rz;
    M(1, 0) = rho * pr;
    M(1, 2) = rho * pz;
    M(2, 1) = rho * k * std::sin(s.phi(i, j)) / g.r(i);
  }
  const Eigen::Vector3d sv = Eigen::JacobiSVD<Eigen::Matrix3d>(M).singularValues();
  return {sv(0), sv(1), sv(2)};
}

/// Numeric rank of Du at (r, z): singular values above C h. Throws when the
/// point lies within 4h of a listed singular point.
inline int branch_rank(const AxiState& s, double r, double z,
                       const std::vector<double>& singular = {}, double C = 1.0) {
  const double h = s.grid().h();
  for (double zs : singular)
    if (std::hypot(r, z - zs) < 4.0 * h)
      throw InputError("branch_rank: point inside the singular set");
  const auto sv = differential_singular_values(s, r, z);
  int rank = 0;
  for (double v : sv) rank += v > C * h;
  return rank;
}

/// Number of active nodes with rho exactly 1.
inline std::size_t coincidence_count(const AxiState& s) {
  const AxiGrid& g = s.grid();
  std::size_t n = 0;
  for (int j = 0; j < g.nz(); ++j)
    for (int i = 0; i < g.nr(); ++i) n += g.active(i, j) && s.rho(i, j) == 1.0;
  return n;
}

inline double min_rho(const AxiState& s) {
  const AxiGrid& g = s.grid();
  double m = INFINITY;
  for (int j = 0; j < g.nz(); ++j)
    for (int i = 0; i < g.nr(); ++i)
      if (g.known(i, j)) m = std::min(m, s.rho(i, j));
  return m;
}

}  // namespace cmlab::axisym
