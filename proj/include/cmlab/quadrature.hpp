#pragma once

// Ball and sphere integrals of axially symmetric integrands centred on the
// z-axis, evaluated from (r,z) node data with the 2 pi r weight.

#include <algorithm>
#include <cmath>
#include <vector>

#include "cmlab/core.hpp"

namespace cmlab::quad {

/// True when the closed ball B_s(z0 e3) lies inside the active half-disk.
inline bool ball_fits(const AxiGrid& g, double z0, double s) {
  return std::abs(z0) + s <= g.radius() - 0.5 * g.h();
}

namespace detail {

// Fraction of the node cell [r -+ h/2] x [z -+ h/2] (clipped at r = 0) that
// lies inside the disk of radius s about (0, z0); 4x4 sub-samples near the rim.
inline double cell_fraction(double r, double z, double h, double z0, double s) {
  const double dz = z - z0;
  const double half = 0.5 * h * std::sqrt(2.0);
  const double d = std::hypot(r, dz);
  if (d + half <= s) return 1.0;
  if (d - half >= s) return 0.0;
  constexpr int sub = 4;
  const double s2 = s * s;
  double in = 0.0, all = 0.0;
  for (int a = 0; a < sub; ++a)
    for (int b = 0; b < sub; ++b) {
      const double rr = r + ((a + 0.5) / sub - 0.5) * h;
      const double zz = dz + ((b + 0.5) / sub - 0.5) * h;
      if (rr < 0.0) continue;
      const double w = rr;  // cylindrical weight inside the cell
      all += w;
      if (rr * rr + zz * zz <= s2) in += w;
    }
  return all > 0.0 ? in / all : 0.0;
}

}  // namespace detail

/// \int_{B_s(z0 e3)} f dx for an axially symmetric f given at the nodes.
/// Node quadrature with weight 2 pi r h^2 times the cell fraction inside
/// the ball; the axis column carries weight 0.
inline double ball_integral(const ScalarField& f, double z0, double s) {
  const AxiGrid& g = *f.grid;
  const double h = g.h();
  const int jlo = std::max(0, int(std::floor((z0 - s - g.origin_z()) / h)) - 1);
  const int jhi = std::min(g.nz() - 1, int(std::ceil((z0 + s - g.origin_z()) / h)) + 1);
  const int ihi = std::min(g.nr() - 1, int(std::ceil(s / h)) + 1);
  double sum = 0.0;
  for (int j = jlo; j <= jhi; ++j)
    for (int i = 1; i <= ihi; ++i) {
      if (!g.active(i, j)) continue;
      const double frac = detail::cell_fraction(g.r(i), g.z(j), h, z0, s);
      if (frac > 0.0) sum += frac * f(i, j) * g.r(i);
    }
  return 2.0 * pi * h * h * sum;
}

/// Same as ball_integral restricted to nodes where `mask` is nonzero.
inline double ball_integral_masked(const ScalarField& f, const std::vector<char>& mask,
                                   double z0, double s) {
  const AxiGrid& g = *f.grid;
  const double h = g.h();
  const int jlo = std::max(0, int(std::floor((z0 - s - g.origin_z()) / h)) - 1);
  const int jhi = std::min(g.nz() - 1, int(std::ceil((z0 + s - g.origin_z()) / h)) + 1);
  const int ihi = std::min(g.nr() - 1, int(std::ceil(s / h)) + 1);
  double sum = 0.0;
  for (int j = jlo; j <= jhi; ++j)
    for (int i = 1; i <= ihi; ++i) {
      if (!g.active(i, j) || !mask[g.index(i, j)]) continue;
      const double frac = detail::cell_fraction(g.r(i), g.z(j), h, z0, s);
      if (frac > 0.0) sum += frac * f(i, j) * g.r(i);
    }
  return 2.0 * pi * h * h * sum;
}

/// Bilinear interpolation of node data at (r, z). Points left of the first
/// column use the first cell.
inline double interpolate(const ScalarField& f, double r, double z) {
  const AxiGrid& g = *f.grid;
  const double h = g.h();
  double x = r / h, y = (z - g.origin_z()) / h;
  int i = std::clamp(int(std::floor(x)), 0, g.nr() - 2);
  int j = std::clamp(int(std::floor(y)), 0, g.nz() - 2);
  const double tx = x - i, ty = y - j;
  return (1 - tx) * (1 - ty) * f(i, j) + tx * (1 - ty) * f(i + 1, j) +
         (1 - tx) * ty * f(i, j + 1) + tx * ty * f(i + 1, j + 1);
}

/// Gauss-Legendre nodes and weights on [-1, 1] (Newton on the Bonnet
/// recurrence).
inline void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double t = std::cos(pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = t;
      for (int l = 2; l <= n; ++l) {
        const double p2 = ((2 * l - 1) * t * p1 - (l - 1) * p0) / l;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0;
      dp = n * (t * p1 - p0) / (t * t - 1.0);
      const double dt = p1 / dp;
      t -= dt;
      if (std::abs(dt) < 1e-16) break;
    }
    {
      double p0 = 1.0, p1 = t;
      for (int l = 2; l <= n; ++l) {
        const double p2 = ((2 * l - 1) * t * p1 - (l - 1) * p0) / l;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (t * p1 - p0) / (t * t - 1.0);
    }
    x[i] = -t;
    x[n - 1 - i] = t;
    w[i] = w[n - 1 - i] = 2.0 / ((1.0 - t * t) * dp * dp);
  }
}

/// \int_{\partial B_s(z0 e3)} f dH^2 with f interpolated bilinearly; Gauss
/// quadrature in cos(polar angle).
inline double sphere_integral(const ScalarField& f, double z0, double s, int points = 0) {
  const int n = points > 0 ? points : std::max(32, int(4.0 * s / f.grid->h()));
  std::vector<double> x, w;
  gauss_legendre(n, x, w);
  double acc = 0.0;
  for (int q = 0; q < n; ++q) {
    const double c = x[q];
    const double sn = std::sqrt(std::max(0.0, 1.0 - c * c));
    acc += w[q] * interpolate(f, s * sn, z0 + s * c);
  }
  return 2.0 * pi * s * s * acc;
}

/// Dyadic radii s_max, s_max/2, ... kept while >= s_min, at most `count`.
inline std::vector<double> dyadic_scales(double s_max, double s_min, int count) {
  std::vector<double> out;
  for (double s = s_max; s >= s_min * (1.0 - 1e-12) && int(out.size()) < count; s *= 0.5)
    out.push_back(s);
  return out;
}

}  // namespace cmlab::quad
