#pragma once

// Scale-indexed monitors on axially symmetric states: normalised energy,
// frequency, Weiss energy, vanishing order, negative moments, subharmonicity
// defect, tangent-map comparison and the scalar-obstacle graph defect.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <string>
#include <vector>

#include "cmlab/axisym.hpp"
#include "cmlab/core.hpp"
#include "cmlab/quadrature.hpp"

namespace cmlab::diag {

enum class Quantity { energy, frequency, weiss, supnorm, negmoment };

inline const char* to_string(Quantity q) {
  switch (q) {
    case Quantity::energy: return "energy";
    case Quantity::frequency: return "frequency";
    case Quantity::weiss: return "weiss";
    case Quantity::supnorm: return "supnorm";
    case Quantity::negmoment: return "negmoment";
  }
  return "?";
}

struct ScaleCurve {
  Quantity quantity = Quantity::energy;
  double center = 0.0;  // axis height
  std::vector<double> scales;
  std::vector<double> values;
};

/// Least-squares line y = intercept + slope x with its coefficient of
/// determination.
struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

inline LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n) throw InputError("fit_line: need >= 2 matching samples");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx <= 0.0) throw InputError("fit_line: abscissae are all equal");
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return f;
}

struct VanishingOrderFit {
  double center = 0.0;
  double slope = 0.0;
  double r2 = 0.0;
  std::vector<double> scales;
  std::vector<double> sup_values;
};

struct BranchPoint {
  double r = 0.0, z = 0.0;
  int rank = 0;
};

struct DiagnosticsReport {
  std::vector<ScaleCurve> curves;
  std::vector<double> singular_points;
  std::vector<BranchPoint> branch_points;
  std::vector<VanishingOrderFit> vanishing_order_fits;
  double gamma = 0.1;
};

/// Dyadic radii s_max, s_max/2, ... (count values).
inline std::vector<double> dyadic(double s_max, int count) {
  if (!(s_max > 0.0) || count < 1) throw InputError("dyadic: bad arguments");
  std::vector<double> out;
  for (int i = 0; i < count; ++i) out.push_back(s_max * std::ldexp(1.0, -i));
  return out;
}

namespace detail {

inline void check_scales(const AxiGrid& g, double z0, const std::vector<double>& scales,
                         const char* who) {
  if (scales.empty()) throw InputError(std::string(who) + ": no scales");
  for (std::size_t i = 0; i < scales.size(); ++i) {
    if (!(scales[i] > 2.0 * g.h()))
      throw InputError(std::string(who) + ": scales must exceed 2h");
    if (i > 0 && !(scales[i] < scales[i - 1]))
      throw InputError(std::string(who) + ": scales must decrease strictly");
    if (!quad::ball_fits(g, z0, scales[i]))
      throw InputError(std::string(who) + ": ball exceeds the domain");
  }
}

// |D f|^2 from central differences (even reflection on the axis).
inline ScalarField gradient_sq(const ScalarField& f, bool even_on_axis) {
  const AxiGrid& g = *f.grid;
  ScalarField out(f.grid, 0.0);
  for (int j = 0; j < g.nz(); ++j)
    for (int i = 0; i < g.nr(); ++i) {
      if (!g.active(i, j)) continue;
      const double a = cmlab::detail::d_r(f, i, j, even_on_axis);
      const double b = cmlab::detail::d_z(f, i, j);
      out(i, j) = a * a + b * b;
    }
  return out;
}

}  // namespace detail

/// r^{-1} \int_{B_r(z0 e3)} |Du|^2 at each scale.
inline ScaleCurve normalized_energy(const AxiState& s, double z0,
                                    const std::vector<double>& scales) {
  detail::check_scales(s.grid(), z0, scales, "normalized_energy");
  ScaleCurve c{Quantity::energy, z0, scales, {}};
  for (double r : scales) c.values.push_back(axisym::normalized_energy(s, z0, r));
  return c;
}

/// Frequency r \int_{B_r}|Df|^2 / \int_{\partial B_r}|f - mean|^2 of an
/// axially symmetric scalar field about z0 e3. A denominator at rounding
/// level relative to area * mean^2 yields +infinity.
inline ScaleCurve frequency(const ScalarField& f, double z0,
                            const std::vector<double>& scales) {
  detail::check_scales(*f.grid, z0, scales, "frequency");
  const ScalarField grad = detail::gradient_sq(f, true);
  ScaleCurve c{Quantity::frequency, z0, scales, {}};
  for (double r : scales) {
    const double area = 4.0 * pi * r * r;
    const double mean = quad::sphere_integral(f, z0, r) / area;
    ScalarField dev(f.grid, 0.0);
    for (std::size_t q = 0; q < dev.values.size(); ++q) {
      const double d = f.values[q] - mean;
      dev.values[q] = d * d;
    }
    const double denom = quad::sphere_integral(dev, z0, r);
    const double num = r * quad::ball_integral(grad, z0, r);
    // Rounding in the mean leaves a tiny positive denominator for constants.
    const double scale = area * mean * mean;
    c.values.push_back(denom > 1e-24 * scale ? num / denom
                                              : std::numeric_limits<double>::infinity());
  }
  return c;
}

/// |Dv|^2 = |D'phi|^2 + k^2 sin^2(phi) / r^2 for v = u / |u|.
inline ScalarField direction_energy(const AxiState& s) {
  const AxiGrid& g = s.grid();
  ScalarField out(s.rho.grid, 0.0);
  for (int j = 0; j < g.nz(); ++j)
    for (int i = 0; i < g.nr(); ++i) {
      if (!g.active(i, j)) continue;
      const double pr = cmlab::detail::d_r(s.phi, i, j, false);
      const double pz = cmlab::detail::d_z(s.phi, i, j);
      out(i, j) = pr * pr + pz * pz + azimuthal_term(s, i, j);
    }
  return out;
}

/// W(z0, s) = s^{-(4k+1)} \int_{B_s}(|D rho|^2 + 2 (rho-1) rho |Dv|^2)
///          - 2k s^{-(4k+2)} \int_{\partial B_s} (rho-1)^2.
inline ScaleCurve weiss_energy(const AxiState& s, double z0,
                               const std::vector<double>& scales, int k) {
  if (k < 1) throw InputError("weiss_energy: k must be >= 1");
  detail::check_scales(s.grid(), z0, scales, "weiss_energy");
  const ScalarField grad = detail::gradient_sq(s.rho, true);
  const ScalarField dv = direction_energy(s);
  ScalarField bulk(s.rho.grid, 0.0), excess_sq(s.rho.grid, 0.0);
  for (std::size_t q = 0; q < bulk.values.size(); ++q) {
    const double rho = s.rho.values[q];
    bulk.values[q] = grad.values[q] + 2.0 * (rho - 1.0) * rho * dv.values[q];
    excess_sq.values[q] = (rho - 1.0) * (rho - 1.0);
  }
  ScaleCurve c{Quantity::weiss, z0, scales, {}};
  for (double r : scales) {
    const double vol = quad::ball_integral(bulk, z0, r);
    const double surf = quad::sphere_integral(excess_sq, z0, r);
    c.values.push_back(vol / std::pow(r, 4 * k + 1) - 2.0 * k * surf / std::pow(r, 4 * k + 2));
  }
  return c;
}

/// Result of fitting value(s) ~ alpha + beta s^p and testing whether
/// value + C s^p with C = -beta is nondecreasing in s.
struct AlmostMonotone {
  double C = 0.0;
  double alpha = 0.0;
  bool monotone = false;
  std::vector<double> corrected;  // same order as the input scales
};

inline AlmostMonotone almost_monotone(const ScaleCurve& c, double p, double slack = 0.0) {
  if (c.scales.size() < 2) throw InputError("almost_monotone: need >= 2 scales");
  std::vector<double> x;
  for (double s : c.scales) x.push_back(std::pow(s, p));
  const LineFit f = fit_line(x, c.values);
  AlmostMonotone out;
  out.C = -f.slope;
  out.alpha = f.intercept;
  for (std::size_t i = 0; i < x.size(); ++i) out.corrected.push_back(c.values[i] + out.C * x[i]);
  // Scales decrease, so the corrected values must not increase along the list.
  out.monotone = true;
  for (std::size_t i = 1; i < x.size(); ++i)
    if (out.corrected[i] > out.corrected[i - 1] + slack) out.monotone = false;
  return out;
}

/// Least-squares slope of log sup_{B_s}(excess + s |grad|) against log s,
/// where the sup is taken over `samples` (radius, value-pair) provided by
/// the caller through `sup_at(s)`.
template <class SupFn>
VanishingOrderFit vanishing_order_from(SupFn&& sup_at, double z0,
                                       const std::vector<double>& scales) {
  VanishingOrderFit fit;
  fit.center = z0;
  std::vector<double> lx, ly;
  for (double s : scales) {
    const double v = sup_at(s);
    if (!(v > 0.0) || !std::isfinite(v)) continue;
    fit.scales.push_back(s);
    fit.sup_values.push_back(v);
    lx.push_back(std::log(s));
    ly.push_back(std::log(v));
  }
  if (lx.size() < 5) throw InputError("vanishing_order: fewer than 5 usable scales");
  const LineFit f = fit_line(lx, ly);
  fit.slope = f.slope;
  fit.r2 = f.r2;
  return fit;
}

/// Vanishing order for analytic data: `excess(r, z)` is rho - 1 and
/// `grad(r, z)` is |D rho|. The sup over B_s(z0 e3) is taken on a polar
/// sample set that contains the sphere of radius s and both poles.
template <class F, class G>
VanishingOrderFit vanishing_order(F&& excess, G&& grad, double z0,
                                  const std::vector<double>& scales) {
  auto sup_at = [&](double s) {
    constexpr int nrad = 16, nang = 64;
    double best = 0.0;
    for (int a = 1; a <= nrad; ++a) {
      const double rad = s * a / nrad;
      for (int b = 0; b <= nang; ++b) {
        const double psi = pi * b / nang;
        const double r = rad * std::sin(psi), z = z0 + rad * std::cos(psi);
        best = std::max(best, excess(r, z) + s * grad(r, z));
      }
    }
    return best;
  };
  return vanishing_order_from(sup_at, z0, scales);
}

/// Vanishing order of rho - 1 on a grid state: sup over nodes inside
/// B_s(z0 e3) and bilinear samples on its boundary sphere, with |D rho| from
/// central differences.
inline VanishingOrderFit vanishing_order(const AxiState& st, double z0,
                                         const std::vector<double>& scales) {
  const AxiGrid& g = st.grid();
  detail::check_scales(g, z0, scales, "vanishing_order");
  ScalarField grad = detail::gradient_sq(st.rho, true);
  for (double& v : grad.values) v = std::sqrt(v);
  auto sup_at = [&](double s) {
    double best = 0.0;
    const int nang = std::max(64, int(8.0 * s / g.h()));
    for (int b = 0; b <= nang; ++b) {
      const double psi = pi * b / nang;
      const double r = s * std::sin(psi), z = z0 + s * std::cos(psi);
      best = std::max(best, quad::interpolate(st.rho, r, z) - 1.0 +
                                s * quad::interpolate(grad, r, z));
    }
    const int jlo = std::max(0, g.nearest_row(z0 - s) - 1);
    const int jhi = std::min(g.nz() - 1, g.nearest_row(z0 + s) + 1);
    for (int j = jlo; j <= jhi; ++j)
      for (int i = 0; i < g.nr() && g.r(i) <= s; ++i) {
        if (!g.active(i, j)) continue;
        if (std::hypot(g.r(i), g.z(j) - z0) > s) continue;
        best = std::max(best, st.rho(i, j) - 1.0 + s * grad(i, j));
      }
    return best;
  };
  return vanishing_order_from(sup_at, z0, scales);
}

/// Integration region: the shell inner <= |x - z0 e3| <= outer, optionally
/// restricted to z >= z0.
struct Region {
  double z0 = 0.0;
  double inner = 0.0;
  double outer = 1.0;
  bool upper_half = false;
};

/// \int_region |Du|^{-gamma} with |Du| floored at h^2 node by node.
inline double neg_moment(const ScalarField& grad_norm, const Region& reg, double gamma) {
  if (!(gamma > 0.0)) throw InputError("neg_moment: gamma must be positive");
  if (!(reg.outer > reg.inner && reg.inner >= 0.0))
    throw InputError("neg_moment: need 0 <= inner < outer");
  const AxiGrid& g = *grad_norm.grid;
  const double floor = g.h() * g.h();
  ScalarField integrand(grad_norm.grid, 0.0);
  std::vector<char> mask(g.size(), 1);
  for (int j = 0; j < g.nz(); ++j)
    for (int i = 0; i < g.nr(); ++i) {
      const std::size_t q = g.index(i, j);
      integrand.values[q] = std::pow(std::max(floor, grad_norm.values[q]), -gamma);
      if (reg.upper_half) {
        const double dz = g.z(j) - reg.z0;
        if (dz < -0.5 * g.h()) mask[q] = 0;
      }
    }
  auto ball = [&](double s) {
    if (s <= 0.0) return 0.0;
    return quad::ball_integral_masked(integrand, mask, reg.z0, s);
  };
  double value = ball(reg.outer) - ball(reg.inner);
  if (reg.upper_half) {
    // The row z = z0 carries half of its cell.
    const int j0 = g.nearest_row(reg.z0);
    if (std::abs(g.z(j0) - reg.z0) < 1e-9 * g.h()) {
      ScalarField row(grad_norm.grid, 0.0);
      std::vector<char> rmask(g.size(), 0);
      for (int i = 0; i < g.nr(); ++i) {
        rmask[g.index(i, j0)] = 1;
        row(i, j0) = integrand(i, j0);
      }
      auto rball = [&](double s) {
        return s <= 0.0 ? 0.0 : quad::ball_integral_masked(row, rmask, reg.z0, s);
      };
      value -= 0.5 * (rball(reg.outer) - rball(reg.inner));
    }
  }
  return value;
}

/// |Du| at each node from energy_density.
inline ScalarField gradient_norm(const AxiState& s) {
  ScalarField d = energy_density(s);
  for (double& v : d.values) v = std::sqrt(std::max(0.0, v));
  return d;
}

inline double neg_moment(const AxiState& s, const Region& reg, double gamma) {
  return neg_moment(gradient_norm(s), reg, gamma);
}

/// max(0, -min laplacian_cyl(rho - 1)) over active nodes whose stencil stays
/// `margin` h inside the outer circle.
inline double subharmonicity_defect(const AxiState& s, double margin = 0.0) {
  const AxiGrid& g = s.grid();
  ScalarField excess(s.rho.grid, 0.0);
  for (std::size_t q = 0; q < excess.values.size(); ++q) excess.values[q] = s.rho.values[q] - 1.0;
  const ScalarField lap = laplacian_cyl(excess);
  double worst = 0.0;
  for (int j = 0; j < g.nz(); ++j)
    for (int i = 0; i < g.nr(); ++i) {
      if (!g.active(i, j)) continue;
      if (g.radius() - std::hypot(g.r(i), g.z(j)) < margin * g.h()) continue;
      worst = std::max(worst, -lap(i, j));
    }
  return worst;
}

/// Candidate tangent maps +-S^{-1} o psi o S with psi(w) = w^k or its
/// conjugate, S the stereographic projection from e3.
enum class TangentCandidate { plus, minus, plus_conj, minus_conj };

inline const char* to_string(TangentCandidate c) {
  switch (c) {
    case TangentCandidate::plus: return "+S^-1(w^k)S";
    case TangentCandidate::minus: return "-S^-1(w^k)S";
    case TangentCandidate::plus_conj: return "+S^-1(conj w^k)S";
    case TangentCandidate::minus_conj: return "-S^-1(conj w^k)S";
  }
  return "?";
}

inline Vec3 tangent_candidate(TangentCandidate c, int k, const Vec3& omega) {
  using cd = std::complex<double>;
  // Stereographic projection from e3; the north pole maps to infinity.
  const double den = 1.0 - omega[2];
  Vec3 img;
  if (den < 1e-15) {
    img = {0.0, 0.0, 1.0};
  } else {
    cd w(omega[0] / den, omega[1] / den);
    cd p = std::pow(w, k);
    if (c == TangentCandidate::plus_conj || c == TangentCandidate::minus_conj) p = std::conj(p);
    const double m2 = std::norm(p);
    if (!std::isfinite(m2)) {
      img = {0.0, 0.0, 1.0};
    } else {
      img = {2.0 * p.real() / (m2 + 1.0), 2.0 * p.imag() / (m2 + 1.0), (m2 - 1.0) / (m2 + 1.0)};
    }
  }
  if (c == TangentCandidate::minus || c == TangentCandidate::minus_conj)
    for (double& v : img) v = -v;
  return img;
}

struct TangentMatch {
  TangentCandidate best = TangentCandidate::plus;
  double distance = 0.0;  // root-mean-square over the sphere
  std::array<double, 4> all{};
};

/// Compares a sphere map f(omega) (values normalised to unit length) with the
/// four candidates, up to rotations about e3, in area-weighted mean square.
template <class F>
TangentMatch tangent_compare_map(F&& f, int k, int n_lat = 48, int n_lon = 96) {
  if (k < 1) throw InputError("tangent_compare: k must be >= 1");
  using cd = std::complex<double>;
  std::array<cd, 4> cross{};
  std::array<double, 4> vert{};
  double wsum = 0.0;
  for (int a = 0; a < n_lat; ++a) {
    const double psi = pi * (a + 0.5) / n_lat;
    const double w = std::sin(psi);
    for (int b = 0; b < n_lon; ++b) {
      const double th = 2.0 * pi * (b + 0.5) / n_lon;
      const Vec3 om{std::sin(psi) * std::cos(th), std::sin(psi) * std::sin(th), std::cos(psi)};
      Vec3 u = f(om);
      const double nu = norm(u);
      if (nu > 0.0)
        for (double& v : u) v /= nu;
      for (int c = 0; c < 4; ++c) {
        const Vec3 t = tangent_candidate(TangentCandidate(c), k, om);
        cross[c] += w * std::conj(cd(u[0], u[1])) * cd(t[0], t[1]);
        vert[c] += w * u[2] * t[2];
      }
      wsum += w;
    }
  }
  TangentMatch out;
  out.distance = INFINITY;
  for (int c = 0; c < 4; ++c) {
    // min over rotations R about e3 of mean |u - R t|^2 = 2 - 2 max mean(u . R t).
    const double best_dot = (vert[c] + std::abs(cross[c])) / wsum;
    const double d = std::sqrt(std::max(0.0, 2.0 - 2.0 * best_dot));
    out.all[c] = d;
    if (d < out.distance) {
      out.distance = d;
      out.best = TangentCandidate(c);
    }
  }
  return out;
}

/// State version: samples u(z0 e3 + s omega) by bilinear interpolation of
/// (rho, phi). Requires s >= 8h.
inline TangentMatch tangent_compare(const AxiState& st, double z0, double s) {
  const AxiGrid& g = st.grid();
  if (s < 8.0 * g.h() * (1.0 - 1e-12)) throw InputError("tangent_compare: s below 8h");
  if (!quad::ball_fits(g, z0, s)) throw InputError("tangent_compare: sphere exceeds the domain");
  auto f = [&](const Vec3& om) {
    const double r = s * std::hypot(om[0], om[1]);
    const double z = z0 + s * om[2];
    const double phi = quad::interpolate(st.phi, r, z);
    const double th = std::atan2(om[1], om[0]);
    return Vec3{std::sin(phi) * std::cos(st.k * th), std::sin(phi) * std::sin(st.k * th),
                std::cos(phi)};
  };
  return tangent_compare_map(f, st.k);
}

/// Node values on a uniform planar grid x = x0 + i h, y = y0 + j h.
struct PlanarField {
  int nx = 0, ny = 0;
  double h = 1.0, x0 = 0.0, y0 = 0.0;
  std::vector<double> values;

  double& operator()(int i, int j) { return values[std::size_t(j) * nx + i]; }
  double operator()(int i, int j) const { return values[std::size_t(j) * nx + i]; }

  template <class F>
  static PlanarField sample(int nx, int ny, double h, double x0, double y0, F&& f) {
    PlanarField p{nx, ny, h, x0, y0, std::vector<double>(std::size_t(nx) * ny)};
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) p(i, j) = f(x0 + i * h, y0 + j * h);
    return p;
  }
};

/// |D phi|^2 Lap phi on masked interior nodes, 0 elsewhere: the obstruction
/// for the graph of a scalar obstacle solution to be a constraint map.
inline PlanarField graph_defect(const PlanarField& phi, const std::vector<char>& mask) {
  if (phi.nx < 3 || phi.ny < 3) throw InputError("graph_defect: grid too small");
  if (mask.size() != phi.values.size()) throw InputError("graph_defect: mask size mismatch");
  PlanarField out{phi.nx, phi.ny, phi.h, phi.x0, phi.y0,
                  std::vector<double>(phi.values.size(), 0.0)};
  const double h = phi.h;
  for (int j = 1; j + 1 < phi.ny; ++j)
    for (int i = 1; i + 1 < phi.nx; ++i) {
      if (!mask[std::size_t(j) * phi.nx + i]) continue;
      const double dx = (phi(i + 1, j) - phi(i - 1, j)) / (2.0 * h);
      const double dy = (phi(i, j + 1) - phi(i, j - 1)) / (2.0 * h);
      const double lap =
          (phi(i + 1, j) + phi(i - 1, j) + phi(i, j + 1) + phi(i, j - 1) - 4.0 * phi(i, j)) /
          (h * h);
      out(i, j) = (dx * dx + dy * dy) * lap;
    }
  return out;
}

}  // namespace cmlab::diag
