#pragma once

// Legendre functions, the particular solution p_k of the zonal ODE, cone
// solutions, homogeneous blow-up fields and rescalings of solver output
// around axis free-boundary points.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "cmlab/contour.hpp"
#include "cmlab/core.hpp"
#include "cmlab/quadrature.hpp"

namespace cmlab::blowup {

using Rational = boost::multiprecision::cpp_rational;

inline constexpr double default_q_margin = 0.05;

/// P_l(t) by the Bonnet recurrence.
inline double legendre_P(int l, double t) {
  if (l < 0) throw InputError("legendre_P: degree must be >= 0");
  if (l == 0) return 1.0;
  double p0 = 1.0, p1 = t;
  for (int m = 1; m < l; ++m) {
    const double p2 = ((2 * m + 1) * t * p1 - m * p0) / (m + 1);
    p0 = p1;
    p1 = p2;
  }
  return p1;
}

/// P_l'(t) from P'_{m+1} = P'_{m-1} + (2m+1) P_m, which stays finite at t = +-1.
inline double legendre_P_derivative(int l, double t) {
  if (l < 0) throw InputError("legendre_P_derivative: degree must be >= 0");
  double dm1 = 0.0, d0 = 0.0;  // P'_{m-1}, P'_m with m = 0
  for (int m = 0; m < l; ++m) {
    const double d1 = dm1 + (2 * m + 1) * legendre_P(m, t);
    dm1 = d0;
    d0 = d1;
  }
  return d0;
}

namespace detail {

inline void check_q_domain(double t, double delta) {
  if (!(delta > 0.0 && delta < 0.5)) throw InputError("legendre_Q: margin must lie in (0, 0.5)");
  if (std::abs(t) > 1.0 - delta) throw InputError("legendre_Q: |t| exceeds 1 - margin");
}

// Returns (Q_l, Q_l') together.
inline std::array<double, 2> legendre_Q_pair(int l, double t) {
  const double q0 = 0.5 * std::log((1.0 + t) / (1.0 - t));
  const double dq0 = 1.0 / (1.0 - t * t);
  if (l == 0) return {q0, dq0};
  double a = q0, b = t * q0 - 1.0;      // Q_{m-1}, Q_m
  double da = dq0, db = q0 + t * dq0;   // derivatives
  for (int m = 1; m < l; ++m) {
    const double c = ((2 * m + 1) * t * b - m * a) / (m + 1);
    const double dc = da + (2 * m + 1) * b;
    a = b;
    b = c;
    da = db;
    db = dc;
  }
  return {b, db};
}

}  // namespace detail

/// Legendre function of the second kind by forward recurrence from Q_0, Q_1.
inline double legendre_Q(int l, double t, double delta = default_q_margin) {
  if (l < 0) throw InputError("legendre_Q: degree must be >= 0");
  detail::check_q_domain(t, delta);
  return detail::legendre_Q_pair(l, t)[0];
}

inline double legendre_Q_derivative(int l, double t, double delta = default_q_margin) {
  if (l < 0) throw InputError("legendre_Q_derivative: degree must be >= 0");
  detail::check_q_domain(t, delta);
  return detail::legendre_Q_pair(l, t)[1];
}

/// Monomial coefficients of P_0 .. P_max_degree, row l holding P_l.
struct LegendreTable {
  int max_degree = 0;
  std::vector<std::vector<double>> P;
  double q_margin = default_q_margin;

  explicit LegendreTable(int max_deg, double delta = default_q_margin)
      : max_degree(max_deg), q_margin(delta) {
    if (max_deg < 0) throw InputError("LegendreTable: degree must be >= 0");
    if (!(delta > 0.0 && delta < 0.5)) throw InputError("LegendreTable: margin must lie in (0, 0.5)");
    std::vector<std::vector<Rational>> exact{{Rational(1)}};
    if (max_deg >= 1) exact.push_back({Rational(0), Rational(1)});
    for (int m = 1; m < max_deg; ++m) {
      std::vector<Rational> next(m + 2, Rational(0));
      for (int j = 0; j <= m; ++j) next[j + 1] += Rational(2 * m + 1, m + 1) * exact[m][j];
      for (int j = 0; j < m; ++j) next[j] -= Rational(m, m + 1) * exact[m - 1][j];
      exact.push_back(std::move(next));
    }
    for (const auto& row : exact) {
      std::vector<double> d;
      for (const auto& c : row) d.push_back(static_cast<double>(c));
      P.push_back(std::move(d));
    }
  }

  double value(int l, double t) const {
    if (l < 0 || l > max_degree) throw InputError("LegendreTable: degree out of range");
    double acc = 0.0;
    for (int j = l; j >= 0; --j) acc = acc * t + P[l][j];
    return acc;
  }
};

/// p_k(t) = sum a_{2i} t^{2i}, kept both exactly and in double precision.
struct ParticularSolution {
  int k = 2;
  std::vector<Rational> exact;  // a_0, a_2, ..., a_{2k}
  std::vector<double> coefficients;

  double value(double t) const {
    double acc = 0.0;
    const double t2 = t * t;
    for (auto it = coefficients.rbegin(); it != coefficients.rend(); ++it) acc = acc * t2 + *it;
    return acc;
  }
  double derivative(double t) const {
    double acc = 0.0;
    for (std::size_t i = 1; i < coefficients.size(); ++i)
      acc += 2.0 * i * coefficients[i] * std::pow(t, 2 * i - 1);
    return acc;
  }
  double second_derivative(double t) const {
    double acc = 0.0;
    for (std::size_t i = 1; i < coefficients.size(); ++i)
      acc += 2.0 * i * (2.0 * i - 1.0) * coefficients[i] * std::pow(t, 2 * i - 2);
    return acc;
  }
  /// Exact value at a rational point.
  Rational value_exact(const Rational& t) const {
    Rational acc = 0, t2 = t * t;
    for (auto it = exact.rbegin(); it != exact.rend(); ++it) acc = acc * t2 + *it;
    return acc;
  }
};

inline Rational binomial(int n, int i) {
  Rational out = 1;
  for (int j = 1; j <= i; ++j) out = out * (n - i + j) / j;
  return out;
}

inline ParticularSolution particular_pk(int k) {
  if (k < 2) throw InputError("particular_pk: k must be >= 2");
  ParticularSolution p;
  p.k = k;
  p.exact.push_back(Rational(0));
  for (int i = 0; i < k; ++i) {
    const Rational sign = (i % 2 == 0) ? 1 : -1;
    const Rational num = Rational(-(2 * k - 2 * i) * (2 * k + 2 * i + 1)) * p.exact[i] +
                         sign * k * k * binomial(k - 1, i);
    p.exact.push_back(num / ((2 * i + 2) * (2 * i + 1)));
  }
  for (const auto& c : p.exact) p.coefficients.push_back(static_cast<double>(c));
  return p;
}

/// Residual (1-t^2) y'' - 2t y' + 2k(2k+1) y - k^2 (1-t^2)^(k-1) of the zonal ODE.
inline double zonal_ode_residual(int k, double y, double dy, double ddy, double t) {
  return (1.0 - t * t) * ddy - 2.0 * t * dy + 2.0 * k * (2.0 * k + 1.0) * y -
         double(k) * k * std::pow(1.0 - t * t, k - 1);
}

struct ZeroWitness {
  double t;
  double derivative;
};

struct NondegeneracyCheck {
  bool passed = true;
  std::vector<ZeroWitness> zeros;
};

/// Zeros of p_k in (-1,1) \ {0} by sign scan and bisection, with |p_k'| > tol
/// required at each. Touching zeros (no sign change) are caught by scanning
/// the derivative for sign changes where |p_k| is below tol.
inline NondegeneracyCheck pk_zero_derivative_check(int k, double tol, int samples = 4000) {
  if (k < 2 || k > 8) throw InputError("pk_zero_derivative_check: k must lie in [2, 8]");
  const ParticularSolution p = particular_pk(k);
  NondegeneracyCheck out;
  auto bisect = [](const std::function<double(double)>& f, double lo, double hi) {
    double flo = f(lo);
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      const double fm = f(mid);
      if ((fm < 0.0) == (flo < 0.0)) {
        lo = mid;
        flo = fm;
      } else {
        hi = mid;
      }
    }
    return 0.5 * (lo + hi);
  };
  auto val = [&](double t) { return p.value(t); };
  auto der = [&](double t) { return p.derivative(t); };
  // p_k is even: scan (0, 1) and mirror.
  std::vector<double> found;
  const double eps = 1e-9;
  for (int s = 0; s < samples; ++s) {
    const double lo = eps + (1.0 - 2 * eps) * s / samples;
    const double hi = eps + (1.0 - 2 * eps) * (s + 1) / samples;
    if ((val(lo) < 0.0) != (val(hi) < 0.0)) {
      found.push_back(bisect(val, lo, hi));
    } else if ((der(lo) < 0.0) != (der(hi) < 0.0)) {
      const double c = bisect(der, lo, hi);
      if (std::abs(val(c)) < tol) found.push_back(c);
    }
  }
  for (double t : found)
    for (double tt : {-t, t}) {
      const double d = der(tt);
      out.zeros.push_back({tt, d});
      if (!(std::abs(d) > tol)) out.passed = false;
    }
  std::sort(out.zeros.begin(), out.zeros.end(),
            [](const ZeroWitness& a, const ZeroWitness& b) { return a.t < b.t; });
  return out;
}

struct ConeRegion {
  double t1 = -1.0, t2 = 1.0;

  void check() const {
    if (!(-1.0 <= t1 && t1 < t2 && t2 <= 1.0))
      throw InputError("ConeRegion: need -1 <= t1 < t2 <= 1");
  }
  bool contains(double t) const { return t1 <= t && t <= t2; }
};

/// q(r,z) = (r^2+z^2)^k y(z/|x|) with y = c1 P_2k + c2 Q_2k + p_k.
class ConeSolution {
 public:
  ConeSolution(int k, double c1, double c2, ConeRegion region, double delta = default_q_margin)
      : k_(k), c1_(c1), c2_(c2), region_(region), delta_(delta), p_(particular_pk(k)) {
    region.check();
    if (c2 != 0.0 && (region.t1 < -(1.0 - delta) || region.t2 > 1.0 - delta))
      throw InputError("cone_solution: region leaves the Q domain");
  }

  int k() const { return k_; }
  const ConeRegion& region() const { return region_; }

  double y(double t) const {
    double v = c1_ * legendre_P(2 * k_, t) + p_.value(t);
    if (c2_ != 0.0) v += c2_ * legendre_Q(2 * k_, t, delta_);
    return v;
  }
  double dy(double t) const {
    double v = c1_ * legendre_P_derivative(2 * k_, t) + p_.derivative(t);
    if (c2_ != 0.0) v += c2_ * legendre_Q_derivative(2 * k_, t, delta_);
    return v;
  }

  double operator()(double r, double z) const {
    const double rho = std::hypot(r, z);
    if (rho == 0.0) return 0.0;
    const double t = z / rho;
    check(t);
    return std::pow(rho, 2 * k_) * y(t);
  }

  /// (dq/dr, dq/dz).
  std::array<double, 2> gradient(double r, double z) const {
    const double rho = std::hypot(r, z);
    if (rho == 0.0) return {0.0, 0.0};
    const double t = z / rho;
    check(t);
    const double yy = y(t), dd = dy(t);
    const double a = 2.0 * k_ * std::pow(rho, 2 * k_ - 2) * yy;
    const double b = std::pow(rho, 2 * k_ - 3) * dd;
    return {a * r - b * z * r, a * z + b * r * r};
  }

 private:
  void check(double t) const {
    if (!region_.contains(t)) throw InputError("cone_solution: point outside the cone region");
  }

  int k_;
  double c1_, c2_;
  ConeRegion region_;
  double delta_;
  ParticularSolution p_;
};

inline ConeSolution cone_solution(int k, double c1, double c2, ConeRegion region) {
  return ConeSolution(k, c1, c2, region);
}

struct HomogeneousBlowup {
  double c = 0.25;
  int k = 2;
  double operator()(double r, double /*z*/) const { return c * std::pow(r, 2 * k); }
};

/// The z-independent 2k-homogeneous solution c r^(2k) of
/// Delta f = k^2 r^(2k-2). Since the radial Laplacian maps r^m to m^2 r^(m-2),
/// c = k^2 / (2k)^2.
inline HomogeneousBlowup homogeneous_blowup(int k) {
  if (k < 2) throw InputError("homogeneous_blowup: k must be >= 2");
  HomogeneousBlowup f;
  f.k = k;
  f.c = double(k) * k / (4.0 * k * k);
  const double d = 1e-3;
  for (double r : {0.3, 0.5, 0.7}) {
    const double lap = (f(r + d, 0) - 2.0 * f(r, 0) + f(r - d, 0)) / (d * d) +
                       (f(r + d, 0) - f(r - d, 0)) / (2.0 * d * r);
    const double rhs = double(k) * k * std::pow(r, 2 * k - 2);
    if (std::abs(lap - rhs) > 1e-4 * rhs)
      throw NumericalError("homogeneous_blowup: PDE residual check failed");
  }
  return f;
}

/// The l roots of P_l in increasing order, bracketed by the roots of P_{l-1}.
inline std::vector<double> nodal_latitudes(int l) {
  if (l < 1) throw InputError("nodal_latitudes: l must be >= 1");
  std::vector<double> roots{0.0};
  for (int m = 2; m <= l; ++m) {
    std::vector<double> edges{-1.0};
    edges.insert(edges.end(), roots.begin(), roots.end());
    edges.push_back(1.0);
    std::vector<double> next;
    for (std::size_t b = 0; b + 1 < edges.size(); ++b) {
      double lo = edges[b], hi = edges[b + 1];
      const bool neg_lo = legendre_P(m, lo) < 0.0;
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        ((legendre_P(m, mid) < 0.0) == neg_lo ? lo : hi) = mid;
      }
      next.push_back(0.5 * (lo + hi));
    }
    // Odd degrees have an exact zero at t = 0.
    if (m % 2 == 1) next[m / 2] = 0.0;
    roots = std::move(next);
  }
  return roots;
}

/// Least-squares a in sin(phi) ~ a r^k over the first `nodes` off-axis nodes
/// of the row nearest z0. An estimate of the leading coefficient.
inline double leading_coefficient(const AxiState& s, double z0, int nodes = 8) {
  const AxiGrid& g = s.grid();
  const int j = g.nearest_row(z0);
  double num = 0.0, den = 0.0;
  for (int i = 1; i <= nodes && i < g.nr(); ++i) {
    if (!g.known(i, j)) break;
    const double rk = std::pow(g.r(i), s.k);
    num += std::sin(s.phi(i, j)) * rk;
    den += rk * rk;
  }
  if (!(den > 0.0)) throw InputError("leading_coefficient: no off-axis nodes at z0");
  return num / den;
}

enum class Normalization { linear, squared };

struct RescaleOptions {
  int reference_resolution = 64;
  Normalization normalization = Normalization::linear;
  double min_scale_cells = 4.0;  // smallest admissible s, in source grid steps
};

/// (rho(s r, z0 + s z) - 1) / (a^p s^(2k)) on the unit reference half-disk,
/// p = 1 or 2 by `normalization`, one field per scale.
inline std::vector<ScalarField> rescale_sequence(const AxiState& s, double z0, double a,
                                                 const std::vector<double>& scales,
                                                 const RescaleOptions& opt = {}) {
  if (!(a > 0.0)) throw InputError("rescale_sequence: a must be positive");
  const AxiGrid& g = s.grid();
  auto ref = make_grid(AxiGrid::half_disk(opt.reference_resolution, 1.0));
  const double reach = 1.0 + 2.0 * ref->h();
  const double norm_a = opt.normalization == Normalization::linear ? a : a * a;
  ScalarField excess(s.rho.grid);
  for (std::size_t n = 0; n < excess.values.size(); ++n) excess.values[n] = s.rho.values[n] - 1.0;
  std::vector<ScalarField> out;
  for (double sc : scales) {
    if (!(sc >= opt.min_scale_cells * g.h()))
      throw InputError("rescale_sequence: scale too small for the source grid");
    if (!quad::ball_fits(g, z0, sc * reach))
      throw InputError("rescale_sequence: scale does not fit in the domain");
    const double denom = norm_a * std::pow(sc, 2 * s.k);
    ScalarField f(ref, 0.0);
    for (int j = 0; j < ref->nz(); ++j)
      for (int i = 0; i < ref->nr(); ++i) {
        if (!ref->known(i, j)) continue;
        f(i, j) = quad::interpolate(excess, sc * ref->r(i), z0 + sc * ref->z(j)) / denom;
      }
    out.push_back(std::move(f));
  }
  return out;
}

/// Rescalings of an analytic excess field, for oracles and tests.
template <class F>
ScalarField rescale_analytic(F&& excess, double a, double sc, int k, int resolution = 64) {
  auto ref = make_grid(AxiGrid::half_disk(resolution, 1.0));
  const double denom = a * std::pow(sc, 2 * k);
  ScalarField f(ref, 0.0);
  for (int j = 0; j < ref->nz(); ++j)
    for (int i = 0; i < ref->nr(); ++i)
      if (ref->known(i, j)) f(i, j) = excess(sc * ref->r(i), sc * ref->z(j)) / denom;
  return f;
}

inline double sup_distance(const ScalarField& a, const ScalarField& b) {
  if (!a.grid->same_layout(*b.grid)) throw InputError("sup_distance: grids differ");
  double m = 0.0;
  for (int j = 0; j < a.grid->nz(); ++j)
    for (int i = 0; i < a.grid->nr(); ++i)
      if (a.grid->known(i, j)) m = std::max(m, std::abs(a(i, j) - b(i, j)));
  return m;
}

struct ConeRay {
  double angle = 0.0;        // polar angle from +z, radians
  double cos_latitude = 0.0;
  double matched = 0.0;      // allowed cos-latitude (+-1 for the axis)
  double error_deg = 0.0;
  std::size_t points = 0;
};

struct ConeMatch {
  std::vector<ConeRay> rays;
  double hausdorff_defect = 0.0;
  double max_error_deg() const {
    double m = 0.0;
    for (const auto& r : rays) m = std::max(m, r.error_deg);
    return m;
  }
};

struct ConeMatchOptions {
  double inner = 0.25;          // annulus of the reference disk used for ray fits
  double outer = 0.9;
  double cluster_gap_deg = 6.0; // angular gap separating two rays
};

/// Rays through the origin fitted to the boundary of {field > tol}, matched
/// against the axis and the nonzero nodal latitudes of P_(2k-1). The defect
/// is the largest distance from a boundary point in the annulus to that
/// allowed cone set.
inline ConeMatch fb_cone_match(const ScalarField& field, int k, double tol,
                               const ConeMatchOptions& opt = {}) {
  if (k < 1) throw InputError("fb_cone_match: k must be >= 1");
  bool positive = false;
  for (double v : field.values) positive = positive || v > tol;
  if (!positive) throw InputError("fb_cone_match: empty positivity set");

  std::vector<double> allowed{-1.0, 1.0};
  if (2 * k - 1 >= 2)
    for (double t : nodal_latitudes(2 * k - 1))
      if (std::abs(t) > 1e-12) allowed.push_back(t);

  std::vector<std::pair<double, Point2>> pts;  // (polar angle, point)
  for (const auto& pl : level_set(field, tol))
    for (const auto& p : pl) {
      const double d = std::hypot(p[0], p[1]);
      if (d < opt.inner || d > opt.outer) continue;
      pts.push_back({std::acos(std::clamp(p[1] / d, -1.0, 1.0)), p});
    }
  ConeMatch out;
  if (pts.empty()) return out;
  std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a.first < b.first; });

  auto angle_to_allowed = [&](double psi) {
    double best = pi, match = 1.0;
    for (double t : allowed) {
      const double e = std::abs(psi - std::acos(t));
      if (e < best) {
        best = e;
        match = t;
      }
    }
    return std::pair{best, match};
  };

  const double gap = opt.cluster_gap_deg * pi / 180.0;
  std::size_t start = 0;
  for (std::size_t n = 1; n <= pts.size(); ++n) {
    if (n < pts.size() && pts[n].first - pts[n - 1].first <= gap) continue;
    // Ray through the origin minimizing perpendicular distances: principal
    // axis of the second-moment matrix of the cluster.
    double srr = 0.0, szz = 0.0, srz = 0.0, mr = 0.0, mz = 0.0;
    for (std::size_t m = start; m < n; ++m) {
      const auto& p = pts[m].second;
      srr += p[0] * p[0];
      szz += p[1] * p[1];
      srz += p[0] * p[1];
      mr += p[0];
      mz += p[1];
    }
    const double theta = 0.5 * std::atan2(2.0 * srz, srr - szz);  // angle from +r
    double dr = std::cos(theta), dz = std::sin(theta);
    if (dr * mr + dz * mz < 0.0) {
      dr = -dr;
      dz = -dz;
    }
    ConeRay ray;
    ray.angle = std::acos(std::clamp(dz, -1.0, 1.0));
    ray.cos_latitude = std::cos(ray.angle);
    const auto [err, match] = angle_to_allowed(ray.angle);
    ray.matched = match;
    ray.error_deg = err * 180.0 / pi;
    ray.points = n - start;
    out.rays.push_back(ray);
    start = n;
  }

  for (const auto& [psi, p] : pts) {
    const double d = std::hypot(p[0], p[1]);
    double best = d;
    for (double t : allowed) {
      const double e = std::abs(psi - std::acos(t));
      best = std::min(best, e >= pi / 2 ? d : d * std::sin(e));
    }
    out.hausdorff_defect = std::max(out.hausdorff_defect, best);
  }
  return out;
}

}  // namespace cmlab::blowup
