#pragma once

// Radially symmetric constraint maps u(x) = w(|x|) x/|x| on the unit ball of
// R^n with obstacle B_a and identity boundary values.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "cmlab/config.hpp"
#include "cmlab/core.hpp"

namespace cmlab::radial {

/// Parameters of the closed-form profile: w = a on [0, r_a] and
/// w = t_a r + (1 - t_a) r^(1-n) on (r_a, 1].
struct RadialParams {
  int n = 3;
  double a = 0.5;
  double t_a = 0.0;
  double r_a = 0.0;

  /// 1 - t_a, evaluated without cancellation for small r_a.
  double one_minus_t() const {
    const double rn = std::pow(r_a, n);
    return rn / ((n - 1.0) + rn);
  }
  /// Residual of t_a r_a + (1 - t_a) r_a^(1-n) = a.
  double value_residual() const {
    return t_a * r_a + one_minus_t() * std::pow(r_a, 1 - n) - a;
  }
  /// Residual of t_a + (1 - n)(1 - t_a) r_a^(-n) = 0.
  double slope_residual() const {
    return t_a + (1 - n) * one_minus_t() * std::pow(r_a, -n);
  }
};

/// Samples of w on the uniform grid r_i = i / (m - 1).
struct RadialProfile {
  int n = 3;
  double a = 0.5;
  std::vector<double> samples;

  std::size_t size() const { return samples.size(); }
  double h() const { return 1.0 / (double(samples.size()) - 1.0); }
  double r(std::size_t i) const { return double(i) * h(); }
};

/// t_a as a function of r_a, from the zero-slope condition.
inline double slope_coefficient(int n, double r_a) {
  return (n - 1.0) / ((n - 1.0) + std::pow(r_a, n));
}

/// Eliminated scalar equation t_a r + (1 - t_a) r^(1-n), simplified to
/// n r / (n - 1 + r^n). Increases strictly from 0 to 1 on (0, 1).
inline double eliminated_value(int n, double r) {
  return n * r / ((n - 1.0) + std::pow(r, n));
}

/// Forward map r_a -> (t_a, a).
inline RadialParams params_from_radius(int n, double r_a) {
  if (n < 3) throw InputError("radial: dimension must be >= 3");
  if (!(r_a > 0.0 && r_a < 1.0)) throw InputError("radial: r_a must lie in (0,1)");
  RadialParams p;
  p.n = n;
  p.r_a = r_a;
  p.t_a = slope_coefficient(n, r_a);
  p.a = eliminated_value(n, r_a);
  return p;
}

/// Solves the two-equation parameter system for (t_a, r_a) by bisection on
/// the eliminated scalar equation.
inline RadialParams solve_params(int n, double a, double tol = 1e-12) {
  if (n < 3) throw InputError("radial: dimension must be >= 3");
  if (!(a > 0.0 && a < 1.0)) throw InputError("radial: a must lie in (0,1)");
  if (!(tol > 0.0)) throw InputError("radial: tol must be positive");
  auto f = [n](double r) { return eliminated_value(n, r); };
  double lo = 0.0, hi = 1.0;
  // f(0+) = 0 < a < 1 = f(1-); anything else is a coding error.
  if (!(f(0.0) - a < 0.0 && f(1.0) - a > 0.0))
    throw NumericalError("solve_params: root not bracketed");
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (f(mid) < a ? lo : hi) = mid;
  }
  RadialParams p;
  p.n = n;
  p.a = a;
  p.r_a = std::abs(f(lo) - a) <= std::abs(f(hi) - a) ? lo : hi;
  p.t_a = slope_coefficient(n, p.r_a);
  if (std::abs(p.value_residual()) > tol || std::abs(p.slope_residual()) > tol)
    throw NumericalError("solve_params: residual above tolerance");
  return p;
}

/// Closed-form profile value at radius r.
inline double closed_form(const RadialParams& p, double r) {
  if (r <= p.r_a) return p.a;
  if (r >= 1.0) return 1.0;
  return p.t_a * r + p.one_minus_t() * std::pow(r, 1 - p.n);
}

/// Derivative of the closed-form profile.
inline double closed_form_slope(const RadialParams& p, double r) {
  if (r <= p.r_a) return 0.0;
  return p.t_a + (1.0 - p.n) * p.one_minus_t() * std::pow(r, -p.n);
}

inline RadialProfile closed_form_profile(const RadialParams& p, int m) {
  if (m < 3) throw InputError("closed_form_profile: need at least 3 samples");
  RadialProfile prof{p.n, p.a, std::vector<double>(m)};
  for (int i = 0; i < m; ++i) prof.samples[i] = closed_form(p, prof.r(i));
  prof.samples.back() = 1.0;
  return prof;
}

/// Discrete reduced energy sum_i r_{i+1/2}^(n-1) (w_{i+1}-w_i)^2 / h
/// + sum_i (n-1) r_i^(n-3) w_i^2 h over i >= 1. The first cell is dropped:
/// w_0 mirrors w_1 and its weight vanishes with r.
inline double reduced_energy(const RadialProfile& p) {
  const double h = p.h();
  const int m = int(p.size());
  double e = 0.0;
  for (int i = 1; i + 1 < m; ++i) {
    const double rm = (i + 0.5) * h;
    const double d = p.samples[i + 1] - p.samples[i];
    e += std::pow(rm, p.n - 1) * d * d / h;
  }
  for (int i = 1; i < m; ++i)
    e += (p.n - 1) * std::pow(i * h, p.n - 3) * p.samples[i] * p.samples[i] * h;
  return e;
}

/// Raised when projected SOR hits max_sweeps; carries the last iterate.
class RadialNonConvergence : public NumericalError {
 public:
  RadialNonConvergence(const std::string& what, RadialProfile partial)
      : NumericalError(what), partial_(std::move(partial)) {}
  const RadialProfile& partial() const { return partial_; }

 private:
  RadialProfile partial_;
};

namespace detail {

struct RadialLevelResult {
  RadialProfile profile;
  int sweeps = 0;
  bool converged = false;
};

inline RadialLevelResult psor_level(RadialProfile w, const SolveConfig& cfg) {
  const int m = int(w.size());
  const int n = w.n;
  const double h = w.h();
  const double omega = cfg.auto_omega ? optimal_omega(m - 1) : cfg.omega;
  std::vector<double> up(m, 0.0), down(m, 0.0), diag(m, 1.0);
  for (int i = 1; i + 1 < m; ++i) {
    up[i] = std::pow((i + 0.5) * h, n - 1);
    down[i] = (i == 1) ? 0.0 : std::pow((i - 0.5) * h, n - 1);
    diag[i] = up[i] + down[i] + (n - 1) * std::pow(i * h, n - 3) * h * h;
  }
  auto& s = w.samples;
  double energy = reduced_energy(w);
  RadialLevelResult res;
  for (int sweep = 1; sweep <= cfg.max_sweeps; ++sweep) {
    for (int i = 1; i + 1 < m; ++i) {
      const double target = (up[i] * s[i + 1] + down[i] * s[i - 1]) / diag[i];
      s[i] = std::max(w.a, s[i] + omega * (target - s[i]));
    }
    s[0] = s[1];
    const double next = reduced_energy(w);
    const double drop = energy - next;
    energy = next;
    res.sweeps = sweep;
    if (drop < cfg.tol * std::abs(energy)) {
      res.converged = true;
      break;
    }
  }
  res.profile = std::move(w);
  return res;
}

inline RadialProfile resample(const RadialProfile& coarse, int m) {
  RadialProfile out{coarse.n, coarse.a, std::vector<double>(m)};
  const double hc = coarse.h();
  for (int i = 0; i < m; ++i) {
    const double r = out.r(i);
    const auto c = std::min<std::size_t>(std::size_t(r / hc), coarse.size() - 2);
    const double t = (r - c * hc) / hc;
    out.samples[i] = (1.0 - t) * coarse.samples[c] + t * coarse.samples[c + 1];
  }
  out.samples.back() = 1.0;
  return out;
}

}  // namespace detail

/// Minimises the reduced energy over w >= a with w(1) = 1 by projected SOR
/// (pointwise tridiagonal solve, over-relax, clamp to a), starting from a
/// chain of coarser solves.
inline RadialProfile minimize_radial(int n, double a, int m, const SolveConfig& cfg) {
  cfg.check();
  if (n < 3) throw InputError("minimize_radial: dimension must be >= 3");
  if (!(a > 0.0 && a < 1.0)) throw InputError("minimize_radial: a must lie in (0,1)");
  if (m < 5) throw InputError("minimize_radial: need at least 5 nodes");

  std::vector<int> sizes{m};
  for (int l = 0; l < cfg.coarse_levels && sizes.back() / 2 >= 33; ++l)
    sizes.push_back(sizes.back() / 2 + 1);

  RadialProfile w{n, a, std::vector<double>(sizes.back())};
  for (std::size_t i = 0; i < w.size(); ++i) w.samples[i] = std::max(a, w.r(i));
  w.samples.back() = 1.0;

  for (auto it = sizes.rbegin(); it != sizes.rend(); ++it) {
    if (int(w.size()) != *it) w = detail::resample(w, *it);
    auto res = detail::psor_level(std::move(w), cfg);
    w = std::move(res.profile);
    if (!res.converged)
      throw RadialNonConvergence("minimize_radial: no convergence within max_sweeps",
                                 w);
  }
  return w;
}

/// Largest grid radius with w <= a + tol; 0 when nothing touches.
inline double free_boundary_radius(const RadialProfile& p, double tol) {
  double rb = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i)
    if (p.samples[i] <= p.a + tol) rb = p.r(i);
  return rb;
}

/// Default contact tolerance 10 h^2.
inline double default_contact_tol(const RadialProfile& p) {
  return 10.0 * p.h() * p.h();
}

/// Residual of w'' + (n-1)/r w' - (n-1)/r^2 w at interior nodes (conservative
/// three-point form). Index 0 and m-1 hold 0.
inline std::vector<double> euler_lagrange_residual(const RadialProfile& p) {
  const int m = int(p.size());
  const double h = p.h();
  std::vector<double> res(m, 0.0);
  for (int i = 1; i + 1 < m; ++i) {
    const double r = i * h;
    const double up = std::pow((i + 0.5) * h, p.n - 1);
    const double dn = std::pow((i - 0.5) * h, p.n - 1);
    const auto& s = p.samples;
    res[i] = (up * (s[i + 1] - s[i]) - dn * (s[i] - s[i - 1])) /
                 (h * h * std::pow(r, p.n - 1)) -
             (p.n - 1) * s[i] / (r * r);
  }
  return res;
}

/// Normalised energy r^(2-n) \int_{B_r} |Du|^2 for u = w(|x|) x/|x|, by
/// composite Simpson quadrature of the closed form on [0, r].
inline double normalized_energy(const RadialParams& p, double r, int panels = 2000) {
  const int n = p.n;
  const double area = 2.0 * std::pow(pi, n / 2.0) / std::tgamma(n / 2.0);
  auto integrand = [&](double s) {
    if (s <= 0.0) return 0.0;
    const double w = closed_form(p, s), dw = closed_form_slope(p, s);
    return (dw * dw + (n - 1) * w * w / (s * s)) * std::pow(s, n - 1);
  };
  // Split at the free boundary so Simpson sees smooth pieces.
  auto simpson = [&](double lo, double hi) {
    if (hi <= lo) return 0.0;
    const int k = panels + panels % 2;
    const double d = (hi - lo) / k;
    double acc = integrand(lo) + integrand(hi);
    for (int i = 1; i < k; ++i) acc += integrand(lo + i * d) * (i % 2 ? 4.0 : 2.0);
    return acc * d / 3.0;
  };
  const double mid = std::min(r, p.r_a);
  return std::pow(r, 2 - n) * area * (simpson(0.0, mid) + simpson(mid, r));
}

}  // namespace cmlab::radial
