#pragma once

// Grids on the (r,z) half-disk, scalar fields, k-axially symmetric states and
// the discrete cylindrical operators shared by the solvers and diagnostics.

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace cmlab {

inline constexpr double pi = std::numbers::pi;

/// Thrown for invalid caller input (bad sizes, out-of-range parameters).
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown when an iterative method fails to meet its stopping criterion.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class NodeKind : std::uint8_t { interior, axis, boundary, exterior };

/// Uniform node grid over a rectangle of the (r,z) plane, masked to the
/// half-disk { r >= 0, r^2 + z^2 < R^2 }.
///
/// Nodes strictly inside the disk are `axis` (r = 0) or `interior`. Nodes
/// outside that touch an inside node through one of the four stencil arms are
/// `boundary` and carry Dirichlet data. Everything else is `exterior`.
/// Storage is row-major with z outer and r inner.
class AxiGrid {
 public:
  AxiGrid(int nr, int nz, double h, double origin_z, double radius = 1.0)
      : nr_(nr), nz_(nz), h_(h), origin_z_(origin_z), radius_(radius) {
    if (nr < 3 || nz < 3) throw InputError("AxiGrid: nr and nz must be >= 3");
    if (!(h > 0.0)) throw InputError("AxiGrid: spacing must be positive");
    if (!(radius > 0.0)) throw InputError("AxiGrid: radius must be positive");
    classify();
  }

  /// Half-disk of radius R resolved by `resolution` cells across the
  /// diameter (resolution must be even and >= 8). The z rows are symmetric
  /// about z = 0 and one row/column of margin lies outside the disk.
  static AxiGrid half_disk(int resolution, double radius = 1.0) {
    if (resolution < 8 || resolution % 2 != 0)
      throw InputError("half_disk: resolution must be even and >= 8");
    const int m = resolution / 2;
    const double h = radius / (m - 1);
    return AxiGrid(m + 1, 2 * m + 1, h, -m * h, radius);
  }

  int nr() const { return nr_; }
  int nz() const { return nz_; }
  double h() const { return h_; }
  double origin_z() const { return origin_z_; }
  double radius() const { return radius_; }
  std::size_t size() const { return static_cast<std::size_t>(nr_) * nz_; }

  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(j) * nr_ + i;
  }
  double r(int i) const { return i * h_; }
  double z(int j) const { return origin_z_ + j * h_; }
  bool in_range(int i, int j) const {
    return i >= 0 && i < nr_ && j >= 0 && j < nz_;
  }

  NodeKind kind(int i, int j) const { return kinds_[index(i, j)]; }
  /// Inside the half-disk (solver unknowns).
  bool active(int i, int j) const {
    const NodeKind k = kind(i, j);
    return k == NodeKind::interior || k == NodeKind::axis;
  }
  /// Carries a meaningful value (active or Dirichlet).
  bool known(int i, int j) const {
    return in_range(i, j) && kind(i, j) != NodeKind::exterior;
  }

  /// Row index of the node nearest to height z (clamped to the grid).
  int nearest_row(double zz) const {
    const int j = static_cast<int>(std::lround((zz - origin_z_) / h_));
    return j < 0 ? 0 : (j >= nz_ ? nz_ - 1 : j);
  }

  std::size_t count(NodeKind k) const {
    std::size_t n = 0;
    for (NodeKind c : kinds_) n += (c == k);
    return n;
  }

  bool same_layout(const AxiGrid& o) const {
    return nr_ == o.nr_ && nz_ == o.nz_ && h_ == o.h_ &&
           origin_z_ == o.origin_z_ && radius_ == o.radius_;
  }

 private:
  void classify() {
    kinds_.assign(size(), NodeKind::exterior);
    const double r2 = radius_ * radius_;
    auto inside = [&](int i, int j) {
      const double rr = r(i), zz = z(j);
      return rr * rr + zz * zz < r2 * (1.0 - 1e-12);
    };
    for (int j = 0; j < nz_; ++j)
      for (int i = 0; i < nr_; ++i)
        if (inside(i, j))
          kinds_[index(i, j)] = (i == 0) ? NodeKind::axis : NodeKind::interior;
    for (int j = 0; j < nz_; ++j)
      for (int i = 0; i < nr_; ++i) {
        if (kinds_[index(i, j)] != NodeKind::exterior) continue;
        const std::array<std::pair<int, int>, 4> nb{
            {{i - 1, j}, {i + 1, j}, {i, j - 1}, {i, j + 1}}};
        for (auto [a, b] : nb)
          if (in_range(a, b) && inside(a, b)) {
            kinds_[index(i, j)] = NodeKind::boundary;
            break;
          }
      }
    // Every active node must see known values on all arms (the axis has no
    // left arm; its reflection is used instead).
    for (int j = 0; j < nz_; ++j)
      for (int i = 0; i < nr_; ++i) {
        if (!active(i, j)) continue;
        if (i + 1 >= nr_ || j == 0 || j + 1 >= nz_)
          throw InputError("AxiGrid: disk touches the grid edge");
      }
  }

  int nr_, nz_;
  double h_, origin_z_, radius_;
  std::vector<NodeKind> kinds_;
};

using GridPtr = std::shared_ptr<const AxiGrid>;

inline GridPtr make_grid(AxiGrid g) {
  return std::make_shared<const AxiGrid>(std::move(g));
}

/// One real value per node of a grid.
struct ScalarField {
  GridPtr grid;
  std::vector<double> values;

  ScalarField() = default;
  explicit ScalarField(GridPtr g, double fill = 0.0)
      : grid(std::move(g)), values(grid->size(), fill) {}

  double& operator()(int i, int j) { return values[grid->index(i, j)]; }
  double operator()(int i, int j) const { return values[grid->index(i, j)]; }

  template <class F>
  static ScalarField sample(GridPtr g, F&& f) {
    ScalarField out(g);
    for (int j = 0; j < g->nz(); ++j)
      for (int i = 0; i < g->nr(); ++i) out(i, j) = f(g->r(i), g->z(j));
    return out;
  }
};

/// The pair (rho, phi) describing u = rho (sin phi cos k theta,
/// sin phi sin k theta, cos phi).
struct AxiState {
  int k = 1;
  ScalarField rho;
  ScalarField phi;

  const AxiGrid& grid() const { return *rho.grid; }
};

/// Checks rho >= 1, phi in [0, pi] on known nodes and phi in {0, pi} on the
/// axis. Returns an empty string when valid, otherwise a description.
inline std::string validate(const AxiState& s, double tol = 1e-12) {
  if (s.k < 1) return "k must be >= 1";
  if (!s.rho.grid || !s.phi.grid || !s.rho.grid->same_layout(*s.phi.grid))
    return "rho and phi live on different grids";
  const AxiGrid& g = s.grid();
  for (int j = 0; j < g.nz(); ++j)
    for (int i = 0; i < g.nr(); ++i) {
      if (!g.known(i, j)) continue;
      const double rho = s.rho(i, j), phi = s.phi(i, j);
      if (!std::isfinite(rho) || !std::isfinite(phi)) return "non-finite value";
      if (rho < 1.0 - tol) return "rho < 1";
      if (phi < -tol || phi > pi + tol) return "phi outside [0, pi]";
      if (g.kind(i, j) == NodeKind::axis &&
          std::min(std::abs(phi), std::abs(phi - pi)) > 1e-9)
        return "axis phi not in {0, pi}";
    }
  return {};
}

namespace detail {

inline void require_stencil(const AxiGrid& g) {
  if (g.nr() < 3 || g.nz() < 3)
    throw InputError("grid too small for the cylindrical stencil");
}

// Central r-derivative; on the axis the value is one-sided unless `even`.
inline double d_r(const ScalarField& f, int i, int j, bool even_on_axis) {
  const double h = f.grid->h();
  if (i == 0) {
    if (even_on_axis) return 0.0;
    return (-3.0 * f(0, j) + 4.0 * f(1, j) - f(2, j)) / (2.0 * h);
  }
  return (f(i + 1, j) - f(i - 1, j)) / (2.0 * h);
}

inline double d_z(const ScalarField& f, int i, int j) {
  return (f(i, j + 1) - f(i, j - 1)) / (2.0 * f.grid->h());
}

}  // namespace detail

/// Five-point approximation of d_rr + d_zz + (1/r) d_r at active nodes; the
/// axis uses 2 d_rr + d_zz with even reflection. Other nodes hold 0.
inline ScalarField laplacian_cyl(const ScalarField& f) {
  const AxiGrid& g = *f.grid;
  detail::require_stencil(g);
  const double h2 = g.h() * g.h();
  ScalarField out(f.grid, 0.0);
  for (int j = 0; j < g.nz(); ++j)
    for (int i = 0; i < g.nr(); ++i) {
      if (!g.active(i, j)) continue;
      const double c = f(i, j);
      const double zz = (f(i, j + 1) - 2.0 * c + f(i, j - 1)) / h2;
      if (i == 0) {
        out(i, j) = 4.0 * (f(1, j) - c) / h2 + zz;
      } else {
        const double rr = (f(i + 1, j) - 2.0 * c + f(i - 1, j)) / h2;
        const double r1 = (f(i + 1, j) - f(i - 1, j)) / (2.0 * g.h() * g.r(i));
        out(i, j) = rr + zz + r1;
      }
    }
  return out;
}

/// k^2 sin^2(phi) / r^2 at an active node. On the axis the 0/0 limit is
/// extrapolated from the two nearest off-axis nodes with a fit a + b r^2.
inline double azimuthal_term(const AxiState& s, int i, int j) {
  const AxiGrid& g = s.grid();
  const double k2 = double(s.k) * s.k;
  auto term = [&](int ii) {
    const double sn = std::sin(s.phi(ii, j));
    return k2 * sn * sn / (g.r(ii) * g.r(ii));
  };
  if (i > 0) return term(i);
  if (!g.known(2, j)) return term(1);
  return (4.0 * term(1) - term(2)) / 3.0;
}

/// Pointwise |Du|^2 = |D'rho|^2 + rho^2 (|D'phi|^2 + k^2 sin^2(phi) / r^2)
/// at active nodes; other nodes hold 0.
inline ScalarField energy_density(const AxiState& s) {
  const AxiGrid& g = s.grid();
  detail::require_stencil(g);
  ScalarField out(s.rho.grid, 0.0);
  for (int j = 0; j < g.nz(); ++j)
    for (int i = 0; i < g.nr(); ++i) {
      if (!g.active(i, j)) continue;
      const double rr = detail::d_r(s.rho, i, j, true);
      const double rz = detail::d_z(s.rho, i, j);
      const double pr = detail::d_r(s.phi, i, j, false);
      const double pz = detail::d_z(s.phi, i, j);
      const double rho = s.rho(i, j);
      out(i, j) = rr * rr + rz * rz +
                  rho * rho * (pr * pr + pz * pz + azimuthal_term(s, i, j));
    }
  return out;
}

/// 2 pi times the node quadrature of density * r over the half-disk (the axis
/// carries weight 0). For a density field this is the 3D integral.
inline double integrate_3d(const ScalarField& density) {
  const AxiGrid& g = *density.grid;
  const double h2 = g.h() * g.h();
  double sum = 0.0;
  for (int j = 0; j < g.nz(); ++j)
    for (int i = 1; i < g.nr(); ++i)
      if (g.active(i, j)) sum += density(i, j) * g.r(i);
  return 2.0 * pi * h2 * sum;
}

/// Dirichlet energy of the 3D map, 2 pi F_k, by node quadrature of the
/// pointwise density.
inline double total_energy(const AxiState& s) {
  return integrate_3d(energy_density(s));
}

/// The energy the relaxation solvers minimise exactly: an edge-based
/// discretisation of 2 pi F_k. Horizontal edges carry weight r_{i+1/2},
/// vertical edges r_i (h/8 on the axis column), the phi-gradient is weighted
/// by the mean of rho^2 over the edge and the azimuthal term is lumped to
/// off-axis nodes with weight h^2 / r.
inline double discrete_energy(const AxiState& s) {
  const AxiGrid& g = s.grid();
  const double h = g.h();
  const double k2 = double(s.k) * s.k;
  long double sum = 0.0L;  // extended accumulator keeps the history monotone
  auto edge = [&](int i0, int j0, int i1, int j1, double w) {
    if (!g.known(i0, j0) || !g.known(i1, j1)) return;
    if (!g.active(i0, j0) && !g.active(i1, j1)) return;
    const double ra = s.rho(i0, j0), rb = s.rho(i1, j1);
    const double dr = ra - rb, dp = s.phi(i0, j0) - s.phi(i1, j1);
    sum += w * (dr * dr + 0.5 * (ra * ra + rb * rb) * dp * dp);
  };
  for (int j = 0; j < g.nz(); ++j)
    for (int i = 0; i < g.nr(); ++i) {
      if (i + 1 < g.nr()) edge(i, j, i + 1, j, (i + 0.5) * h);
      if (j + 1 < g.nz()) edge(i, j, i, j + 1, i == 0 ? h / 8.0 : i * h);
      if (i > 0 && g.active(i, j)) {
        const double sn = std::sin(s.phi(i, j)), rho = s.rho(i, j);
        sum += k2 * h * h * rho * rho * sn * sn / g.r(i);
      }
    }
  return 2.0 * pi * double(sum);
}

using Vec3 = std::array<double, 3>;

inline double dot(const Vec3& a, const Vec3& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }
inline Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2],
          a[0] * b[1] - a[1] * b[0]};
}

/// Hessian of rho(y) = |y| - 1 applied to (xi, xi):
/// (|xi|^2 - (y/|y| . xi)^2) / |y|.
inline double hess_rho_ball(const Vec3& y, const Vec3& xi) {
  const double ny = norm(y);
  if (!(ny >= 1.0)) throw InputError("hess_rho_ball: |y| < 1");
  const double along = dot(y, xi) / ny;
  return (dot(xi, xi) - along * along) / ny;
}

}  // namespace cmlab
