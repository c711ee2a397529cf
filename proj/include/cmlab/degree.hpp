#pragma once

// Topological degree of maps S^2 -> R^3 \ {0} sampled on icosphere meshes,
// and the planar branch-point example maps u_k.

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <fstream>
#include <map>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "cmlab/core.hpp"

namespace cmlab::degree {

struct SphereMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> triangles;
  int level = 0;
};

inline Vec3 normalized(const Vec3& v) {
  const double n = norm(v);
  return {v[0] / n, v[1] / n, v[2] / n};
}

inline double triple(const Vec3& a, const Vec3& b, const Vec3& c) { return dot(a, cross(b, c)); }

/// Subdivided icosahedron; every triangle is counter-clockwise seen from
/// outside.
inline SphereMesh icosphere(int level) {
  if (level < 0 || level > 8) throw InputError("icosphere: level must lie in [0, 8]");
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  SphereMesh m;
  m.level = level;
  for (const Vec3& v : std::vector<Vec3>{{-1, t, 0}, {1, t, 0},  {-1, -t, 0}, {1, -t, 0},
                                         {0, -1, t}, {0, 1, t},  {0, -1, -t}, {0, 1, -t},
                                         {t, 0, -1}, {t, 0, 1},  {-t, 0, -1}, {-t, 0, 1}})
    m.vertices.push_back(normalized(v));
  m.triangles = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                 {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                 {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                 {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  for (int l = 0; l < level; ++l) {
    std::map<std::pair<int, int>, int> mid;
    auto midpoint = [&](int a, int b) {
      const auto key = std::minmax(a, b);
      auto it = mid.find(key);
      if (it != mid.end()) return it->second;
      const Vec3& p = m.vertices[a];
      const Vec3& q = m.vertices[b];
      m.vertices.push_back(normalized({p[0] + q[0], p[1] + q[1], p[2] + q[2]}));
      const int id = int(m.vertices.size()) - 1;
      mid.emplace(key, id);
      return id;
    };
    std::vector<std::array<int, 3>> next;
    next.reserve(m.triangles.size() * 4);
    for (const auto& tri : m.triangles) {
      const int a = midpoint(tri[0], tri[1]);
      const int b = midpoint(tri[1], tri[2]);
      const int c = midpoint(tri[2], tri[0]);
      next.push_back({tri[0], a, c});
      next.push_back({tri[1], b, a});
      next.push_back({tri[2], c, b});
      next.push_back({a, b, c});
    }
    m.triangles = std::move(next);
  }
  return m;
}

/// Empty when the mesh invariants hold, otherwise a description.
inline std::string check_mesh(const SphereMesh& m) {
  for (const auto& v : m.vertices)
    if (std::abs(norm(v) - 1.0) > 1e-12) return "vertex off the unit sphere";
  for (const auto& t : m.triangles)
    if (!(triple(m.vertices[t[0]], m.vertices[t[1]], m.vertices[t[2]]) > 0.0))
      return "triangle not outward oriented";
  return {};
}

using MeshPtr = std::shared_ptr<const SphereMesh>;

struct MapOnMesh {
  MeshPtr mesh;
  std::vector<Vec3> images;
};

template <class F>
MapOnMesh sample_map(MeshPtr mesh, F&& f) {
  MapOnMesh out{mesh, {}};
  out.images.reserve(mesh->vertices.size());
  for (const auto& v : mesh->vertices) out.images.push_back(f(v));
  return out;
}

namespace detail {

inline void check_images(const MapOnMesh& f) {
  if (!f.mesh || f.images.size() != f.mesh->vertices.size())
    throw InputError("degree: one image per mesh vertex required");
  for (const auto& y : f.images)
    if (!(norm(y) > 1e-12) || !std::isfinite(norm(y)))
      throw InputError("degree: image vectors must be nonzero and finite");
}

// Signed solid angle of the spherical triangle (a, b, c), unit vectors.
inline double solid_angle(const Vec3& a, const Vec3& b, const Vec3& c) {
  const double num = triple(a, b, c);
  const double den = 1.0 + dot(a, b) + dot(b, c) + dot(c, a);
  return 2.0 * std::atan2(num, den);
}

}  // namespace detail

struct DegreeResult {
  int degree = 0;
  double raw = 0.0;  // signed area / 4 pi before rounding
};

/// Signed area of the normalized image triangles over 4 pi, rounded. Throws
/// when the sum is farther than 0.1 from an integer.
inline DegreeResult degree_integral_raw(const MapOnMesh& f) {
  detail::check_images(f);
  std::vector<Vec3> u;
  u.reserve(f.images.size());
  for (const auto& y : f.images) u.push_back(normalized(y));
  double sum = 0.0;
  for (const auto& t : f.mesh->triangles) sum += detail::solid_angle(u[t[0]], u[t[1]], u[t[2]]);
  DegreeResult r;
  r.raw = sum / (4.0 * pi);
  r.degree = int(std::lround(r.raw));
  if (std::abs(r.raw - r.degree) > 0.1)
    throw NumericalError("degree_integral: residual above 0.1, mesh too coarse for the map");
  return r;
}

inline int degree_integral(const MapOnMesh& f) { return degree_integral_raw(f).degree; }

/// Signed count of image triangles whose cone contains the ray through y.
/// When y lies within 1e-10 of an image edge it is moved along a golden-angle
/// jitter sequence; after 8 failed moves the call throws.
inline int degree_regular_value(const MapOnMesh& f, const Vec3& y_in) {
  detail::check_images(f);
  if (!(norm(y_in) > 0.0)) throw InputError("degree_regular_value: y must be nonzero");
  std::vector<Vec3> u;
  u.reserve(f.images.size());
  for (const auto& y : f.images) u.push_back(normalized(y));
  const double golden = pi * (3.0 - std::sqrt(5.0));
  Vec3 y = normalized(y_in);
  for (int attempt = 0; attempt <= 8; ++attempt) {
    if (attempt > 0) {
      const double eps = 1e-6 * attempt;
      const double a = golden * attempt;
      const double zc = 1.0 - 2.0 * std::fmod(attempt * 0.618033988749895, 1.0);
      const double sc = std::sqrt(1.0 - zc * zc);
      const Vec3 d{sc * std::cos(a), sc * std::sin(a), zc};
      y = normalized({y_in[0] / norm(y_in) + eps * d[0], y_in[1] / norm(y_in) + eps * d[1],
                      y_in[2] / norm(y_in) + eps * d[2]});
    }
    int count = 0;
    bool degenerate = false;
    for (const auto& t : f.mesh->triangles) {
      const Vec3 &a = u[t[0]], &b = u[t[1]], &c = u[t[2]];
      const double det = triple(a, b, c);
      if (dot(a, y) <= 0.0 && dot(b, y) <= 0.0 && dot(c, y) <= 0.0) continue;
      if (det == 0.0) {
        degenerate = true;
        break;
      }
      // Barycentric weights of y in the cone spanned by a, b, c.
      const double wa = triple(y, b, c) / det;
      const double wb = triple(a, y, c) / det;
      const double wc = triple(a, b, y) / det;
      const double lo = std::min({wa, wb, wc});
      if (lo > -1e-10 && lo < 1e-10) {
        degenerate = true;
        break;
      }
      if (lo > 0.0) count += det > 0.0 ? 1 : -1;
    }
    if (!degenerate) return count;
  }
  throw NumericalError("degree_regular_value: y stays on an image edge after 8 perturbations");
}

/// Value and real differential (columns d/dx, d/dy) of
/// u_k(z) = (Re z^2, Im z^2, Re z^k).
struct UkValue {
  Vec3 value;
  Eigen::Matrix<double, 3, 2> Du;
};

inline UkValue uk_map(int k, std::complex<double> z) {
  if (k < 2) throw InputError("uk_map: k must be >= 2");
  const auto z2 = z * z;
  const auto zk = std::pow(z, k);
  const auto d2 = 2.0 * z;
  const auto dk = double(k) * std::pow(z, k - 1);
  UkValue out;
  out.value = {z2.real(), z2.imag(), zk.real()};
  // Holomorphic g: d/dx g = g', d/dy g = i g'.
  out.Du << d2.real(), -d2.imag(), d2.imag(), d2.real(), dk.real(), -dk.imag();
  return out;
}

inline int matrix_rank(const Eigen::Matrix<double, 3, 2>& m, double tol = 1e-12) {
  Eigen::JacobiSVD<Eigen::Matrix<double, 3, 2>> svd(m);
  int r = 0;
  for (int i = 0; i < 2; ++i)
    if (svd.singularValues()(i) > tol) ++r;
  return r;
}

/// (sin p cos t, sin p sin t, cos p) -> (sin p cos kt, sin p sin kt, cos p);
/// k = 1 is the identity, k <= -1 reverses orientation.
inline Vec3 wrap(const Vec3& x, int k) {
  const double rho = std::hypot(x[0], x[1]);
  if (rho == 0.0) return x;
  const double th = std::atan2(x[1], x[0]);
  return {rho * std::cos(k * th), rho * std::sin(k * th), x[2]};
}

/// Builtin maps by name: "identity", "antipodal", "idk=K".
inline MapOnMesh builtin_map(MeshPtr mesh, const std::string& name) {
  if (name == "identity") return sample_map(mesh, [](const Vec3& x) { return x; });
  if (name == "antipodal")
    return sample_map(mesh, [](const Vec3& x) { return Vec3{-x[0], -x[1], -x[2]}; });
  if (name.rfind("idk=", 0) == 0) {
    int k = 0;
    try {
      std::size_t used = 0;
      k = std::stoi(name.substr(4), &used);
      if (used != name.size() - 4) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw InputError("builtin map: bad k in '" + name + "'");
    }
    if (k == 0) throw InputError("builtin map: k must be nonzero");
    return sample_map(mesh, [k](const Vec3& x) { return wrap(x, k); });
  }
  throw InputError("unknown builtin map '" + name + "'");
}

using Rotation = std::array<Vec3, 3>;  // rows

inline Vec3 apply(const Rotation& R, const Vec3& v) { return {dot(R[0], v), dot(R[1], v), dot(R[2], v)}; }

/// Uniform random rotation from a normalized Gaussian quaternion.
inline Rotation random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  double q[4];
  double s = 0.0;
  for (double& x : q) {
    x = n(rng);
    s += x * x;
  }
  s = std::sqrt(s);
  const double w = q[0] / s, x = q[1] / s, y = q[2] / s, z = q[3] / s;
  return {Vec3{1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)},
          Vec3{2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)},
          Vec3{2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)}};
}

inline MapOnMesh rotate_images(const MapOnMesh& f, const Rotation& R) {
  MapOnMesh out{f.mesh, {}};
  out.images.reserve(f.images.size());
  for (const auto& y : f.images) out.images.push_back(apply(R, y));
  return out;
}

/// Reads `vx vy vz ix iy iz` lines; the vertices must be those of `mesh` in
/// order (to 1e-6).
inline MapOnMesh read_map(const std::string& path, MeshPtr mesh) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open map file '" + path + "'");
  MapOnMesh out{mesh, {}};
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    Vec3 v, y;
    if (!(ls >> v[0] >> v[1] >> v[2] >> y[0] >> y[1] >> y[2]))
      throw InputError("map file: malformed line " + std::to_string(n + 1));
    if (n >= mesh->vertices.size()) throw InputError("map file: more vertices than the mesh");
    const Vec3& m = mesh->vertices[n];
    if (std::abs(m[0] - v[0]) + std::abs(m[1] - v[1]) + std::abs(m[2] - v[2]) > 1e-6)
      throw InputError("map file: vertex " + std::to_string(n) + " does not match the mesh");
    out.images.push_back(y);
    ++n;
  }
  if (n != mesh->vertices.size()) throw InputError("map file: fewer vertices than the mesh");
  return out;
}

}  // namespace cmlab::degree
