#pragma once

// Marching-squares level sets of node fields on an AxiGrid.

#include <array>
#include <cstdint>
#include <map>
#include <vector>

#include "cmlab/core.hpp"

namespace cmlab {

using Point2 = std::array<double, 2>;  // (r, z)
using Polyline = std::vector<Point2>;

namespace detail {

// Edge ids: horizontal edge (i,j)-(i+1,j) -> 2*index, vertical (i,j)-(i,j+1)
// -> 2*index + 1.
struct ContourSegment {
  std::uint64_t a, b;
};

}  // namespace detail

/// Polylines of {f = level} over cells whose four corners are known.
/// A node counts as "above" when f > level. Saddle cells are split by the
/// cell-centre average. Polylines are chained through shared grid edges and
/// returned in order of their first segment (row-major cell order), so the
/// output is deterministic.
inline std::vector<Polyline> level_set(const ScalarField& f, double level) {
  const AxiGrid& g = *f.grid;
  std::map<std::uint64_t, Point2> where;
  std::vector<detail::ContourSegment> segs;

  auto hedge = [&](int i, int j) { return 2 * std::uint64_t(g.index(i, j)); };
  auto vedge = [&](int i, int j) { return 2 * std::uint64_t(g.index(i, j)) + 1; };
  auto cross = [&](int i0, int j0, int i1, int j1) {
    const double a = f(i0, j0) - level, b = f(i1, j1) - level;
    const double t = a / (a - b);
    return Point2{g.r(i0) + t * (g.r(i1) - g.r(i0)), g.z(j0) + t * (g.z(j1) - g.z(j0))};
  };

  for (int j = 0; j + 1 < g.nz(); ++j)
    for (int i = 0; i + 1 < g.nr(); ++i) {
      if (!g.known(i, j) || !g.known(i + 1, j) || !g.known(i, j + 1) ||
          !g.known(i + 1, j + 1))
        continue;
      // Corners counter-clockwise from (i,j): 0 bottom-left, 1 bottom-right,
      // 2 top-right, 3 top-left. Edges: 0 bottom, 1 right, 2 top, 3 left.
      const double v[4] = {f(i, j), f(i + 1, j), f(i + 1, j + 1), f(i, j + 1)};
      int mask = 0;
      for (int c = 0; c < 4; ++c)
        if (v[c] > level) mask |= 1 << c;
      if (mask == 0 || mask == 15) continue;

      const std::uint64_t eid[4] = {hedge(i, j), vedge(i + 1, j), hedge(i, j + 1),
                                    vedge(i, j)};
      auto point = [&](int e) {
        if (!where.count(eid[e])) {
          switch (e) {
            case 0: where[eid[e]] = cross(i, j, i + 1, j); break;
            case 1: where[eid[e]] = cross(i + 1, j, i + 1, j + 1); break;
            case 2: where[eid[e]] = cross(i, j + 1, i + 1, j + 1); break;
            default: where[eid[e]] = cross(i, j, i, j + 1); break;
          }
        }
        return eid[e];
      };
      auto add = [&](int e0, int e1) { segs.push_back({point(e0), point(e1)}); };

      // Edge e joins corners e and (e+1)%4; it is crossed when they differ.
      std::vector<int> crossed;
      for (int e = 0; e < 4; ++e)
        if (((mask >> e) & 1) != ((mask >> ((e + 1) % 4)) & 1)) crossed.push_back(e);
      if (crossed.size() == 2) {
        add(crossed[0], crossed[1]);
      } else {
        const double centre = 0.25 * (v[0] + v[1] + v[2] + v[3]);
        const bool centre_above = centre > level;
        const bool c0_above = (mask & 1) != 0;
        // Cut off the two corners that differ from the centre.
        if (centre_above == c0_above) {
          add(0, 1);
          add(2, 3);
        } else {
          add(3, 0);
          add(1, 2);
        }
      }
    }

  // Chain segments through shared edge ids.
  std::multimap<std::uint64_t, std::size_t> by_edge;
  for (std::size_t s = 0; s < segs.size(); ++s) {
    by_edge.emplace(segs[s].a, s);
    by_edge.emplace(segs[s].b, s);
  }
  std::vector<char> used(segs.size(), 0);
  auto next_segment = [&](std::uint64_t e, std::size_t from) -> long {
    auto [lo, hi] = by_edge.equal_range(e);
    for (auto it = lo; it != hi; ++it)
      if (it->second != from && !used[it->second]) return long(it->second);
    return -1;
  };

  std::vector<Polyline> out;
  for (std::size_t s0 = 0; s0 < segs.size(); ++s0) {
    if (used[s0]) continue;
    used[s0] = 1;
    std::vector<std::uint64_t> chain{segs[s0].a, segs[s0].b};
    // Extend forward from b, then backward from a.
    for (int dir = 0; dir < 2; ++dir) {
      std::size_t cur = s0;
      while (true) {
        const std::uint64_t tip = dir == 0 ? chain.back() : chain.front();
        const long nx = next_segment(tip, cur);
        if (nx < 0) break;
        used[nx] = 1;
        const std::uint64_t other = segs[nx].a == tip ? segs[nx].b : segs[nx].a;
        if (dir == 0)
          chain.push_back(other);
        else
          chain.insert(chain.begin(), other);
        cur = std::size_t(nx);
      }
    }
    Polyline pl;
    pl.reserve(chain.size());
    for (auto e : chain) pl.push_back(where.at(e));
    out.push_back(std::move(pl));
  }
  return out;
}

}  // namespace cmlab
