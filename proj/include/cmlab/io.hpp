#pragma once

// Text formats: AXIFLD v1 field snapshots, CSV tables, boundary profiles.
// Numbers are written with 17 significant digits and '\n' line endings.

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cmlab/axisym.hpp"
#include "cmlab/core.hpp"

namespace cmlab::io {

inline std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path + "'");
  return out;
}

/// `AXIFLD 1 <nr> <nz> <h> <k>` followed by nz*nr lines `<rho> <phi>`.
inline void write_axifld(const std::string& path, const AxiState& s) {
  const AxiGrid& g = s.grid();
  auto out = open_out(path);
  out << "AXIFLD 1 " << g.nr() << ' ' << g.nz() << ' ' << num(g.h()) << ' ' << s.k << '\n';
  for (std::size_t n = 0; n < g.size(); ++n)
    out << num(s.rho.values[n]) << ' ' << num(s.phi.values[n]) << '\n';
  if (!out) throw InputError("write failed for '" + path + "'");
}

/// The header carries no radius or origin: the layout of AxiGrid::half_disk
/// (z rows symmetric about 0, radius (nr - 2) h) is assumed.
inline AxiState read_axifld(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("file not found: '" + path + "'");
  std::string magic;
  int version = 0, nr = 0, nz = 0, k = 0;
  double h = 0.0;
  if (!(in >> magic >> version >> nr >> nz >> h >> k) || magic != "AXIFLD")
    throw InputError("'" + path + "' is not an AXIFLD file");
  if (version != 1) throw InputError("unsupported AXIFLD version " + std::to_string(version));
  if (nr < 3 || nz < 3 || nz % 2 == 0 || !(h > 0.0) || k < 1)
    throw InputError("AXIFLD header out of range in '" + path + "'");
  auto g = make_grid(AxiGrid(nr, nz, h, -0.5 * (nz - 1) * h, (nr - 2) * h));
  AxiState s{k, ScalarField(g), ScalarField(g)};
  for (std::size_t n = 0; n < g->size(); ++n)
    if (!(in >> s.rho.values[n] >> s.phi.values[n]))
      throw InputError("AXIFLD body truncated in '" + path + "'");
  return s;
}

/// A scalar field stored as an AXIFLD snapshot with rho = 1 + f and phi = 0.
inline void write_scalar_axifld(const std::string& path, const ScalarField& f, int k) {
  AxiState s{k, ScalarField(f.grid), ScalarField(f.grid, 0.0)};
  for (std::size_t n = 0; n < f.values.size(); ++n) s.rho.values[n] = 1.0 + f.values[n];
  write_axifld(path, s);
}

inline void write_csv(const std::string& path, const std::string& header,
                      const std::vector<std::vector<double>>& rows) {
  auto out = open_out(path);
  out << header << '\n';
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << num(row[c]);
    out << '\n';
  }
  if (!out) throw InputError("write failed for '" + path + "'");
}

/// Lines `<angle> <phi>`; '#' starts a comment.
inline axisym::BoundaryData read_boundary_profile(const std::string& path, int k, double lambda) {
  std::ifstream in(path);
  if (!in) throw InputError("file not found: '" + path + "'");
  std::vector<double> angles, values;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    double a, v;
    if (!(ls >> a)) continue;
    if (!(ls >> v)) throw InputError("boundary profile: malformed line in '" + path + "'");
    angles.push_back(a);
    values.push_back(v);
  }
  return axisym::BoundaryData::from_samples(k, lambda, std::move(angles), std::move(values));
}

}  // namespace cmlab::io
