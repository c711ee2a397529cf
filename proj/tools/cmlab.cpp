// Command-line front end: radial, axisym, diagnose, blowup, degree, fb-study.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "cmlab/axisym.hpp"
#include "cmlab/blowup.hpp"
#include "cmlab/degree.hpp"
#include "cmlab/diagnostics.hpp"
#include "cmlab/io.hpp"
#include "cmlab/pipeline.hpp"
#include "cmlab/radial.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace cmlab;

namespace {

constexpr const char* kVersion = "cmlab 1.0.0";

// Output files go under $CMLAB_OUT (default: working directory) unless the
// given path is absolute.
class Outputs {
 public:
  Outputs() {
    const char* env = std::getenv("CMLAB_OUT");
    root_ = env && *env ? fs::path(env) : fs::path(".");
  }
  std::string path(const std::string& p) {
    fs::path full = fs::path(p).is_absolute() ? fs::path(p) : root_ / p;
    if (full.has_parent_path()) fs::create_directories(full.parent_path());
    files_.push_back(full.lexically_normal().string());
    return files_.back();
  }
  const std::vector<std::string>& files() const { return files_; }
  const fs::path& root() const { return root_; }

 private:
  fs::path root_;
  std::vector<std::string> files_;
};

json to_json(const axisym::Residuals& r) {
  return {{"phi_max", r.phi_max}, {"phi_l2", r.phi_l2}, {"rho_max", r.rho_max},
          {"rho_l2", r.rho_l2},   {"nodes", r.nodes}};
}

json to_json(const diag::ScaleCurve& c) {
  return {{"quantity", diag::to_string(c.quantity)},
          {"center", c.center},
          {"scales", c.scales},
          {"values", c.values}};
}

json to_json(const blowup::ConeMatch& m) {
  json rays = json::array();
  for (const auto& r : m.rays)
    rays.push_back({{"angle_deg", r.angle * 180.0 / pi},
                    {"cos_latitude", r.cos_latitude},
                    {"matched_cos_latitude", r.matched},
                    {"error_deg", r.error_deg},
                    {"points", r.points}});
  return {{"rays", rays}, {"hausdorff_defect", m.hausdorff_defect}};
}

json contour_json(const axisym::FreeBoundary& fb) {
  json lines = json::array();
  for (const auto& pl : fb.contour) {
    json pts = json::array();
    for (const auto& p : pl) pts.push_back({p[0], p[1]});
    lines.push_back(pts);
  }
  return {{"axis_points", fb.axis_points}, {"contour", lines}};
}

void write_json(const std::string& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path + "'");
  out << j.dump(2) << '\n';
}

// "z=0.25" or "0.25".
double parse_center(const std::string& s) {
  std::string v = s.rfind("z=", 0) == 0 ? s.substr(2) : s;
  try {
    std::size_t used = 0;
    const double z = std::stod(v, &used);
    if (used == v.size()) return z;
  } catch (const std::exception&) {
  }
  throw InputError("bad center '" + s + "' (expected z=<value>)");
}

// "dyadic:N" (N halvings from the largest ball that fits) or a comma list.
std::vector<double> parse_scales(const std::string& spec, const AxiGrid& g, double z0) {
  if (spec.rfind("dyadic:", 0) == 0) {
    int n = 0;
    try {
      n = std::stoi(spec.substr(7));
    } catch (const std::exception&) {
      throw InputError("bad scales '" + spec + "'");
    }
    const double top = 0.9 * (g.radius() - std::abs(z0) - g.h());
    if (n < 1 || !(top > 0.0)) throw InputError("bad scales '" + spec + "'");
    return diag::dyadic(top, n);
  }
  std::vector<double> out;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw InputError("bad scales '" + spec + "'");
    }
  }
  if (out.empty()) throw InputError("bad scales '" + spec + "'");
  return out;
}

struct SolveFlags {
  double tol;
  int max_sweeps = 200000;
  double omega = 1.9;
  bool fixed_omega = false;
  int coarse_levels = 3;
  double eps0_sq = 4.0 * pi;

  explicit SolveFlags(double default_tol) : tol(default_tol) {}

  void add(CLI::App* app) {
    app->add_option("--tol", tol, "relative stopping tolerance")->capture_default_str();
    app->add_option("--max-sweeps", max_sweeps)->capture_default_str()->check(CLI::PositiveNumber);
    app->add_option("--omega", omega, "fixed SOR factor (with --fixed-omega)")->capture_default_str();
    app->add_flag("--fixed-omega", fixed_omega, "use --omega instead of the per-level choice");
    app->add_option("--coarse-levels", coarse_levels)->capture_default_str()->check(CLI::NonNegativeNumber);
    app->add_option("--eps0-sq", eps0_sq, "singular-point energy threshold")->capture_default_str();
  }
  SolveConfig config() const {
    SolveConfig c;
    c.tol = tol;
    c.max_sweeps = max_sweeps;
    c.omega = omega;
    c.auto_omega = !fixed_omega;
    c.coarse_levels = coarse_levels;
    c.eps0_sq = eps0_sq;
    return c;
  }
  json to_json() const {
    return {{"tol", tol},
            {"max_sweeps", max_sweeps},
            {"omega", fixed_omega ? json(omega) : json("auto")},
            {"coarse_levels", coarse_levels},
            {"eps0_sq", eps0_sq}};
  }
};

axisym::BoundaryData boundary_data(int k, double lambda, const std::string& phi_b) {
  if (phi_b.empty()) return axisym::BoundaryData::identity(k, lambda);
  return io::read_boundary_profile(phi_b, k, lambda);
}

json grid_json(const AxiGrid& g, int resolution) {
  return {{"resolution", resolution}, {"h", g.h()}, {"nr", g.nr()}, {"nz", g.nz()},
          {"radius", g.radius()}};
}

}  // namespace

int main(int argc, char** argv) {
  const auto start = std::chrono::steady_clock::now();
  CLI::App app{"Numerical laboratory for energy-minimizing maps into the exterior of the unit ball"};
  app.set_config("--config", "", "config file: key = value lines, [subcommand] sections");
  app.set_version_flag("--version", kVersion);
  int threads = 1;
  app.add_option("--threads", threads, "worker cap (runs are single-threaded)")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  app.require_subcommand(1);

  json manifest;
  json results;
  Outputs outputs;
  std::string manifest_name = "cmlab";
  std::function<void()> action;

  // radial
  auto* radial = app.add_subcommand("radial", "radial profile vs closed form");
  int rn = 3, rgrid = 4096;
  double ra = 0.5;
  std::string rout = "radial.csv";
  SolveFlags rflags(1e-12);
  radial->add_option("--n", rn, "dimension")->capture_default_str()->check(CLI::Range(3, 64));
  radial->add_option("--a", ra, "obstacle radius in (0,1)")->capture_default_str();
  radial->add_option("--grid", rgrid, "number of radial nodes")->capture_default_str();
  radial->add_option("--out", rout)->capture_default_str();
  rflags.add(radial);
  radial->callback([&] {
    action = [&] {
      manifest["grid"] = {{"nodes", rgrid}, {"h", 1.0 / (rgrid - 1)}};
      manifest["tolerances"] = rflags.to_json();
      const auto params = radial::solve_params(rn, ra);
      std::optional<radial::RadialProfile> prof;
      std::string failure;
      try {
        prof = radial::minimize_radial(rn, ra, rgrid, rflags.config());
      } catch (const radial::RadialNonConvergence& e) {
        prof = e.partial();
        failure = e.what();
      }
      std::vector<std::vector<double>> rows;
      double sup = 0.0;
      for (std::size_t i = 0; i < prof->size(); ++i) {
        const double r = prof->r(i), w = prof->samples[i];
        const double c = radial::closed_form(params, r);
        sup = std::max(sup, std::abs(w - c));
        rows.push_back({r, w, c, std::abs(w - c)});
      }
      io::write_csv(outputs.path(rout), "r,w_numeric,w_closed,abs_err", rows);
      results = {{"t_a", params.t_a},
                 {"r_a", params.r_a},
                 {"sup_error", sup},
                 {"free_boundary_radius",
                  radial::free_boundary_radius(*prof, radial::default_contact_tol(*prof))}};
      if (!failure.empty()) throw NumericalError(failure);
    };
  });

  // axisym
  auto* axi = app.add_subcommand("axisym", "k-axially symmetric minimizer on the half-disk");
  int ak = 2, agrid = 256;
  double alambda = 1.5, afb_tol = 0.0;
  std::string aphi, aout = "state.axifld", areport = "report.json";
  SolveFlags aflags(1e-18);
  axi->add_option("--k", ak, "azimuthal degree, >= 1")->capture_default_str()->check(CLI::Range(1, 64));
  axi->add_option("--lambda", alambda, "boundary modulus, >= 1")->capture_default_str();
  axi->add_option("--grid", agrid, "cells across the diameter (even)")->capture_default_str();
  axi->add_option("--phi-b", aphi, "boundary profile file: lines '<angle> <phi>'");
  axi->add_option("--out", aout)->capture_default_str();
  axi->add_option("--report", areport)->capture_default_str();
  axi->add_option("--fb-tol", afb_tol, "free-boundary level offset above 1")->capture_default_str();
  aflags.add(axi);
  axi->callback([&] {
    action = [&] {
      const auto bd = boundary_data(ak, alambda, aphi);
      auto grid = make_grid(AxiGrid::half_disk(agrid));
      manifest["grid"] = grid_json(*grid, agrid);
      manifest["tolerances"] = aflags.to_json();
      const SolveConfig cfg = aflags.config();
      auto [s, rep] = axisym::minimize(grid, bd, cfg);
      io::write_axifld(outputs.path(aout), s);
      const auto sing = axisym::detect_singularities(s, cfg);
      const auto fb = axisym::free_boundary(s, afb_tol);
      json report = {{"energy_history", rep.energy_history},
                     {"converged", rep.converged},
                     {"level_sweeps", rep.level_sweeps},
                     {"level_resolution", rep.level_resolution},
                     {"residuals", to_json(rep.residuals)},
                     {"residual_threshold", rep.residual_threshold},
                     {"singular_points", sing},
                     {"free_boundary", contour_json(fb)},
                     {"min_rho", axisym::min_rho(s)},
                     {"coincidence_nodes", axisym::coincidence_count(s)}};
      write_json(outputs.path(areport), report);
      results = {{"energy", rep.energy_history.back()},
                 {"converged", rep.converged},
                 {"singular_points", sing},
                 {"axis_free_boundary", fb.axis_points}};
      if (!rep.converged) throw NumericalError("axisym: no convergence within max_sweeps");
    };
  });

  // diagnose
  auto* dia = app.add_subcommand("diagnose", "scale-indexed diagnostics of a stored state");
  std::string dstate, dcenter = "z=0.0", dscales = "dyadic:8", dout = "diagnose.json";
  double dgamma = 0.1, deps0 = 4.0 * pi;
  dia->add_option("--state", dstate, "AXIFLD snapshot")->required();
  dia->add_option("--center", dcenter, "z=<value> on the axis")->capture_default_str();
  dia->add_option("--scales", dscales, "dyadic:N or a comma list")->capture_default_str();
  dia->add_option("--gamma", dgamma, "negative-moment exponent")->capture_default_str();
  dia->add_option("--eps0-sq", deps0)->capture_default_str();
  dia->add_option("--out", dout)->capture_default_str();
  dia->callback([&] {
    action = [&] {
      const AxiState s = io::read_axifld(dstate);
      if (const auto bad = validate(s); !bad.empty()) throw InputError("invalid state: " + bad);
      const AxiGrid& g = s.grid();
      manifest["grid"] = grid_json(g, 2 * (g.nr() - 1));
      const double z0 = parse_center(dcenter);
      const auto scales = parse_scales(dscales, g, z0);
      manifest["tolerances"] = {{"gamma", dgamma}, {"eps0_sq", deps0}};
      SolveConfig cfg;
      cfg.eps0_sq = deps0;

      diag::DiagnosticsReport rep;
      rep.gamma = dgamma;
      rep.curves.push_back(diag::normalized_energy(s, z0, scales));
      ScalarField excess(s.rho.grid);
      for (std::size_t q = 0; q < excess.values.size(); ++q) excess.values[q] = s.rho.values[q] - 1.0;
      rep.curves.push_back(diag::frequency(excess, z0, scales));
      rep.curves.push_back(diag::weiss_energy(s, z0, scales, s.k));
      diag::ScaleCurve neg{diag::Quantity::negmoment, z0, scales, {}};
      const ScalarField gn = diag::gradient_norm(s);
      for (double r : scales) neg.values.push_back(diag::neg_moment(gn, {z0, 0.5 * r, r, false}, dgamma));
      rep.curves.push_back(neg);
      json fit = nullptr;
      try {
        const auto vo = diag::vanishing_order(s, z0, scales);
        rep.curves.push_back({diag::Quantity::supnorm, z0, vo.scales, vo.sup_values});
        rep.vanishing_order_fits.push_back(vo);
        fit = {{"center", vo.center}, {"slope", vo.slope}, {"r2", vo.r2}};
      } catch (const InputError& e) {
        fit = {{"error", e.what()}};
      }
      rep.singular_points = axisym::detect_singularities(s, cfg);
      for (double z : axisym::free_boundary(s, 0.0).axis_points) {
        try {
          rep.branch_points.push_back({0.0, z, axisym::branch_rank(s, 0.0, z, rep.singular_points)});
        } catch (const InputError&) {
        }
      }

      const fs::path stem = fs::path(dout).replace_extension();
      json curves = json::array();
      for (const auto& c : rep.curves) {
        curves.push_back(to_json(c));
        std::vector<std::vector<double>> rows;
        for (std::size_t i = 0; i < c.scales.size(); ++i) rows.push_back({c.scales[i], c.values[i]});
        io::write_csv(outputs.path(stem.string() + "_" + diag::to_string(c.quantity) + ".csv"),
                      "scale,value", rows);
      }
      json branch = json::array();
      for (const auto& b : rep.branch_points) branch.push_back({{"r", b.r}, {"z", b.z}, {"rank", b.rank}});
      json report = {{"curves", curves},
                     {"singular_points", rep.singular_points},
                     {"branch_points", branch},
                     {"vanishing_order", fit},
                     {"gamma", rep.gamma}};
      write_json(outputs.path(dout), report);
      results = {{"singular_points", rep.singular_points}, {"vanishing_order", fit}};
    };
  });

  // blowup
  auto* blo = app.add_subcommand("blowup", "Legendre tables, p_k, nodal latitudes, rescalings");
  blo->require_subcommand(1);
  auto* bpk = blo->add_subcommand("pk", "coefficients of p_k and its zero check");
  int bk = 2;
  std::string bpk_out = "pk.csv";
  bpk->add_option("--k", bk)->capture_default_str()->check(CLI::Range(2, 8));
  bpk->add_option("--out", bpk_out)->capture_default_str();
  bpk->callback([&] {
    action = [&] {
      const auto p = blowup::particular_pk(bk);
      {
        std::ofstream out(outputs.path(bpk_out), std::ios::binary);
        out << "power,coefficient,exact\n";
        for (std::size_t i = 0; i < p.exact.size(); ++i)
          out << 2 * i << ',' << io::num(p.coefficients[i]) << ',' << p.exact[i] << '\n';
      }
      const auto chk = blowup::pk_zero_derivative_check(bk, 1e-6);
      json zeros = json::array();
      for (const auto& z : chk.zeros) zeros.push_back({{"t", z.t}, {"derivative", z.derivative}});
      results = {{"k", bk}, {"nondegenerate", chk.passed}, {"zeros", zeros}};
    };
  });
  auto* bnodal = blo->add_subcommand("nodal", "roots of P_l as cos-latitudes");
  int bl = 3;
  std::string bnodal_out = "nodal.csv";
  bnodal->add_option("--l", bl)->capture_default_str()->check(CLI::Range(1, 200));
  bnodal->add_option("--out", bnodal_out)->capture_default_str();
  bnodal->callback([&] {
    action = [&] {
      const auto t = blowup::nodal_latitudes(bl);
      std::vector<std::vector<double>> rows;
      for (std::size_t i = 0; i < t.size(); ++i)
        rows.push_back({double(i), t[i], std::acos(t[i]) * 180.0 / pi});
      io::write_csv(outputs.path(bnodal_out), "index,cos_latitude,angle_deg", rows);
      results = {{"l", bl}, {"cos_latitudes", t}};
    };
  });
  auto* bres = blo->add_subcommand("rescale", "rescalings of rho - 1 about an axis point");
  std::string bstate, bscales = "dyadic:6", bdir = "rescale", bnorm = "linear";
  double bz0 = 0.0, ba = 0.0, bcone_tol = 0.0;
  int bref = 64;
  bres->add_option("--state", bstate)->required();
  bres->add_option("--z0", bz0)->capture_default_str();
  bres->add_option("--scales", bscales)->capture_default_str();
  bres->add_option("--a", ba, "leading coefficient (estimated when omitted)");
  bres->add_option("--normalization", bnorm, "linear (a s^2k) or squared (a^2 s^2k)")
      ->capture_default_str()
      ->check(CLI::IsMember({"linear", "squared"}));
  bres->add_option("--reference", bref, "reference grid resolution")->capture_default_str();
  bres->add_option("--cone-tol", bcone_tol)->capture_default_str();
  bres->add_option("--out", bdir, "output directory")->capture_default_str();
  bres->callback([&] {
    action = [&] {
      const AxiState s = io::read_axifld(bstate);
      const AxiGrid& g = s.grid();
      manifest["grid"] = grid_json(g, 2 * (g.nr() - 1));
      const auto scales = parse_scales(bscales, g, bz0);
      const double a = ba > 0.0 ? ba : blowup::leading_coefficient(s, bz0);
      blowup::RescaleOptions opt;
      opt.reference_resolution = bref;
      opt.normalization = bnorm == "linear" ? blowup::Normalization::linear : blowup::Normalization::squared;
      const auto seq = blowup::rescale_sequence(s, bz0, a, scales, opt);
      std::vector<std::vector<double>> rows;
      json cones = json::array();
      for (std::size_t n = 0; n < seq.size(); ++n) {
        io::write_scalar_axifld(outputs.path((fs::path(bdir) / ("rescale_" + std::to_string(n) + ".axifld")).string()),
                                seq[n], s.k);
        rows.push_back({double(n), scales[n], n ? blowup::sup_distance(seq[n], seq[n - 1]) : 0.0});
        try {
          cones.push_back(to_json(blowup::fb_cone_match(seq[n], s.k, bcone_tol)));
        } catch (const InputError& e) {
          cones.push_back({{"error", e.what()}});
        }
      }
      io::write_csv(outputs.path((fs::path(bdir) / "rescale.csv").string()),
                    "index,scale,sup_distance_to_previous", rows);
      results = {{"a", a}, {"scales", scales}, {"cones", cones}};
    };
  });

  // degree
  auto* deg = app.add_subcommand("degree", "topological degree on an icosphere");
  std::string dmap;
  int dlevel = 5;
  std::vector<double> dy{0.3, 0.4, 0.5};
  deg->add_option("--map", dmap, "map file or builtin:identity|antipodal|idk=K")->required();
  deg->add_option("--mesh-level", dlevel)->capture_default_str()->check(CLI::Range(0, 8));
  deg->add_option("--y", dy, "regular value (3 numbers)")->expected(3)->capture_default_str();
  deg->callback([&] {
    action = [&] {
      auto mesh = std::make_shared<const degree::SphereMesh>(degree::icosphere(dlevel));
      manifest["grid"] = {{"mesh_level", dlevel},
                          {"vertices", mesh->vertices.size()},
                          {"triangles", mesh->triangles.size()}};
      const auto f = dmap.rfind("builtin:", 0) == 0 ? degree::builtin_map(mesh, dmap.substr(8))
                                                    : degree::read_map(dmap, mesh);
      const auto di = degree::degree_integral_raw(f);
      const int dr = degree::degree_regular_value(f, {dy[0], dy[1], dy[2]});
      results = {{"degree_integral", di.degree}, {"raw", di.raw}, {"degree_regular_value", dr}};
    };
  });

  // fb-study
  auto* fbs = app.add_subcommand("fb-study", "free-boundary blow-up study at an axis point");
  int fk = 2;
  double flambda = 1.5;
  std::string fphi, fdir = "fb_study";
  pipeline::FbStudyConfig fcfg;
  SolveFlags fflags(1e-18);
  fbs->add_option("--k", fk)->capture_default_str()->check(CLI::Range(1, 64));
  fbs->add_option("--lambda", flambda)->capture_default_str();
  fbs->add_option("--grid", fcfg.grid)->capture_default_str();
  fbs->add_option("--phi-b", fphi);
  fbs->add_option("--out", fdir, "output directory")->capture_default_str();
  fflags.add(fbs);
  fbs->callback([&] {
    action = [&] {
      const auto bd = boundary_data(fk, flambda, fphi);
      fcfg.solve = fflags.config();
      manifest["grid"] = grid_json(AxiGrid::half_disk(fcfg.grid), fcfg.grid);
      manifest["tolerances"] = fflags.to_json();
      const auto rep = pipeline::fb_study(bd, fcfg);
      auto file = [&](const std::string& name) { return outputs.path((fs::path(fdir) / name).string()); };
      const double nan = std::numeric_limits<double>::quiet_NaN();

      std::vector<std::vector<double>> rows;
      for (std::size_t i = 0; i < rep.convergence.energy_history.size(); ++i)
        rows.push_back({double(i), rep.convergence.energy_history[i]});
      io::write_csv(file("energy.csv"), "alternation,energy", rows);
      rows.clear();
      for (std::size_t i = 0; i < rep.order.scales.size(); ++i)
        rows.push_back({rep.order.scales[i], rep.order.sup_values[i]});
      io::write_csv(file("vanishing.csv"), "scale,sup", rows);
      rows.clear();
      for (std::size_t i = 0; i < rep.weiss.scales.size(); ++i)
        rows.push_back({rep.weiss.scales[i], rep.weiss.values[i],
                        i < rep.weiss_fit.corrected.size() ? rep.weiss_fit.corrected[i] : nan});
      io::write_csv(file("weiss.csv"), "scale,value,corrected", rows);
      rows.clear();
      for (std::size_t i = 0; i < rep.rescale_scales.size(); ++i)
        rows.push_back({rep.rescale_scales[i],
                        i == 0 ? 0.0 : i <= rep.successive_distances.size() ? rep.successive_distances[i - 1] : nan});
      io::write_csv(file("rescale.csv"), "scale,sup_distance_to_previous", rows);
      rows.clear();
      for (const auto& r : rep.cones.rays)
        rows.push_back({r.angle * 180.0 / pi, r.cos_latitude, r.matched, r.error_deg, double(r.points)});
      io::write_csv(file("cones.csv"), "angle_deg,cos_latitude,matched_cos_latitude,error_deg,points", rows);

      json ranks = json::array();
      for (const auto& a : rep.axis_ranks)
        ranks.push_back({{"z", a.z}, {"rank", a.rank}, {"singular_values", a.singular_values}});
      json report = {
          {"k", rep.k},
          {"lambda", rep.lambda},
          {"h", rep.h},
          {"converged", rep.convergence.converged},
          {"energy", rep.convergence.energy_history.back()},
          {"singular_points", rep.singular_points},
          {"axis_free_boundary", ranks},
          {"z0", rep.have_point ? json(rep.z0) : json(nullptr)},
          {"vanishing_order",
           {{"slope", rep.order.slope}, {"r2", rep.order.r2}, {"target", 2 * rep.k},
            {"within_window", rep.order_ok}, {"scales", rep.order.scales}}},
          {"weiss",
           {{"curve", to_json(rep.weiss)}, {"C", rep.weiss_fit.C}, {"exponent", 0.5},
            {"corrected", rep.weiss_fit.corrected}, {"monotone", rep.weiss_fit.monotone}}},
          {"blow_up",
           {{"leading_coefficient", rep.leading_coefficient},
            {"normalization", "a s^2k"},
            {"scales", rep.rescale_scales},
            {"successive_sup_distances", rep.successive_distances},
            {"pure_axis_constant", rep.blowup_constant},
            {"pure_axis_constant_k2_over_4", rep.stated_constant}}},
          {"free_boundary_cones",
           {{"smallest_scale", rep.rescale_scales.empty() ? json(nullptr) : json(rep.rescale_scales.back())},
            {"match", to_json(rep.cones)},
            {"within_tolerance", rep.cones_ok}}},
          {"stage_errors", rep.stage_errors}};
      write_json(file("report.json"), report);
      results = {{"vanishing_order", rep.order.slope},
                 {"weiss_monotone", rep.weiss_fit.monotone},
                 {"cones_within_tolerance", rep.cones_ok}};
      if (!rep.convergence.converged) throw NumericalError("fb-study: solver did not converge");
      if (!rep.stage_errors.empty()) throw NumericalError("fb-study: " + rep.stage_errors.front());
    };
  });

  int code = 0;
  std::string error;
  bool parse_failure = false;
  try {
    app.parse(argc, argv);
    if (action) action();
  } catch (const CLI::ParseError& e) {
    const int c = app.exit(e);
    if (c == 0) return 0;  // --help, --version
    code = 1;
    error = e.what();
    parse_failure = true;
  } catch (const InputError& e) {
    code = 1;
    error = e.what();
  } catch (const NumericalError& e) {
    code = 2;
    error = e.what();
  } catch (const std::exception& e) {
    code = 1;
    error = e.what();
  }
  if (!error.empty() && !parse_failure) std::cerr << "error: " << error << '\n';
  // Subcommands seen so far name the manifest, also after a parse failure.
  for (auto* sub : app.get_subcommands()) {
    manifest_name = sub->get_name();
    for (auto* inner : sub->get_subcommands()) manifest_name += "_" + inner->get_name();
  }

  std::string cmdline;
  for (int i = 0; i < argc; ++i) cmdline += (i ? " " : "") + std::string(argv[i]);
  manifest["command_line"] = cmdline;
  try {
    manifest["config"] = app.config_to_str(true, false);
  } catch (const CLI::Error&) {
    // Rejected values fail validation again while being serialized.
    manifest["config"] = nullptr;
  }
  manifest["threads"] = threads;
  manifest["tool_version"] = kVersion;
  manifest["exit_code"] = code;
  if (!error.empty()) manifest["error"] = error;
  if (!results.is_null()) manifest["results"] = results;
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  manifest["wall_time_s"] = wall;
  try {
    const std::string mpath = outputs.path(manifest_name + ".manifest.json");
    manifest["outputs"] = outputs.files();
    write_json(mpath, manifest);
  } catch (const std::exception& e) {
    std::cerr << "error: could not write manifest: " << e.what() << '\n';
  }
  if (code == 0 && !results.is_null()) std::cout << results.dump(2) << '\n';
  return code;
}
