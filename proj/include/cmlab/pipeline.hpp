#pragma once

// Free-boundary study at axis points of a k-axially symmetric minimizer:
// solve, locate singular and axis free-boundary points, then measure the
// vanishing order, the Weiss curve, and the cone structure of rescalings.

#include <cmath>
#include <string>
#include <vector>

#include "cmlab/axisym.hpp"
#include "cmlab/blowup.hpp"
#include "cmlab/diagnostics.hpp"

namespace cmlab::pipeline {

struct FbStudyConfig {
  int grid = 256;
  SolveConfig solve = [] {
    SolveConfig c;
    c.tol = 1e-18;
    return c;
  }();
  double order_top = 16.0;       // largest vanishing-order scale, in h
  int order_count = 6;           // scales order_top h * 2^(-i/2)
  double weiss_min = 2.5;        // smallest Weiss scale, in h
  double rescale_top = 64.0;     // rescaling scales, in h, halved down to
  double rescale_bottom = 8.0;   // rescale_bottom
  double cone_tol = 0.0;         // level for the rescaled positivity set
  double cone_max_deg = 5.0;
  double order_window = 0.5;
};

struct AxisRank {
  double z = 0.0;
  int rank = 0;
  std::array<double, 3> singular_values{};
};

struct FbStudyReport {
  int k = 0;
  double lambda = 0.0;
  double h = 0.0;
  axisym::ConvergenceReport convergence;
  std::vector<double> singular_points;
  std::vector<double> axis_free_boundary;
  std::vector<AxisRank> axis_ranks;
  double z0 = 0.0;
  bool have_point = false;

  diag::VanishingOrderFit order;
  bool order_ok = false;

  diag::ScaleCurve weiss;
  diag::AlmostMonotone weiss_fit;

  double leading_coefficient = 0.0;
  std::vector<double> rescale_scales;
  std::vector<double> successive_distances;
  blowup::ConeMatch cones;
  bool cones_ok = false;

  double blowup_constant = 0.0;     // from the PDE
  double stated_constant = 0.0;     // k^2 / 4
  std::vector<std::string> stage_errors;
};

/// z0: the highest axis point of the exact contact boundary {rho = 1}.
inline FbStudyReport fb_study(const axisym::BoundaryData& bd, const FbStudyConfig& cfg) {
  FbStudyReport rep;
  rep.k = bd.k;
  rep.lambda = bd.lambda;
  auto grid = make_grid(AxiGrid::half_disk(cfg.grid));
  const double h = grid->h();
  rep.h = h;
  auto [s, conv] = axisym::minimize(grid, bd, cfg.solve);
  rep.convergence = conv;

  auto stage = [&](const char* name, auto&& body) {
    try {
      body();
    } catch (const std::exception& e) {
      rep.stage_errors.push_back(std::string(name) + ": " + e.what());
    }
  };

  stage("singular points", [&] { rep.singular_points = axisym::detect_singularities(s, cfg.solve); });
  stage("free boundary", [&] {
    rep.axis_free_boundary = axisym::free_boundary(s, 0.0).axis_points;
    for (double z : rep.axis_free_boundary) {
      AxisRank ar;
      ar.z = z;
      ar.singular_values = axisym::differential_singular_values(s, 0.0, z);
      ar.rank = axisym::branch_rank(s, 0.0, z, rep.singular_points);
      rep.axis_ranks.push_back(ar);
    }
    if (!rep.axis_free_boundary.empty()) {
      rep.z0 = rep.axis_free_boundary.back();
      rep.have_point = true;
    }
  });
  if (!rep.have_point) {
    rep.stage_errors.push_back("free boundary: no axis free-boundary point");
    return rep;
  }
  const double z0 = rep.z0;

  stage("vanishing order", [&] {
    std::vector<double> scales;
    for (int i = 0; i < cfg.order_count; ++i)
      scales.push_back(cfg.order_top * h * std::pow(2.0, -0.5 * i));
    rep.order = diag::vanishing_order(s, z0, scales);
    rep.order_ok = std::abs(rep.order.slope - 2.0 * bd.k) <= cfg.order_window;
  });

  stage("weiss", [&] {
    std::vector<double> scales;
    for (double r = 0.9 * (grid->radius() - std::abs(z0) - h); r >= cfg.weiss_min * h; r *= 0.5)
      scales.push_back(r);
    rep.weiss = diag::weiss_energy(s, z0, scales, bd.k);
    rep.weiss_fit = diag::almost_monotone(rep.weiss, 0.5);
  });

  stage("rescale", [&] {
    rep.leading_coefficient = blowup::leading_coefficient(s, z0);
    std::vector<double> scales;
    for (double m = cfg.rescale_top; m >= cfg.rescale_bottom; m *= 0.5) scales.push_back(m * h);
    const auto seq = blowup::rescale_sequence(s, z0, rep.leading_coefficient, scales);
    rep.rescale_scales = scales;
    for (std::size_t n = 1; n < seq.size(); ++n)
      rep.successive_distances.push_back(blowup::sup_distance(seq[n], seq[n - 1]));
    rep.cones = blowup::fb_cone_match(seq.back(), bd.k, cfg.cone_tol);
    rep.cones_ok = !rep.cones.rays.empty() && rep.cones.max_error_deg() <= cfg.cone_max_deg;
  });

  if (bd.k >= 2)
    stage("blow-up constant", [&] {
      rep.blowup_constant = blowup::homogeneous_blowup(bd.k).c;
      rep.stated_constant = 0.25 * bd.k * bd.k;
    });
  return rep;
}

}  // namespace cmlab::pipeline
