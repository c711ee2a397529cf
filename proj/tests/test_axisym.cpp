#include <gtest/gtest.h>

#include <cmath>

#include "cmlab/axisym.hpp"

using namespace cmlab;
using namespace cmlab::axisym;

namespace {

SolveConfig converged_cfg() {
  SolveConfig c;
  c.tol = 1e-18;
  return c;
}

AxiState sample_state(int G, int k, auto rho, auto phi) {
  auto g = make_grid(AxiGrid::half_disk(G));
  return {k, ScalarField::sample(g, rho), ScalarField::sample(g, phi)};
}

double polar(double r, double z) { return std::atan2(r, z); }

// One solve shared by the k = 2 tests.
const std::pair<AxiState, ConvergenceReport>& k2_solution() {
  static const auto sol = minimize(make_grid(AxiGrid::half_disk(256)),
                                   BoundaryData::identity(2, 1.5), converged_cfg());
  return sol;
}

}  // namespace

TEST(BoundaryData, Validation) {
  EXPECT_NO_THROW(BoundaryData::identity(2, 1.5));
  EXPECT_THROW(BoundaryData::identity(0, 1.5), InputError);
  EXPECT_THROW(BoundaryData::identity(1, 0.5), InputError);
  EXPECT_THROW(BoundaryData::from_samples(1, 2.0, {0.0, pi}, {0.3, pi}), InputError);
  EXPECT_THROW(BoundaryData::from_samples(1, 2.0, {0.0, 1.0}, {0.0, pi}), InputError);
  const auto bd = BoundaryData::from_samples(2, 2.0, {0.0, 1.0, pi}, {0.0, 2.0, pi});
  EXPECT_DOUBLE_EQ(bd.phi_b(0.5), 1.0);
  EXPECT_EQ(bd.profile_degree(), 1);
  EXPECT_EQ(bd.degree(), 2);
}

TEST(InitState, SatisfiesInvariantsAndTrace) {
  auto g = make_grid(AxiGrid::half_disk(64));
  for (int k : {1, 2, 3}) {
    const auto bd = BoundaryData::from_samples(k, 1.8, {0.0, 1.2, pi}, {0.0, 0.4, pi});
    const AxiState s = init_state(g, bd);
    EXPECT_EQ(validate(s), "");
    for (int j = 0; j < g->nz(); ++j)
      for (int i = 0; i < g->nr(); ++i)
        if (g->kind(i, j) == NodeKind::boundary) {
          EXPECT_DOUBLE_EQ(s.rho(i, j), 1.8);
          EXPECT_NEAR(s.phi(i, j), bd.phi_b(polar(g->r(i), g->z(j))), 1e-12);
        }
  }
  // k = 1, identity angle, lambda = 1 gives the identity-like state.
  const AxiState id = init_state(g, BoundaryData::identity(1, 1.0));
  for (int j = 0; j < g->nz(); ++j)
    for (int i = 1; i < g->nr(); ++i)
      if (g->active(i, j)) {
        EXPECT_EQ(id.rho(i, j), 1.0);
        EXPECT_NEAR(id.phi(i, j), polar(g->r(i), g->z(j)), 1e-12);
      }
}

TEST(RelaxPhi, FixedPoints) {
  AxiState zero = sample_state(32, 2, [](double, double) { return 1.3; },
                               [](double, double) { return 0.0; });
  relax_phi(zero, 0);
  relax_phi(zero, 1);
  for (double v : zero.phi.values) EXPECT_EQ(v, 0.0);

  // phi = pi/2 off the axis: sin(2 phi) = 0, so one colour leaves every node
  // not adjacent to the pinned axis in place.
  AxiState half = sample_state(32, 2, [](double, double) { return 1.0; },
                               [](double r, double) { return r > 0 ? pi / 2 : 0.0; });
  relax_phi(half, 0);
  const AxiGrid& g = half.grid();
  for (int j = 0; j < g.nz(); ++j)
    for (int i = 2; i < g.nr(); ++i)
      if (g.active(i, j)) EXPECT_NEAR(half.phi(i, j), pi / 2, 1e-12) << i << " " << j;
}

TEST(RelaxRho, FixedPointAndClamp) {
  AxiState one = sample_state(32, 1, [](double, double) { return 1.0; },
                              [](double, double) { return pi; });
  relax_rho(one, 0);
  relax_rho(one, 1);
  for (double v : one.rho.values) EXPECT_EQ(v, 1.0);

  AxiState s = init_state(make_grid(AxiGrid::half_disk(32)), BoundaryData::identity(2, 1.5));
  for (int it = 0; it < 20; ++it) {
    relax_rho(s, it % 2, 1.9);
    EXPECT_GE(min_rho(s), 1.0);
  }
}

TEST(Relax, SweepsDoNotIncreaseEnergy) {
  const auto bd = BoundaryData::from_samples(2, 2.0, {0.0, 1.0, pi}, {0.0, 2.5, pi});
  AxiState s = init_state(make_grid(AxiGrid::half_disk(48)), bd);
  double e = discrete_energy(s);
  for (int it = 0; it < 40; ++it) {
    const double omega = it < 20 ? 1.0 : 1.8;
    const auto sp = relax_phi(s, it % 2, omega);
    const double e1 = discrete_energy(s);
    EXPECT_LE(e1, e * (1 + 1e-14));
    EXPECT_NEAR(e - e1, sp.drop, 1e-9 * e);
    const auto sr = relax_rho(s, it % 2, omega);
    const double e2 = discrete_energy(s);
    EXPECT_LE(e2, e1 * (1 + 1e-14));
    EXPECT_NEAR(e1 - e2, sr.drop, 1e-9 * e);
    EXPECT_GE(min_rho(s), 1.0);
    e = e2;
  }
}

TEST(Minimize, DegreeOneReachesEightPi) {
  const auto [s, rep] = minimize(make_grid(AxiGrid::half_disk(128)),
                                 BoundaryData::identity(1, 1.0), converged_cfg());
  EXPECT_TRUE(rep.converged);
  EXPECT_NEAR(total_energy(s) / (8 * pi), 1.0, 0.05);
  EXPECT_NEAR(discrete_energy(s) / (8 * pi), 1.0, 0.05);
}

TEST(Minimize, EnergyHistoryNonIncreasing) {
  const auto& rep = k2_solution().second;
  ASSERT_GE(rep.energy_history.size(), 2u);
  for (std::size_t n = 1; n < rep.energy_history.size(); ++n)
    EXPECT_LE(rep.energy_history[n], rep.energy_history[n - 1] * (1 + 1e-15));
}

TEST(Minimize, LambdaTwoHasBothPhases) {
  SolveConfig c;
  c.tol = 1e-14;
  const auto [s, rep] =
      minimize(make_grid(AxiGrid::half_disk(64)), BoundaryData::identity(2, 2.0), c);
  const AxiGrid& g = s.grid();
  EXPECT_GT(coincidence_count(s), 0u);
  EXPECT_EQ(s.rho(0, g.nearest_row(0.0)), 1.0);
  bool outer_free = true;
  for (int j = 0; j < g.nz(); ++j)
    for (int i = 0; i < g.nr(); ++i)
      if (g.kind(i, j) == NodeKind::interior && std::hypot(g.r(i), g.z(j)) > 0.9)
        outer_free = outer_free && s.rho(i, j) > 1.0;
  EXPECT_TRUE(outer_free);
}

TEST(Minimize, ConstraintAndSubharmonicity) {
  const auto& [s, rep] = k2_solution();
  EXPECT_EQ(validate(s), "");
  EXPECT_GE(min_rho(s), 1.0);
  const AxiGrid& g = s.grid();
  ScalarField excess = s.rho;
  for (double& v : excess.values) v -= 1.0;
  const ScalarField lap = laplacian_cyl(excess);
  for (int j = 0; j < g.nz(); ++j)
    for (int i = 0; i < g.nr(); ++i)
      if (g.kind(i, j) == NodeKind::interior) EXPECT_GE(lap(i, j), -10.0 * g.h()) << i << " " << j;
}

TEST(Minimize, NonConvergenceIsReportedNotThrown) {
  SolveConfig c;
  c.max_sweeps = 2;
  c.tol = 1e-30;
  const auto [s, rep] =
      minimize(make_grid(AxiGrid::half_disk(32)), BoundaryData::identity(2, 1.5), c);
  EXPECT_FALSE(rep.converged);
  EXPECT_EQ(validate(s), "");
}

TEST(Minimize, ResidualsDecreaseUnderRefinement) {
  std::vector<double> phi, rho;
  for (int G : {64, 128}) {
    const auto rep = minimize(make_grid(AxiGrid::half_disk(G)), BoundaryData::identity(2, 1.5),
                              converged_cfg())
                         .second;
    phi.push_back(rep.residuals.phi_l2);
    rho.push_back(rep.residuals.rho_l2);
  }
  phi.push_back(k2_solution().second.residuals.phi_l2);
  rho.push_back(k2_solution().second.residuals.rho_l2);
  EXPECT_LT(phi[2], phi[1]);
  EXPECT_LT(phi[1], phi[0]);
  EXPECT_LT(rho[2], rho[1]);
  EXPECT_LT(rho[1], rho[0]);
}

TEST(FreeBoundary, ConstantAboveOneIsEmpty) {
  const AxiState s = sample_state(32, 1, [](double, double) { return 1.5; },
                                  [](double, double) { return 0.0; });
  EXPECT_TRUE(free_boundary(s, 1e-9).empty());
}

TEST(FreeBoundary, CircleOfConstructedField) {
  const double c = 2.0, r0 = 0.5;
  auto rho = [&](double r, double z) { return std::max(1.0, c * (r * r + z * z) + 1.0 - c * r0 * r0); };
  const AxiState s = sample_state(64, 1, rho, [](double, double) { return 0.0; });
  const double tol = 1e-9;
  const FreeBoundary fb = free_boundary(s, tol);
  ASSERT_GT(fb.point_count(), 10u);
  const double h = s.grid().h();
  for (const auto& line : fb.contour)
    for (const auto& p : line) {
      EXPECT_NEAR(std::hypot(p[0], p[1]), r0, h);
      // |rho - 1 - tol| at the point is bounded by the Lipschitz constant times h.
      EXPECT_LE(std::abs(rho(p[0], p[1]) - 1.0 - tol), 4.0 * c * h);
    }
  ASSERT_EQ(fb.axis_points.size(), 2u);
  EXPECT_NEAR(fb.axis_points[0], -r0, h);
  EXPECT_NEAR(fb.axis_points[1], r0, h);
}

TEST(DetectSingularities, ConstantStateHasNone) {
  const AxiState s = sample_state(64, 1, [](double, double) { return 1.2; },
                                  [](double, double) { return 0.0; });
  EXPECT_TRUE(detect_singularities(s, SolveConfig{}).empty());
}

TEST(DetectSingularities, IdentityStateAtOrigin) {
  auto g = make_grid(AxiGrid::half_disk(64));
  AxiState s = init_state(g, BoundaryData::identity(1, 1.0));
  const auto pts = detect_singularities(s, SolveConfig{});
  ASSERT_EQ(pts.size(), 1u);
  EXPECT_NEAR(pts[0], 0.0, g->h());
}

TEST(DetectSingularities, PointsAreSeparated) {
  // Two pole flips on the axis: phi = 0 above 0.3, pi between, 0 below -0.3.
  auto g = make_grid(AxiGrid::half_disk(128));
  const auto bd = BoundaryData::from_samples(1, 1.0, {0.0, 1.2, 1.94, pi}, {0.0, pi, pi, 0.0});
  const auto sol = minimize(g, bd, converged_cfg()).first;
  const auto pts = detect_singularities(sol, SolveConfig{});
  for (std::size_t n = 1; n < pts.size(); ++n) EXPECT_GT(pts[n] - pts[n - 1], 4.0 * g->h());
}

TEST(BranchRank, ConstantStateIsRankZero) {
  const AxiState s = sample_state(64, 2, [](double, double) { return 1.4; },
                                  [](double, double) { return 0.0; });
  for (double z : {-0.5, 0.0, 0.3}) {
    EXPECT_EQ(branch_rank(s, 0.0, z), 0);
    EXPECT_EQ(branch_rank(s, 0.4, z), 0);
  }
}

TEST(BranchRank, RadialProjectionHasRankTwo) {
  // x / |x| is constant along rays, so its differential has rank 2.
  const AxiState s = sample_state(128, 1, [](double, double) { return 1.0; }, polar);
  EXPECT_EQ(branch_rank(s, 0.4, 0.3), 2);
  EXPECT_EQ(branch_rank(s, 0.2, -0.5), 2);
}

TEST(BranchRank, RadialStretchHasRankThree) {
  const AxiState s = sample_state(128, 1, [](double r, double z) { return 1.0 + r * r + z * z; },
                                  polar);
  EXPECT_EQ(branch_rank(s, 0.4, 0.3), 3);
  EXPECT_EQ(branch_rank(s, 0.2, -0.5), 3);
}

TEST(BranchRank, RejectsPointsInSingularSet) {
  const AxiState s = sample_state(64, 1, [](double, double) { return 1.0; }, polar);
  EXPECT_THROW(branch_rank(s, 0.0, 0.0, {0.0}), InputError);
}

TEST(BranchRank, AxisFreeBoundaryPointOfK2Solve) {
  const auto& s = k2_solution().first;
  const auto fb = free_boundary(s, 0.0);
  const auto singular = detect_singularities(s, converged_cfg());
  ASSERT_FALSE(fb.axis_points.empty());
  for (double z : fb.axis_points) EXPECT_EQ(branch_rank(s, 0.0, z, singular), 0) << z;
}

TEST(BranchRank, AxisDifferentialVanishesFasterThanH) {
  // Largest singular value over h at the upper axis free-boundary point.
  std::vector<double> ratio;
  for (int G : {64, 128}) {
    const auto s = minimize(make_grid(AxiGrid::half_disk(G)), BoundaryData::identity(2, 1.5),
                            converged_cfg())
                       .first;
    const double z = free_boundary(s, 0.0).axis_points.back();
    ratio.push_back(differential_singular_values(s, 0.0, z)[0] / s.grid().h());
  }
  const auto& s = k2_solution().first;
  const double z = free_boundary(s, 0.0).axis_points.back();
  ratio.push_back(differential_singular_values(s, 0.0, z)[0] / s.grid().h());
  EXPECT_LT(ratio[1], ratio[0]);
  EXPECT_LT(ratio[2], ratio[1]);
  EXPECT_LT(ratio[2], 1.0);
}

TEST(NormalizedEnergy, NondecreasingOnConvergedState) {
  const auto& s = k2_solution().first;
  const double h = s.grid().h();
  for (double z0 : {0.0, 0.2, -0.3}) {
    double prev = 0.0;
    for (double r = 4 * h; r <= 0.6; r *= 1.25) {
      const double e = normalized_energy(s, z0, r);
      EXPECT_GE(e, prev - 10 * h) << z0 << " " << r;
      prev = e;
    }
  }
}
