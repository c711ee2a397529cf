#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cmlab/io.hpp"

using namespace cmlab;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() : path(fs::temp_directory_path() / ("cmlab_io_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
                                                 "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name())) {
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const std::string& path, const std::string& text) { std::ofstream(path, std::ios::binary) << text; }

}  // namespace

TEST(Axifld, RoundTripIsLossless) {
  TempDir dir;
  auto g = make_grid(AxiGrid::half_disk(32, 1.5));
  AxiState s{3, ScalarField::sample(g, [](double r, double z) { return 1.0 + std::exp(r) / 3.0 + z * 1e-17; }),
             ScalarField::sample(g, [](double r, double z) { return std::atan2(r, z); })};
  io::write_axifld(dir.file("a.axifld"), s);
  const AxiState t = io::read_axifld(dir.file("a.axifld"));
  EXPECT_EQ(t.k, 3);
  EXPECT_TRUE(t.grid().same_layout(*g));
  EXPECT_EQ(t.rho.values, s.rho.values);
  EXPECT_EQ(t.phi.values, s.phi.values);

  // Writing the read-back state reproduces the bytes.
  io::write_axifld(dir.file("b.axifld"), t);
  EXPECT_EQ(slurp(dir.file("a.axifld")), slurp(dir.file("b.axifld")));
}

TEST(Axifld, HeaderLayout) {
  TempDir dir;
  auto g = make_grid(AxiGrid::half_disk(8));
  io::write_axifld(dir.file("s.axifld"), AxiState{2, ScalarField(g, 1.0), ScalarField(g, 0.5)});
  std::ifstream in(dir.file("s.axifld"));
  std::string first, second;
  std::getline(in, first);
  std::getline(in, second);
  EXPECT_EQ(first, "AXIFLD 1 " + std::to_string(g->nr()) + " " + std::to_string(g->nz()) + " " +
                       io::num(g->h()) + " 2");
  EXPECT_EQ(second, "1 0.5");
  std::size_t lines = 2;
  for (std::string l; std::getline(in, l);) ++lines;
  EXPECT_EQ(lines, g->size() + 1);
}

TEST(Axifld, RejectsBadInput) {
  TempDir dir;
  EXPECT_THROW(io::read_axifld(dir.file("missing.axifld")), InputError);
  spit(dir.file("magic"), "FIELD 1 4 5 0.5 2\n");
  EXPECT_THROW(io::read_axifld(dir.file("magic")), InputError);
  spit(dir.file("version"), "AXIFLD 2 4 5 0.5 2\n");
  EXPECT_THROW(io::read_axifld(dir.file("version")), InputError);
  spit(dir.file("even"), "AXIFLD 1 4 6 0.5 2\n");
  EXPECT_THROW(io::read_axifld(dir.file("even")), InputError);
  spit(dir.file("k0"), "AXIFLD 1 4 5 0.5 0\n");
  EXPECT_THROW(io::read_axifld(dir.file("k0")), InputError);
  spit(dir.file("short"), "AXIFLD 1 3 3 0.5 1\n1 0\n1 0\n");
  EXPECT_THROW(io::read_axifld(dir.file("short")), InputError);
}

TEST(Axifld, ScalarSnapshotStoresOnePlusField) {
  TempDir dir;
  auto g = make_grid(AxiGrid::half_disk(8));
  const ScalarField f = ScalarField::sample(g, [](double r, double z) { return r * r - z; });
  io::write_scalar_axifld(dir.file("f.axifld"), f, 2);
  const AxiState s = io::read_axifld(dir.file("f.axifld"));
  for (std::size_t n = 0; n < f.values.size(); ++n) {
    EXPECT_EQ(s.rho.values[n], 1.0 + f.values[n]);
    EXPECT_EQ(s.phi.values[n], 0.0);
  }
}

TEST(Csv, HeaderRowsAndPrecision) {
  TempDir dir;
  io::write_csv(dir.file("t.csv"), "a,b", {{1.0, 0.1}, {-2.5, 1.0 / 3.0}});
  EXPECT_EQ(slurp(dir.file("t.csv")), "a,b\n1,0.10000000000000001\n-2.5,0.33333333333333331\n");
  EXPECT_EQ(std::stod(io::num(1.0 / 3.0)), 1.0 / 3.0);
  EXPECT_THROW(io::write_csv((fs::path(dir.file("no_such_dir")) / "x.csv").string(), "a", {}), InputError);
}

TEST(BoundaryProfile, ParsesCommentsAndBlankLines) {
  TempDir dir;
  spit(dir.file("p.txt"),
       "# angle phi\n"
       "0 0\n"
       "\n"
       "1.5707963267948966 1.0  # midpoint\n"
       "3.141592653589793 3.141592653589793\n");
  const auto bd = io::read_boundary_profile(dir.file("p.txt"), 2, 1.5);
  EXPECT_EQ(bd.k, 2);
  EXPECT_EQ(bd.lambda, 1.5);
  ASSERT_EQ(bd.angles.size(), 3u);
  EXPECT_EQ(bd.values[1], 1.0);
  EXPECT_EQ(bd.profile_degree(), 1);
  EXPECT_EQ(bd.degree(), 2);
  EXPECT_NEAR(bd.phi_b(0.25 * pi), 0.5, 1e-15);
}

TEST(BoundaryProfile, RejectsMalformedFiles) {
  TempDir dir;
  EXPECT_THROW(io::read_boundary_profile(dir.file("none.txt"), 2, 1.5), InputError);
  spit(dir.file("half.txt"), "0 0\n1.0\n3.141592653589793 3.141592653589793\n");
  EXPECT_THROW(io::read_boundary_profile(dir.file("half.txt"), 2, 1.5), InputError);
  spit(dir.file("order.txt"), "0 0\n2 1\n1 2\n3.141592653589793 3.141592653589793\n");
  EXPECT_THROW(io::read_boundary_profile(dir.file("order.txt"), 2, 1.5), InputError);
  spit(dir.file("pole.txt"), "0 0\n3.141592653589793 1\n");
  EXPECT_THROW(io::read_boundary_profile(dir.file("pole.txt"), 2, 1.5), InputError);
  spit(dir.file("range.txt"), "0 0\n1 4\n3.141592653589793 3.141592653589793\n");
  EXPECT_THROW(io::read_boundary_profile(dir.file("range.txt"), 2, 1.5), InputError);
  spit(dir.file("ok.txt"), "0 0\n3.141592653589793 3.141592653589793\n");
  EXPECT_THROW(io::read_boundary_profile(dir.file("ok.txt"), 2, 0.5), InputError);
  EXPECT_THROW(io::read_boundary_profile(dir.file("ok.txt"), 0, 1.5), InputError);
}
