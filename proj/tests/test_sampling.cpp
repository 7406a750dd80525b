#include <gtest/gtest.h>

#include "seir_pinn/sampling.hpp"

using namespace seir;

namespace {

bool same_points(const std::vector<SpaceTimePoint>& a, const std::vector<SpaceTimePoint>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i].t != b[i].t || a[i].x != b[i].x || a[i].y != b[i].y) return false;
  return true;
}

SamplingConfig small() {
  SamplingConfig sc;
  sc.n_interior = 400;
  sc.n_initial = 50;
  sc.n_boundary = 40;
  sc.probe_t = 8;
  sc.probe_x = 8;
  sc.probe_y = 8;
  return sc;
}

ResidualMap point_mass(const DomainSpec& d, const SamplingConfig& sc, std::size_t cell) {
  ResidualMap m = bin_residuals(d, sc, {}, {});
  std::fill(m.cells.begin(), m.cells.end(), 0.0);
  m.cells[cell] = 3.0;
  return m;
}

}  // namespace

TEST(Sampling, PointsLieInTheDomain) {
  for (int dim : {1, 2}) {
    DomainSpec d;
    d.dim = dim;
    d.Ly = 0.7;
    const auto b = sample_collocation(d, small(), 3);
    ASSERT_EQ(b.interior.size(), 400u);
    ASSERT_EQ(b.initial.size(), 50u);
    ASSERT_EQ(b.boundary.size(), 40u);
    for (const auto& p : b.interior) {
      EXPECT_TRUE(p.t >= 0 && p.t <= d.T && p.x >= 0 && p.x <= d.Lx);
      if (dim == 2) EXPECT_TRUE(p.y >= 0 && p.y <= d.Ly);
      else EXPECT_EQ(p.y, 0.0);
    }
    for (const auto& p : b.initial) EXPECT_EQ(p.t, 0.0);
    std::array<int, 4> per_wall{};
    for (const auto& bp : b.boundary) {
      ++per_wall[static_cast<int>(bp.wall)];
      switch (bp.wall) {
        case Wall::XMin: EXPECT_EQ(bp.p.x, 0.0); break;
        case Wall::XMax: EXPECT_EQ(bp.p.x, d.Lx); break;
        case Wall::YMin: EXPECT_EQ(bp.p.y, 0.0); break;
        case Wall::YMax: EXPECT_EQ(bp.p.y, d.Ly); break;
      }
    }
    if (dim == 1) {
      EXPECT_EQ(per_wall[0], 20);
      EXPECT_EQ(per_wall[2], 0);
    } else {
      for (int w : per_wall) EXPECT_EQ(w, 10);
    }
  }
}

TEST(Sampling, NoMapMeansUniform) {
  DomainSpec d;
  const auto a = sample_collocation(d, small(), 9);
  const auto b = sample_collocation(d, small(), 9, nullptr);
  EXPECT_TRUE(same_points(a.interior, b.interior));
  const auto c = sample_collocation(d, small(), 10);
  EXPECT_FALSE(same_points(a.interior, c.interior));
}

TEST(Sampling, ZeroExponentIgnoresTheMap) {
  DomainSpec d;
  SamplingConfig sc = small();
  sc.alpha = 0.0;
  const ResidualMap m = point_mass(d, sc, 5);
  EXPECT_TRUE(same_points(sample_collocation(d, sc, 4, &m).interior, sample_collocation(d, sc, 4).interior));
}

TEST(Sampling, PointMassCellReceivesEveryAdaptivePoint) {
  for (int dim : {1, 2}) {
    DomainSpec d;
    d.dim = dim;
    SamplingConfig sc = small();
    sc.rho = 0.0;
    const std::size_t cell = dim == 1 ? 19 : 300;
    const ResidualMap m = point_mass(d, sc, cell);
    const auto b = sample_collocation(d, sc, 6, &m);
    for (const auto& p : b.interior) EXPECT_EQ(m.cell_of(d, p), cell);
  }
}

TEST(Sampling, UniformShareFollowsRho) {
  DomainSpec d;
  SamplingConfig sc = small();
  sc.rho = 0.25;
  const ResidualMap m = point_mass(d, sc, 0);
  const auto b = sample_collocation(d, sc, 8, &m);
  int outside = 0;
  for (const auto& p : b.interior) outside += m.cell_of(d, p) != 0;
  // Only uniform draws can leave the weighted cell; 100 of them, each
  // outside with probability 63/64.
  EXPECT_LE(outside, 100);
  EXPECT_GE(outside, 90);
}

TEST(Sampling, DegenerateMapFallsBackToUniform) {
  DomainSpec d;
  SamplingConfig sc = small();
  ResidualMap m = point_mass(d, sc, 0);
  std::fill(m.cells.begin(), m.cells.end(), 0.0);
  EXPECT_TRUE(same_points(sample_collocation(d, sc, 2, &m).interior, sample_collocation(d, sc, 2).interior));
  m.cells[3] = std::nan("");
  EXPECT_TRUE(same_points(sample_collocation(d, sc, 2, &m).interior, sample_collocation(d, sc, 2).interior));
}

TEST(ResidualBinning, CellMeansAndFill) {
  DomainSpec d;
  SamplingConfig sc = small();
  sc.probe_t = 2;
  sc.probe_x = 2;
  const std::vector<SpaceTimePoint> pts{{0.1, 0.1, 0}, {0.2, 0.2, 0}, {4.0, 0.9, 0}};
  const auto m = bin_residuals(d, sc, pts, {1.0, 3.0, 5.0});
  ASSERT_EQ(m.cells.size(), 4u);
  EXPECT_EQ(m.cells[0], 2.0);  // (t low, x low)
  EXPECT_EQ(m.cells[3], 5.0);  // (t high, x high)
  EXPECT_EQ(m.cells[1], 3.0);  // empty: overall mean
  EXPECT_EQ(m.cell_of(d, {d.T, d.Lx, 0}), 3u);
}

TEST(Sampling, RejectsBadConfig) {
  DomainSpec d;
  SamplingConfig sc;
  sc.rho = 1.5;
  EXPECT_THROW(sample_collocation(d, sc, 1), InvalidInput);
  sc = SamplingConfig{};
  sc.n_interior = 0;
  EXPECT_THROW(sample_collocation(d, sc, 1), InvalidInput);
}
