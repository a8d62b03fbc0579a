#include "support.hpp"

#include <gtest/gtest.h>

using namespace elastoray;
using namespace testing_support;

namespace {

BoundaryCovector north(double tau, const Vec3& xi = Vec3(1, 0, 0)) {
  return make_boundary_covector(Domain::unit_ball(), 0.0, Vec3(0, 0, 1), tau, xi);
}

auto shear_hyperbolic = [](const RegionLabel& l, const BoundaryCovector& g) {
  return l.S == Region::Hyperbolic && g.xi.norm() > 1e-3 * std::abs(g.tau);
};

void expect_projector_algebra(const PolarizationFrame& f, double tol) {
  CMat6 sum = CMat6::Zero();
  for (const auto& a : f.blocks) {
    sum += a.projector;
    EXPECT_LT(spectral_norm(a.projector * a.projector - a.projector), tol) << a.name;
    for (const auto& b : f.blocks)
      if (&a != &b) EXPECT_LT(spectral_norm(a.projector * b.projector), tol) << a.name << b.name;
  }
  EXPECT_LT(spectral_norm(sum - CMat6::Identity()), tol);
}

}  // namespace

TEST(Frame, HyperbolicRanks) {
  const PolarizationFrame f = polarization_frame(homogeneous(), north(2.0));
  ASSERT_EQ(f.blocks.size(), 4u);
  const std::vector<std::pair<std::string, int>> expected{{"S+", 2}, {"S-", 2}, {"P+", 1}, {"P-", 1}};
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(f.blocks[i].name, expected[i].first);
    EXPECT_EQ(f.blocks[i].rank, expected[i].second);
  }
  expect_projector_algebra(f, 1e-12);
  EXPECT_DOUBLE_EQ(f.e, std::sqrt(5.0));
}

TEST(Frame, MixedRanks) {
  const PolarizationFrame f = polarization_frame(homogeneous(), north(1.5));
  ASSERT_EQ(f.blocks.size(), 3u);
  EXPECT_EQ(f.blocks[2].name, "P");
  EXPECT_EQ(f.blocks[0].rank, 2);
  EXPECT_EQ(f.blocks[1].rank, 2);
  EXPECT_EQ(f.blocks[2].rank, 2);
  expect_projector_algebra(f, 1e-12);
}

TEST(Frame, EllipticShearRejected) {
  try {
    polarization_frame(homogeneous(), north(0.5));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::FrameDegenerate);
  }
}

TEST(Frame, NearGlancingConditionLimit) {
  // just above the P-glancing frequency sqrt(3) the P columns nearly coincide
  const BoundaryCovector g = north(std::sqrt(3.0) * (1 + 1e-9));
  const double far = polarization_frame(homogeneous(), north(2.0)).condition;
  const double near = polarization_frame(homogeneous(), g).condition;
  EXPECT_GT(near, 1e3 * far);
  try {
    polarization_frame(homogeneous(), g, 10.0 * far);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NearDegenerateFrame);
  }
}

TEST(Frame, ShearHorizontalVectorInShearBlocks) {
  const Medium m = homogeneous();
  const BoundaryCovector g = north(2.0);
  const PolarizationFrame f = polarization_frame(m, g);
  const CharRoots r = char_roots(m, g);
  for (const auto& [name, xi] : {std::pair{"S+", r.S.xi}, std::pair{"S-", r.S.xi_backward}}) {
    CVec6 v;
    v.head<3>() = f.e * CVec3(0, 1, 0);
    v.tail<3>() = adot(xi, CVec3(g.nu.cast<cplx>())) * CVec3(0, 1, 0);
    EXPECT_LT((f.block(name).projector * v - v).norm(), 1e-12 * v.norm()) << name;
  }
}

TEST(Frame, BasisColumnsLieInKernels) {
  for (const Medium& m : {constant_stress(), potential_stress()}) {
    for (const auto& g : sample_covectors(m, 50, 8, shear_hyperbolic)) {
      const PolarizationFrame f = polarization_frame(m, g);
      const CharRoots& r = f.roots;
      const std::vector<CVec3> xis{r.S.xi, r.S.xi, r.S.xi_backward, r.S.xi_backward, r.P.xi, r.P.xi_backward};
      for (int c = 0; c < 6; ++c) {
        const CVec3 a = f.basis.col(c).head<3>() / f.e;
        EXPECT_LT((p_direct(m, g.x, g.tau, xis[c]) * a).norm(), 1e-10 * (g.tau * g.tau + g.xi.squaredNorm()));
        const CVec3 traction = traction_symbol(m, g.x, xis[c]) * a;
        EXPECT_LT((f.basis.col(c).tail<3>() - traction).norm(), 1e-12 * std::max(1.0, traction.norm()));
      }
      expect_projector_algebra(f, 1e-10);
    }
  }
}

TEST(Mute, HandValues) {
  EXPECT_TRUE(mute_symbol(north(1.0)).isApprox(Mat3(Vec3(0, 1, 0).asDiagonal())));
  const Mat3 m = mute_symbol(north(1.0, Vec3(1, 1, 0) / std::sqrt(2.0)));
  Mat3 expected;
  expected << 0.5, -0.5, 0, -0.5, 0.5, 0, 0, 0, 0;
  EXPECT_TRUE(m.isApprox(expected, 1e-15));
  EXPECT_TRUE((m * m).isApprox(m));
  try {
    mute_symbol(north(1.0, Vec3::Zero()));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateMuting);
  }
}

TEST(Mute, AnnihilatesCompressionalPolarization) {
  EXPECT_LT(muting_annihilation_check(homogeneous(), north(2.0)), 1e-12);
  EXPECT_LT(muting_annihilation_check(homogeneous(), north(1.5)), 1e-12);
  for (const Medium& m : {homogeneous(), constant_stress(), potential_stress(), gaussian_bump()})
    for (const auto& g : sample_covectors(m, 100, 10, shear_hyperbolic))
      EXPECT_LT(muting_annihilation_check(m, g), 1e-10);
}

TEST(Mute, PerturbedMuteIsDetected) {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> n01;
  for (const Medium& m : {homogeneous(), constant_stress()}) {
    for (const auto& g : sample_covectors(m, 40, 11, shear_hyperbolic)) {
      Mat3 d;
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) d(i, j) = n01(rng);
      d = (d + d.transpose()).eval();
      d /= d.norm();
      const PolarizationFrame f = polarization_frame(m, g);
      EXPECT_GT(muting_residual(f, mute_symbol(g) + 0.1 * d), 1e-2);
    }
  }
}

TEST(Mute, DNPreservesMutedSubspace) {
  for (const Medium& m : {homogeneous(), constant_stress(), potential_stress()}) {
    for (const auto& g : sample_covectors(m, 50, 13, shear_hyperbolic)) {
      const CMat3 mm = mute_symbol(g).cast<cplx>();
      const CMat3 dn = dn_symbol(m, g).value;
      EXPECT_LT((CMat3(CMat3::Identity() - mm) * dn * mm).norm(), 1e-10 * std::max(1.0, dn.norm()));
    }
  }
}
