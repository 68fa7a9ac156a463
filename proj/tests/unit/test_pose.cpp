#include "rmvl/errors.hpp"
#include "rmvl/pose.hpp"

#include "helpers.hpp"

#include <cmath>
#include <random>

using namespace rmvl;

TEST(Pose, RejectsVisibleJointOutsideUnitSquare) {
  EXPECT_THROW(Pose({{1.2, 0.5, true}}), ArgumentError);
  EXPECT_NO_THROW(Pose({{1.2, 0.5, false}}));
}

TEST(PoseSequence, CoordsRoundTrip) {
  auto c = rmvl::test::uniform({5, 3, 2}, 0, 1, 4);
  auto seq = PoseSequence::from_coords(c);
  EXPECT_EQ(seq.length(), 5);
  EXPECT_EQ(seq.joints(), 3);
  EXPECT_TRUE(torch::allclose(seq.coords(), c));
  EXPECT_EQ(seq.slice(1, 3).length(), 2);
  EXPECT_THROW(seq.slice(3, 6), ArgumentError);
}

TEST(RenderHeatmaps, PeakAtCenter) {
  auto m = render_heatmaps(Pose({{0.5, 0.5, true}}), 8, 8, 1.0);
  const auto& h = m.heatmaps();
  EXPECT_DOUBLE_EQ(h.max().item<double>(), 1.0);
  EXPECT_DOUBLE_EQ(h[0][4][4].item<double>(), 1.0);
}

TEST(RenderHeatmaps, InvisibleJointIsZero) {
  auto m = render_heatmaps(Pose({{0.5, 0.5, true}, {0.2, 0.3, false}}), 8, 8, 1.0);
  EXPECT_EQ(m.heatmaps()[1].abs().sum().item<double>(), 0.0);
}

TEST(RenderHeatmaps, OnePixelOffsetFollowsGaussian) {
  auto h = render_heatmaps(Pose({{0.5, 0.5, true}}), 8, 8, 1.0).heatmaps();
  const double expected = std::exp(-0.5);
  EXPECT_NEAR(h[0][4][5].item<double>(), expected, 1e-6);
  EXPECT_NEAR(h[0][3][4].item<double>(), expected, 1e-6);
  EXPECT_NEAR(h[0][5][5].item<double>(), std::exp(-1.0), 1e-6);
}

TEST(RenderHeatmaps, NonPositiveSigmaIsArgumentError) {
  Pose p({{0.5, 0.5, true}});
  EXPECT_THROW(render_heatmaps(p, 8, 8, 0.0), ArgumentError);
  EXPECT_THROW(render_heatmaps(p, 8, 8, -1.0), ArgumentError);
}

TEST(RenderHeatmaps, RandomPosesSatisfyInvariantsAndArgmax) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const int64_t H = 8 + trial % 9, W = 8 + (trial * 7) % 13;
    std::vector<Joint> joints;
    for (int j = 0; j < 5; ++j) joints.push_back({u(rng), u(rng), u(rng) < 0.8});
    const Pose pose(joints);
    const double sigma = 0.5 + 2.0 * u(rng);
    MotionMap m = render_heatmaps(pose, H, W, sigma);  // constructor re-checks invariants
    const auto& h = m.heatmaps();
    EXPECT_GE(h.min().item<double>(), 0.0);
    for (int j = 0; j < 5; ++j) {
      if (!joints[static_cast<size_t>(j)].visible) {
        EXPECT_EQ(h[j].abs().max().item<double>(), 0.0);
        continue;
      }
      EXPECT_DOUBLE_EQ(h[j].max().item<double>(), 1.0);
      const auto [row, col] = joint_pixel(joints[static_cast<size_t>(j)], H, W);
      EXPECT_DOUBLE_EQ(h[j][row][col].item<double>(), 1.0);
      // Every other pixel is no closer to the joint, so none exceeds the peak.
      const int64_t argmax = h[j].flatten().argmax().item<int64_t>();
      const double jx = joints[static_cast<size_t>(j)].x * W, jy = joints[static_cast<size_t>(j)].y * H;
      const double d_arg = std::hypot(argmax % W - jx, argmax / W - jy);
      const double d_pix = std::hypot(col - jx, row - jy);
      EXPECT_NEAR(d_arg, d_pix, 1e-9);
    }
  }
}

TEST(RenderHeatmaps, BatchMatchesSingle) {
  auto coords = rmvl::test::uniform({3, 4, 2}, 0, 1, 9);
  auto visible = torch::ones({3, 4}, torch::kBool);
  visible[1][2] = false;
  auto batch = render_heatmaps_batch(coords, visible, 16, 12, 1.5);
  for (int64_t b = 0; b < 3; ++b) {
    std::vector<Joint> joints;
    for (int64_t j = 0; j < 4; ++j) {
      joints.push_back({coords[b][j][0].item<double>(), coords[b][j][1].item<double>(), visible[b][j].item<bool>()});
    }
    auto single = render_heatmaps(Pose(joints), 16, 12, 1.5).heatmaps();
    EXPECT_TRUE(torch::allclose(batch[b], single, 0, 1e-7));
  }
}

TEST(RenderHeatmapSequence, RendersEachPose) {
  PoseSequence seq({Pose({{0.1, 0.1, true}}), Pose({{0.9, 0.9, true}})});
  auto maps = render_heatmap_sequence(seq, 8, 8);
  EXPECT_EQ(maps.length(), 2);
  EXPECT_DOUBLE_EQ(maps.maps()[1][0][7][7].item<double>(), 1.0);
}
