#include "rmvl/errors.hpp"
#include "rmvl/types.hpp"

#include "helpers.hpp"

using namespace rmvl;

TEST(Frame, AcceptsValidPixels) {
  Frame f(torch::zeros({3, 8, 12}));
  EXPECT_EQ(f.channels(), 3);
  EXPECT_EQ(f.height(), 8);
  EXPECT_EQ(f.width(), 12);
}

TEST(Frame, RejectsOutOfRangeAndNonFinite) {
  EXPECT_THROW(Frame(torch::full({3, 8, 8}, 1.5)), ArgumentError);
  auto t = torch::zeros({3, 8, 8});
  t[0][0][0] = std::numeric_limits<float>::quiet_NaN();
  EXPECT_THROW(Frame{t}, ArgumentError);
}

TEST(Frame, RejectsSmallOrMisshapen) {
  EXPECT_THROW(Frame(torch::zeros({3, 7, 8})), ShapeError);
  EXPECT_THROW(Frame(torch::zeros({8, 8})), ShapeError);
}

TEST(Frame, ConvertsToFloatCpu) {
  Frame f(torch::zeros({3, 8, 8}, torch::kDouble));
  EXPECT_EQ(f.pixels().scalar_type(), torch::kFloat32);
}

TEST(VideoClip, FramesMustMatch) {
  std::vector<Frame> frames{Frame(torch::zeros({3, 8, 8})), Frame(torch::zeros({3, 8, 9}))};
  EXPECT_THROW(VideoClip{frames}, ShapeError);
  EXPECT_THROW(VideoClip(torch::zeros({0, 3, 8, 8})), ShapeError);
  VideoClip ok(std::vector<Frame>{Frame(torch::zeros({3, 8, 8})), Frame(torch::ones({3, 8, 8}))});
  EXPECT_EQ(ok.length(), 2);
  EXPECT_TRUE(torch::equal(ok.frame(1).pixels(), torch::ones({3, 8, 8})));
}

TEST(MotionMap, PeaksMustBeOneOrZero) {
  auto h = torch::zeros({2, 8, 8});
  h[0][3][3] = 1.0f;
  EXPECT_NO_THROW(MotionMap{h});
  h[1][2][2] = 0.5f;
  EXPECT_THROW(MotionMap{h}, ArgumentError);
  EXPECT_THROW(MotionMap(torch::full({1, 8, 8}, -0.1)), ArgumentError);
}

TEST(MotionMapSequence, Indexing) {
  auto h = torch::zeros({3, 2, 8, 8});
  h[1][0][4][4] = 1.0f;
  MotionMapSequence s(h);
  EXPECT_EQ(s.length(), 3);
  EXPECT_EQ(s.map(1).heatmaps().max().item<float>(), 1.0f);
}

TEST(ResidualDecomposition, ChecksRangesAndSizes) {
  EXPECT_NO_THROW(ResidualDecomposition(torch::zeros({1, 8, 8}), torch::zeros({3, 8, 8})));
  EXPECT_THROW(ResidualDecomposition(torch::full({1, 8, 8}, 1.1), torch::zeros({3, 8, 8})), ArgumentError);
  EXPECT_THROW(ResidualDecomposition(torch::zeros({1, 8, 8}), torch::full({3, 8, 8}, -1.1)), ArgumentError);
  EXPECT_THROW(ResidualDecomposition(torch::zeros({2, 8, 8}), torch::zeros({3, 8, 8})), ShapeError);
  EXPECT_THROW(ResidualDecomposition(torch::zeros({1, 8, 8}), torch::zeros({3, 8, 10})), ShapeError);
}

TEST(SpatiotemporalResidual, PerStepAccess) {
  SpatiotemporalResidual r(torch::zeros({2, 1, 8, 8}), torch::ones({2, 3, 8, 8}));
  EXPECT_EQ(r.length(), 2);
  EXPECT_TRUE(torch::equal(r.at(1).content(), torch::ones({3, 8, 8})));
  EXPECT_THROW(SpatiotemporalResidual(torch::zeros({3, 1, 8, 8}), torch::ones({2, 3, 8, 8})), ShapeError);
}
