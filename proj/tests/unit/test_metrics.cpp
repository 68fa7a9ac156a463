#include "rmvl/errors.hpp"
#include "rmvl/metrics.hpp"

#include "helpers.hpp"

#include <cmath>

using namespace rmvl;
using rmvl::test::uniform;

namespace {

// Distance between two frames under the embedder, computed directly.
double dist(const FrameEmbedder& e, const torch::Tensor& a, const torch::Tensor& b) {
  return (e.embed(Frame(a)) - e.embed(Frame(b))).norm().item<double>();
}

FrameEmbedder small_embedder() { return FrameEmbedder::random_conv(0xACD, 3, 16); }

}  // namespace

TEST(Mse, Examples) {
  auto a = uniform({3, 8, 8}, -1, 1, 1);
  EXPECT_EQ(mse(Frame(a), Frame(a)), 0.0);
  // Internal values 0 and 0.2 are 0.5 and 0.6 on the [0, 1] scale.
  EXPECT_NEAR(mse(Frame(torch::zeros({3, 8, 8})), Frame(torch::full({3, 8, 8}, 0.2))), 0.01, 1e-9);
}

TEST(Mse, RandomPairMatchesElementwiseOracle) {
  auto a = uniform({2, 2}, -1, 1, 2), b = uniform({2, 2}, -1, 1, 3);
  auto aa = a.accessor<float, 2>(), ba = b.accessor<float, 2>();
  double s = 0.0;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      const double d = (static_cast<double>(aa[i][j]) + 1) / 2 - (static_cast<double>(ba[i][j]) + 1) / 2;
      s += d * d;
    }
  EXPECT_NEAR(mse(a, b), s / 4, 1e-12);
}

TEST(Mse, ClipsAndShapeErrors) {
  VideoClip a(uniform({3, 3, 8, 8}, -1, 1, 4)), b(uniform({3, 3, 8, 8}, -1, 1, 5));
  double per_frame = 0.0;
  for (int64_t t = 0; t < 3; ++t) per_frame += mse(a.frame(t), b.frame(t)) / 3;
  EXPECT_NEAR(mse(a, b), per_frame, 1e-12);
  EXPECT_THROW(mse(torch::zeros({2, 2}), torch::zeros({2, 3})), ShapeError);
  EXPECT_THROW(mse(Frame(torch::zeros({3, 8, 8})), Frame(torch::zeros({3, 8, 9}))), ShapeError);
}

TEST(Psnr, Examples) {
  auto a = Frame(uniform({3, 8, 8}, -1, 1, 6));
  EXPECT_EQ(psnr(a, a), 100.0);
  EXPECT_NEAR(psnr_from_mse(0.01), 20.0, 1e-9);
  EXPECT_EQ(psnr_from_mse(1.0), 0.0);
  EXPECT_EQ(psnr_from_mse(0.0), kPsnrCap);
  EXPECT_THROW(psnr_from_mse(-0.1), ArgumentError);
  EXPECT_NEAR(psnr(Frame(torch::zeros({3, 8, 8})), Frame(torch::full({3, 8, 8}, 0.2))), 20.0, 1e-6);
}

TEST(Psnr, StrictlyDecreasingInMse) {
  double prev = psnr_from_mse(1e-10);
  for (double m = 2e-10; m <= 1.0; m *= 1.7) {
    const double cur = psnr_from_mse(m);
    EXPECT_LT(cur, prev) << m;
    prev = cur;
  }
}

TEST(FrameEmbedder, DeterministicAndFinite) {
  auto e = small_embedder();
  auto f = Frame(uniform({3, 16, 16}, -1, 1, 7));
  auto v = e.embed(f);
  EXPECT_EQ(v.sizes(), (std::vector<int64_t>{16}));
  EXPECT_TRUE(torch::equal(v, small_embedder().embed(f)));
  EXPECT_TRUE(torch::isfinite(v).all().item<bool>());
  EXPECT_EQ(FrameEmbedder::random_conv().dim(), 128);
  EXPECT_THROW(e.embed(torch::zeros({3, 16, 16})), ShapeError);
}

TEST(AcdIdentity, Examples) {
  auto e = small_embedder();
  auto ref = uniform({3, 16, 16}, -1, 1, 8);
  EXPECT_EQ(acd_identity(VideoClip(ref.unsqueeze(0).repeat({4, 1, 1, 1})), Frame(ref), e), 0.0);
  auto other = uniform({3, 16, 16}, -1, 1, 9);
  EXPECT_NEAR(acd_identity(VideoClip(other.unsqueeze(0)), Frame(ref), e), dist(e, other, ref), 1e-9);
  auto clip = uniform({3, 3, 16, 16}, -1, 1, 10);
  double oracle = 0.0;
  for (int64_t t = 0; t < 3; ++t) oracle += dist(e, clip[t], ref) / 3;
  EXPECT_NEAR(acd_identity(VideoClip(clip), Frame(ref), e), oracle, 1e-9);
}

TEST(AcdContent, Examples) {
  auto e = small_embedder();
  auto f = uniform({3, 16, 16}, -1, 1, 11);
  EXPECT_EQ(acd_content(VideoClip(f.unsqueeze(0).repeat({5, 1, 1, 1})), e), 0.0);
  EXPECT_EQ(acd_content(VideoClip(f.unsqueeze(0)), e), 0.0);
  auto two = uniform({2, 3, 16, 16}, -1, 1, 12);
  EXPECT_NEAR(acd_content(VideoClip(two), e), dist(e, two[0], two[1]), 1e-9);
  auto four = uniform({4, 3, 16, 16}, -1, 1, 13);
  double sum = 0.0;
  int pairs = 0;
  for (int64_t i = 0; i < 4; ++i)
    for (int64_t j = i + 1; j < 4; ++j) {
      sum += dist(e, four[i], four[j]);
      ++pairs;
    }
  EXPECT_EQ(pairs, 6);
  EXPECT_NEAR(acd_content(VideoClip(four), e), sum / 6, 1e-9);
}

TEST(Acd, FrameOrderInvariantAndNonNegative) {
  auto e = small_embedder();
  for (uint64_t s = 0; s < 10; ++s) {
    auto clip = uniform({5, 3, 16, 16}, -1, 1, 100 + s);
    auto ref = Frame(uniform({3, 16, 16}, -1, 1, 200 + s));
    auto perm = torch::randperm(5, torch::kLong);
    VideoClip a(clip), b(clip.index_select(0, perm));
    const double ia = acd_identity(a, ref, e), ib = acd_identity(b, ref, e);
    const double ca = acd_content(a, e), cb = acd_content(b, e);
    EXPECT_NEAR(ia, ib, 1e-9);
    EXPECT_NEAR(ca, cb, 1e-9);
    EXPECT_GT(ia, 0.0);
    EXPECT_GT(ca, 0.0);
  }
}
