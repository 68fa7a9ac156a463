#include "rmvl/errors.hpp"
#include "rmvl/gr.hpp"

#include "helpers.hpp"

#include <nlohmann/json.hpp>

#include <random>

using namespace rmvl;
using rmvl::test::bitwise_equal;
using rmvl::test::uniform;

namespace {

void silence_mask(RefineNet& net) {
  torch::NoGradGuard guard;
  auto params = net->named_parameters();
  params["mask_head.weight"].zero_();
  params["mask_head.bias"].fill_(-1e4);
}

// Heatmaps must peak at exactly 1 per channel.
torch::Tensor peak_normalized(const torch::Tensor& t) { return t / t.amax({2, 3}, true); }

}  // namespace

TEST(GRArch, Validation) {
  GRArch a = rmvl::test::tiny_gr_arch();
  a.clip_length = 6;
  EXPECT_THROW(a.validate(), ArgumentError);
  a = rmvl::test::tiny_gr_arch();
  a.height = 10;
  EXPECT_THROW(a.validate(), ShapeError);
  a = rmvl::test::tiny_gr_arch();
  EXPECT_EQ(to_json(gr_arch_from_json(to_json(a))), to_json(a));
}

TEST(RefineClip, DefaultSixteenFrameShapes) {
  GRArch a;
  a.height = 32;
  a.width = 32;
  torch::manual_seed(0);
  RefineNet net(a);
  VideoClip coarse(uniform({16, 3, 32, 32}, -1, 1, 1));
  MotionMapSequence maps(torch::zeros({16, 8, 32, 32}));
  auto r = refine_clip(net, coarse, maps);
  EXPECT_EQ(r.clip.frames().sizes(), coarse.frames().sizes());
  EXPECT_EQ(r.residual.mask().sizes(), (std::vector<int64_t>{16, 1, 32, 32}));
}

TEST(RefineClip, ZeroMaskReturnsCoarse) {
  torch::manual_seed(2);
  RefineNet net(rmvl::test::tiny_gr_arch());
  silence_mask(net);
  VideoClip coarse(uniform({4, 3, 8, 8}, -1, 1, 3));
  MotionMapSequence maps(peak_normalized(uniform({4, 2, 8, 8}, 0, 1, 4)));
  auto r = refine_clip(net, coarse, maps);
  EXPECT_EQ(r.residual.mask().abs().max().item<double>(), 0.0);
  EXPECT_TRUE(bitwise_equal(r.clip.frames(), coarse.frames()));
}

TEST(RefineClip, OutputIsComposedResidual) {
  torch::manual_seed(5);
  RefineNet net(rmvl::test::tiny_gr_arch());
  VideoClip coarse(uniform({4, 3, 8, 8}, -1, 1, 6));
  MotionMapSequence maps(peak_normalized(uniform({4, 2, 8, 8}, 0, 1, 7)));
  auto r = refine_clip(net, coarse, maps);
  const auto& m = r.residual.mask();
  EXPECT_TRUE(torch::allclose(r.clip.frames(), m * r.residual.content() + (1 - m) * coarse.frames(), 0, 1e-6));
}

TEST(RefineClip, LengthMismatchIsArgumentError) {
  RefineNet net(rmvl::test::tiny_gr_arch());
  EXPECT_THROW(refine_clip(net, VideoClip(torch::zeros({8, 3, 8, 8})), MotionMapSequence(torch::zeros({8, 2, 8, 8}))),
               ArgumentError);
  EXPECT_THROW(refine_clip(net, VideoClip(torch::zeros({4, 3, 8, 8})), MotionMapSequence(torch::zeros({3, 2, 8, 8}))),
               ArgumentError);
  EXPECT_THROW(net->forward(torch::zeros({1, 4, 3, 8, 8}), torch::zeros({1, 4, 3, 8, 8})), ArgumentError);
}

TEST(RefineNet, ExtremeInputsRespectRanges) {
  torch::manual_seed(8);
  RefineNet net(rmvl::test::tiny_gr_arch());
  torch::NoGradGuard guard;
  auto out = net->forward(torch::full({1, 4, 3, 8, 8}, 1e4), torch::full({1, 4, 2, 8, 8}, -1e4));
  EXPECT_GE(out.mask.min().item<double>(), 0.0);
  EXPECT_LE(out.mask.max().item<double>(), 1.0);
  EXPECT_LE(out.content.abs().max().item<double>(), 1.0);
}

TEST(RefineNet, SingleFramePerturbationReachesOtherFrames) {
  torch::manual_seed(9);
  RefineNet net(rmvl::test::tiny_gr_arch());
  torch::NoGradGuard guard;
  auto coarse = uniform({1, 4, 3, 8, 8}, -1, 1, 10);
  auto maps = uniform({1, 4, 2, 8, 8}, 0, 1, 11);
  auto base = net->forward(coarse, maps).clip;
  auto bumped = coarse.clone();
  bumped[0][1] += 0.5;
  auto out = net->forward(bumped, maps).clip;
  for (int64_t k : {0, 2, 3}) {
    EXPECT_GT((out[0][k] - base[0][k]).abs().max().item<double>(), 0.0) << "frame " << k;
  }
}

TEST(RefineNet, ParameterGradientsMatchFiniteDifferences) {
  torch::manual_seed(12);
  RefineNet net(rmvl::test::tiny_gr_arch());
  net->to(torch::kDouble);
  auto coarse = uniform({1, 4, 3, 8, 8}, -1, 1, 13).to(torch::kDouble);
  auto maps = uniform({1, 4, 2, 8, 8}, 0, 1, 14).to(torch::kDouble);
  auto weights = uniform({1, 4, 3, 8, 8}, -1, 1, 15).to(torch::kDouble);
  auto objective = [&] { return (net->forward(coarse, maps).clip * weights).sum(); };
  auto params = net->parameters();
  net->zero_grad();
  objective().backward();
  std::mt19937_64 rng(16);
  for (int i = 0; i < 20; ++i) {
    auto& p = params[rng() % params.size()];
    const int64_t idx = static_cast<int64_t>(rng() % static_cast<uint64_t>(p.numel()));
    const double analytic = p.grad().view({-1})[idx].item<double>();
    const double numeric =
        rmvl::test::central_difference([&] { return objective().item<double>(); }, p, idx, 1e-6);
    EXPECT_LT(rmvl::test::relative_error(analytic, numeric), 1e-3)
        << "analytic " << analytic << " numeric " << numeric;
  }
}

TEST(ClipVolume, LayoutRoundTrip) {
  auto clip = uniform({2, 4, 3, 8, 8}, -1, 1, 17);
  auto vol = clip_to_volume(clip);
  EXPECT_EQ(vol.sizes(), (std::vector<int64_t>{2, 3, 4, 8, 8}));
  EXPECT_TRUE(torch::equal(vol[1][2][3], clip[1][3][2]));
  EXPECT_TRUE(torch::equal(volume_to_clip(vol), clip));
}
