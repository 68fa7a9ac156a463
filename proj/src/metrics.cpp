#include "rmvl/metrics.hpp"

#include "rmvl/errors.hpp"
#include "rmvl/losses.hpp"

#include <cmath>
#include <sstream>

namespace rmvl {

double mse(const torch::Tensor& a, const torch::Tensor& b) {
  if (!a.sizes().equals(b.sizes())) {
    std::ostringstream os;
    os << "mse: shapes " << a.sizes() << " and " << b.sizes() << " differ";
    throw ShapeError(os.str());
  }
  if (a.numel() == 0) throw ShapeError("mse: empty input");
  torch::NoGradGuard guard;
  auto da = (a.detach().to(torch::kDouble) + 1) / 2;
  auto db = (b.detach().to(torch::kDouble) + 1) / 2;
  return (da - db).square().mean().item<double>();
}

double mse(const Frame& a, const Frame& b) { return mse(a.pixels(), b.pixels()); }
double mse(const VideoClip& a, const VideoClip& b) { return mse(a.frames(), b.frames()); }

double psnr_from_mse(double m) {
  if (!(m >= 0.0)) throw ArgumentError("psnr: mse must be non-negative");
  if (m < kPsnrMseFloor) return kPsnrCap;
  return 10.0 * std::log10(1.0 / m);
}

double psnr(const Frame& a, const Frame& b) { return psnr_from_mse(mse(a, b)); }

FrameEmbedder::FrameEmbedder(std::string tag, uint64_t seed, int64_t dim, Fn fn)
    : tag_(std::move(tag)), seed_(seed), dim_(dim), fn_(std::move(fn)) {
  if (dim_ < 1 || !fn_) throw ArgumentError("FrameEmbedder: needs a positive dimension and a function");
}

FrameEmbedder FrameEmbedder::random_conv(uint64_t seed, int64_t channels, int64_t dim) {
  RandomConvFeatures net(seed, channels, std::vector<int64_t>{32, 64, dim});
  net->to(torch::kDouble);
  auto fn = [net](const torch::Tensor& x) mutable { return net->forward(x); };
  return FrameEmbedder("random-conv", seed, dim, fn);
}

torch::Tensor FrameEmbedder::embed(const torch::Tensor& frames) const {
  if (frames.dim() != 4) throw ShapeError("FrameEmbedder: expected [N, C, H, W]");
  torch::NoGradGuard guard;
  auto out = fn_((frames.detach().to(torch::kDouble) + 1) / 2);
  if (out.dim() != 2 || out.size(0) != frames.size(0) || out.size(1) != dim_) {
    throw ContractViolation("FrameEmbedder: embedding has the wrong shape");
  }
  return out.to(torch::kDouble);
}

torch::Tensor FrameEmbedder::embed(const Frame& frame) const {
  return embed(frame.pixels().unsqueeze(0))[0];
}

double acd_identity(const VideoClip& video, const Frame& ref, const FrameEmbedder& emb) {
  if (video.channels() != ref.channels() || video.height() != ref.height() ||
      video.width() != ref.width()) {
    throw ShapeError("acd_identity: reference frame size differs from the video");
  }
  auto e = emb.embed(video.frames());
  auto r = emb.embed(ref);
  return (e - r.unsqueeze(0)).norm(2, 1).mean().item<double>();
}

double acd_content(const VideoClip& video, const FrameEmbedder& emb) {
  const int64_t K = video.length();
  if (K < 2) return 0.0;
  auto e = emb.embed(video.frames());
  auto d = (e.unsqueeze(0) - e.unsqueeze(1)).norm(2, 2);  // [K, K]
  auto upper = torch::triu(torch::ones({K, K}, torch::kBool), 1);
  return d.masked_select(upper).mean().item<double>();
}

}  // namespace rmvl
