#include "rmvl/gr.hpp"

#include "rmvl/errors.hpp"
#include "rmvl/residual.hpp"

#include <nlohmann/json.hpp>

#include <sstream>

namespace F = torch::nn::functional;

namespace rmvl {
namespace {

torch::Tensor lrelu(const torch::Tensor& x) {
  return F::leaky_relu(x, F::LeakyReLUFuncOptions().negative_slope(0.2));
}

torch::nn::Conv3d conv3(int64_t in, int64_t out) {
  return torch::nn::Conv3d(torch::nn::Conv3dOptions(in, out, 3).padding(1));
}

torch::nn::Conv3d down3(int64_t in, int64_t out) {
  return torch::nn::Conv3d(torch::nn::Conv3dOptions(in, out, 4).stride(2).padding(1));
}

torch::nn::ConvTranspose3d up3(int64_t in, int64_t out) {
  return torch::nn::ConvTranspose3d(torch::nn::ConvTranspose3dOptions(in, out, 4).stride(2).padding(1));
}

}  // namespace

void GRArch::validate() const {
  if (clip_length < 4 || clip_length % 4 != 0) {
    throw ArgumentError("GRArch: clip length must be a positive multiple of 4");
  }
  if (height % 4 != 0 || width % 4 != 0 || height < 4 || width < 4) {
    throw ShapeError("GRArch: spatial size must be divisible by 4");
  }
  if (base_width < 1 || image_channels < 1 || joints < 1) {
    throw ArgumentError("GRArch: bad channel counts");
  }
}

nlohmann::json to_json(const GRArch& a) {
  return {{"clip_length", a.clip_length}, {"height", a.height},
          {"width", a.width},             {"image_channels", a.image_channels},
          {"joints", a.joints},           {"base_width", a.base_width}};
}

GRArch gr_arch_from_json(const nlohmann::json& j) {
  GRArch a;
  a.clip_length = j.at("clip_length").get<int64_t>();
  a.height = j.at("height").get<int64_t>();
  a.width = j.at("width").get<int64_t>();
  a.image_channels = j.at("image_channels").get<int64_t>();
  a.joints = j.at("joints").get<int64_t>();
  a.base_width = j.at("base_width").get<int64_t>();
  a.validate();
  return a;
}

torch::Tensor clip_to_volume(const torch::Tensor& clip) { return clip.permute({0, 2, 1, 3, 4}); }
torch::Tensor volume_to_clip(const torch::Tensor& volume) { return volume.permute({0, 2, 1, 3, 4}); }

RefineNetImpl::RefineNetImpl(const GRArch& arch) : arch_(arch) {
  arch_.validate();
  const int64_t in = arch.image_channels + arch.joints;
  const int64_t w0 = arch.base_width, w1 = 2 * w0, w2 = 4 * w0;
  enc0_ = register_module("enc0", conv3(in, w0));
  enc1_ = register_module("enc1", down3(w0, w1));
  enc2_ = register_module("enc2", down3(w1, w2));
  dec1_ = register_module("dec1", up3(w2, w1));
  dec0_ = register_module("dec0", up3(2 * w1, w0));
  mask_head_ = register_module("mask_head", conv3(2 * w0, 1));
  content_head_ = register_module("content_head", conv3(2 * w0, arch.image_channels));
}

GROutput RefineNetImpl::forward(const torch::Tensor& coarse, const torch::Tensor& maps) {
  auto check = [&](const torch::Tensor& t, int64_t channels, const char* what) {
    if (t.dim() != 5 || t.size(1) != arch_.clip_length || t.size(2) != channels ||
        t.size(3) != arch_.height || t.size(4) != arch_.width) {
      std::ostringstream os;
      os << "RefineNet: " << what << " has shape " << t.sizes() << ", expected [B, "
         << arch_.clip_length << ", " << channels << ", " << arch_.height << ", " << arch_.width << "]";
      throw ArgumentError(os.str());
    }
  };
  check(coarse, arch_.image_channels, "coarse clip");
  check(maps, arch_.joints, "motion maps");
  if (coarse.size(0) != maps.size(0)) throw ArgumentError("RefineNet: batch sizes differ");

  auto x = clip_to_volume(torch::cat({coarse, maps}, 2));
  auto e0 = lrelu(enc0_->forward(x));
  auto e1 = lrelu(enc1_->forward(e0));
  auto e2 = lrelu(enc2_->forward(e1));
  auto d1 = torch::cat({lrelu(dec1_->forward(e2)), e1}, 1);
  auto d0 = torch::cat({lrelu(dec0_->forward(d1)), e0}, 1);
  GROutput out;
  out.mask = volume_to_clip(torch::sigmoid(mask_head_->forward(d0)));
  out.content = volume_to_clip(torch::tanh(content_head_->forward(d0)));
  out.clip = compose_residual(coarse, out.mask, out.content);
  return out;
}

RefineResult refine_clip(RefineNet& net, const VideoClip& coarse, const MotionMapSequence& maps) {
  if (coarse.length() != net->arch().clip_length) {
    throw ArgumentError("refine_clip: clip length " + std::to_string(coarse.length()) +
                        " but the network refines clips of " +
                        std::to_string(net->arch().clip_length));
  }
  if (maps.length() != coarse.length()) {
    throw ArgumentError("refine_clip: motion map count differs from clip length");
  }
  torch::NoGradGuard guard;
  auto out = net->forward(coarse.frames().unsqueeze(0), maps.maps().unsqueeze(0));
  return {VideoClip(out.clip.squeeze(0)),
          SpatiotemporalResidual(out.mask.squeeze(0), out.content.squeeze(0))};
}

}  // namespace rmvl
