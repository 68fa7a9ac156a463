#include "rmvl/critics.hpp"

#include "rmvl/errors.hpp"
#include "rmvl/gr.hpp"

#include <nlohmann/json.hpp>

#include <sstream>

namespace F = torch::nn::functional;

namespace rmvl {

std::string to_string(CriticKind kind) { return kind == CriticKind::Image ? "image" : "video"; }

CriticArch CriticArch::image(int64_t in_channels, int64_t height, int64_t width) {
  CriticArch a;
  a.kind = CriticKind::Image;
  a.in_channels = in_channels;
  a.height = height;
  a.width = width;
  a.stages = 4;
  while (a.stages > 1 && ((height >> a.stages) < 1 || (width >> a.stages) < 1)) --a.stages;
  return a;
}

CriticArch CriticArch::video(int64_t in_channels, int64_t clip_length, int64_t height, int64_t width) {
  CriticArch a;
  a.kind = CriticKind::Video;
  a.in_channels = in_channels;
  a.clip_length = clip_length;
  a.height = height;
  a.width = width;
  a.stages = 3;
  a.base_width = 8;
  a.max_width = 32;
  while (a.stages > 1 && ((height >> a.stages) < 1 || (width >> a.stages) < 1)) --a.stages;
  return a;
}

void CriticArch::validate() const {
  if (in_channels < 1 || stages < 1 || base_width < 1 || max_width < base_width) {
    throw ArgumentError("CriticArch: bad widths");
  }
  if ((height >> stages) < 1 || (width >> stages) < 1) {
    throw ShapeError("CriticArch: input too small for " + std::to_string(stages) + " stages");
  }
  if (kind == CriticKind::Video && clip_length < 1) throw ArgumentError("CriticArch: clip length");
}

nlohmann::json to_json(const CriticArch& a) {
  return {{"kind", to_string(a.kind)}, {"in_channels", a.in_channels}, {"clip_length", a.clip_length},
          {"height", a.height},        {"width", a.width},             {"stages", a.stages},
          {"base_width", a.base_width}, {"max_width", a.max_width}};
}

CriticArch critic_arch_from_json(const nlohmann::json& j) {
  CriticArch a;
  a.kind = j.at("kind").get<std::string>() == "video" ? CriticKind::Video : CriticKind::Image;
  a.in_channels = j.at("in_channels").get<int64_t>();
  a.clip_length = j.at("clip_length").get<int64_t>();
  a.height = j.at("height").get<int64_t>();
  a.width = j.at("width").get<int64_t>();
  a.stages = j.at("stages").get<int64_t>();
  a.base_width = j.at("base_width").get<int64_t>();
  a.max_width = j.at("max_width").get<int64_t>();
  a.validate();
  return a;
}

CriticImpl::CriticImpl(const CriticArch& arch) : arch_(arch) {
  arch_.validate();
  int64_t in = arch.in_channels;
  int64_t depth = arch.clip_length;
  int64_t h = arch.height, w = arch.width;
  for (int64_t s = 0; s < arch.stages; ++s) {
    const int64_t out = std::min(arch.base_width << s, arch.max_width);
    const std::string name = "conv" + std::to_string(s + 1);
    if (arch.kind == CriticKind::Image) {
      auto conv = torch::nn::Conv2d(torch::nn::Conv2dOptions(in, out, 4).stride(2).padding(1));
      convs_.emplace_back(register_module(name, conv));
    } else {
      // Halve time while there is more than one frame left.
      const bool halve_time = depth >= 2;
      auto opts = torch::nn::Conv3dOptions(in, out, {halve_time ? 4 : 1, 4, 4})
                      .stride({halve_time ? 2 : 1, 2, 2})
                      .padding({halve_time ? 1 : 0, 1, 1});
      convs_.emplace_back(register_module(name, torch::nn::Conv3d(opts)));
      if (halve_time) depth /= 2;
    }
    h /= 2;
    w /= 2;
    in = out;
  }
  const int64_t flat = in * h * w * (arch.kind == CriticKind::Video ? depth : 1);
  head_ = register_module("head", torch::nn::Linear(flat, 1));
}

torch::Tensor CriticImpl::forward(const torch::Tensor& x) {
  const bool video = arch_.kind == CriticKind::Video;
  const bool ok = video ? (x.dim() == 5 && x.size(1) == arch_.in_channels &&
                           x.size(2) == arch_.clip_length && x.size(3) == arch_.height &&
                           x.size(4) == arch_.width)
                        : (x.dim() == 4 && x.size(1) == arch_.in_channels &&
                           x.size(2) == arch_.height && x.size(3) == arch_.width);
  if (!ok) {
    std::ostringstream os;
    os << "Critic(" << to_string(arch_.kind) << "): unexpected input shape " << x.sizes();
    throw ShapeError(os.str());
  }
  auto h = x;
  for (auto& conv : convs_) {
    h = F::leaky_relu(conv.forward(h), F::LeakyReLUFuncOptions().negative_slope(0.2));
  }
  return head_->forward(h.flatten(1)).squeeze(1);
}

CriticFn as_critic_fn(Critic critic) {
  return [critic](const torch::Tensor& x) mutable { return critic->forward(x); };
}

double critic_image(Critic& critic, const Frame& frame, const MotionMap& cond) {
  if (frame.height() != cond.height() || frame.width() != cond.width()) {
    throw ShapeError("critic_image: frame and condition sizes differ");
  }
  torch::NoGradGuard guard;
  auto x = torch::cat({frame.pixels(), cond.heatmaps()}, 0).unsqueeze(0);
  return critic->forward(x).item<double>();
}

double critic_video(Critic& critic, const VideoClip& clip, const MotionMapSequence& conds) {
  if (clip.length() != conds.length() || clip.height() != conds.height() ||
      clip.width() != conds.width()) {
    throw ShapeError("critic_video: clip and conditions differ in shape");
  }
  torch::NoGradGuard guard;
  auto x = clip_to_volume(torch::cat({clip.frames(), conds.maps()}, 1).unsqueeze(0));
  return critic->forward(x).item<double>();
}

}  // namespace rmvl
