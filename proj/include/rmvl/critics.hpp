#pragma once

// Conditional Wasserstein critics. Both take the sample and its motion condition
// stacked on the channel axis and return one unbounded score per sample.

#include "rmvl/types.hpp"

#include <nlohmann/json_fwd.hpp>

#include <functional>
#include <string>

namespace rmvl {

enum class CriticKind { Image, Video };

std::string to_string(CriticKind kind);

struct CriticArch {
  CriticKind kind = CriticKind::Image;
  int64_t in_channels = 11;  // image channels + joints
  int64_t clip_length = 1;   // video critics only
  int64_t height = 64;
  int64_t width = 64;
  int64_t stages = 4;  // 4 for image critics, 3 for video critics by default
  int64_t base_width = 16;
  int64_t max_width = 64;

  static CriticArch image(int64_t in_channels, int64_t height, int64_t width);
  static CriticArch video(int64_t in_channels, int64_t clip_length, int64_t height, int64_t width);
  void validate() const;
};

nlohmann::json to_json(const CriticArch& arch);
CriticArch critic_arch_from_json(const nlohmann::json& j);

/// Strided 2D (image) or 3D (video) convolution stack with a linear score head.
/// Input [B, C, H, W] for images and [B, C, K, H, W] for videos; output [B].
class CriticImpl : public torch::nn::Module {
public:
  explicit CriticImpl(const CriticArch& arch);

  const CriticArch& arch() const { return arch_; }
  torch::Tensor forward(const torch::Tensor& x);

private:
  CriticArch arch_;
  std::vector<torch::nn::AnyModule> convs_;
  torch::nn::Linear head_{nullptr};
};
TORCH_MODULE(Critic);

/// Any differentiable scorer of a channel-stacked [sample, condition] tensor; returns
/// one score per batch entry. Networks and analytic test critics both fit.
using CriticFn = std::function<torch::Tensor(const torch::Tensor&)>;

CriticFn as_critic_fn(Critic critic);

/// Typed scoring of one frame / one clip with its condition.
double critic_image(Critic& critic, const Frame& frame, const MotionMap& cond);
double critic_video(Critic& critic, const VideoClip& clip, const MotionMapSequence& conds);

}  // namespace rmvl
