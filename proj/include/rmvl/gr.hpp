#pragma once

// Motion refinement network: a spatiotemporal encoder-decoder over a coarse clip.
//
// Per timestep the coarse frame and its motion map are stacked on the channel axis.
// Two strided 3D convolutions halve time and space, two fractionally strided ones
// restore them, and encoder activations are concatenated back in at matching scales.
// The output is a clip-level residual composed over the coarse clip.

#include "rmvl/types.hpp"

#include <nlohmann/json_fwd.hpp>

namespace rmvl {

struct GRArch {
  int64_t clip_length = 16;
  int64_t height = 64;
  int64_t width = 64;
  int64_t image_channels = 3;
  int64_t joints = 8;
  int64_t base_width = 8;  // widths are base, 2 * base, 4 * base per scale

  void validate() const;
};

nlohmann::json to_json(const GRArch& arch);
GRArch gr_arch_from_json(const nlohmann::json& j);

/// Batched outputs in clip layout: clip [B, K, C, H, W], mask [B, K, 1, H, W].
struct GROutput {
  torch::Tensor clip;
  torch::Tensor mask;
  torch::Tensor content;
};

class RefineNetImpl : public torch::nn::Module {
public:
  explicit RefineNetImpl(const GRArch& arch);

  const GRArch& arch() const { return arch_; }

  /// coarse [B, K, C, H, W]; maps [B, K, J, H, W].
  GROutput forward(const torch::Tensor& coarse, const torch::Tensor& maps);

private:
  GRArch arch_;
  torch::nn::Conv3d enc0_{nullptr}, enc1_{nullptr}, enc2_{nullptr};
  torch::nn::ConvTranspose3d dec1_{nullptr}, dec0_{nullptr};
  torch::nn::Conv3d mask_head_{nullptr}, content_head_{nullptr};
};
TORCH_MODULE(RefineNet);

struct RefineResult {
  VideoClip clip;
  SpatiotemporalResidual residual;
};

/// Refines one coarse clip; its length must equal the network's clip length.
RefineResult refine_clip(RefineNet& net, const VideoClip& coarse, const MotionMapSequence& maps);

/// [B, K, C, H, W] <-> [B, C, K, H, W]
torch::Tensor clip_to_volume(const torch::Tensor& clip);
torch::Tensor volume_to_clip(const torch::Tensor& volume);

}  // namespace rmvl
