#pragma once

// Frame and clip quality metrics. Inputs use the internal [-1, 1] range and are
// rescaled to [0, 1] before comparison.

#include "rmvl/types.hpp"

#include <cstdint>
#include <functional>
#include <string>

namespace rmvl {

inline constexpr double kPsnrCap = 100.0;
inline constexpr double kPsnrMseFloor = 1e-10;

/// Mean squared difference on [0, 1]-scaled pixels. Shapes must match.
double mse(const torch::Tensor& a, const torch::Tensor& b);
double mse(const Frame& a, const Frame& b);
double mse(const VideoClip& a, const VideoClip& b);

/// 10 * log10(1 / mse), or kPsnrCap when mse < kPsnrMseFloor.
double psnr_from_mse(double mse);
double psnr(const Frame& a, const Frame& b);

/// Deterministic map from a frame to a fixed-length feature vector.
class FrameEmbedder {
public:
  using Fn = std::function<torch::Tensor(const torch::Tensor&)>;

  /// `fn` maps [N, C, H, W] in [0, 1] to [N, D].
  FrameEmbedder(std::string tag, uint64_t seed, int64_t dim, Fn fn);

  /// Fixed-seed random strided convolution stack with global averaging.
  static FrameEmbedder random_conv(uint64_t seed = 0xACDull, int64_t channels = 3,
                                   int64_t dim = 128);

  const std::string& tag() const { return tag_; }
  uint64_t seed() const { return seed_; }
  int64_t dim() const { return dim_; }

  /// [N, C, H, W] in [-1, 1] to [N, D] (double).
  torch::Tensor embed(const torch::Tensor& frames) const;
  torch::Tensor embed(const Frame& frame) const;

private:
  std::string tag_;
  uint64_t seed_;
  int64_t dim_;
  Fn fn_;
};

/// Mean Euclidean distance between each frame's embedding and the reference's.
double acd_identity(const VideoClip& video, const Frame& ref, const FrameEmbedder& emb);
/// Mean Euclidean distance over all unordered pairs of frame embeddings; 0 for one frame.
double acd_content(const VideoClip& video, const FrameEmbedder& emb);

}  // namespace rmvl
