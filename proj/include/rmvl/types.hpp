#pragma once

// Value types for the media a generator consumes and produces.
//
// Every type wraps a float32 CPU tensor in channel-first layout and checks its
// invariants on construction. The wrapped tensor is never exposed mutably, so a
// constructed value stays valid for its lifetime.

#include <torch/torch.h>

#include <cstdint>
#include <vector>

namespace rmvl {

inline constexpr int64_t kMinFrameSide = 8;

/// One image, [C, H, W], values in [-1, 1], H and W at least 8.
class Frame {
public:
  explicit Frame(torch::Tensor pixels);

  const torch::Tensor& pixels() const { return pixels_; }
  int64_t channels() const { return pixels_.size(0); }
  int64_t height() const { return pixels_.size(1); }
  int64_t width() const { return pixels_.size(2); }

private:
  torch::Tensor pixels_;
};

/// K frames of equal size stored as one [K, C, H, W] tensor.
class VideoClip {
public:
  explicit VideoClip(torch::Tensor frames);
  explicit VideoClip(const std::vector<Frame>& frames);

  const torch::Tensor& frames() const { return frames_; }
  int64_t length() const { return frames_.size(0); }
  int64_t channels() const { return frames_.size(1); }
  int64_t height() const { return frames_.size(2); }
  int64_t width() const { return frames_.size(3); }
  Frame frame(int64_t k) const;

private:
  torch::Tensor frames_;
};

/// Stacked per-joint heatmaps, [J, H, W], values in [0, 1].
///
/// A visible joint's channel peaks at exactly 1; an invisible joint's channel is all zero.
class MotionMap {
public:
  explicit MotionMap(torch::Tensor heatmaps);

  const torch::Tensor& heatmaps() const { return heatmaps_; }
  int64_t joints() const { return heatmaps_.size(0); }
  int64_t height() const { return heatmaps_.size(1); }
  int64_t width() const { return heatmaps_.size(2); }

private:
  torch::Tensor heatmaps_;
};

/// K motion maps, [K, J, H, W].
class MotionMapSequence {
public:
  explicit MotionMapSequence(torch::Tensor maps);
  explicit MotionMapSequence(const std::vector<MotionMap>& maps);

  const torch::Tensor& maps() const { return maps_; }
  int64_t length() const { return maps_.size(0); }
  int64_t joints() const { return maps_.size(1); }
  int64_t height() const { return maps_.size(2); }
  int64_t width() const { return maps_.size(3); }
  MotionMap map(int64_t k) const;

private:
  torch::Tensor maps_;
};

/// Mask [1, H, W] in [0, 1] and content [C, H, W] in [-1, 1].
class ResidualDecomposition {
public:
  ResidualDecomposition(torch::Tensor mask, torch::Tensor content);

  const torch::Tensor& mask() const { return mask_; }
  const torch::Tensor& content() const { return content_; }

private:
  torch::Tensor mask_;
  torch::Tensor content_;
};

/// Mask [K, 1, H, W] in [0, 1] and content [K, C, H, W] in [-1, 1].
class SpatiotemporalResidual {
public:
  SpatiotemporalResidual(torch::Tensor mask, torch::Tensor content);

  const torch::Tensor& mask() const { return mask_; }
  const torch::Tensor& content() const { return content_; }
  int64_t length() const { return mask_.size(0); }
  ResidualDecomposition at(int64_t k) const;

private:
  torch::Tensor mask_;
  torch::Tensor content_;
};

namespace detail {
// Shared invariant checks; throw ShapeError / ArgumentError.
void require_rank(const torch::Tensor& t, int64_t rank, const char* what);
void require_finite_in(const torch::Tensor& t, double lo, double hi, const char* what);
torch::Tensor as_float_cpu(torch::Tensor t);
}  // namespace detail

}  // namespace rmvl
