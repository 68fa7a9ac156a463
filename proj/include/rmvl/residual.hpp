#pragma once

// Residual composition: a generated image keeps the static content of its base
// wherever the motion mask is 0 and takes the predicted content where it is 1.

#include "rmvl/types.hpp"

namespace rmvl {

/// m * c + (1 - m) * base on raw tensors.
///
/// Works for any leading batch/time dims; the channel axis is dim -3 and the mask
/// must have one channel there (it is broadcast over colour). Differentiable.
torch::Tensor compose_residual(const torch::Tensor& base, const torch::Tensor& mask,
                               const torch::Tensor& content);

/// clamp(base + delta, -1, 1) on raw tensors. Single-map difference baseline.
torch::Tensor compose_delta(const torch::Tensor& base, const torch::Tensor& delta);

Frame compose_frame(const Frame& base, const ResidualDecomposition& dec);

/// Applies compose_frame at every timestep.
VideoClip compose_clip(const VideoClip& base, const SpatiotemporalResidual& dec);

/// base + delta, clamped to [-1, 1]. `delta` is [C, H, W].
Frame compose_difference(const Frame& base, const torch::Tensor& delta);

}  // namespace rmvl
