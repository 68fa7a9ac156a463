#pragma once

#include "rmvl/types.hpp"

#include <vector>

namespace rmvl {

struct Joint {
  double x = 0.0;  // normalized column coordinate, pixel column = x * W
  double y = 0.0;  // normalized row coordinate, pixel row = y * H
  bool visible = true;
};

/// One 2D skeleton. Visible joints lie in [0, 1]^2.
class Pose {
public:
  Pose() = default;
  explicit Pose(std::vector<Joint> joints);

  const std::vector<Joint>& joints() const { return joints_; }
  int64_t size() const { return static_cast<int64_t>(joints_.size()); }
  const Joint& operator[](int64_t j) const { return joints_[static_cast<size_t>(j)]; }

  /// [J, 2] float tensor of (x, y).
  torch::Tensor coords() const;
  static Pose from_coords(const torch::Tensor& coords);

private:
  std::vector<Joint> joints_;
};

/// Time-ordered poses with a fixed joint count.
class PoseSequence {
public:
  PoseSequence() = default;
  explicit PoseSequence(std::vector<Pose> poses);

  const std::vector<Pose>& poses() const { return poses_; }
  int64_t length() const { return static_cast<int64_t>(poses_.size()); }
  int64_t joints() const { return poses_.empty() ? 0 : poses_.front().size(); }
  const Pose& operator[](int64_t t) const { return poses_[static_cast<size_t>(t)]; }
  bool empty() const { return poses_.empty(); }

  /// [T, J, 2] float tensor.
  torch::Tensor coords() const;
  static PoseSequence from_coords(const torch::Tensor& coords);
  PoseSequence slice(int64_t begin, int64_t end) const;

private:
  std::vector<Pose> poses_;
};

inline constexpr double kDefaultHeatmapSigma = 1.5;

/// Pixel holding a joint: the nearest integer grid point to (x * W, y * H), clamped
/// into the image. Ties resolve toward the lower index.
std::pair<int64_t, int64_t> joint_pixel(const Joint& joint, int64_t height, int64_t width);

/// One isotropic Gaussian per joint, each channel rescaled so its maximum is 1.
/// Invisible joints (or joints whose bump falls entirely off-grid) give all-zero channels.
MotionMap render_heatmaps(const Pose& pose, int64_t height, int64_t width,
                          double sigma = kDefaultHeatmapSigma);

/// Vectorized form of render_heatmaps: coords [..., J, 2], visible [..., J] (bool) ->
/// float32 [..., J, H, W].
torch::Tensor render_heatmaps_batch(const torch::Tensor& coords, const torch::Tensor& visible,
                                    int64_t height, int64_t width,
                                    double sigma = kDefaultHeatmapSigma);

/// Renders every pose of a sequence.
MotionMapSequence render_heatmap_sequence(const PoseSequence& poses, int64_t height, int64_t width,
                                          double sigma = kDefaultHeatmapSigma);

}  // namespace rmvl
