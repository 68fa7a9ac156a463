#include "rmvl/pose.hpp"

#include "rmvl/errors.hpp"

#include <cmath>

namespace rmvl {

Pose::Pose(std::vector<Joint> joints) : joints_(std::move(joints)) {
  for (const auto& j : joints_) {
    if (!j.visible) continue;
    if (!std::isfinite(j.x) || !std::isfinite(j.y) || j.x < 0.0 || j.x > 1.0 || j.y < 0.0 ||
        j.y > 1.0) {
      throw ArgumentError("Pose: visible joint outside [0, 1]");
    }
  }
}

torch::Tensor Pose::coords() const {
  auto t = torch::empty({size(), 2}, torch::kFloat32);
  auto a = t.accessor<float, 2>();
  for (int64_t j = 0; j < size(); ++j) {
    a[j][0] = static_cast<float>(joints_[static_cast<size_t>(j)].x);
    a[j][1] = static_cast<float>(joints_[static_cast<size_t>(j)].y);
  }
  return t;
}

Pose Pose::from_coords(const torch::Tensor& coords) {
  detail::require_rank(coords, 2, "Pose::from_coords");
  if (coords.size(1) != 2) throw ShapeError("Pose::from_coords: expected [J, 2]");
  auto c = coords.detach().to(torch::kCPU, torch::kDouble).contiguous();
  auto a = c.accessor<double, 2>();
  std::vector<Joint> joints(static_cast<size_t>(c.size(0)));
  for (int64_t j = 0; j < c.size(0); ++j) {
    joints[static_cast<size_t>(j)] = {a[j][0], a[j][1], true};
  }
  return Pose(std::move(joints));
}

PoseSequence::PoseSequence(std::vector<Pose> poses) : poses_(std::move(poses)) {
  for (const auto& p : poses_) {
    if (p.size() != poses_.front().size()) {
      throw ShapeError("PoseSequence: poses differ in joint count");
    }
  }
}

torch::Tensor PoseSequence::coords() const {
  if (poses_.empty()) return torch::empty({0, 0, 2}, torch::kFloat32);
  std::vector<torch::Tensor> parts;
  parts.reserve(poses_.size());
  for (const auto& p : poses_) parts.push_back(p.coords());
  return torch::stack(parts);
}

PoseSequence PoseSequence::from_coords(const torch::Tensor& coords) {
  detail::require_rank(coords, 3, "PoseSequence::from_coords");
  std::vector<Pose> poses;
  poses.reserve(static_cast<size_t>(coords.size(0)));
  for (int64_t t = 0; t < coords.size(0); ++t) poses.push_back(Pose::from_coords(coords[t]));
  return PoseSequence(std::move(poses));
}

PoseSequence PoseSequence::slice(int64_t begin, int64_t end) const {
  if (begin < 0 || end > length() || begin > end) {
    throw ArgumentError("PoseSequence::slice: bad range");
  }
  return PoseSequence(std::vector<Pose>(poses_.begin() + begin, poses_.begin() + end));
}

std::pair<int64_t, int64_t> joint_pixel(const Joint& joint, int64_t height, int64_t width) {
  auto nearest = [](double u, int64_t n) {
    const auto i = static_cast<int64_t>(std::ceil(u - 0.5));
    return std::clamp<int64_t>(i, 0, n - 1);
  };
  return {nearest(joint.y * static_cast<double>(height), height),
          nearest(joint.x * static_cast<double>(width), width)};
}

torch::Tensor render_heatmaps_batch(const torch::Tensor& coords, const torch::Tensor& visible,
                                    int64_t height, int64_t width, double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw ArgumentError("render_heatmaps: sigma must be positive");
  }
  if (height < 1 || width < 1) throw ShapeError("render_heatmaps: empty grid");
  if (coords.dim() < 2 || coords.size(-1) != 2) throw ShapeError("render_heatmaps: coords [..., J, 2]");
  if (!visible.sizes().equals(coords.sizes().slice(0, coords.dim() - 1))) {
    throw ShapeError("render_heatmaps: visibility shape must match coords without the last dim");
  }
  auto c = coords.detach().to(torch::kCPU, torch::kDouble);
  const double inv = 1.0 / (2.0 * sigma * sigma);
  auto rows = torch::arange(height, torch::kDouble);
  auto cols = torch::arange(width, torch::kDouble);
  auto gx = torch::exp(-(cols - c.select(-1, 0).unsqueeze(-1) * static_cast<double>(width)).square() * inv);
  auto gy = torch::exp(-(rows - c.select(-1, 1).unsqueeze(-1) * static_cast<double>(height)).square() * inv);
  // The maximum of the separable product is the product of the maxima, evaluated with the
  // same multiplication as the peak element, so normalized peaks are exactly 1.
  auto peak = (gy.amax(-1) * gx.amax(-1)).unsqueeze(-1).unsqueeze(-1);
  auto g = gy.unsqueeze(-1) * gx.unsqueeze(-2);
  auto on = (visible.to(torch::kCPU).to(torch::kBool).unsqueeze(-1).unsqueeze(-1)) & (peak > 0);
  auto normalized = g / torch::where(peak > 0, peak, torch::ones_like(peak));
  return torch::where(on, normalized, torch::zeros_like(normalized)).to(torch::kFloat32);
}

MotionMap render_heatmaps(const Pose& pose, int64_t height, int64_t width, double sigma) {
  auto coords = torch::empty({pose.size(), 2}, torch::kDouble);
  auto visible = torch::empty({pose.size()}, torch::kBool);
  for (int64_t j = 0; j < pose.size(); ++j) {
    coords[j][0] = pose[j].x;
    coords[j][1] = pose[j].y;
    visible[j] = pose[j].visible;
  }
  return MotionMap(render_heatmaps_batch(coords, visible, height, width, sigma));
}

MotionMapSequence render_heatmap_sequence(const PoseSequence& poses, int64_t height, int64_t width,
                                          double sigma) {
  if (poses.empty()) throw ArgumentError("render_heatmap_sequence: empty sequence");
  std::vector<MotionMap> maps;
  maps.reserve(static_cast<size_t>(poses.length()));
  for (const auto& p : poses.poses()) maps.push_back(render_heatmaps(p, height, width, sigma));
  return MotionMapSequence(maps);
}

}  // namespace rmvl
