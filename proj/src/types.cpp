#include "rmvl/types.hpp"

#include "rmvl/errors.hpp"

#include <string>

namespace rmvl {
namespace detail {

void require_rank(const torch::Tensor& t, int64_t rank, const char* what) {
  if (!t.defined() || t.dim() != rank) {
    throw ShapeError(std::string(what) + ": expected rank " + std::to_string(rank) + ", got " +
                     (t.defined() ? std::to_string(t.dim()) : std::string("undefined")));
  }
}

void require_finite_in(const torch::Tensor& t, double lo, double hi, const char* what) {
  if (t.numel() == 0) return;
  if (!torch::isfinite(t).all().item<bool>()) {
    throw ArgumentError(std::string(what) + ": non-finite values");
  }
  const double mn = t.min().item<double>();
  const double mx = t.max().item<double>();
  if (mn < lo || mx > hi) {
    throw ArgumentError(std::string(what) + ": values outside [" + std::to_string(lo) + ", " +
                        std::to_string(hi) + "], observed [" + std::to_string(mn) + ", " +
                        std::to_string(mx) + "]");
  }
}

torch::Tensor as_float_cpu(torch::Tensor t) {
  return t.detach().to(torch::kCPU, torch::kFloat32).contiguous();
}

}  // namespace detail

namespace {

void require_min_side(int64_t h, int64_t w, const char* what) {
  if (h < kMinFrameSide || w < kMinFrameSide) {
    throw ShapeError(std::string(what) + ": spatial size " + std::to_string(h) + "x" +
                     std::to_string(w) + " below minimum " + std::to_string(kMinFrameSide));
  }
}

void require_peak_normalized(const torch::Tensor& maps, const char* what) {
  // Channel maxima over the trailing H, W dims must be 0 (invisible) or 1 (visible).
  auto peaks = maps.flatten(-2).amax(-1);
  auto ok = (peaks == 0) | ((peaks - 1).abs() <= 1e-6);
  if (!ok.all().item<bool>()) {
    throw ArgumentError(std::string(what) + ": every channel must peak at 1 or be all zero");
  }
}

}  // namespace

Frame::Frame(torch::Tensor pixels) : pixels_(detail::as_float_cpu(std::move(pixels))) {
  detail::require_rank(pixels_, 3, "Frame");
  require_min_side(height(), width(), "Frame");
  detail::require_finite_in(pixels_, -1.0, 1.0, "Frame");
}

VideoClip::VideoClip(torch::Tensor frames) : frames_(detail::as_float_cpu(std::move(frames))) {
  detail::require_rank(frames_, 4, "VideoClip");
  if (length() < 1) throw ShapeError("VideoClip: needs at least one frame");
  require_min_side(height(), width(), "VideoClip");
  detail::require_finite_in(frames_, -1.0, 1.0, "VideoClip");
}

static torch::Tensor stack_frames(const std::vector<Frame>& frames) {
  if (frames.empty()) throw ShapeError("VideoClip: needs at least one frame");
  std::vector<torch::Tensor> parts;
  parts.reserve(frames.size());
  for (const auto& f : frames) {
    if (!f.pixels().sizes().equals(frames.front().pixels().sizes())) {
      throw ShapeError("VideoClip: frames differ in size");
    }
    parts.push_back(f.pixels());
  }
  return torch::stack(parts);
}

VideoClip::VideoClip(const std::vector<Frame>& frames) : VideoClip(stack_frames(frames)) {}

Frame VideoClip::frame(int64_t k) const {
  if (k < 0 || k >= length()) throw ArgumentError("VideoClip::frame: index out of range");
  return Frame(frames_[k]);
}

MotionMap::MotionMap(torch::Tensor heatmaps)
    : heatmaps_(detail::as_float_cpu(std::move(heatmaps))) {
  detail::require_rank(heatmaps_, 3, "MotionMap");
  detail::require_finite_in(heatmaps_, 0.0, 1.0, "MotionMap");
  require_peak_normalized(heatmaps_, "MotionMap");
}

MotionMapSequence::MotionMapSequence(torch::Tensor maps)
    : maps_(detail::as_float_cpu(std::move(maps))) {
  detail::require_rank(maps_, 4, "MotionMapSequence");
  if (length() < 1) throw ShapeError("MotionMapSequence: needs at least one map");
  detail::require_finite_in(maps_, 0.0, 1.0, "MotionMapSequence");
  require_peak_normalized(maps_, "MotionMapSequence");
}

static torch::Tensor stack_maps(const std::vector<MotionMap>& maps) {
  if (maps.empty()) throw ShapeError("MotionMapSequence: needs at least one map");
  std::vector<torch::Tensor> parts;
  parts.reserve(maps.size());
  for (const auto& m : maps) {
    if (!m.heatmaps().sizes().equals(maps.front().heatmaps().sizes())) {
      throw ShapeError("MotionMapSequence: maps differ in shape");
    }
    parts.push_back(m.heatmaps());
  }
  return torch::stack(parts);
}

MotionMapSequence::MotionMapSequence(const std::vector<MotionMap>& maps)
    : MotionMapSequence(stack_maps(maps)) {}

MotionMap MotionMapSequence::map(int64_t k) const {
  if (k < 0 || k >= length()) throw ArgumentError("MotionMapSequence::map: index out of range");
  return MotionMap(maps_[k]);
}

ResidualDecomposition::ResidualDecomposition(torch::Tensor mask, torch::Tensor content)
    : mask_(detail::as_float_cpu(std::move(mask))),
      content_(detail::as_float_cpu(std::move(content))) {
  detail::require_rank(mask_, 3, "ResidualDecomposition mask");
  detail::require_rank(content_, 3, "ResidualDecomposition content");
  if (mask_.size(0) != 1) throw ShapeError("ResidualDecomposition: mask must be single-channel");
  if (mask_.size(1) != content_.size(1) || mask_.size(2) != content_.size(2)) {
    throw ShapeError("ResidualDecomposition: mask and content spatial dims differ");
  }
  detail::require_finite_in(mask_, 0.0, 1.0, "ResidualDecomposition mask");
  detail::require_finite_in(content_, -1.0, 1.0, "ResidualDecomposition content");
}

SpatiotemporalResidual::SpatiotemporalResidual(torch::Tensor mask, torch::Tensor content)
    : mask_(detail::as_float_cpu(std::move(mask))),
      content_(detail::as_float_cpu(std::move(content))) {
  detail::require_rank(mask_, 4, "SpatiotemporalResidual mask");
  detail::require_rank(content_, 4, "SpatiotemporalResidual content");
  if (mask_.size(1) != 1) throw ShapeError("SpatiotemporalResidual: mask must be single-channel");
  if (mask_.size(0) != content_.size(0) || mask_.size(2) != content_.size(2) ||
      mask_.size(3) != content_.size(3)) {
    throw ShapeError("SpatiotemporalResidual: mask and content dims differ");
  }
  detail::require_finite_in(mask_, 0.0, 1.0, "SpatiotemporalResidual mask");
  detail::require_finite_in(content_, -1.0, 1.0, "SpatiotemporalResidual content");
}

ResidualDecomposition SpatiotemporalResidual::at(int64_t k) const {
  if (k < 0 || k >= length()) throw ArgumentError("SpatiotemporalResidual::at: index out of range");
  return ResidualDecomposition(mask_[k], content_[k]);
}

}  // namespace rmvl
