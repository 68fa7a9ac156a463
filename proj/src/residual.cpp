#include "rmvl/residual.hpp"

#include "rmvl/errors.hpp"

#include <sstream>

namespace rmvl {
namespace {

std::string dims(const torch::Tensor& t) {
  std::ostringstream os;
  os << t.sizes();
  return os.str();
}

}  // namespace

torch::Tensor compose_residual(const torch::Tensor& base, const torch::Tensor& mask,
                               const torch::Tensor& content) {
  if (base.dim() < 3 || mask.dim() != base.dim() || content.dim() != base.dim()) {
    throw ShapeError("compose_residual: rank mismatch base=" + dims(base) + " mask=" + dims(mask) +
                     " content=" + dims(content));
  }
  if (!content.sizes().equals(base.sizes())) {
    throw ShapeError("compose_residual: content " + dims(content) + " vs base " + dims(base));
  }
  for (int64_t d = 0; d < base.dim(); ++d) {
    const int64_t expect = (d == base.dim() - 3) ? 1 : base.size(d);
    if (mask.size(d) != expect) {
      throw ShapeError("compose_residual: mask " + dims(mask) + " vs base " + dims(base));
    }
  }
  // Keep this exact form: m=0 must return base bit-for-bit and m=1 must return content.
  return mask * content + (1 - mask) * base;
}

torch::Tensor compose_delta(const torch::Tensor& base, const torch::Tensor& delta) {
  if (!base.sizes().equals(delta.sizes())) {
    throw ShapeError("compose_delta: delta " + dims(delta) + " vs base " + dims(base));
  }
  return (base + delta).clamp(-1.0, 1.0);
}

Frame compose_frame(const Frame& base, const ResidualDecomposition& dec) {
  return Frame(compose_residual(base.pixels(), dec.mask(), dec.content()));
}

VideoClip compose_clip(const VideoClip& base, const SpatiotemporalResidual& dec) {
  if (base.length() != dec.length()) {
    throw ShapeError("compose_clip: clip length " + std::to_string(base.length()) +
                     " vs residual length " + std::to_string(dec.length()));
  }
  return VideoClip(compose_residual(base.frames(), dec.mask(), dec.content()));
}

Frame compose_difference(const Frame& base, const torch::Tensor& delta) {
  return Frame(compose_delta(base.pixels(), detail::as_float_cpu(delta)));
}

}  // namespace rmvl
