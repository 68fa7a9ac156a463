#include "rmvl/gm.hpp"

#include "rmvl/errors.hpp"
#include "rmvl/residual.hpp"

#include <nlohmann/json.hpp>

#include <sstream>

namespace F = torch::nn::functional;

namespace rmvl {
namespace {

constexpr double kSlope = 0.2;

torch::nn::Conv2d conv3x3(int64_t in, int64_t out, int64_t stride = 1) {
  return torch::nn::Conv2d(torch::nn::Conv2dOptions(in, out, 3).stride(stride).padding(1));
}

torch::Tensor lrelu(const torch::Tensor& x) { return F::leaky_relu(x, F::LeakyReLUFuncOptions().negative_slope(kSlope)); }

std::vector<int64_t> sizes_of(const torch::Tensor& t) { return t.sizes().vec(); }

}  // namespace

int64_t GMArch::encoder_width(int64_t level) const {
  return std::min(base_width << level, max_width);
}

int64_t GMArch::block_width(int64_t block) const { return encoder_width(stages - block); }

void GMArch::validate() const {
  if (stages < 1) throw ArgumentError("GMArch: stages must be positive");
  if (base_width < 1 || max_width < base_width) throw ArgumentError("GMArch: bad widths");
  if (image_channels < 1 || joints < 1) throw ArgumentError("GMArch: bad channel counts");
  const int64_t f = int64_t{1} << stages;
  if (height % f != 0 || width % f != 0) {
    throw ShapeError("GMArch: " + std::to_string(height) + "x" + std::to_string(width) +
                     " not divisible by 2^" + std::to_string(stages));
  }
}

nlohmann::json to_json(const GMArch& a) {
  return {{"height", a.height},         {"width", a.width},
          {"image_channels", a.image_channels}, {"joints", a.joints},
          {"stages", a.stages},         {"base_width", a.base_width},
          {"max_width", a.max_width},   {"dense", a.dense},
          {"residual", a.residual == ResidualMode::Mask ? "mask" : "difference"}};
}

GMArch gm_arch_from_json(const nlohmann::json& j) {
  GMArch a;
  a.height = j.at("height").get<int64_t>();
  a.width = j.at("width").get<int64_t>();
  a.image_channels = j.at("image_channels").get<int64_t>();
  a.joints = j.at("joints").get<int64_t>();
  a.stages = j.at("stages").get<int64_t>();
  a.base_width = j.at("base_width").get<int64_t>();
  a.max_width = j.at("max_width").get<int64_t>();
  a.dense = j.at("dense").get<bool>();
  a.residual = j.at("residual").get<std::string>() == "difference" ? ResidualMode::Difference
                                                                   : ResidualMode::Mask;
  a.validate();
  return a;
}

EncoderImpl::EncoderImpl(int64_t in_channels, const GMArch& arch) {
  stem_ = register_module("stem", conv3x3(in_channels, arch.encoder_width(0)));
  for (int64_t s = 1; s <= arch.stages; ++s) {
    down_.push_back(register_module("down" + std::to_string(s),
                                    conv3x3(arch.encoder_width(s - 1), arch.encoder_width(s), 2)));
  }
}

EncoderFeatures EncoderImpl::forward(const torch::Tensor& x) {
  EncoderFeatures out;
  auto h = lrelu(stem_->forward(x));
  for (auto& conv : down_) {
    out.skips.push_back(h);
    h = lrelu(conv->forward(h));
  }
  out.bottleneck = h;
  return out;
}

DenseDecoderImpl::DenseDecoderImpl(const GMArch& arch) : arch_(arch) {
  const int64_t bottleneck_h = arch.height >> arch.stages;
  for (int64_t b = 1; b <= arch.stages; ++b) {
    DenseBlockLayout L;
    L.block = b;
    L.height = arch.height >> (arch.stages - b);
    L.width = arch.width >> (arch.stages - b);
    if (arch.dense || b == 1) {
      L.sources.push_back({"bottleneck", 0, arch.encoder_width(arch.stages), bottleneck_h,
                           L.height / bottleneck_h});
    }
    const int64_t first_pred = arch.dense ? 1 : b - 1;
    for (int64_t p = std::max<int64_t>(first_pred, 1); p < b; ++p) {
      const auto& prev = layout_[static_cast<size_t>(p - 1)];
      L.sources.push_back({"block" + std::to_string(p), p, prev.output_channels, prev.height,
                           L.height / prev.height});
    }
    L.skip_channels = arch.encoder_width(arch.stages - b);
    L.input_channels = L.skip_channels;
    for (const auto& s : L.sources) L.input_channels += s.channels;
    L.output_channels = arch.block_width(b);
    conv_a_.push_back(register_module("block" + std::to_string(b) + "_conv1",
                                      conv3x3(L.input_channels, L.output_channels)));
    conv_b_.push_back(register_module("block" + std::to_string(b) + "_conv2",
                                      conv3x3(L.output_channels, L.output_channels)));
    layout_.push_back(std::move(L));
  }
}

int64_t DenseDecoderImpl::first_conv_in_channels(int64_t block) const {
  if (block < 1 || block > static_cast<int64_t>(conv_a_.size())) {
    throw ArgumentError("first_conv_in_channels: block out of range");
  }
  return conv_a_[static_cast<size_t>(block - 1)]->weight.size(1);
}

torch::Tensor DenseDecoderImpl::forward(const torch::Tensor& embedding,
                                        const std::vector<torch::Tensor>& skips,
                                        DecoderTrace* trace) {
  if (static_cast<int64_t>(skips.size()) != arch_.stages) {
    throw ShapeError("DenseDecoder: expected " + std::to_string(arch_.stages) + " skip tensors");
  }
  if (trace) {
    trace->embedding = embedding;
    trace->blocks.clear();
  }
  std::vector<torch::Tensor> outputs;
  for (const auto& L : layout_) {
    std::vector<torch::Tensor> inputs;
    DecoderTrace::Block tb;
    for (const auto& src : L.sources) {
      const torch::Tensor& t = src.origin == 0 ? embedding : outputs[static_cast<size_t>(src.origin - 1)];
      auto up = src.upsample == 1
                    ? t
                    : F::interpolate(t, F::InterpolateFuncOptions()
                                            .size(std::vector<int64_t>{L.height, L.width})
                                            .mode(torch::kNearest));
      if (trace) {
        tb.source_sizes_before.push_back(sizes_of(t));
        tb.source_sizes_after.push_back(sizes_of(up));
      }
      inputs.push_back(up);
    }
    const auto& skip = skips[static_cast<size_t>(arch_.stages - L.block)];
    if (skip.size(2) != L.height || skip.size(3) != L.width) {
      throw ShapeError("DenseDecoder: skip resolution mismatch at block " + std::to_string(L.block));
    }
    inputs.push_back(skip);
    auto x = torch::cat(inputs, 1);
    if (trace) {
      tb.concat_channels = x.size(1);
      trace->blocks.push_back(std::move(tb));
    }
    const auto i = static_cast<size_t>(L.block - 1);
    x = lrelu(conv_a_[i]->forward(x));
    x = lrelu(conv_b_[i]->forward(x));
    outputs.push_back(x);
  }
  return outputs.back();
}

ForecastNetImpl::ForecastNetImpl(const GMArch& arch) : arch_(arch) {
  arch_.validate();
  motion_encoder_ = register_module("motion_encoder", Encoder(arch.joints, arch));
  image_encoder_ = register_module("image_encoder", Encoder(arch.image_channels, arch));
  decoder_ = register_module("decoder", DenseDecoder(arch));
  const int64_t last = arch.block_width(arch.stages);
  mask_head_ = register_module("mask_head", conv3x3(last, 1));
  content_head_ = register_module("content_head", conv3x3(last, arch.image_channels));
}

void ForecastNetImpl::check_input(const torch::Tensor& t, int64_t channels, const char* what) const {
  if (t.dim() != 4 || t.size(1) != channels || t.size(2) != arch_.height || t.size(3) != arch_.width) {
    std::ostringstream os;
    os << "ForecastNet: " << what << " has shape " << t.sizes() << ", expected [B, " << channels
       << ", " << arch_.height << ", " << arch_.width << "]";
    throw ShapeError(os.str());
  }
}

torch::Tensor ForecastNetImpl::encode_motion(const torch::Tensor& maps) {
  check_input(maps, arch_.joints, "motion map");
  return motion_encoder_->forward(maps).bottleneck;
}

EncoderFeatures ForecastNetImpl::encode_image(const torch::Tensor& frames) {
  check_input(frames, arch_.image_channels, "image");
  return image_encoder_->forward(frames);
}

std::pair<torch::Tensor, torch::Tensor> ForecastNetImpl::decode(
    const torch::Tensor& embedding, const std::vector<torch::Tensor>& skips, DecoderTrace* trace) {
  const int64_t bh = arch_.height >> arch_.stages;
  const int64_t bw = arch_.width >> arch_.stages;
  if (embedding.dim() != 4 || embedding.size(1) != arch_.encoder_width(arch_.stages) ||
      embedding.size(2) != bh || embedding.size(3) != bw) {
    throw ShapeError("ForecastNet::decode: embedding shape mismatch");
  }
  auto h = decoder_->forward(embedding, skips, trace);
  auto content = torch::tanh(content_head_->forward(h));
  if (arch_.residual == ResidualMode::Difference) return {torch::Tensor(), 2.0 * content};
  return {torch::sigmoid(mask_head_->forward(h)), content};
}

GMOutput ForecastNetImpl::forward(const torch::Tensor& image, const torch::Tensor& current_map,
                                  const torch::Tensor& target_map, DecoderTrace* trace) {
  check_input(image, arch_.image_channels, "image");
  check_input(current_map, arch_.joints, "current map");
  check_input(target_map, arch_.joints, "target map");
  auto img = image_encoder_->forward(image);
  // Two separate passes keep identical maps bit-identical in embedding space.
  auto src = motion_encoder_->forward(current_map).bottleneck;
  auto dst = motion_encoder_->forward(target_map).bottleneck;
  auto [mask, content] = decode(analogy_embed(src, dst, img.bottleneck), img.skips, trace);
  GMOutput out;
  out.mask = mask;
  out.content = content;
  out.frame = arch_.residual == ResidualMode::Mask ? compose_residual(image, mask, content)
                                                   : compose_delta(image, content);
  return out;
}

torch::Tensor analogy_embed(const torch::Tensor& src, const torch::Tensor& dst,
                            const torch::Tensor& image) {
  if (!src.sizes().equals(dst.sizes()) || !src.sizes().equals(image.sizes())) {
    std::ostringstream os;
    os << "analogy_embed: shapes " << src.sizes() << ", " << dst.sizes() << ", " << image.sizes();
    throw ShapeError(os.str());
  }
  return dst - src + image;
}

torch::Tensor analogy_embed(const MotionEmbedding& src, const MotionEmbedding& dst,
                            const ImageEmbedding& image) {
  return analogy_embed(src.features, dst.features, image.bottleneck);
}

MotionEmbedding encode_motion(ForecastNet& net, const MotionMap& map) {
  torch::NoGradGuard guard;
  return {net->encode_motion(map.heatmaps().unsqueeze(0)).squeeze(0)};
}

ImageEmbedding encode_image(ForecastNet& net, const Frame& frame) {
  torch::NoGradGuard guard;
  auto f = net->encode_image(frame.pixels().unsqueeze(0));
  ImageEmbedding e;
  e.bottleneck = f.bottleneck.squeeze(0);
  for (auto& s : f.skips) e.skips.push_back(s.squeeze(0));
  return e;
}

ResidualDecomposition decode_residual(ForecastNet& net, const torch::Tensor& embedding,
                                      const std::vector<torch::Tensor>& skips) {
  if (net->arch().residual != ResidualMode::Mask) {
    throw ArgumentError("decode_residual: network predicts a difference map, not a decomposition");
  }
  torch::NoGradGuard guard;
  std::vector<torch::Tensor> batched;
  for (const auto& s : skips) batched.push_back(s.unsqueeze(0));
  auto [mask, content] = net->decode(embedding.unsqueeze(0), batched);
  return ResidualDecomposition(mask.squeeze(0), content.squeeze(0));
}

ForecastResult forecast_frame(ForecastNet& net, const Frame& frame, const MotionMap& current,
                              const MotionMap& target) {
  if (net->arch().residual != ResidualMode::Mask) {
    throw ArgumentError("forecast_frame: network predicts a difference map, not a decomposition");
  }
  torch::NoGradGuard guard;
  auto out = net->forward(frame.pixels().unsqueeze(0), current.heatmaps().unsqueeze(0),
                          target.heatmaps().unsqueeze(0));
  return {Frame(out.frame.squeeze(0)),
          ResidualDecomposition(out.mask.squeeze(0), out.content.squeeze(0))};
}

}  // namespace rmvl
