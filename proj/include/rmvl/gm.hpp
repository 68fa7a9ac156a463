#pragma once

// Motion forecasting network.
//
// A motion encoder embeds structure maps, an image encoder embeds the input frame
// (keeping every stage's activations as skips), and a decoder of dense blocks turns
// the analogy embedding  enc_motion(target) - enc_motion(current) + enc_image(frame)
// into a residual (mask, content) pair. Every dense block feeds the first convolution
// of all later blocks; lower-resolution features are nearest-upsampled first.

#include "rmvl/types.hpp"

#include <nlohmann/json_fwd.hpp>

#include <optional>
#include <string>
#include <vector>

namespace rmvl {

/// How the decoder output is turned into a frame.
enum class ResidualMode {
  Mask,        // frame = m * c + (1 - m) * input
  Difference,  // frame = clamp(input + delta, -1, 1)
};

struct GMArch {
  int64_t height = 64;
  int64_t width = 64;
  int64_t image_channels = 3;
  int64_t joints = 8;
  int64_t stages = 4;      // stride-2 encoder stages; also the number of dense blocks
  int64_t base_width = 8;  // stem width; stage s has min(base_width << s, max_width) channels
  int64_t max_width = 32;
  bool dense = true;
  ResidualMode residual = ResidualMode::Mask;

  int64_t encoder_width(int64_t level) const;
  int64_t block_width(int64_t block) const;  // block in [1, stages]
  void validate() const;
};

nlohmann::json to_json(const GMArch& arch);
GMArch gm_arch_from_json(const nlohmann::json& j);

/// Encoder features: `skips[l]` is the stage-l activation at resolution H / 2^l.
struct EncoderFeatures {
  torch::Tensor bottleneck;
  std::vector<torch::Tensor> skips;
};

/// One incoming dense-connection source of a decoder block.
struct DenseSource {
  std::string name;  // "bottleneck" or "block<i>"
  int64_t origin = 0;  // 0 for the bottleneck, otherwise the 1-based block index
  int64_t channels = 0;
  int64_t source_height = 0;
  int64_t upsample = 1;  // nearest-neighbour factor applied before concatenation
};

struct DenseBlockLayout {
  int64_t block = 0;  // 1-based
  int64_t height = 0;
  int64_t width = 0;
  std::vector<DenseSource> sources;
  int64_t skip_channels = 0;
  int64_t input_channels = 0;  // sum over sources plus skip
  int64_t output_channels = 0;
};

/// Shapes observed while decoding, for checking the wiring against the layout.
struct DecoderTrace {
  struct Block {
    std::vector<std::vector<int64_t>> source_sizes_before;
    std::vector<std::vector<int64_t>> source_sizes_after;
    int64_t concat_channels = 0;
  };
  torch::Tensor embedding;  // the decoder's input, as received
  std::vector<Block> blocks;
};

class EncoderImpl : public torch::nn::Module {
public:
  EncoderImpl(int64_t in_channels, const GMArch& arch);
  EncoderFeatures forward(const torch::Tensor& x);

private:
  torch::nn::Conv2d stem_{nullptr};
  std::vector<torch::nn::Conv2d> down_;
};
TORCH_MODULE(Encoder);

class DenseDecoderImpl : public torch::nn::Module {
public:
  explicit DenseDecoderImpl(const GMArch& arch);

  /// `skips` as produced by the image encoder. Returns the last block's activation.
  torch::Tensor forward(const torch::Tensor& embedding, const std::vector<torch::Tensor>& skips,
                        DecoderTrace* trace = nullptr);

  const std::vector<DenseBlockLayout>& layout() const { return layout_; }
  /// In-channels of block b's first convolution, read from its weight tensor.
  int64_t first_conv_in_channels(int64_t block) const;

private:
  GMArch arch_;
  std::vector<DenseBlockLayout> layout_;
  std::vector<torch::nn::Conv2d> conv_a_;
  std::vector<torch::nn::Conv2d> conv_b_;
};
TORCH_MODULE(DenseDecoder);

/// Batched network outputs. Frames are [B, C, H, W]; mask [B, 1, H, W].
struct GMOutput {
  torch::Tensor frame;
  torch::Tensor mask;     // undefined in Difference mode
  torch::Tensor content;  // residual content, or delta in Difference mode
};

class ForecastNetImpl : public torch::nn::Module {
public:
  explicit ForecastNetImpl(const GMArch& arch);

  const GMArch& arch() const { return arch_; }

  torch::Tensor encode_motion(const torch::Tensor& maps);
  EncoderFeatures encode_image(const torch::Tensor& frames);
  /// Residual decomposition (or delta) from an embedding and image skips.
  std::pair<torch::Tensor, torch::Tensor> decode(const torch::Tensor& embedding,
                                                 const std::vector<torch::Tensor>& skips,
                                                 DecoderTrace* trace = nullptr);

  /// image [B, C, H, W]; current/target maps [B, J, H, W].
  GMOutput forward(const torch::Tensor& image, const torch::Tensor& current_map,
                   const torch::Tensor& target_map, DecoderTrace* trace = nullptr);

  /// Decoder submodule, for layout introspection.
  DenseDecoder decoder() const { return decoder_; }

private:
  void check_input(const torch::Tensor& t, int64_t channels, const char* what) const;

  GMArch arch_;
  Encoder motion_encoder_{nullptr};
  Encoder image_encoder_{nullptr};
  DenseDecoder decoder_{nullptr};
  torch::nn::Conv2d mask_head_{nullptr};
  torch::nn::Conv2d content_head_{nullptr};
};
TORCH_MODULE(ForecastNet);

/// Feature grid in embedding space, [D, h, w].
struct MotionEmbedding {
  torch::Tensor features;
};

struct ImageEmbedding {
  torch::Tensor bottleneck;           // [D, h, w]
  std::vector<torch::Tensor> skips;  // [C_l, H / 2^l, W / 2^l], decreasing resolution
};

// Single-sample operations on the typed values.

MotionEmbedding encode_motion(ForecastNet& net, const MotionMap& map);
ImageEmbedding encode_image(ForecastNet& net, const Frame& frame);

/// dst - src + image bottleneck, elementwise.
torch::Tensor analogy_embed(const MotionEmbedding& src, const MotionEmbedding& dst,
                            const ImageEmbedding& image);
torch::Tensor analogy_embed(const torch::Tensor& src, const torch::Tensor& dst,
                            const torch::Tensor& image);

ResidualDecomposition decode_residual(ForecastNet& net, const torch::Tensor& embedding,
                                      const std::vector<torch::Tensor>& skips);

struct ForecastResult {
  Frame frame;
  ResidualDecomposition residual;
};

/// Predicts the frame showing `target` from `frame`, which shows `current`. Mask mode only.
ForecastResult forecast_frame(ForecastNet& net, const Frame& frame, const MotionMap& current,
                              const MotionMap& target);

}  // namespace rmvl
