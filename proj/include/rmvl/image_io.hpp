#pragma once

// 8-bit image files for frames, clips, masks and qualitative strips.
//
// Pixels are stored interleaved (HWC). Conversion to the internal [-1, 1] range is
// v / 255 * 2 - 1 and back is round((x + 1) / 2 * 255).

#include "rmvl/types.hpp"

#include <cstdint>
#include <filesystem>
#include <vector>

namespace rmvl {

struct Image8 {
  int width = 0;
  int height = 0;
  int channels = 0;  // 1 (gray) or 3 (RGB)
  std::vector<uint8_t> data;

  uint8_t* at(int x, int y) { return data.data() + (static_cast<size_t>(y) * width + x) * channels; }
  const uint8_t* at(int x, int y) const {
    return data.data() + (static_cast<size_t>(y) * width + x) * channels;
  }
};

Image8 make_image(int width, int height, int channels, uint8_t fill = 0);

Image8 read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const Image8& image);

/// [C, H, W] tensor in [-1, 1] to an 8-bit image.
Image8 tensor_to_image(const torch::Tensor& chw);
/// [1, H, W] mask in [0, 1] to an 8-bit grayscale image.
Image8 mask_to_image(const torch::Tensor& mask);
/// 8-bit image to a [C, H, W] float tensor in [-1, 1].
torch::Tensor image_to_tensor(const Image8& image);

Frame load_frame(const std::filesystem::path& path);
void save_frame(const std::filesystem::path& path, const Frame& frame);

std::string clip_frame_name(int64_t index);
/// Reads frame_0000.png, frame_0001.png, ... until the sequence ends.
VideoClip load_clip(const std::filesystem::path& dir);
void save_clip(const std::filesystem::path& dir, const VideoClip& clip);

/// Concatenates images left to right; heights must match, gray inputs are promoted to RGB.
Image8 hconcat(const std::vector<Image8>& images, int gap = 0);
/// Concatenates images top to bottom; widths must match.
Image8 vconcat(const std::vector<Image8>& images, int gap = 0);

/// Writes an animated GIF89a that loops forever. `delay_cs` is the per-frame delay in 1/100 s.
void write_gif(const std::filesystem::path& path, const std::vector<Image8>& frames,
               int delay_cs = 10);

/// Writes `bytes` to `path` via a sibling temporary file and rename, so readers never see a
/// partial file.
void write_file_atomic(const std::filesystem::path& path, const std::string& bytes);

}  // namespace rmvl
