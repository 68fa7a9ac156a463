#include "rmvl/image_io.hpp"

#include "rmvl/errors.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

namespace fs = std::filesystem;

namespace rmvl {

Image8 make_image(int width, int height, int channels, uint8_t fill) {
  Image8 img;
  img.width = width;
  img.height = height;
  img.channels = channels;
  img.data.assign(static_cast<size_t>(width) * height * channels, fill);
  return img;
}

void write_file_atomic(const fs::path& path, const std::string& bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed: " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("rename " + tmp.string() + " -> " + path.string() + ": " + ec.message());
}

Image8 read_png(const fs::path& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.string().c_str())) {
    throw IoError("cannot read PNG " + path.string() + ": " + image.message);
  }
  const bool gray = (image.format & PNG_FORMAT_FLAG_COLOR) == 0;
  image.format = gray ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  Image8 out = make_image(static_cast<int>(image.width), static_cast<int>(image.height),
                          gray ? 1 : 3);
  if (!png_image_finish_read(&image, nullptr, out.data.data(), 0, nullptr)) {
    png_image_free(&image);
    throw IoError("cannot decode PNG " + path.string() + ": " + image.message);
  }
  return out;
}

void write_png(const fs::path& path, const Image8& img) {
  if (img.channels != 1 && img.channels != 3) throw ArgumentError("write_png: 1 or 3 channels");
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width);
  image.height = static_cast<png_uint_32>(img.height);
  image.format = img.channels == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  png_alloc_size_t size = 0;
  if (!png_image_write_get_memory_size(image, size, 0, img.data.data(), 0, nullptr)) {
    throw IoError("cannot size PNG for " + path.string() + ": " + image.message);
  }
  std::string buffer(size, '\0');
  if (!png_image_write_to_memory(&image, buffer.data(), &size, 0, img.data.data(), 0, nullptr)) {
    throw IoError("cannot encode PNG " + path.string() + ": " + image.message);
  }
  buffer.resize(size);
  write_file_atomic(path, buffer);
}

namespace {

uint8_t to_byte(float v) { return static_cast<uint8_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f)); }

}  // namespace

Image8 tensor_to_image(const torch::Tensor& chw) {
  detail::require_rank(chw, 3, "tensor_to_image");
  auto t = detail::as_float_cpu(chw);
  const int c = static_cast<int>(t.size(0));
  const int h = static_cast<int>(t.size(1));
  const int w = static_cast<int>(t.size(2));
  Image8 img = make_image(w, h, c);
  auto acc = t.accessor<float, 3>();
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int ch = 0; ch < c; ++ch) img.at(x, y)[ch] = to_byte((acc[ch][y][x] + 1.0f) * 0.5f);
  return img;
}

Image8 mask_to_image(const torch::Tensor& mask) {
  detail::require_rank(mask, 3, "mask_to_image");
  auto t = detail::as_float_cpu(mask);
  if (t.size(0) != 1) throw ShapeError("mask_to_image: mask must have one channel");
  Image8 img = make_image(static_cast<int>(t.size(2)), static_cast<int>(t.size(1)), 1);
  auto acc = t.accessor<float, 3>();
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) img.at(x, y)[0] = to_byte(acc[0][y][x]);
  return img;
}

torch::Tensor image_to_tensor(const Image8& img) {
  auto t = torch::empty({img.channels, img.height, img.width}, torch::kFloat32);
  auto acc = t.accessor<float, 3>();
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int ch = 0; ch < img.channels; ++ch)
        acc[ch][y][x] = static_cast<float>(img.at(x, y)[ch]) / 255.0f * 2.0f - 1.0f;
  return t;
}

Frame load_frame(const fs::path& path) { return Frame(image_to_tensor(read_png(path))); }

void save_frame(const fs::path& path, const Frame& frame) {
  write_png(path, tensor_to_image(frame.pixels()));
}

std::string clip_frame_name(int64_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "frame_%04lld.png", static_cast<long long>(index));
  return buf;
}

VideoClip load_clip(const fs::path& dir) {
  std::vector<Frame> frames;
  for (int64_t k = 0;; ++k) {
    const fs::path p = dir / clip_frame_name(k);
    if (!fs::exists(p)) break;
    frames.push_back(load_frame(p));
  }
  if (frames.empty()) throw IoError("no frames found in " + dir.string());
  return VideoClip(frames);
}

void save_clip(const fs::path& dir, const VideoClip& clip) {
  fs::create_directories(dir);
  for (int64_t k = 0; k < clip.length(); ++k) {
    write_png(dir / clip_frame_name(k), tensor_to_image(clip.frames()[k]));
  }
  // Drop stale frames from a previous, longer clip so load_clip sees exactly this one.
  for (int64_t k = clip.length();; ++k) {
    const fs::path p = dir / clip_frame_name(k);
    if (!fs::exists(p)) break;
    fs::remove(p);
  }
}

namespace {

Image8 to_rgb(const Image8& img) {
  if (img.channels == 3) return img;
  Image8 out = make_image(img.width, img.height, 3);
  for (size_t i = 0; i < img.data.size(); ++i) {
    std::fill_n(out.data.begin() + static_cast<std::ptrdiff_t>(3 * i), 3, img.data[i]);
  }
  return out;
}

}  // namespace

Image8 hconcat(const std::vector<Image8>& images, int gap) {
  if (images.empty()) return {};
  const int h = images.front().height;
  int w = 0;
  for (const auto& im : images) {
    if (im.height != h) throw ShapeError("hconcat: heights differ");
    w += im.width;
  }
  w += gap * static_cast<int>(images.size() - 1);
  Image8 out = make_image(w, h, 3, 255);
  int x0 = 0;
  for (const auto& im : images) {
    const Image8 rgb = to_rgb(im);
    for (int y = 0; y < h; ++y) std::copy_n(rgb.at(0, y), 3 * rgb.width, out.at(x0, y));
    x0 += im.width + gap;
  }
  return out;
}

Image8 vconcat(const std::vector<Image8>& images, int gap) {
  if (images.empty()) return {};
  const int w = images.front().width;
  int h = 0;
  for (const auto& im : images) {
    if (im.width != w) throw ShapeError("vconcat: widths differ");
    h += im.height;
  }
  h += gap * static_cast<int>(images.size() - 1);
  Image8 out = make_image(w, h, 3, 255);
  int y0 = 0;
  for (const auto& im : images) {
    const Image8 rgb = to_rgb(im);
    for (int y = 0; y < rgb.height; ++y) std::copy_n(rgb.at(0, y), 3 * w, out.at(0, y0 + y));
    y0 += im.height + gap;
  }
  return out;
}

// ---------------------------------------------------------------------------
// GIF89a. Frames are mapped onto a fixed 6x6x6 colour cube plus a 40-step gray
// ramp, then LZW-coded with variable code width up to 12 bits.

namespace {

constexpr int kCubeLevels = 6;
constexpr int kCubeSize = kCubeLevels * kCubeLevels * kCubeLevels;  // 216
constexpr int kGrayLevels = 40;

std::array<std::array<uint8_t, 3>, 256> gif_palette() {
  std::array<std::array<uint8_t, 3>, 256> pal{};
  for (int r = 0; r < kCubeLevels; ++r)
    for (int g = 0; g < kCubeLevels; ++g)
      for (int b = 0; b < kCubeLevels; ++b)
        pal[(r * kCubeLevels + g) * kCubeLevels + b] = {static_cast<uint8_t>(r * 51),
                                                        static_cast<uint8_t>(g * 51),
                                                        static_cast<uint8_t>(b * 51)};
  for (int i = 0; i < kGrayLevels; ++i) {
    const auto v = static_cast<uint8_t>(std::lround(i * 255.0 / (kGrayLevels - 1)));
    pal[kCubeSize + i] = {v, v, v};
  }
  return pal;
}

uint8_t palette_index(const uint8_t* rgb) {
  const int r = rgb[0], g = rgb[1], b = rgb[2];
  if (std::max({r, g, b}) - std::min({r, g, b}) < 8) {
    return static_cast<uint8_t>(kCubeSize + std::lround((r + g + b) / 3.0 * (kGrayLevels - 1) / 255.0));
  }
  auto q = [](int v) { return static_cast<int>(std::lround(v / 51.0)); };
  return static_cast<uint8_t>((q(r) * kCubeLevels + q(g)) * kCubeLevels + q(b));
}

class BitPacker {
public:
  void put(uint32_t code, int width) {
    acc_ |= code << nbits_;
    nbits_ += width;
    while (nbits_ >= 8) {
      bytes_.push_back(static_cast<char>(acc_ & 0xFF));
      acc_ >>= 8;
      nbits_ -= 8;
    }
  }
  std::string finish() {
    if (nbits_ > 0) bytes_.push_back(static_cast<char>(acc_ & 0xFF));
    acc_ = 0;
    nbits_ = 0;
    return std::move(bytes_);
  }

private:
  uint32_t acc_ = 0;
  int nbits_ = 0;
  std::string bytes_;
};

std::string lzw_encode(const std::vector<uint8_t>& indices) {
  constexpr int kMinCode = 8;
  constexpr uint32_t kClear = 1u << kMinCode;
  constexpr uint32_t kEnd = kClear + 1;
  constexpr uint32_t kMaxCodes = 4096;

  BitPacker bits;
  std::map<std::pair<uint32_t, uint8_t>, uint32_t> dict;
  uint32_t next = kEnd + 1;
  int width = kMinCode + 1;
  bits.put(kClear, width);

  if (!indices.empty()) {
    uint32_t prefix = indices[0];
    for (size_t i = 1; i < indices.size(); ++i) {
      const uint8_t k = indices[i];
      auto it = dict.find({prefix, k});
      if (it != dict.end()) {
        prefix = it->second;
        continue;
      }
      bits.put(prefix, width);
      if (next < kMaxCodes) {
        dict.emplace(std::make_pair(prefix, k), next);
        if (next == (1u << width) && width < 12) ++width;
        ++next;
      } else {
        bits.put(kClear, width);
        dict.clear();
        next = kEnd + 1;
        width = kMinCode + 1;
      }
      prefix = k;
    }
    bits.put(prefix, width);
  }
  bits.put(kEnd, width);
  return bits.finish();
}

void put_u16(std::string& s, int v) {
  s.push_back(static_cast<char>(v & 0xFF));
  s.push_back(static_cast<char>((v >> 8) & 0xFF));
}

}  // namespace

void write_gif(const fs::path& path, const std::vector<Image8>& frames, int delay_cs) {
  if (frames.empty()) throw ArgumentError("write_gif: no frames");
  const int w = frames.front().width;
  const int h = frames.front().height;
  for (const auto& f : frames) {
    if (f.width != w || f.height != h) throw ShapeError("write_gif: frames differ in size");
  }
  std::string out = "GIF89a";
  put_u16(out, w);
  put_u16(out, h);
  out.push_back(static_cast<char>(0xF7));  // global colour table, 8 bits/channel, 256 entries
  out.push_back(0);
  out.push_back(0);
  for (const auto& c : gif_palette()) out.append(reinterpret_cast<const char*>(c.data()), 3);

  // NETSCAPE2.0 loop extension: infinite loop.
  out += "\x21\xFF\x0B";
  out += "NETSCAPE2.0";
  out += std::string("\x03\x01\x00\x00\x00", 5);

  for (const auto& frame : frames) {
    const Image8 rgb = to_rgb(frame);
    std::vector<uint8_t> idx(static_cast<size_t>(w) * h);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) idx[static_cast<size_t>(y) * w + x] = palette_index(rgb.at(x, y));

    out += "\x21\xF9\x04";
    out.push_back(0);
    put_u16(out, delay_cs);
    out.push_back(0);
    out.push_back(0);

    out.push_back(0x2C);
    put_u16(out, 0);
    put_u16(out, 0);
    put_u16(out, w);
    put_u16(out, h);
    out.push_back(0);

    out.push_back(8);  // LZW minimum code size
    const std::string data = lzw_encode(idx);
    for (size_t i = 0; i < data.size(); i += 255) {
      const size_t n = std::min<size_t>(255, data.size() - i);
      out.push_back(static_cast<char>(n));
      out.append(data, i, n);
    }
    out.push_back(0);
  }
  out.push_back(0x3B);
  write_file_atomic(path, out);
}

}  // namespace rmvl
