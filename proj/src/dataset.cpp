#include "rmvl/dataset.hpp"

#include "rmvl/errors.hpp"
#include "rmvl/image_io.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace rmvl {

std::string to_string(Split split) {
  switch (split) {
    case Split::ForecasterTrain: return "forecaster-train";
    case Split::RefinerTrain: return "refiner-train";
    case Split::Eval: return "eval";
  }
  return "eval";
}

Split split_from_string(const std::string& name) {
  if (name == "forecaster-train") return Split::ForecasterTrain;
  if (name == "refiner-train") return Split::RefinerTrain;
  if (name == "eval") return Split::Eval;
  throw ArgumentError("unknown split '" + name + "'");
}

namespace {

constexpr int64_t kMaxClasses = 4;

// Skeleton proportions in units of frame height, before per-clip scale.
constexpr double kTorso = 0.20;
constexpr double kUpperArm = 0.11;
constexpr double kForearm = 0.10;
constexpr double kLeg = 0.22;
constexpr double kHeadOffset = 0.065;
constexpr double kHeadRadius = 0.05;
constexpr double kLimbRadius = 0.028;

enum JointId { kNeck, kLeftElbow, kLeftHand, kRightElbow, kRightHand, kHip, kLeftFoot, kRightFoot };

constexpr std::array<std::pair<int, int>, 7> kBones = {{{kNeck, kHip},
                                                        {kNeck, kLeftElbow},
                                                        {kLeftElbow, kLeftHand},
                                                        {kNeck, kRightElbow},
                                                        {kRightElbow, kRightHand},
                                                        {kHip, kLeftFoot},
                                                        {kHip, kRightFoot}}};

struct Appearance {
  std::array<double, 3> figure{};
  std::array<double, 3> bg_a{};
  std::array<double, 3> bg_b{};
  double freq_x = 0, freq_y = 0, offset_x = 0, offset_y = 0;
  uint64_t noise_seed = 0;
};

std::mt19937_64 clip_rng(uint64_t seed, int64_t index) {
  std::seed_seq seq{static_cast<uint32_t>(seed & 0xFFFFFFFFu), static_cast<uint32_t>(seed >> 32),
                    static_cast<uint32_t>(index), 0x726d766cU};
  return std::mt19937_64(seq);
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

void validate(const DatasetConfig& c) {
  if (c.clips < 1) throw ArgumentError("dataset: clips must be positive");
  if (c.classes < 1 || c.classes > kMaxClasses) {
    throw ArgumentError("dataset: classes must be in [1, 4]");
  }
  if (c.joints != kSkeletonJoints) {
    throw ArgumentError("dataset: the synthetic skeleton has exactly 8 joints");
  }
  if (c.height < kMinFrameSide || c.width < kMinFrameSide) {
    throw ArgumentError("dataset: frames must be at least 8x8");
  }
  if (c.clip_length < kMinClipLength) {
    throw ArgumentError("dataset: clip_length must be at least " + std::to_string(kMinClipLength));
  }
}

ClipMotion draw_motion(const DatasetConfig& config, int64_t index, std::mt19937_64& rng) {
  ClipMotion m;
  m.motion_class = index % config.classes;
  m.scale = uniform(rng, 0.85, 1.0);
  m.center_y = uniform(rng, 0.50, 0.60);
  m.phase = uniform(rng, 0.0, 2.0 * std::numbers::pi);
  m.amplitude = uniform(rng, 0.8, 1.0);
  const double speed = std::min(uniform(rng, 0.003, 0.006),
                                0.35 / static_cast<double>(std::max<int64_t>(1, config.clip_length - 1)));
  const double sign = uniform(rng, 0.0, 1.0) < 0.5 ? -1.0 : 1.0;
  const double jitter = uniform(rng, -0.03, 0.03);
  if (m.motion_class == 0) {
    m.velocity = sign * speed;
    m.center_x = 0.5 - m.velocity * static_cast<double>(config.clip_length - 1) / 2.0 + jitter;
  } else {
    m.center_x = uniform(rng, 0.36, 0.64);
  }
  return m;
}

Appearance draw_appearance(std::mt19937_64& rng) {
  Appearance a;
  // Saturated figure colour on a muted, darker background.
  const double hue = uniform(rng, 0.0, 6.0);
  const double frac = hue - std::floor(hue);
  const std::array<std::array<double, 3>, 6> wheel = {{{1, frac, 0},
                                                       {1 - frac, 1, 0},
                                                       {0, 1, frac},
                                                       {0, 1 - frac, 1},
                                                       {frac, 0, 1},
                                                       {1, 0, 1 - frac}}};
  const auto& rgb = wheel[static_cast<size_t>(hue) % 6];
  for (int c = 0; c < 3; ++c) a.figure[static_cast<size_t>(c)] = 0.25 + 0.75 * rgb[static_cast<size_t>(c)];
  const double base = uniform(rng, 0.15, 0.35);
  for (int c = 0; c < 3; ++c) {
    a.bg_a[static_cast<size_t>(c)] = base + uniform(rng, -0.08, 0.08);
    a.bg_b[static_cast<size_t>(c)] = base + uniform(rng, 0.05, 0.2);
  }
  a.freq_x = uniform(rng, 0.08, 0.3);
  a.freq_y = uniform(rng, 0.08, 0.3);
  a.offset_x = uniform(rng, 0.0, 6.3);
  a.offset_y = uniform(rng, 0.0, 6.3);
  a.noise_seed = rng();
  return a;
}

double segment_distance(double px, double py, double ax, double ay, double bx, double by) {
  const double dx = bx - ax, dy = by - ay;
  const double len2 = dx * dx + dy * dy;
  double t = len2 > 0 ? ((px - ax) * dx + (py - ay) * dy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double qx = ax + t * dx - px, qy = ay + t * dy - py;
  return std::sqrt(qx * qx + qy * qy);
}

torch::Tensor render_background(const DatasetConfig& config, const Appearance& a) {
  auto bg = torch::empty({3, config.height, config.width}, torch::kFloat32);
  auto acc = bg.accessor<float, 3>();
  std::mt19937_64 noise(a.noise_seed);
  for (int64_t y = 0; y < config.height; ++y) {
    for (int64_t x = 0; x < config.width; ++x) {
      const double w = 0.5 + 0.5 * std::sin(a.freq_x * static_cast<double>(x) + a.offset_x) *
                                 std::sin(a.freq_y * static_cast<double>(y) + a.offset_y);
      const double grain = uniform(noise, -0.03, 0.03);
      for (int c = 0; c < 3; ++c) {
        const auto cu = static_cast<size_t>(c);
        const double v = (1 - w) * a.bg_a[cu] + w * a.bg_b[cu] + grain;
        acc[c][y][x] = static_cast<float>(std::clamp(v, 0.0, 1.0));
      }
    }
  }
  return bg;
}

torch::Tensor draw_figure(const DatasetConfig& config, const Appearance& a,
                          const torch::Tensor& background, const Pose& pose, double scale) {
  auto img = background.clone();
  auto acc = img.accessor<float, 3>();
  const double W = static_cast<double>(config.width);
  const double H = static_cast<double>(config.height);
  std::array<std::pair<double, double>, kSkeletonJoints> px{};
  for (int j = 0; j < kSkeletonJoints; ++j) px[static_cast<size_t>(j)] = {pose[j].x * W, pose[j].y * H};
  const double limb_r = kLimbRadius * H;
  const double head_r = kHeadRadius * scale * H;
  const double head_x = px[kNeck].first;
  const double head_y = px[kNeck].second - kHeadOffset * scale * H;
  for (int64_t y = 0; y < config.height; ++y) {
    for (int64_t x = 0; x < config.width; ++x) {
      const double fx = static_cast<double>(x), fy = static_cast<double>(y);
      double cover = 0.0;
      for (const auto& [i, j] : kBones) {
        const auto& p = px[static_cast<size_t>(i)];
        const auto& q = px[static_cast<size_t>(j)];
        const double d = segment_distance(fx, fy, p.first, p.second, q.first, q.second);
        cover = std::max(cover, std::clamp(limb_r + 0.5 - d, 0.0, 1.0));
      }
      const double dh = std::hypot(fx - head_x, fy - head_y);
      cover = std::max(cover, std::clamp(head_r + 0.5 - dh, 0.0, 1.0));
      if (cover <= 0.0) continue;
      for (int c = 0; c < 3; ++c) {
        const double v = (1 - cover) * acc[c][y][x] + cover * a.figure[static_cast<size_t>(c)];
        acc[c][y][x] = static_cast<float>(v);
      }
    }
  }
  return img * 2.0f - 1.0f;
}

json motion_to_json(const ClipMotion& m) {
  return {{"class", m.motion_class}, {"center_x", m.center_x}, {"center_y", m.center_y},
          {"scale", m.scale},        {"phase", m.phase},       {"amplitude", m.amplitude},
          {"velocity", m.velocity}};
}

ClipMotion motion_from_json(const json& j) {
  ClipMotion m;
  m.motion_class = j.at("class").get<int64_t>();
  m.center_x = j.at("center_x").get<double>();
  m.center_y = j.at("center_y").get<double>();
  m.scale = j.at("scale").get<double>();
  m.phase = j.at("phase").get<double>();
  m.amplitude = j.at("amplitude").get<double>();
  m.velocity = j.at("velocity").get<double>();
  return m;
}

std::string clip_id(int64_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "clip_%04lld", static_cast<long long>(index));
  return buf;
}

}  // namespace

double class_period(int64_t motion_class) {
  switch (motion_class) {
    case 1: return 16.0;
    case 2: return 12.0;
    case 3: return 20.0;
    default: return 0.0;
  }
}

const char* class_name(int64_t motion_class) {
  switch (motion_class) {
    case 0: return "drift";
    case 1: return "wave";
    case 2: return "jumping-jack";
    case 3: return "squat";
    default: return "unknown";
  }
}

Pose ClipMotion::pose_at(double t) const {
  double cx = center_x;
  double cy = center_y;
  double upper = 0.35;   // upper-arm angle from hanging straight down
  double fore = 0.55;    // forearm angle
  double leg = 0.15;     // leg spread angle
  const double period = class_period(motion_class);
  const double u =
      period > 0 ? 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * t / period + phase) : 0.0;
  const double a = amplitude;
  switch (motion_class) {
    case 0:
      cx += velocity * t;
      break;
    case 1:
      upper = 0.3 + 1.9 * a * u;
      fore = upper + 0.6 * a * u;
      break;
    case 2:
      upper = 0.25 + 2.3 * a * u;
      fore = upper;
      leg = 0.08 + 0.32 * a * u;
      cy -= 0.03 * a * u;
      break;
    case 3:
      cy += 0.07 * a * u;
      upper = 0.3 + 1.2 * a * u;
      fore = upper + 0.3;
      leg = 0.15 + 0.25 * a * u;
      break;
    default:
      throw ArgumentError("ClipMotion: unknown motion class");
  }
  const double s = scale;
  std::vector<Joint> j(kSkeletonJoints);
  j[kHip] = {cx, cy, true};
  j[kNeck] = {cx, cy - kTorso * s, true};
  j[kLeftElbow] = {j[kNeck].x - kUpperArm * s * std::sin(upper), j[kNeck].y + kUpperArm * s * std::cos(upper), true};
  j[kLeftHand] = {j[kLeftElbow].x - kForearm * s * std::sin(fore), j[kLeftElbow].y + kForearm * s * std::cos(fore), true};
  j[kRightElbow] = {j[kNeck].x + kUpperArm * s * std::sin(upper), j[kNeck].y + kUpperArm * s * std::cos(upper), true};
  j[kRightHand] = {j[kRightElbow].x + kForearm * s * std::sin(fore), j[kRightElbow].y + kForearm * s * std::cos(fore), true};
  j[kLeftFoot] = {cx - kLeg * s * std::sin(leg), cy + kLeg * s * std::cos(leg), true};
  j[kRightFoot] = {cx + kLeg * s * std::sin(leg), cy + kLeg * s * std::cos(leg), true};
  for (auto& jt : j) {
    jt.visible = jt.x >= 0.0 && jt.x <= 1.0 && jt.y >= 0.0 && jt.y <= 1.0;
  }
  return Pose(std::move(j));
}

ClipMotion sample_clip_motion(const DatasetConfig& config, uint64_t seed, int64_t index) {
  validate(config);
  auto rng = clip_rng(seed, index);
  return draw_motion(config, index, rng);
}

torch::Tensor render_clip_frame(const DatasetConfig& config, uint64_t seed, int64_t index,
                                const ClipMotion& motion, double t) {
  validate(config);
  auto rng = clip_rng(seed, index);
  (void)draw_motion(config, index, rng);
  const Appearance look = draw_appearance(rng);
  const auto bg = render_background(config, look);
  return draw_figure(config, look, bg, motion.pose_at(t), motion.scale);
}

std::vector<const ClipEntry*> DatasetManifest::split(Split which) const {
  std::vector<const ClipEntry*> out;
  for (const auto& c : clips) {
    if (c.split == which) out.push_back(&c);
  }
  return out;
}

void DatasetManifest::save(const fs::path& manifest_path) const {
  json j;
  j["format"] = "rmvl-dataset";
  j["version"] = 1;
  j["seed"] = seed;
  j["config"] = {{"clips", config.clips},   {"clip_length", config.clip_length},
                 {"height", config.height}, {"width", config.width},
                 {"joints", config.joints}, {"classes", config.classes}};
  j["clips"] = json::array();
  for (const auto& c : clips) {
    j["clips"].push_back({{"id", c.id},
                          {"class", c.motion_class},
                          {"class_name", class_name(c.motion_class)},
                          {"length", c.length},
                          {"split", to_string(c.split)},
                          {"frames", c.frames_dir},
                          {"keypoints", c.keypoints_file},
                          {"motion", motion_to_json(c.motion)}});
  }
  write_file_atomic(manifest_path, j.dump(2) + "\n");
}

DatasetManifest DatasetManifest::load(const fs::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw IoError("cannot open manifest " + manifest_path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw IoError("malformed manifest " + manifest_path.string() + ": " + e.what());
  }
  if (j.value("format", "") != "rmvl-dataset") {
    throw IoError(manifest_path.string() + " is not an rmvl dataset manifest");
  }
  DatasetManifest m;
  m.root = manifest_path.parent_path();
  try {
    m.seed = j.at("seed").get<uint64_t>();
    const auto& c = j.at("config");
    m.config.clips = c.at("clips").get<int64_t>();
    m.config.clip_length = c.at("clip_length").get<int64_t>();
    m.config.height = c.at("height").get<int64_t>();
    m.config.width = c.at("width").get<int64_t>();
    m.config.joints = c.at("joints").get<int64_t>();
    m.config.classes = c.at("classes").get<int64_t>();
    for (const auto& e : j.at("clips")) {
      ClipEntry entry;
      entry.id = e.at("id").get<std::string>();
      entry.motion_class = e.at("class").get<int64_t>();
      entry.length = e.at("length").get<int64_t>();
      entry.split = split_from_string(e.at("split").get<std::string>());
      entry.frames_dir = e.at("frames").get<std::string>();
      entry.keypoints_file = e.at("keypoints").get<std::string>();
      entry.motion = motion_from_json(e.at("motion"));
      m.clips.push_back(std::move(entry));
    }
  } catch (const json::exception& e) {
    throw IoError("malformed manifest " + manifest_path.string() + ": " + e.what());
  }
  return m;
}

void save_keypoints(const fs::path& path, const std::string& id, const PoseSequence& poses) {
  json frames = json::array();
  for (const auto& p : poses.poses()) {
    json joints = json::array();
    for (const auto& jt : p.joints()) joints.push_back({jt.x, jt.y, jt.visible ? 1 : 0});
    frames.push_back(std::move(joints));
  }
  json j = {{"clip", id}, {"joints", poses.joints()}, {"frames", std::move(frames)}};
  write_file_atomic(path, j.dump() + "\n");
}

PoseSequence load_keypoints(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open keypoints " + path.string());
  try {
    json j;
    in >> j;
    std::vector<Pose> poses;
    for (const auto& f : j.at("frames")) {
      std::vector<Joint> joints;
      for (const auto& jt : f) {
        joints.push_back({jt.at(0).get<double>(), jt.at(1).get<double>(), jt.at(2).get<int>() != 0});
      }
      poses.emplace_back(std::move(joints));
    }
    return PoseSequence(std::move(poses));
  } catch (const json::exception& e) {
    throw IoError("malformed keypoints " + path.string() + ": " + e.what());
  }
}

DatasetManifest synthesize_dataset(const DatasetConfig& config, uint64_t seed, const fs::path& root) {
  validate(config);
  std::error_code ec;
  fs::create_directories(root, ec);
  if (ec || !fs::is_directory(root)) {
    throw IoError("cannot create dataset root " + root.string() + (ec ? ": " + ec.message() : ""));
  }
  DatasetManifest manifest;
  manifest.root = root;
  manifest.seed = seed;
  manifest.config = config;
  for (int64_t i = 0; i < config.clips; ++i) {
    auto rng = clip_rng(seed, i);
    ClipEntry entry;
    entry.id = clip_id(i);
    entry.motion = draw_motion(config, i, rng);
    entry.motion_class = entry.motion.motion_class;
    entry.length = config.clip_length;
    entry.split = static_cast<Split>((i / config.classes) % 3);
    entry.frames_dir = "clips/" + entry.id;
    entry.keypoints_file = "clips/" + entry.id + "/keypoints.json";

    const Appearance look = draw_appearance(rng);
    const auto bg = render_background(config, look);
    std::vector<Pose> poses;
    const fs::path dir = root / entry.frames_dir;
    fs::create_directories(dir);
    for (int64_t t = 0; t < config.clip_length; ++t) {
      poses.push_back(entry.motion.pose_at(static_cast<double>(t)));
      const auto frame = draw_figure(config, look, bg, poses.back(), entry.motion.scale);
      write_png(dir / clip_frame_name(t), tensor_to_image(frame));
    }
    save_keypoints(root / entry.keypoints_file, entry.id, PoseSequence(std::move(poses)));
    manifest.clips.push_back(std::move(entry));
  }
  manifest.save(root / "manifest.json");
  return manifest;
}

ClipBatch load_split(const DatasetManifest& manifest, Split which) {
  const auto entries = manifest.split(which);
  ClipBatch batch;
  if (entries.empty()) return batch;
  int64_t len = entries.front()->length;
  for (const auto* e : entries) len = std::min(len, e->length);
  std::vector<torch::Tensor> frames, coords, visible;
  for (const auto* e : entries) {
    const VideoClip clip = load_clip(manifest.root / e->frames_dir);
    const PoseSequence poses = load_keypoints(manifest.root / e->keypoints_file);
    if (clip.length() < len || poses.length() < len) {
      throw IoError("clip " + e->id + " is shorter than its manifest length");
    }
    frames.push_back(clip.frames().slice(0, 0, len));
    auto c = torch::empty({len, poses.joints(), 2}, torch::kFloat32);
    auto v = torch::empty({len, poses.joints()}, torch::kBool);
    for (int64_t t = 0; t < len; ++t) {
      for (int64_t j = 0; j < poses.joints(); ++j) {
        c[t][j][0] = poses[t][j].x;
        c[t][j][1] = poses[t][j].y;
        v[t][j] = poses[t][j].visible;
      }
    }
    coords.push_back(c);
    visible.push_back(v);
    batch.ids.push_back(e->id);
    batch.classes.push_back(e->motion_class);
  }
  batch.frames = torch::stack(frames);
  batch.coords = torch::stack(coords);
  batch.visible = torch::stack(visible);
  return batch;
}

ClipBatch subset(const ClipBatch& batch, const std::vector<int64_t>& rows) {
  ClipBatch out;
  if (rows.empty()) return out;
  auto index = torch::tensor(rows, torch::kLong);
  for (int64_t r : rows) {
    if (r < 0 || r >= batch.size()) throw ArgumentError("subset: row out of range");
    out.ids.push_back(batch.ids[static_cast<size_t>(r)]);
    out.classes.push_back(batch.classes[static_cast<size_t>(r)]);
  }
  out.frames = batch.frames.index_select(0, index);
  out.coords = batch.coords.index_select(0, index);
  out.visible = batch.visible.index_select(0, index);
  return out;
}

}  // namespace rmvl
