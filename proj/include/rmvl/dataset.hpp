#pragma once

// Synthetic articulated-motion corpus.
//
// Each clip shows one stick figure over a static textured background. Joint
// trajectories are closed-form functions of time whose shape depends on the clip's
// motion class; per-clip parameters (placement, phase, amplitude, colours) are drawn
// from an RNG seeded by (dataset seed, clip index), so every clip is reproducible on
// its own.

#include "rmvl/pose.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace rmvl {

inline constexpr int64_t kSkeletonJoints = 8;
/// Ten observed frames plus 32 predicted ones.
inline constexpr int64_t kMinClipLength = 42;

enum class Split { ForecasterTrain, RefinerTrain, Eval };

std::string to_string(Split split);
Split split_from_string(const std::string& name);

struct DatasetConfig {
  int64_t clips = 12;
  int64_t clip_length = 48;
  int64_t height = 64;
  int64_t width = 64;
  int64_t joints = kSkeletonJoints;
  int64_t classes = 4;
};

/// Closed-form motion of one clip. Evaluating `pose_at` at integer t gives the
/// keypoints stored for frame t.
struct ClipMotion {
  int64_t motion_class = 0;
  double center_x = 0.5;
  double center_y = 0.6;
  double scale = 1.0;
  double phase = 0.0;
  double amplitude = 1.0;
  double velocity = 0.0;  // horizontal drift per frame, drift class only

  Pose pose_at(double t) const;
};

/// Period in frames of the periodic motion classes (class 0 is a constant-velocity drift).
double class_period(int64_t motion_class);
const char* class_name(int64_t motion_class);

struct ClipEntry {
  std::string id;
  int64_t motion_class = 0;
  int64_t length = 0;
  Split split = Split::Eval;
  std::string frames_dir;      // relative to the manifest root
  std::string keypoints_file;  // relative to the manifest root
  ClipMotion motion;
};

struct DatasetManifest {
  std::filesystem::path root;
  uint64_t seed = 0;
  DatasetConfig config;
  std::vector<ClipEntry> clips;

  std::vector<const ClipEntry*> split(Split which) const;

  void save(const std::filesystem::path& manifest_path) const;
  static DatasetManifest load(const std::filesystem::path& manifest_path);
};

/// Writes frames, keypoints and manifest.json under `root`; returns the manifest.
/// Class of clip i is i % classes; split is (i / classes) % 3, so every split sees every
/// class and clip counts divisible by 3 * classes split evenly.
DatasetManifest synthesize_dataset(const DatasetConfig& config, uint64_t seed,
                                   const std::filesystem::path& root);

/// Draws the motion parameters for clip `index` without rendering anything.
ClipMotion sample_clip_motion(const DatasetConfig& config, uint64_t seed, int64_t index);

/// Renders frame t of a clip as [3, H, W] in [-1, 1].
torch::Tensor render_clip_frame(const DatasetConfig& config, uint64_t seed, int64_t index,
                                const ClipMotion& motion, double t);

/// Keypoints file contents as a pose sequence.
PoseSequence load_keypoints(const std::filesystem::path& path);
void save_keypoints(const std::filesystem::path& path, const std::string& clip_id,
                    const PoseSequence& poses);

/// Frames and keypoints of several clips held in memory for training and evaluation.
struct ClipBatch {
  std::vector<std::string> ids;
  std::vector<int64_t> classes;
  torch::Tensor frames;   // [N, T, 3, H, W] in [-1, 1]
  torch::Tensor coords;   // [N, T, J, 2]
  torch::Tensor visible;  // [N, T, J] bool

  int64_t size() const { return frames.defined() ? frames.size(0) : 0; }
  int64_t length() const { return frames.size(1); }
};

/// Loads every clip of `which`, truncating all clips to the shortest length.
ClipBatch load_split(const DatasetManifest& manifest, Split which);

/// The clips at `rows`, in that order.
ClipBatch subset(const ClipBatch& batch, const std::vector<int64_t>& rows);

}  // namespace rmvl
