#pragma once

// Training configuration, stored as a flat `key = value` text file. Blank lines and
// lines starting with '#' are ignored; unknown keys are rejected.

#include "rmvl/dataset.hpp"
#include "rmvl/gm.hpp"

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace rmvl {

struct TrainConfig {
  // Optimization.
  double lr = 1e-4;
  double beta1 = 0.0;
  double beta2 = 0.9;
  int64_t batch = 16;
  int64_t steps = 2000;      // default step count for every stage
  int64_t steps_lstm = -1;   // per-stage overrides; -1 inherits `steps`
  int64_t steps_gm = -1;
  int64_t steps_gr = -1;
  int64_t ratio = 1;  // critic updates per generator update
  uint64_t seed = 0;

  // Objective.
  double lambda_gp = 10.0;
  double w_rec = 1.0;
  double w_sparsity = 1.0;
  double w_gen = 1.0;
  double w_feat = 1.0;  // 0 disables the feature similarity term

  // Sampling.
  int64_t k_max = 32;  // largest time jump for the forecaster network
  int64_t clip_k = 16;  // refinement clip length
  int64_t observed = 10;
  int64_t predict = 32;
  double sigma = 1.5;  // heatmap width in pixels

  // Pose forecaster.
  double lstm_lr = 1e-3;
  int64_t lstm_hidden = 128;
  int64_t lstm_layers = 1;

  // Architectures.
  int64_t gm_stages = 4;
  int64_t gm_base_width = 8;
  int64_t gm_max_width = 32;
  bool gm_dense = true;
  ResidualMode gm_residual = ResidualMode::Mask;
  int64_t gr_base_width = 8;

  // Synthetic corpus (used by dataset generation).
  int64_t clips = 12;
  int64_t clip_length = 48;
  int64_t height = 64;
  int64_t width = 64;
  int64_t classes = 4;

  // Bookkeeping.
  int64_t checkpoint_every = 0;  // 0 writes only the final checkpoint
  int64_t log_every = 50;

  int64_t stage_steps(const std::string& stage) const;
  DatasetConfig dataset() const;
  void validate() const;

  /// Sets one key from its text value; throws ArgumentError for unknown keys or bad values.
  void set(const std::string& key, const std::string& value);
  std::string to_text() const;
  nlohmann::json to_json() const;

  static TrainConfig parse(const std::string& text);
  static TrainConfig load(const std::filesystem::path& path);
  static TrainConfig from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& path) const;

  static const std::vector<std::string>& keys();
};

}  // namespace rmvl
