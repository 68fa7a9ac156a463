#pragma once

// Training loops for the pose forecaster, the forecasting network (stage 1) and the
// refinement network (stage 2), plus their checkpoint plumbing.
//
// A generator step consists of `ratio` critic updates followed by one generator
// update; the two never share an optimizer step. Every update draws a fresh batch
// from a private mt19937_64, so a run is reproducible from (data, config) and a
// resumed run continues the exact sample stream.

#include "rmvl/checkpoint.hpp"
#include "rmvl/config.hpp"
#include "rmvl/critics.hpp"
#include "rmvl/dataset.hpp"
#include "rmvl/forecaster.hpp"
#include "rmvl/gm.hpp"
#include "rmvl/gr.hpp"
#include "rmvl/losses.hpp"

#include <filesystem>
#include <random>
#include <utility>
#include <vector>

namespace rmvl {

/// Draws k uniformly from [1, k_max], then t uniformly from [0, clip_len - k - 1].
/// Requires clip_len > k_max >= 1.
std::pair<int64_t, int64_t> sample_time_jump(int64_t clip_len, int64_t k_max, std::mt19937_64& rng);

struct StepRecord {
  int64_t step = 0;  // 1-based count of completed generator updates
  LossReport report;
};
using LossHistory = std::vector<StepRecord>;

/// step,rec,sparsity,gen,critic,gp,feat,total. With `append`, rows are added to an
/// existing file and the header is written only when the file is new.
void write_loss_csv(const std::filesystem::path& path, const LossHistory& history, bool append = false);
LossHistory read_loss_csv(const std::filesystem::path& path);

// ---------------------------------------------------------------------------------
// Pose forecaster

class ForecasterTrainer {
public:
  ForecasterTrainer(ClipBatch data, const TrainConfig& config);

  void resume(const Checkpoint& ckpt);
  /// One Adam step on a batch of random windows; returns the batch coordinate MSE.
  StepRecord step();
  int64_t steps_done() const { return step_; }

  PoseForecaster net() const { return net_; }
  Checkpoint checkpoint() const;

private:
  ClipBatch data_;
  TrainConfig config_;
  PoseForecaster net_{nullptr};
  std::unique_ptr<torch::optim::Adam> opt_;
  std::mt19937_64 rng_;
  int64_t step_ = 0;
};

/// Trains on the forecaster-train split for the configured number of steps.
Checkpoint train_pose_forecaster(const DatasetManifest& manifest, const TrainConfig& config,
                                 LossHistory* history = nullptr);
PoseForecaster load_forecaster(const Checkpoint& ckpt);

/// Coordinate MSE of forecasts against ground truth over every window start of every clip.
struct ForecastScore {
  double model = 0.0;
  double frozen = 0.0;  // freeze-last-pose baseline
};
ForecastScore score_forecaster(PoseForecaster& net, const ClipBatch& data);

// ---------------------------------------------------------------------------------
// Stage 1: forecasting network and image critic

GMArch gm_arch_for(const TrainConfig& config, int64_t height, int64_t width, int64_t joints);

/// One sampled training batch of (input frame, maps) -> target frame pairs.
struct FramePairBatch {
  torch::Tensor image;    // [B, C, H, W]
  torch::Tensor current;  // [B, J, H, W]
  torch::Tensor target_map;
  torch::Tensor target;   // [B, C, H, W]
};

class Stage1Trainer {
public:
  Stage1Trainer(ClipBatch data, const TrainConfig& config);

  /// Restores networks, optimizers, step count and sampler state.
  void resume(const Checkpoint& gm, const Checkpoint& critic);

  double critic_update();
  StepRecord generator_update(double last_critic, double last_gp);
  /// `ratio` critic updates, then one generator update.
  StepRecord step();
  int64_t steps_done() const { return step_; }

  FramePairBatch sample_batch();
  /// Mean reconstruction loss and mean mask on a fixed batch, without gradients.
  std::pair<double, double> probe(const FramePairBatch& batch);

  ForecastNet gm() const { return gm_; }
  Critic critic() const { return critic_; }
  Checkpoint gm_checkpoint() const;
  Checkpoint critic_checkpoint() const;

private:
  ClipBatch data_;
  TrainConfig config_;
  ForecastNet gm_{nullptr};
  Critic critic_{nullptr};
  std::unique_ptr<torch::optim::Adam> opt_g_, opt_d_;
  FeatureExtractor appearance_, structure_;
  std::mt19937_64 rng_;
  int64_t step_ = 0;
  double last_gp_ = 0.0;
};

Checkpoint train_stage1(const DatasetManifest& manifest, const TrainConfig& config,
                        Checkpoint* critic = nullptr, LossHistory* history = nullptr);
ForecastNet load_gm(const Checkpoint& ckpt);

// ---------------------------------------------------------------------------------
// Stage 2: refinement network, image critic and video critic

/// Coarse clips generated by a frozen forecasting network, with their targets.
struct ClipWindowBatch {
  torch::Tensor coarse;  // [B, K, C, H, W]
  torch::Tensor maps;    // [B, K, J, H, W]
  torch::Tensor real;    // [B, K, C, H, W]
};

class Stage2Trainer {
public:
  /// `gm` is frozen for the lifetime of the trainer.
  Stage2Trainer(ClipBatch data, ForecastNet gm, const TrainConfig& config);

  void resume(const Checkpoint& gr, const Checkpoint& image_critic, const Checkpoint& video_critic);

  double critic_update();
  StepRecord generator_update(double last_critic);
  StepRecord step();
  int64_t steps_done() const { return step_; }

  ClipWindowBatch sample_batch();

  RefineNet gr() const { return gr_; }
  Critic image_critic() const { return critic_i_; }
  Critic video_critic() const { return critic_v_; }
  Checkpoint gr_checkpoint() const;
  Checkpoint image_critic_checkpoint() const;
  Checkpoint video_critic_checkpoint() const;

private:
  ClipBatch data_;
  TrainConfig config_;
  ForecastNet gm_{nullptr};
  RefineNet gr_{nullptr};
  Critic critic_i_{nullptr}, critic_v_{nullptr};
  std::unique_ptr<torch::optim::Adam> opt_g_, opt_i_, opt_v_;
  std::mt19937_64 rng_;
  int64_t step_ = 0;
  double last_gp_ = 0.0;
};

/// Throws ArgumentError when `gm` is null.
Checkpoint train_stage2(const DatasetManifest& manifest, const Checkpoint* gm,
                        const TrainConfig& config, LossHistory* history = nullptr);
RefineNet load_gr(const Checkpoint& ckpt);
Critic load_critic(const Checkpoint& ckpt);

/// Runs the forecasting network on every target map from one input frame, in chunks.
/// image [C, H, W], current [J, H, W], targets [T, J, H, W] -> frames and masks.
std::pair<torch::Tensor, torch::Tensor> forecast_frames(ForecastNet& gm, const torch::Tensor& image,
                                                        const torch::Tensor& current,
                                                        const torch::Tensor& targets);

}  // namespace rmvl
