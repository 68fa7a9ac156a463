#pragma once

// Recurrent pose forecaster.
//
// The network reads joint positions and velocities, and predicts each next pose as
// the previous pose plus its velocity plus a learned correction. Predictions are
// clamped to [0, 1] and fed back in autoregressively.

#include "rmvl/pose.hpp"

#include <nlohmann/json_fwd.hpp>

#include <cstdint>

namespace rmvl {

struct ForecasterArch {
  int64_t joints = 8;
  int64_t hidden = 128;
  int64_t layers = 1;
  int64_t observed = 10;
  int64_t predict = 32;

  void validate() const;
};

nlohmann::json to_json(const ForecasterArch& arch);
ForecasterArch forecaster_arch_from_json(const nlohmann::json& j);

class PoseForecasterImpl : public torch::nn::Module {
public:
  explicit PoseForecasterImpl(const ForecasterArch& arch);

  const ForecasterArch& arch() const { return arch_; }

  /// history [B, observed, J, 2] -> predictions [B, steps, J, 2] in [0, 1].
  torch::Tensor forward(const torch::Tensor& history, int64_t steps);

private:
  torch::Tensor features(const torch::Tensor& pos, const torch::Tensor& vel) const;

  ForecasterArch arch_;
  torch::nn::LSTM lstm_{nullptr};
  torch::nn::Linear head_{nullptr};
};
TORCH_MODULE(PoseForecaster);

/// Predicts `steps` poses after `history`, whose length must equal the observed length.
PoseSequence forecast_poses(PoseForecaster& net, const PoseSequence& history, int64_t steps);

/// Positions only: [B, observed, J, 2] -> [B, steps, J, 2] with the last observed pose
/// repeated. The baseline a forecaster has to beat.
torch::Tensor freeze_last_pose(const torch::Tensor& history, int64_t steps);

}  // namespace rmvl
