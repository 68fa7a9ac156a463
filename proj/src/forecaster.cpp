#include "rmvl/forecaster.hpp"

#include "rmvl/errors.hpp"

#include <nlohmann/json.hpp>

#include <sstream>

namespace rmvl {
namespace {

// Velocities are ~100x smaller than positions; rescale them to a comparable range.
constexpr double kVelocityScale = 10.0;
constexpr double kCorrectionScale = 0.1;

}  // namespace

void ForecasterArch::validate() const {
  if (joints < 1 || hidden < 1 || layers < 1) throw ArgumentError("ForecasterArch: bad sizes");
  if (observed < 2 || predict < 1) {
    throw ArgumentError("ForecasterArch: observed must be at least 2 and predict positive");
  }
}

nlohmann::json to_json(const ForecasterArch& a) {
  return {{"joints", a.joints}, {"hidden", a.hidden},   {"layers", a.layers},
          {"observed", a.observed}, {"predict", a.predict}};
}

ForecasterArch forecaster_arch_from_json(const nlohmann::json& j) {
  ForecasterArch a;
  a.joints = j.at("joints").get<int64_t>();
  a.hidden = j.at("hidden").get<int64_t>();
  a.layers = j.at("layers").get<int64_t>();
  a.observed = j.at("observed").get<int64_t>();
  a.predict = j.at("predict").get<int64_t>();
  a.validate();
  return a;
}

PoseForecasterImpl::PoseForecasterImpl(const ForecasterArch& arch) : arch_(arch) {
  arch_.validate();
  const int64_t in = 4 * arch.joints;
  lstm_ = register_module(
      "lstm", torch::nn::LSTM(torch::nn::LSTMOptions(in, arch.hidden).num_layers(arch.layers).batch_first(true)));
  head_ = register_module("head", torch::nn::Linear(arch.hidden, 2 * arch.joints));
}

torch::Tensor PoseForecasterImpl::features(const torch::Tensor& pos, const torch::Tensor& vel) const {
  const int64_t B = pos.size(0), T = pos.size(1);
  return torch::cat({pos.reshape({B, T, -1}) - 0.5, vel.reshape({B, T, -1}) * kVelocityScale}, 2);
}

torch::Tensor PoseForecasterImpl::forward(const torch::Tensor& history, int64_t steps) {
  if (history.dim() != 4 || history.size(1) != arch_.observed || history.size(2) != arch_.joints ||
      history.size(3) != 2) {
    std::ostringstream os;
    os << "PoseForecaster: expected history [B, " << arch_.observed << ", " << arch_.joints
       << ", 2], got " << history.sizes();
    throw ArgumentError(os.str());
  }
  if (steps < 0) throw ArgumentError("PoseForecaster: negative step count");
  const int64_t B = history.size(0), J = arch_.joints;
  if (steps == 0) return torch::empty({B, 0, J, 2}, history.options());

  auto vel = torch::zeros_like(history);
  vel.slice(1, 1) = history.slice(1, 1) - history.slice(1, 0, -1);
  auto [out, state] = lstm_->forward(features(history, vel));

  auto prev = history.select(1, arch_.observed - 1);
  auto prev_vel = vel.select(1, arch_.observed - 1);
  auto h = out.select(1, arch_.observed - 1);
  std::vector<torch::Tensor> preds;
  preds.reserve(static_cast<size_t>(steps));
  for (int64_t s = 0; s < steps; ++s) {
    auto correction = head_->forward(h).view({B, J, 2}) * kCorrectionScale;
    auto next = (prev + prev_vel + correction).clamp(0.0, 1.0);
    preds.push_back(next);
    if (s + 1 == steps) break;
    prev_vel = next - prev;
    prev = next;
    auto step_in = features(next.unsqueeze(1), prev_vel.unsqueeze(1));
    std::tie(out, state) = lstm_->forward(step_in, state);
    h = out.select(1, 0);
  }
  return torch::stack(preds, 1);
}

PoseSequence forecast_poses(PoseForecaster& net, const PoseSequence& history, int64_t steps) {
  const auto& arch = net->arch();
  if (history.length() != arch.observed) {
    throw ArgumentError("forecast_poses: history has " + std::to_string(history.length()) +
                        " poses, the forecaster observes " + std::to_string(arch.observed));
  }
  if (steps < 0 || steps > arch.predict) {
    throw ArgumentError("forecast_poses: steps must lie in [0, " + std::to_string(arch.predict) + "]");
  }
  if (history.joints() != arch.joints) throw ArgumentError("forecast_poses: joint count mismatch");
  if (steps == 0) return PoseSequence();
  torch::NoGradGuard guard;
  auto pred = net->forward(history.coords().unsqueeze(0), steps)[0];
  return PoseSequence::from_coords(pred);
}

torch::Tensor freeze_last_pose(const torch::Tensor& history, int64_t steps) {
  auto last = history.select(1, history.size(1) - 1).unsqueeze(1);
  std::vector<int64_t> shape = last.sizes().vec();
  shape[1] = steps;
  return last.expand(shape).clone();
}

}  // namespace rmvl
