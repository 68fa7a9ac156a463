#pragma once

// End-to-end generation (forecast poses, render maps, forecast each frame from the
// input frame, refine in fixed-length windows) and the evaluation protocol.

#include "rmvl/dataset.hpp"
#include "rmvl/forecaster.hpp"
#include "rmvl/gm.hpp"
#include "rmvl/gr.hpp"
#include "rmvl/metrics.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace rmvl {

struct GenerationResult {
  PoseSequence poses;          // the future poses that drove generation
  VideoClip coarse;            // independently forecast frames
  torch::Tensor coarse_masks;  // [T, 1, H, W]
  std::optional<VideoClip> refined;
  torch::Tensor refine_masks;  // [T, 1, H, W], undefined without refinement
};

/// Generates one frame per future pose from `input`, which shows `current`, then refines
/// the coarse clip in disjoint windows of the refiner's clip length. When the frame count
/// is not a multiple of that length, the last window is padded by repeating its final
/// frame and the padding is dropped afterwards.
GenerationResult generate_from_poses(ForecastNet& gm, RefineNet* gr, const Frame& input,
                                     const Pose& current, const PoseSequence& future,
                                     double sigma = kDefaultHeatmapSigma);

/// Full pipeline: forecasts `steps` poses from `history` (whose last pose is the one
/// shown in `input`) and generates from them.
GenerationResult generate_video(ForecastNet& gm, RefineNet* gr, PoseForecaster& forecaster,
                                const Frame& input, const PoseSequence& history, int64_t steps,
                                double sigma = kDefaultHeatmapSigma);

/// Refines a coarse clip window by window.
std::pair<VideoClip, torch::Tensor> refine_windows(RefineNet& gr, const VideoClip& coarse,
                                                   const MotionMapSequence& maps);

struct EvalOptions {
  int64_t observed = 10;
  int64_t predict = 32;
  bool use_gt_maps = true;
  double sigma = kDefaultHeatmapSigma;
};

struct ClipEval {
  std::string id;
  int64_t motion_class = 0;
  // The final output (refined when a refiner is given, coarse otherwise).
  double psnr = 0.0;
  double mse = 0.0;
  double acd_i = 0.0;
  double acd_c = 0.0;
  double coarse_psnr = 0.0;
  double coarse_mse = 0.0;
  std::vector<double> psnr_curve;         // per generated timestep, final output
  std::vector<double> coarse_psnr_curve;  // per generated timestep, coarse output
};

struct EvalReport {
  std::vector<ClipEval> clips;
  double psnr = 0.0;  // means over clips
  double mse = 0.0;
  double acd_i = 0.0;
  double acd_c = 0.0;
  double coarse_psnr = 0.0;
  double coarse_mse = 0.0;
  std::vector<double> psnr_curve;
  std::vector<double> coarse_psnr_curve;
  bool refined = false;
  bool gt_maps = true;
};

/// Evaluates every clip of the eval split: the input is frame observed - 1 and the
/// targets are the next `predict` frames. Motion maps come from ground-truth keypoints,
/// or from `forecaster` when `use_gt_maps` is false.
EvalReport evaluate(const ClipBatch& data, ForecastNet& gm, RefineNet* gr, PoseForecaster* forecaster,
                    const EvalOptions& options, const FrameEmbedder& embedder);

/// clip,class,psnr,mse,acd_i,acd_c,coarse_psnr,coarse_mse
void write_eval_csv(const std::filesystem::path& path, const EvalReport& report);
void write_eval_json(const std::filesystem::path& path, const EvalReport& report);

/// Draws named curves against the timestep on a white canvas with axes and a legend.
struct PlotSeries {
  std::string label;
  std::vector<double> values;
  uint8_t r = 0, g = 0, b = 0;
};
void write_line_plot(const std::filesystem::path& path, const std::string& title,
                     const std::vector<PlotSeries>& series, int width = 640, int height = 400);

}  // namespace rmvl
