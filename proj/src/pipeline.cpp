#include "rmvl/pipeline.hpp"

#include "rmvl/errors.hpp"
#include "rmvl/image_io.hpp"
#include "rmvl/training.hpp"

#include <nlohmann/json.hpp>

#include <sstream>

namespace fs = std::filesystem;

namespace rmvl {
namespace {

void require_sizes(const ForecastNet& gm, const Frame& input) {
  const auto& a = gm->arch();
  if (input.channels() != a.image_channels || input.height() != a.height || input.width() != a.width) {
    throw ArgumentError("generate: input frame does not match the forecasting network");
  }
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

}  // namespace

std::pair<VideoClip, torch::Tensor> refine_windows(RefineNet& gr, const VideoClip& coarse,
                                                   const MotionMapSequence& maps) {
  const auto& a = gr->arch();
  if (coarse.length() != maps.length() || coarse.height() != a.height || coarse.width() != a.width ||
      coarse.channels() != a.image_channels || maps.joints() != a.joints) {
    throw ArgumentError("refine: clip or maps do not match the refinement network");
  }
  const int64_t T = coarse.length(), K = a.clip_length;
  torch::NoGradGuard guard;
  std::vector<torch::Tensor> frames, masks;
  for (int64_t s = 0; s < T; s += K) {
    const int64_t n = std::min(K, T - s);
    auto c = coarse.frames().slice(0, s, s + n);
    auto m = maps.maps().slice(0, s, s + n);
    if (n < K) {
      auto pad = [&](const torch::Tensor& x) {
        return torch::cat({x, x.slice(0, n - 1, n).expand({K - n, -1, -1, -1})});
      };
      c = pad(c);
      m = pad(m);
    }
    auto out = gr->forward(c.unsqueeze(0), m.unsqueeze(0));
    frames.push_back(out.clip[0].slice(0, 0, n));
    masks.push_back(out.mask[0].slice(0, 0, n));
  }
  return {VideoClip(torch::cat(frames).clamp(-1, 1)), torch::cat(masks)};
}

GenerationResult generate_from_poses(ForecastNet& gm, RefineNet* gr, const Frame& input,
                                     const Pose& current, const PoseSequence& future, double sigma) {
  require_sizes(gm, input);
  if (future.empty()) throw ArgumentError("generate: no future poses");
  const int64_t H = input.height(), W = input.width();
  if (future.joints() != gm->arch().joints || current.size() != gm->arch().joints) {
    throw ArgumentError("generate: joint count does not match the forecasting network");
  }
  auto cur = render_heatmaps(current, H, W, sigma);
  auto maps = render_heatmap_sequence(future, H, W, sigma);
  auto [frames, masks] = forecast_frames(gm, input.pixels(), cur.heatmaps(), maps.maps());
  GenerationResult out{future, VideoClip(frames.clamp(-1, 1)), masks, std::nullopt, {}};
  if (gr) {
    auto [refined, rmasks] = refine_windows(*gr, out.coarse, maps);
    out.refined = refined;
    out.refine_masks = rmasks;
  }
  return out;
}

GenerationResult generate_video(ForecastNet& gm, RefineNet* gr, PoseForecaster& forecaster,
                                const Frame& input, const PoseSequence& history, int64_t steps,
                                double sigma) {
  if (history.empty()) throw ArgumentError("generate: empty pose history");
  auto future = forecast_poses(forecaster, history, steps);
  return generate_from_poses(gm, gr, input, history[history.length() - 1], future, sigma);
}

EvalReport evaluate(const ClipBatch& data, ForecastNet& gm, RefineNet* gr, PoseForecaster* forecaster,
                    const EvalOptions& o, const FrameEmbedder& embedder) {
  if (data.size() == 0) throw ArgumentError("evaluate: the eval split is empty");
  if (o.observed < 1 || o.predict < 1 || data.length() < o.observed + o.predict) {
    throw ArgumentError("evaluate: clips have " + std::to_string(data.length()) +
                        " frames, the protocol needs " + std::to_string(o.observed + o.predict));
  }
  if (!o.use_gt_maps && forecaster == nullptr) {
    throw ArgumentError("evaluate: a pose forecaster is required unless ground-truth maps are used");
  }
  EvalReport report;
  report.refined = gr != nullptr;
  report.gt_maps = o.use_gt_maps;
  report.psnr_curve.assign(static_cast<size_t>(o.predict), 0.0);
  report.coarse_psnr_curve.assign(static_cast<size_t>(o.predict), 0.0);
  const int64_t last = o.observed - 1;
  for (int64_t i = 0; i < data.size(); ++i) {
    const Frame input(data.frames[i][last]);
    const auto coords = data.coords[i];
    auto pose_at = [&](int64_t t) {
      std::vector<Joint> joints;
      for (int64_t j = 0; j < coords.size(1); ++j) {
        joints.push_back({coords[t][j][0].item<double>(), coords[t][j][1].item<double>(),
                          data.visible[i][t][j].item<bool>()});
      }
      return Pose(std::move(joints));
    };
    std::vector<Pose> history;
    for (int64_t t = 0; t < o.observed; ++t) history.push_back(pose_at(t));
    PoseSequence future;
    if (o.use_gt_maps) {
      std::vector<Pose> f;
      for (int64_t t = o.observed; t < o.observed + o.predict; ++t) f.push_back(pose_at(t));
      future = PoseSequence(std::move(f));
    } else {
      future = forecast_poses(*forecaster, PoseSequence(history), o.predict);
    }
    auto gen = generate_from_poses(gm, gr, input, history.back(), future, o.sigma);
    const VideoClip real(data.frames[i].slice(0, o.observed, o.observed + o.predict));
    const VideoClip& final_clip = gen.refined ? *gen.refined : gen.coarse;

    ClipEval row;
    row.id = data.ids[static_cast<size_t>(i)];
    row.motion_class = data.classes[static_cast<size_t>(i)];
    for (int64_t t = 0; t < o.predict; ++t) {
      row.psnr_curve.push_back(psnr(final_clip.frame(t), real.frame(t)));
      row.coarse_psnr_curve.push_back(psnr(gen.coarse.frame(t), real.frame(t)));
      report.psnr_curve[static_cast<size_t>(t)] += row.psnr_curve.back();
      report.coarse_psnr_curve[static_cast<size_t>(t)] += row.coarse_psnr_curve.back();
    }
    row.psnr = mean_of(row.psnr_curve);
    row.coarse_psnr = mean_of(row.coarse_psnr_curve);
    row.mse = mse(final_clip, real);
    row.coarse_mse = mse(gen.coarse, real);
    row.acd_i = acd_identity(final_clip, input, embedder);
    row.acd_c = acd_content(final_clip, embedder);
    report.clips.push_back(std::move(row));
  }
  const double n = static_cast<double>(report.clips.size());
  for (auto& v : report.psnr_curve) v /= n;
  for (auto& v : report.coarse_psnr_curve) v /= n;
  for (const auto& c : report.clips) {
    report.psnr += c.psnr / n;
    report.mse += c.mse / n;
    report.acd_i += c.acd_i / n;
    report.acd_c += c.acd_c / n;
    report.coarse_psnr += c.coarse_psnr / n;
    report.coarse_mse += c.coarse_mse / n;
  }
  return report;
}

void write_eval_csv(const fs::path& path, const EvalReport& report) {
  std::ostringstream os;
  os.precision(9);
  os << "clip,class,psnr,mse,acd_i,acd_c,coarse_psnr,coarse_mse\n";
  for (const auto& c : report.clips) {
    os << c.id << ',' << c.motion_class << ',' << c.psnr << ',' << c.mse << ',' << c.acd_i << ','
       << c.acd_c << ',' << c.coarse_psnr << ',' << c.coarse_mse << '\n';
  }
  write_file_atomic(path, os.str());
}

void write_eval_json(const fs::path& path, const EvalReport& report) {
  nlohmann::json j = {{"clips", report.clips.size()},
                      {"refined", report.refined},
                      {"gt_maps", report.gt_maps},
                      {"psnr", report.psnr},
                      {"mse", report.mse},
                      {"acd_i", report.acd_i},
                      {"acd_c", report.acd_c},
                      {"coarse_psnr", report.coarse_psnr},
                      {"coarse_mse", report.coarse_mse},
                      {"psnr_curve", report.psnr_curve},
                      {"coarse_psnr_curve", report.coarse_psnr_curve}};
  write_file_atomic(path, j.dump(2) + "\n");
}

}  // namespace rmvl
