// rmvl: dataset synthesis, training, generation and evaluation from the command line.

#include "rmvl/checkpoint.hpp"
#include "rmvl/config.hpp"
#include "rmvl/dataset.hpp"
#include "rmvl/errors.hpp"
#include "rmvl/image_io.hpp"
#include "rmvl/pipeline.hpp"
#include "rmvl/training.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <iostream>
#include <optional>

namespace fs = std::filesystem;
using namespace rmvl;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

struct Options {
  std::string config;
  std::string manifest;
  std::string out;
  std::optional<uint64_t> seed;
  std::string gm, gr, lstm;
  bool use_gt_maps = false;
  bool resume = false;
  std::string stage;
  std::string input, poses, clip;
  int64_t start = 0;
  int64_t steps = -1;
};

fs::path run_root() {
  if (const char* home = std::getenv("RMVL_HOME"); home && *home) return home;
  return "rmvl-run";
}

fs::path out_dir(const Options& o) { return o.out.empty() ? run_root() : fs::path(o.out); }

TrainConfig load_config(const Options& o) {
  TrainConfig c = o.config.empty() ? TrainConfig() : TrainConfig::load(o.config);
  if (o.seed) c.seed = *o.seed;
  c.validate();
  return c;
}

fs::path manifest_path(const Options& o) {
  if (!o.manifest.empty()) return o.manifest;
  return run_root() / "data" / "manifest.json";
}

fs::path require_file(const std::string& given, const fs::path& fallback, const std::string& what) {
  const fs::path p = given.empty() ? fallback : fs::path(given);
  if (!fs::exists(p)) throw IoError("missing " + what + " checkpoint: " + p.string());
  return p;
}

void log_step(const char* stage, const StepRecord& r, int64_t total, int64_t every) {
  if (every <= 0 || (r.step % every != 0 && r.step != total)) return;
  std::cerr << stage << " step " << r.step << "/" << total << "  rec " << r.report.rec
            << "  total " << r.report.total << "  critic " << r.report.critic << "\n";
}

int cmd_datagen(const Options& o) {
  const TrainConfig c = load_config(o);
  const fs::path root = out_dir(o);
  const DatasetManifest m = synthesize_dataset(c.dataset(), c.seed, root);
  std::cout << "wrote " << m.clips.size() << " clips of " << c.clip_length << " frames ("
            << c.height << "x" << c.width << ", " << c.classes << " classes) to " << root.string() << "\n";
  for (Split s : {Split::ForecasterTrain, Split::RefinerTrain, Split::Eval}) {
    std::cout << "  " << to_string(s) << ": " << m.split(s).size() << " clips\n";
  }
  std::cout << "manifest: " << (root / "manifest.json").string() << "\n";
  return 0;
}

template <typename Trainer, typename StepFn, typename SaveFn>
void run_loop(Trainer& trainer, const char* stage, int64_t target, const TrainConfig& c,
              const fs::path& csv, bool append, StepFn step, SaveFn save) {
  LossHistory pending;
  bool first = !append;
  auto flush = [&] {
    write_loss_csv(csv, pending, !first);
    first = false;
    pending.clear();
  };
  if (first) flush();
  while (trainer.steps_done() < target) {
    pending.push_back(step());
    log_step(stage, pending.back(), target, c.log_every);
    if (c.checkpoint_every > 0 && trainer.steps_done() % c.checkpoint_every == 0) {
      flush();
      save();
    }
  }
  flush();
  save();
}

int cmd_train(const Options& o) {
  const TrainConfig c = load_config(o);
  const fs::path root = out_dir(o);
  const fs::path dir = root / o.stage;
  fs::create_directories(dir);
  const fs::path csv = dir / "loss.csv";
  const int64_t target = c.stage_steps(o.stage);

  if (o.stage == "gr") {
    // Check the prerequisite before touching any data.
    const fs::path gm_path = require_file(o.gm, root / "gm" / "gm.ckpt", "gm");
    const DatasetManifest m = DatasetManifest::load(manifest_path(o));
    c.save(dir / "config.txt");
    Stage2Trainer trainer(load_split(m, Split::RefinerTrain), load_gm(load_checkpoint(gm_path, "gm")), c);
    if (o.resume) {
      trainer.resume(load_checkpoint(dir / "gr.ckpt", "gr"), load_checkpoint(dir / "critic_image.ckpt", "critic-image"),
                     load_checkpoint(dir / "critic_video.ckpt", "critic-video"));
    }
    run_loop(trainer, "gr", target, c, csv, o.resume, [&] { return trainer.step(); }, [&] {
      save_checkpoint(dir / "gr.ckpt", trainer.gr_checkpoint());
      save_checkpoint(dir / "critic_image.ckpt", trainer.image_critic_checkpoint());
      save_checkpoint(dir / "critic_video.ckpt", trainer.video_critic_checkpoint());
    });
    std::cout << (dir / "gr.ckpt").string() << "\n";
    return 0;
  }

  const DatasetManifest m = DatasetManifest::load(manifest_path(o));
  c.save(dir / "config.txt");
  if (o.stage == "lstm") {
    ForecasterTrainer trainer(load_split(m, Split::ForecasterTrain), c);
    if (o.resume) trainer.resume(load_checkpoint(dir / "lstm.ckpt", "lstm"));
    run_loop(trainer, "lstm", target, c, csv, o.resume, [&] { return trainer.step(); },
             [&] { save_checkpoint(dir / "lstm.ckpt", trainer.checkpoint()); });
    std::cout << (dir / "lstm.ckpt").string() << "\n";
    return 0;
  }
  Stage1Trainer trainer(load_split(m, Split::ForecasterTrain), c);
  if (o.resume) {
    trainer.resume(load_checkpoint(dir / "gm.ckpt", "gm"), load_checkpoint(dir / "critic_image.ckpt", "critic-image"));
  }
  run_loop(trainer, "gm", target, c, csv, o.resume, [&] { return trainer.step(); }, [&] {
    save_checkpoint(dir / "gm.ckpt", trainer.gm_checkpoint());
    save_checkpoint(dir / "critic_image.ckpt", trainer.critic_checkpoint());
  });
  std::cout << (dir / "gm.ckpt").string() << "\n";
  return 0;
}

struct GenerationInputs {
  Frame input;
  PoseSequence poses;  // history followed by any ground-truth future
  std::optional<VideoClip> real;
};

GenerationInputs generation_inputs(const Options& o, const TrainConfig& c) {
  fs::path frame_path = o.input, poses_path = o.poses;
  std::optional<fs::path> clip_dir;
  if (!o.clip.empty()) {
    const DatasetManifest m = DatasetManifest::load(manifest_path(o));
    const ClipEntry* entry = nullptr;
    for (const auto& e : m.clips) {
      if (e.id == o.clip) entry = &e;
    }
    if (!entry) throw IoError("clip '" + o.clip + "' is not in the manifest");
    clip_dir = m.root / entry->frames_dir;
    if (poses_path.empty()) poses_path = m.root / entry->keypoints_file;
    if (frame_path.empty()) frame_path = *clip_dir / clip_frame_name(o.start + c.observed - 1);
  }
  if (frame_path.empty() || poses_path.empty()) {
    throw ArgumentError("generate needs --clip, or both --input and --poses");
  }
  const PoseSequence all = load_keypoints(poses_path);
  if (o.start < 0 || o.start + c.observed > all.length()) {
    throw ArgumentError("the keypoints file has no " + std::to_string(c.observed) +
                        "-pose history at --start " + std::to_string(o.start));
  }
  GenerationInputs in{load_frame(frame_path), all.slice(o.start, all.length()), std::nullopt};
  if (clip_dir) {
    const VideoClip clip = load_clip(*clip_dir);
    const int64_t first = o.start + c.observed;
    if (clip.length() > first) {
      in.real = VideoClip(clip.frames().slice(0, first, std::min(clip.length(), first + c.predict)));
    }
  }
  return in;
}

int cmd_generate(const Options& o) {
  const TrainConfig c = load_config(o);
  const fs::path root = run_root();
  const fs::path out = o.out.empty() ? root / "generate" : fs::path(o.out);
  auto gm = load_gm(load_checkpoint(require_file(o.gm, root / "gm" / "gm.ckpt", "gm"), "gm"));
  std::optional<RefineNet> gr;
  const fs::path gr_path = o.gr.empty() ? root / "gr" / "gr.ckpt" : fs::path(o.gr);
  if (!o.gr.empty() || fs::exists(gr_path)) gr = load_gr(load_checkpoint(require_file(o.gr, gr_path, "gr"), "gr"));

  const auto in = generation_inputs(o, c);
  const int64_t steps = o.steps >= 0 ? o.steps : c.predict;
  const PoseSequence history = in.poses.slice(0, c.observed);
  GenerationResult result = [&] {
    if (o.use_gt_maps) {
      if (in.poses.length() < c.observed + steps) {
        throw ArgumentError("--use-gt-maps needs " + std::to_string(steps) + " future poses in the keypoints file");
      }
      return generate_from_poses(gm, gr ? &*gr : nullptr, in.input, history[c.observed - 1],
                                 in.poses.slice(c.observed, c.observed + steps), c.sigma);
    }
    auto lstm = load_forecaster(load_checkpoint(require_file(o.lstm, root / "lstm" / "lstm.ckpt", "lstm"), "lstm"));
    return generate_video(gm, gr ? &*gr : nullptr, lstm, in.input, history, steps, c.sigma);
  }();

  fs::create_directories(out);
  save_clip(out / "coarse", result.coarse);
  std::vector<std::vector<Image8>> columns(static_cast<size_t>(result.coarse.length()));
  fs::create_directories(out / "masks");
  for (int64_t t = 0; t < result.coarse.length(); ++t) {
    auto& col = columns[static_cast<size_t>(t)];
    col.push_back(tensor_to_image(in.input.pixels()));
    col.push_back(tensor_to_image(result.coarse.frames()[t]));
    write_png(out / "masks" / ("coarse_" + clip_frame_name(t)), mask_to_image(result.coarse_masks[t]));
    if (result.refined) {
      col.push_back(tensor_to_image(result.refined->frames()[t]));
      write_png(out / "masks" / ("refined_" + clip_frame_name(t)), mask_to_image(result.refine_masks[t]));
    }
    if (in.real && t < in.real->length()) col.push_back(tensor_to_image(in.real->frames()[t]));
  }
  if (result.refined) save_clip(out / "refined", *result.refined);
  std::vector<Image8> gif_frames, strip_rows;
  for (const auto& col : columns) gif_frames.push_back(hconcat(col, 2));
  write_gif(out / "side_by_side.gif", gif_frames, 12);

  // Strip: one row per output kind, every fourth timestep.
  const size_t kinds = columns.front().size();
  for (size_t k = 1; k < kinds; ++k) {
    std::vector<Image8> row;
    for (size_t t = 0; t < columns.size(); t += 4) row.push_back(columns[t][k]);
    strip_rows.push_back(hconcat(row, 2));
  }
  write_png(out / "strip.png", vconcat(strip_rows, 2));
  std::cout << "wrote " << result.coarse.length() << " frames to " << out.string() << "\n";
  return 0;
}

int cmd_evaluate(const Options& o) {
  const TrainConfig c = load_config(o);
  const fs::path root = run_root();
  const fs::path out = o.out.empty() ? root / "eval" : fs::path(o.out);
  auto gm = load_gm(load_checkpoint(require_file(o.gm, root / "gm" / "gm.ckpt", "gm"), "gm"));
  std::optional<RefineNet> gr;
  const fs::path gr_path = o.gr.empty() ? root / "gr" / "gr.ckpt" : fs::path(o.gr);
  if (!o.gr.empty() || fs::exists(gr_path)) gr = load_gr(load_checkpoint(require_file(o.gr, gr_path, "gr"), "gr"));
  std::optional<PoseForecaster> lstm;
  if (!o.use_gt_maps) {
    lstm = load_forecaster(load_checkpoint(require_file(o.lstm, root / "lstm" / "lstm.ckpt", "lstm"), "lstm"));
  }
  const DatasetManifest m = DatasetManifest::load(manifest_path(o));
  EvalOptions eo;
  eo.observed = c.observed;
  eo.predict = c.predict;
  eo.use_gt_maps = o.use_gt_maps;
  eo.sigma = c.sigma;
  const auto report = evaluate(load_split(m, Split::Eval), gm, gr ? &*gr : nullptr, lstm ? &*lstm : nullptr,
                               eo, FrameEmbedder::random_conv());
  fs::create_directories(out);
  write_eval_csv(out / "eval.csv", report);
  write_eval_json(out / "eval.json", report);
  std::vector<PlotSeries> series{{"coarse", report.coarse_psnr_curve, 214, 96, 40}};
  if (report.refined) series.push_back({"refined", report.psnr_curve, 40, 96, 214});
  write_line_plot(out / "psnr.png", "PSNR (DB) PER TIMESTEP", series);
  std::cout << "clips " << report.clips.size() << "  psnr " << report.psnr << "  mse " << report.mse
            << "  acd_i " << report.acd_i << "  acd_c " << report.acd_c << "  coarse mse " << report.coarse_mse
            << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-stage residual video generation: data, training, generation, evaluation"};
  app.require_subcommand(1);
  Options o;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "key = value config file");
    sub->add_option("--seed", o.seed, "overrides the config seed");
    sub->add_option("--out", o.out, "output directory (default: $RMVL_HOME or ./rmvl-run)");
  };
  auto* datagen = app.add_subcommand("datagen", "synthesize the stick-figure corpus");
  common(datagen);

  auto* train = app.add_subcommand("train", "train one stage: lstm, gm or gr");
  common(train);
  train->add_option("stage", o.stage, "stage to train")->required()->check(CLI::IsMember({"lstm", "gm", "gr"}));
  train->add_option("--manifest", o.manifest, "dataset manifest.json");
  train->add_option("--gm", o.gm, "frozen forecasting network for gr (default: <out>/gm/gm.ckpt)");
  train->add_flag("--resume", o.resume, "continue from the checkpoints in <out>/<stage>");

  auto* generate = app.add_subcommand("generate", "generate a video from one frame and a pose history");
  common(generate);
  generate->add_option("--manifest", o.manifest, "dataset manifest.json (with --clip)");
  generate->add_option("--clip", o.clip, "take the input frame and poses from this dataset clip");
  generate->add_option("--input", o.input, "input frame PNG");
  generate->add_option("--poses", o.poses, "keypoints JSON whose first poses form the history");
  generate->add_option("--start", o.start, "index of the first history pose");
  generate->add_option("--steps", o.steps, "frames to generate (default: config predict)");
  generate->add_option("--gm", o.gm, "forecasting network checkpoint");
  generate->add_option("--gr", o.gr, "refinement network checkpoint");
  generate->add_option("--lstm", o.lstm, "pose forecaster checkpoint");
  generate->add_flag("--use-gt-maps", o.use_gt_maps, "use the poses that follow the history instead of forecasting");

  auto* evaluate_cmd = app.add_subcommand("evaluate", "score the eval split");
  common(evaluate_cmd);
  evaluate_cmd->add_option("--manifest", o.manifest, "dataset manifest.json");
  evaluate_cmd->add_option("--gm", o.gm, "forecasting network checkpoint");
  evaluate_cmd->add_option("--gr", o.gr, "refinement network checkpoint");
  evaluate_cmd->add_option("--lstm", o.lstm, "pose forecaster checkpoint");
  evaluate_cmd->add_flag("--use-gt-maps", o.use_gt_maps, "condition on ground-truth keypoints");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }
  torch::set_num_threads(1);
  try {
    if (*datagen) return cmd_datagen(o);
    if (*train) return cmd_train(o);
    if (*generate) return cmd_generate(o);
    return cmd_evaluate(o);
  } catch (const ArgumentError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
}
