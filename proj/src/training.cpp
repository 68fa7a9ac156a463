#include "rmvl/training.hpp"

#include "rmvl/errors.hpp"
#include "rmvl/image_io.hpp"
#include "rmvl/residual.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <sstream>

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace rmvl {
namespace {

constexpr int64_t kForecastChunk = 32;
constexpr double kGradClip = 1.0;

int64_t uniform_int(std::mt19937_64& rng, int64_t lo, int64_t hi) {
  return std::uniform_int_distribution<int64_t>(lo, hi)(rng);
}

std::string rng_state(const std::mt19937_64& rng) {
  std::ostringstream os;
  os << rng;
  return os.str();
}

void restore_rng(std::mt19937_64& rng, const std::string& state) {
  std::istringstream is(state);
  is >> rng;
  if (!is) throw IoError("checkpoint carries a malformed sampler state");
}

std::unique_ptr<torch::optim::Adam> make_adam(torch::nn::Module& m, double lr, double b1, double b2) {
  return std::make_unique<torch::optim::Adam>(
      m.parameters(), torch::optim::AdamOptions(lr).betas({b1, b2}));
}

Checkpoint make_checkpoint(const std::string& stage, const torch::nn::Module& net, json arch,
                           const TrainConfig& config, int64_t step, const std::mt19937_64& rng,
                           const torch::optim::Optimizer* opt) {
  Checkpoint c;
  c.stage = stage;
  c.arch = std::move(arch);
  c.meta = {{"step", step}, {"rng", rng_state(rng)}, {"config", config.to_json()}};
  c.tensors = module_state(net);
  if (opt) c.blobs["optimizer"] = optimizer_state(*opt);
  return c;
}

void restore(const Checkpoint& c, torch::nn::Module& net, torch::optim::Optimizer* opt) {
  load_module_state(net, c.tensors);
  if (opt) {
    auto it = c.blobs.find("optimizer");
    if (it == c.blobs.end()) throw IoError("checkpoint '" + c.stage + "' has no optimizer state");
    load_optimizer_state(*opt, it->second);
  }
}

int64_t meta_step(const Checkpoint& c) { return c.meta.value("step", int64_t{0}); }

void require_data(const ClipBatch& data, const char* what) {
  if (data.size() == 0) throw ArgumentError(std::string(what) + ": the training split is empty");
}

/// Renders maps for coords [..., J, 2] with every joint visible unless `visible` is given.
torch::Tensor maps_for(const torch::Tensor& coords, const torch::Tensor& visible, int64_t H,
                       int64_t W, double sigma) {
  return render_heatmaps_batch(coords, visible, H, W, sigma);
}

void set_trainable(torch::nn::Module& m, bool on) {
  for (auto& p : m.parameters()) p.requires_grad_(on);
}

}  // namespace

std::pair<int64_t, int64_t> sample_time_jump(int64_t clip_len, int64_t k_max, std::mt19937_64& rng) {
  if (k_max < 1) throw ArgumentError("sample_time_jump: k_max must be positive");
  if (clip_len <= k_max) {
    throw ArgumentError("sample_time_jump: clip length " + std::to_string(clip_len) +
                        " must exceed k_max " + std::to_string(k_max));
  }
  const int64_t k = uniform_int(rng, 1, k_max);
  const int64_t t = uniform_int(rng, 0, clip_len - k - 1);
  return {t, k};
}

void write_loss_csv(const fs::path& path, const LossHistory& history, bool append) {
  std::string existing;
  if (append && fs::exists(path)) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    existing = ss.str();
  }
  std::ostringstream os;
  os.precision(9);
  if (existing.empty()) os << "step,rec,sparsity,gen,critic,gp,feat,total\n";
  for (const auto& r : history) {
    const auto& l = r.report;
    os << r.step << ',' << l.rec << ',' << l.sparsity << ',' << l.gen << ',' << l.critic << ','
       << l.gp << ',' << l.feat << ',' << l.total << '\n';
  }
  write_file_atomic(path, existing + os.str());
}

LossHistory read_loss_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  LossHistory out;
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    StepRecord r;
    char comma = 0;
    auto& l = r.report;
    ls >> r.step >> comma >> l.rec >> comma >> l.sparsity >> comma >> l.gen >> comma >> l.critic >>
        comma >> l.gp >> comma >> l.feat >> comma >> l.total;
    if (!ls) throw IoError("malformed loss row in " + path.string() + ": " + line);
    out.push_back(r);
  }
  return out;
}

// ---------------------------------------------------------------------------------
// Pose forecaster

ForecasterTrainer::ForecasterTrainer(ClipBatch data, const TrainConfig& config)
    : data_(std::move(data)), config_(config), rng_(config.seed) {
  config_.validate();
  require_data(data_, "train_pose_forecaster");
  const int64_t window = config_.observed + config_.predict;
  if (data_.length() < window) {
    throw ArgumentError("train_pose_forecaster: clips have " + std::to_string(data_.length()) +
                        " frames, a window needs " + std::to_string(window));
  }
  torch::manual_seed(config_.seed);
  ForecasterArch arch;
  arch.joints = data_.coords.size(2);
  arch.hidden = config_.lstm_hidden;
  arch.layers = config_.lstm_layers;
  arch.observed = config_.observed;
  arch.predict = config_.predict;
  net_ = PoseForecaster(arch);
  opt_ = make_adam(*net_, config_.lstm_lr, 0.9, 0.999);
}

void ForecasterTrainer::resume(const Checkpoint& ckpt) {
  if (ckpt.stage != "lstm") throw IoError("expected an lstm checkpoint, got '" + ckpt.stage + "'");
  restore(ckpt, *net_, opt_.get());
  restore_rng(rng_, ckpt.meta.at("rng").get<std::string>());
  step_ = meta_step(ckpt);
}

StepRecord ForecasterTrainer::step() {
  const int64_t B = config_.batch, obs = config_.observed, pred = config_.predict;
  const int64_t window = obs + pred;
  std::vector<torch::Tensor> windows;
  windows.reserve(static_cast<size_t>(B));
  for (int64_t b = 0; b < B; ++b) {
    const int64_t i = uniform_int(rng_, 0, data_.size() - 1);
    const int64_t s = uniform_int(rng_, 0, data_.length() - window);
    windows.push_back(data_.coords[i].slice(0, s, s + window));
  }
  auto w = torch::stack(windows);
  auto out = net_->forward(w.slice(1, 0, obs), pred);
  auto loss = (out - w.slice(1, obs)).square().mean();
  opt_->zero_grad();
  loss.backward();
  torch::nn::utils::clip_grad_norm_(net_->parameters(), kGradClip);
  opt_->step();
  ++step_;
  StepRecord r;
  r.step = step_;
  r.report.rec = loss.item<double>();
  r.report.total = r.report.rec;
  return r;
}

Checkpoint ForecasterTrainer::checkpoint() const {
  return make_checkpoint("lstm", *net_, to_json(net_->arch()), config_, step_, rng_, opt_.get());
}

Checkpoint train_pose_forecaster(const DatasetManifest& manifest, const TrainConfig& config,
                                 LossHistory* history) {
  ForecasterTrainer trainer(load_split(manifest, Split::ForecasterTrain), config);
  const int64_t steps = config.stage_steps("lstm");
  for (int64_t s = 0; s < steps; ++s) {
    auto r = trainer.step();
    if (history) history->push_back(r);
  }
  return trainer.checkpoint();
}

PoseForecaster load_forecaster(const Checkpoint& ckpt) {
  if (ckpt.stage != "lstm") throw IoError("expected an lstm checkpoint, got '" + ckpt.stage + "'");
  PoseForecaster net(forecaster_arch_from_json(ckpt.arch));
  load_module_state(*net, ckpt.tensors);
  net->eval();
  return net;
}

ForecastScore score_forecaster(PoseForecaster& net, const ClipBatch& data) {
  const auto& arch = net->arch();
  const int64_t window = arch.observed + arch.predict;
  if (data.size() == 0 || data.length() < window) {
    throw ArgumentError("score_forecaster: clips are shorter than one forecast window");
  }
  torch::NoGradGuard guard;
  std::vector<torch::Tensor> windows;
  for (int64_t i = 0; i < data.size(); ++i) {
    for (int64_t s = 0; s + window <= data.length(); ++s) {
      windows.push_back(data.coords[i].slice(0, s, s + window));
    }
  }
  auto w = torch::stack(windows).to(torch::kFloat32);
  auto history = w.slice(1, 0, arch.observed);
  auto truth = w.slice(1, arch.observed).to(torch::kDouble);
  ForecastScore score;
  score.model = (net->forward(history, arch.predict).to(torch::kDouble) - truth).square().mean().item<double>();
  score.frozen =
      (freeze_last_pose(history, arch.predict).to(torch::kDouble) - truth).square().mean().item<double>();
  return score;
}

// ---------------------------------------------------------------------------------
// Stage 1

GMArch gm_arch_for(const TrainConfig& config, int64_t height, int64_t width, int64_t joints) {
  GMArch a;
  a.height = height;
  a.width = width;
  a.joints = joints;
  a.stages = config.gm_stages;
  a.base_width = config.gm_base_width;
  a.max_width = config.gm_max_width;
  a.dense = config.gm_dense;
  a.residual = config.gm_residual;
  a.validate();
  return a;
}

Stage1Trainer::Stage1Trainer(ClipBatch data, const TrainConfig& config)
    : data_(std::move(data)), config_(config), rng_(config.seed) {
  config_.validate();
  require_data(data_, "train_stage1");
  if (data_.length() <= config_.k_max) {
    throw ArgumentError("train_stage1: clips have " + std::to_string(data_.length()) +
                        " frames, k_max " + std::to_string(config_.k_max) + " needs more");
  }
  const int64_t H = data_.frames.size(3), W = data_.frames.size(4), J = data_.coords.size(2);
  torch::manual_seed(config_.seed);
  gm_ = ForecastNet(gm_arch_for(config_, H, W, J));
  critic_ = Critic(CriticArch::image(data_.frames.size(2) + J, H, W));
  opt_g_ = make_adam(*gm_, config_.lr, config_.beta1, config_.beta2);
  opt_d_ = make_adam(*critic_, config_.lr, config_.beta1, config_.beta2);
  if (config_.w_feat > 0) {
    appearance_ = default_appearance_extractor(data_.frames.size(2));
    structure_ = default_structure_extractor(data_.frames.size(2));
  }
}

void Stage1Trainer::resume(const Checkpoint& gm, const Checkpoint& critic) {
  if (gm.stage != "gm" || critic.stage != "critic-image") {
    throw IoError("stage-1 resume needs gm and critic-image checkpoints");
  }
  restore(gm, *gm_, opt_g_.get());
  restore(critic, *critic_, opt_d_.get());
  restore_rng(rng_, gm.meta.at("rng").get<std::string>());
  step_ = meta_step(gm);
}

FramePairBatch Stage1Trainer::sample_batch() {
  const int64_t B = config_.batch;
  std::vector<int64_t> clip(B), src(B), dst(B);
  for (int64_t b = 0; b < B; ++b) {
    clip[b] = uniform_int(rng_, 0, data_.size() - 1);
    const auto [t, k] = sample_time_jump(data_.length(), config_.k_max, rng_);
    src[b] = t;
    dst[b] = t + k;
  }
  auto ci = torch::tensor(clip, torch::kLong);
  auto si = torch::tensor(src, torch::kLong);
  auto di = torch::tensor(dst, torch::kLong);
  using torch::indexing::TensorIndex;
  const int64_t H = data_.frames.size(3), W = data_.frames.size(4);
  FramePairBatch out;
  out.image = data_.frames.index({ci, si});
  out.target = data_.frames.index({ci, di});
  out.current = maps_for(data_.coords.index({ci, si}), data_.visible.index({ci, si}), H, W, config_.sigma);
  out.target_map = maps_for(data_.coords.index({ci, di}), data_.visible.index({ci, di}), H, W, config_.sigma);
  return out;
}

double Stage1Trainer::critic_update() {
  auto batch = sample_batch();
  torch::Tensor fake;
  {
    torch::NoGradGuard guard;
    fake = gm_->forward(batch.image, batch.current, batch.target_map).frame;
  }
  auto loss = loss_critic_image(as_critic_fn(critic_), batch.target, fake, batch.target_map,
                                config_.lambda_gp, rng_);
  opt_d_->zero_grad();
  loss.total.backward();
  opt_d_->step();
  last_gp_ = loss.penalty.item<double>();
  return loss.total.item<double>();
}

StepRecord Stage1Trainer::generator_update(double last_critic, double last_gp) {
  auto batch = sample_batch();
  set_trainable(*critic_, false);
  auto out = gm_->forward(batch.image, batch.current, batch.target_map);
  auto rec = loss_reconstruction(out.frame, batch.target);
  auto sparsity = out.mask.defined() ? loss_sparsity(out.mask) : torch::zeros({});
  auto gen = loss_generator_image(as_critic_fn(critic_), out.frame, batch.target_map);
  auto feat = config_.w_feat > 0
                  ? loss_feature_similarity(out.frame, batch.target, appearance_, structure_)
                  : torch::zeros({});
  auto total = config_.w_rec * rec + config_.w_sparsity * sparsity + config_.w_gen * gen +
               config_.w_feat * feat;
  opt_g_->zero_grad();
  total.backward();
  opt_g_->step();
  set_trainable(*critic_, true);
  ++step_;
  StepRecord r;
  r.step = step_;
  auto& l = r.report;
  l.rec = rec.item<double>();
  l.sparsity = sparsity.item<double>();
  l.gen = gen.item<double>();
  l.feat = feat.item<double>();
  l.critic = last_critic;
  l.gp = last_gp;
  const LossWeights w{config_.w_rec, config_.w_sparsity, config_.w_gen, config_.w_feat};
  l.total = LossReport::weighted_total(w, l.rec, l.sparsity, l.gen, l.feat);
  return r;
}

StepRecord Stage1Trainer::step() {
  double critic = 0.0;
  for (int64_t i = 0; i < config_.ratio; ++i) critic = critic_update();
  return generator_update(critic, last_gp_);
}

std::pair<double, double> Stage1Trainer::probe(const FramePairBatch& batch) {
  torch::NoGradGuard guard;
  auto out = gm_->forward(batch.image, batch.current, batch.target_map);
  const double rec = loss_reconstruction(out.frame, batch.target).item<double>();
  const double mask = out.mask.defined() ? out.mask.mean().item<double>() : 0.0;
  return {rec, mask};
}

Checkpoint Stage1Trainer::gm_checkpoint() const {
  return make_checkpoint("gm", *gm_, to_json(gm_->arch()), config_, step_, rng_, opt_g_.get());
}

Checkpoint Stage1Trainer::critic_checkpoint() const {
  return make_checkpoint("critic-image", *critic_, to_json(critic_->arch()), config_, step_, rng_,
                         opt_d_.get());
}

Checkpoint train_stage1(const DatasetManifest& manifest, const TrainConfig& config, Checkpoint* critic,
                        LossHistory* history) {
  Stage1Trainer trainer(load_split(manifest, Split::ForecasterTrain), config);
  const int64_t steps = config.stage_steps("gm");
  for (int64_t s = 0; s < steps; ++s) {
    auto r = trainer.step();
    if (history) history->push_back(r);
  }
  if (critic) *critic = trainer.critic_checkpoint();
  return trainer.gm_checkpoint();
}

ForecastNet load_gm(const Checkpoint& ckpt) {
  if (ckpt.stage != "gm") throw IoError("expected a gm checkpoint, got '" + ckpt.stage + "'");
  ForecastNet net(gm_arch_from_json(ckpt.arch));
  load_module_state(*net, ckpt.tensors);
  net->eval();
  return net;
}

Critic load_critic(const Checkpoint& ckpt) {
  if (ckpt.stage != "critic-image" && ckpt.stage != "critic-video") {
    throw IoError("expected a critic checkpoint, got '" + ckpt.stage + "'");
  }
  Critic net(critic_arch_from_json(ckpt.arch));
  load_module_state(*net, ckpt.tensors);
  net->eval();
  return net;
}

std::pair<torch::Tensor, torch::Tensor> forecast_frames(ForecastNet& gm, const torch::Tensor& image,
                                                        const torch::Tensor& current,
                                                        const torch::Tensor& targets) {
  torch::NoGradGuard guard;
  const int64_t T = targets.size(0);
  std::vector<torch::Tensor> frames, masks;
  for (int64_t s = 0; s < T; s += kForecastChunk) {
    const int64_t n = std::min(kForecastChunk, T - s);
    auto img = image.unsqueeze(0).expand({n, -1, -1, -1});
    auto cur = current.unsqueeze(0).expand({n, -1, -1, -1});
    auto out = gm->forward(img, cur, targets.slice(0, s, s + n));
    frames.push_back(out.frame);
    masks.push_back(out.mask.defined() ? out.mask : torch::zeros({n, 1, image.size(1), image.size(2)}));
  }
  return {torch::cat(frames), torch::cat(masks)};
}

// ---------------------------------------------------------------------------------
// Stage 2

Stage2Trainer::Stage2Trainer(ClipBatch data, ForecastNet gm, const TrainConfig& config)
    : data_(std::move(data)), config_(config), gm_(std::move(gm)), rng_(config.seed) {
  config_.validate();
  if (gm_.is_empty()) throw ArgumentError("train_stage2: a trained forecasting network is required");
  require_data(data_, "train_stage2");
  const int64_t span = std::max(config_.k_max, config_.clip_k);
  if (data_.length() <= span) {
    throw ArgumentError("train_stage2: clips have " + std::to_string(data_.length()) +
                        " frames, windows need more than " + std::to_string(span));
  }
  gm_->eval();
  set_trainable(*gm_, false);
  const int64_t C = data_.frames.size(2), H = data_.frames.size(3), W = data_.frames.size(4);
  const int64_t J = data_.coords.size(2);
  torch::manual_seed(config_.seed);
  GRArch arch;
  arch.clip_length = config_.clip_k;
  arch.height = H;
  arch.width = W;
  arch.image_channels = C;
  arch.joints = J;
  arch.base_width = config_.gr_base_width;
  gr_ = RefineNet(arch);
  critic_i_ = Critic(CriticArch::image(C + J, H, W));
  critic_v_ = Critic(CriticArch::video(C + J, config_.clip_k, H, W));
  opt_g_ = make_adam(*gr_, config_.lr, config_.beta1, config_.beta2);
  opt_i_ = make_adam(*critic_i_, config_.lr, config_.beta1, config_.beta2);
  opt_v_ = make_adam(*critic_v_, config_.lr, config_.beta1, config_.beta2);
}

void Stage2Trainer::resume(const Checkpoint& gr, const Checkpoint& image_critic,
                           const Checkpoint& video_critic) {
  if (gr.stage != "gr" || image_critic.stage != "critic-image" || video_critic.stage != "critic-video") {
    throw IoError("stage-2 resume needs gr, critic-image and critic-video checkpoints");
  }
  restore(gr, *gr_, opt_g_.get());
  restore(image_critic, *critic_i_, opt_i_.get());
  restore(video_critic, *critic_v_, opt_v_.get());
  restore_rng(rng_, gr.meta.at("rng").get<std::string>());
  step_ = meta_step(gr);
}

ClipWindowBatch Stage2Trainer::sample_batch() {
  const int64_t B = config_.batch, K = config_.clip_k;
  const int64_t span = std::max(config_.k_max, K);
  const int64_t H = data_.frames.size(3), W = data_.frames.size(4);
  std::vector<torch::Tensor> coarse, maps, real;
  for (int64_t b = 0; b < B; ++b) {
    const int64_t i = uniform_int(rng_, 0, data_.size() - 1);
    const int64_t t = uniform_int(rng_, 0, data_.length() - 1 - span);
    const int64_t o = uniform_int(rng_, 0, span - K);
    const int64_t first = t + o + 1;
    auto m = maps_for(data_.coords[i].slice(0, first, first + K), data_.visible[i].slice(0, first, first + K),
                      H, W, config_.sigma);
    auto cur = maps_for(data_.coords[i][t], data_.visible[i][t], H, W, config_.sigma);
    coarse.push_back(forecast_frames(gm_, data_.frames[i][t], cur, m).first);
    maps.push_back(m);
    real.push_back(data_.frames[i].slice(0, first, first + K));
  }
  return {torch::stack(coarse), torch::stack(maps), torch::stack(real)};
}

double Stage2Trainer::critic_update() {
  auto batch = sample_batch();
  torch::Tensor fake;
  {
    torch::NoGradGuard guard;
    fake = gr_->forward(batch.coarse, batch.maps).clip;
  }
  const int64_t B = fake.size(0), K = fake.size(1);
  std::vector<int64_t> pick(B);
  for (auto& p : pick) p = uniform_int(rng_, 0, K - 1);
  auto bi = torch::arange(B, torch::kLong);
  auto ki = torch::tensor(pick, torch::kLong);
  auto li = loss_critic_image(as_critic_fn(critic_i_), batch.real.index({bi, ki}), fake.index({bi, ki}),
                              batch.maps.index({bi, ki}), config_.lambda_gp, rng_);
  auto lv = loss_critic_video(as_critic_fn(critic_v_), clip_to_volume(batch.real), clip_to_volume(fake),
                              clip_to_volume(batch.maps), config_.lambda_gp, rng_);
  opt_i_->zero_grad();
  opt_v_->zero_grad();
  (li.total + lv.total).backward();
  opt_i_->step();
  opt_v_->step();
  last_gp_ = li.penalty.item<double>() + lv.penalty.item<double>();
  return li.total.item<double>() + lv.total.item<double>();
}

StepRecord Stage2Trainer::generator_update(double last_critic) {
  auto batch = sample_batch();
  set_trainable(*critic_i_, false);
  set_trainable(*critic_v_, false);
  auto out = gr_->forward(batch.coarse, batch.maps);
  auto rec = loss_reconstruction(out.clip, batch.real);
  auto sparsity = loss_sparsity(out.mask);
  auto gen = loss_generator_refine(clip_to_volume(out.clip), clip_to_volume(batch.maps),
                                   as_critic_fn(critic_i_), as_critic_fn(critic_v_));
  auto total = config_.w_rec * rec + config_.w_sparsity * sparsity + config_.w_gen * gen;
  opt_g_->zero_grad();
  total.backward();
  opt_g_->step();
  set_trainable(*critic_i_, true);
  set_trainable(*critic_v_, true);
  ++step_;
  StepRecord r;
  r.step = step_;
  auto& l = r.report;
  l.rec = rec.item<double>();
  l.sparsity = sparsity.item<double>();
  l.gen = gen.item<double>();
  l.critic = last_critic;
  l.gp = last_gp_;
  const LossWeights w{config_.w_rec, config_.w_sparsity, config_.w_gen, 0.0};
  l.total = LossReport::weighted_total(w, l.rec, l.sparsity, l.gen, 0.0);
  return r;
}

StepRecord Stage2Trainer::step() {
  double critic = 0.0;
  for (int64_t i = 0; i < config_.ratio; ++i) critic = critic_update();
  return generator_update(critic);
}

Checkpoint Stage2Trainer::gr_checkpoint() const {
  return make_checkpoint("gr", *gr_, to_json(gr_->arch()), config_, step_, rng_, opt_g_.get());
}

Checkpoint Stage2Trainer::image_critic_checkpoint() const {
  return make_checkpoint("critic-image", *critic_i_, to_json(critic_i_->arch()), config_, step_, rng_,
                         opt_i_.get());
}

Checkpoint Stage2Trainer::video_critic_checkpoint() const {
  return make_checkpoint("critic-video", *critic_v_, to_json(critic_v_->arch()), config_, step_, rng_,
                         opt_v_.get());
}

Checkpoint train_stage2(const DatasetManifest& manifest, const Checkpoint* gm, const TrainConfig& config,
                        LossHistory* history) {
  if (gm == nullptr) throw ArgumentError("train_stage2: a trained forecasting network checkpoint is required");
  Stage2Trainer trainer(load_split(manifest, Split::RefinerTrain), load_gm(*gm), config);
  const int64_t steps = config.stage_steps("gr");
  for (int64_t s = 0; s < steps; ++s) {
    auto r = trainer.step();
    if (history) history->push_back(r);
  }
  return trainer.gr_checkpoint();
}

RefineNet load_gr(const Checkpoint& ckpt) {
  if (ckpt.stage != "gr") throw IoError("expected a gr checkpoint, got '" + ckpt.stage + "'");
  RefineNet net(gr_arch_from_json(ckpt.arch));
  load_module_state(*net, ckpt.tensors);
  net->eval();
  return net;
}

}  // namespace rmvl
