#include "rmvl/checkpoint.hpp"
#include "rmvl/config.hpp"
#include "rmvl/errors.hpp"
#include "rmvl/training.hpp"

#include "helpers.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <map>

using namespace rmvl;
namespace fs = std::filesystem;

namespace {

TrainConfig tiny_config() {
  return TrainConfig::parse(
      "batch = 2\n"
      "k_max = 8\n"
      "clip_k = 4\n"
      "gm_stages = 2\n"
      "gm_base_width = 2\n"
      "gm_max_width = 4\n"
      "gr_base_width = 2\n"
      "lstm_hidden = 8\n"
      "w_feat = 0.5\n"
      "seed = 3\n");
}

bool same_tensors(const std::vector<std::pair<std::string, torch::Tensor>>& a,
                  const std::vector<std::pair<std::string, torch::Tensor>>& b) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i) {
    if (a[i].first != b[i].first || !torch::equal(a[i].second, b[i].second)) return false;
  }
  return true;
}

std::vector<std::pair<std::string, torch::Tensor>> snapshot(const torch::nn::Module& m) {
  return module_state(m);
}

class TrainingTest : public ::testing::Test {
protected:
  static void SetUpTestSuite() {
    dir_ = new rmvl::test::TempDir("training");
    DatasetConfig d;
    d.clips = 12;
    d.clip_length = 42;
    d.height = 16;
    d.width = 16;
    manifest_ = new DatasetManifest(synthesize_dataset(d, 1, dir_->path() / "data"));
  }
  static void TearDownTestSuite() {
    delete manifest_;
    delete dir_;
  }
  static ClipBatch split(Split s) { return load_split(*manifest_, s); }
  static rmvl::test::TempDir* dir_;
  static DatasetManifest* manifest_;
};

rmvl::test::TempDir* TrainingTest::dir_ = nullptr;
DatasetManifest* TrainingTest::manifest_ = nullptr;

}  // namespace

TEST(SampleTimeJump, OnlyValidPair) {
  std::mt19937_64 rng(0);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(sample_time_jump(2, 1, rng), (std::pair<int64_t, int64_t>{0, 1}));
}

TEST(SampleTimeJump, TooShortIsArgumentError) {
  std::mt19937_64 rng(0);
  EXPECT_THROW(sample_time_jump(4, 4, rng), ArgumentError);
  EXPECT_THROW(sample_time_jump(10, 0, rng), ArgumentError);
}

TEST(SampleTimeJump, EmpiricalLawMatchesUniformJumpThenStart) {
  // P(t, k) = 1 / k_max * 1 / (L - k) for 1 <= k <= k_max, 0 <= t < L - k.
  const int64_t L = 10, kmax = 4, n = 100000;
  std::mt19937_64 rng(123);
  std::map<std::pair<int64_t, int64_t>, int64_t> counts;
  for (int64_t i = 0; i < n; ++i) {
    auto [t, k] = sample_time_jump(L, kmax, rng);
    ASSERT_GE(k, 1);
    ASSERT_LE(k, kmax);
    ASSERT_GE(t, 0);
    ASSERT_LT(t + k, L);
    ++counts[{t, k}];
  }
  double chi2 = 0.0;
  int cells = 0;
  for (int64_t k = 1; k <= kmax; ++k) {
    for (int64_t t = 0; t < L - k; ++t) {
      const double expected = static_cast<double>(n) / kmax / static_cast<double>(L - k);
      const double d = static_cast<double>(counts[{t, k}]) - expected;
      chi2 += d * d / expected;
      ++cells;
    }
  }
  EXPECT_EQ(cells, 30);
  // 29 degrees of freedom; the 0.999 quantile is 58.3.
  EXPECT_LT(chi2, 58.3);
}

TEST(LossCsv, WriteReadAppend) {
  rmvl::test::TempDir dir("csv");
  LossHistory h{{1, {0.5, 0.25, -1.0, 2.0, 0.1, 0.0, -0.25}}, {2, {0.4, 0.2, -0.5, 1.0, 0.2, 0.3, 0.4}}};
  write_loss_csv(dir.path() / "loss.csv", h);
  write_loss_csv(dir.path() / "loss.csv", {{3, {1, 2, 3, 4, 5, 6, 7}}}, true);
  auto back = read_loss_csv(dir.path() / "loss.csv");
  ASSERT_EQ(back.size(), 3u);
  EXPECT_EQ(back[1].step, 2);
  EXPECT_EQ(back[1].report.feat, 0.3);
  EXPECT_EQ(back[2].report.total, 7.0);
  std::ifstream in(dir.path() / "loss.csv");
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "step,rec,sparsity,gen,critic,gp,feat,total");
}

TEST_F(TrainingTest, ForecasterZeroStepsKeepsInitialization) {
  auto cfg = tiny_config();
  cfg.steps_lstm = 0;
  auto ckpt = train_pose_forecaster(*manifest_, cfg);
  torch::manual_seed(cfg.seed);
  ForecasterArch a;
  a.hidden = 8;
  PoseForecaster fresh(a);
  EXPECT_TRUE(same_tensors(ckpt.tensors, module_state(*fresh)));
  EXPECT_EQ(ckpt.arch.at("observed"), 10);
  EXPECT_EQ(ckpt.arch.at("predict"), 32);
}

TEST_F(TrainingTest, ForecasterLossDecreases) {
  auto cfg = tiny_config();
  cfg.batch = 8;
  ForecasterTrainer trainer(split(Split::ForecasterTrain), cfg);
  const double first = trainer.step().report.rec;
  double last = 0.0;
  for (int i = 0; i < 60; ++i) last = trainer.step().report.rec;
  EXPECT_LT(last, first);
}

TEST_F(TrainingTest, ForecasterRejectsShortOrEmptyData) {
  auto cfg = tiny_config();
  EXPECT_THROW(ForecasterTrainer(ClipBatch{}, cfg), ArgumentError);
  cfg.predict = 40;
  EXPECT_THROW(ForecasterTrainer(split(Split::ForecasterTrain), cfg), ArgumentError);
}

TEST_F(TrainingTest, ForecasterCheckpointRoundTrip) {
  auto cfg = tiny_config();
  cfg.steps_lstm = 3;
  auto ckpt = train_pose_forecaster(*manifest_, cfg);
  save_checkpoint(dir_->path() / "lstm.ckpt", ckpt);
  auto a = load_forecaster(ckpt);
  auto b = load_forecaster(load_checkpoint(dir_->path() / "lstm.ckpt"));
  auto hist = split(Split::Eval).coords.slice(1, 0, 10);
  torch::NoGradGuard guard;
  EXPECT_TRUE(torch::equal(a->forward(hist, 32), b->forward(hist, 32)));
}

TEST_F(TrainingTest, Stage1ZeroStepsKeepsInitialization) {
  auto cfg = tiny_config();
  cfg.steps_gm = 0;
  auto ckpt = train_stage1(*manifest_, cfg);
  torch::manual_seed(cfg.seed);
  ForecastNet fresh(gm_arch_for(cfg, 16, 16, 8));
  EXPECT_TRUE(same_tensors(ckpt.tensors, module_state(*fresh)));
  EXPECT_EQ(ckpt.meta.at("step"), 0);
}

TEST_F(TrainingTest, Stage1IsBitReproducible) {
  auto cfg = tiny_config();
  cfg.steps_gm = 3;
  LossHistory ha, hb;
  Checkpoint ca, cb;
  auto a = train_stage1(*manifest_, cfg, &ca, &ha);
  auto b = train_stage1(*manifest_, cfg, &cb, &hb);
  EXPECT_TRUE(same_tensors(a.tensors, b.tensors));
  EXPECT_TRUE(same_tensors(ca.tensors, cb.tensors));
  ASSERT_EQ(ha.size(), 3u);
  for (size_t i = 0; i < ha.size(); ++i) EXPECT_EQ(ha[i].report.total, hb[i].report.total);
}

TEST_F(TrainingTest, Stage1ReportTotalIsWeightedSum) {
  auto cfg = tiny_config();
  cfg.w_rec = 2.0;
  cfg.w_sparsity = 0.5;
  cfg.w_gen = 0.25;
  Stage1Trainer trainer(split(Split::ForecasterTrain), cfg);
  for (int i = 0; i < 2; ++i) {
    const auto r = trainer.step().report;
    EXPECT_EQ(r.total, LossReport::weighted_total({2.0, 0.5, 0.25, 0.5}, r.rec, r.sparsity, r.gen, r.feat));
    for (double v : {r.rec, r.sparsity, r.gen, r.critic, r.gp, r.feat, r.total}) EXPECT_TRUE(std::isfinite(v));
    EXPECT_GT(r.feat, 0.0);
  }
}

TEST_F(TrainingTest, Stage1UpdatesAlternateStrictly) {
  Stage1Trainer trainer(split(Split::ForecasterTrain), tiny_config());
  auto g0 = snapshot(*trainer.gm()), d0 = snapshot(*trainer.critic());
  trainer.critic_update();
  auto g1 = snapshot(*trainer.gm()), d1 = snapshot(*trainer.critic());
  EXPECT_TRUE(same_tensors(g0, g1));
  EXPECT_FALSE(same_tensors(d0, d1));
  trainer.generator_update(0.0, 0.0);
  EXPECT_FALSE(same_tensors(g1, snapshot(*trainer.gm())));
  EXPECT_TRUE(same_tensors(d1, snapshot(*trainer.critic())));
}

TEST_F(TrainingTest, Stage1ResumeMatchesUninterruptedRun) {
  auto cfg = tiny_config();
  Stage1Trainer full(split(Split::ForecasterTrain), cfg);
  LossHistory hf;
  for (int i = 0; i < 4; ++i) hf.push_back(full.step());

  Stage1Trainer first(split(Split::ForecasterTrain), cfg);
  first.step();
  first.step();
  save_checkpoint(dir_->path() / "s1_gm.ckpt", first.gm_checkpoint());
  save_checkpoint(dir_->path() / "s1_critic.ckpt", first.critic_checkpoint());
  Stage1Trainer second(split(Split::ForecasterTrain), cfg);
  second.resume(load_checkpoint(dir_->path() / "s1_gm.ckpt"), load_checkpoint(dir_->path() / "s1_critic.ckpt"));
  EXPECT_EQ(second.steps_done(), 2);
  auto r3 = second.step();
  auto r4 = second.step();
  EXPECT_EQ(r3.step, 3);
  EXPECT_EQ(r4.step, 4);
  EXPECT_EQ(r3.report.total, hf[2].report.total);
  EXPECT_EQ(r4.report.total, hf[3].report.total);
  EXPECT_TRUE(same_tensors(snapshot(*second.gm()), snapshot(*full.gm())));
  EXPECT_TRUE(same_tensors(snapshot(*second.critic()), snapshot(*full.critic())));
}

TEST_F(TrainingTest, Stage1EmptySplitIsArgumentError) {
  EXPECT_THROW(Stage1Trainer(ClipBatch{}, tiny_config()), ArgumentError);
}

TEST_F(TrainingTest, Stage1CheckpointRoundTripGivesIdenticalInference) {
  auto cfg = tiny_config();
  cfg.steps_gm = 2;
  auto ckpt = train_stage1(*manifest_, cfg);
  save_checkpoint(dir_->path() / "gm.ckpt", ckpt);
  auto a = load_gm(ckpt);
  auto b = load_gm(load_checkpoint(dir_->path() / "gm.ckpt", "gm"));
  auto data = split(Split::Eval);
  auto maps = render_heatmaps_batch(data.coords.select(1, 0), data.visible.select(1, 0), 16, 16, 1.5);
  auto target = render_heatmaps_batch(data.coords.select(1, 5), data.visible.select(1, 5), 16, 16, 1.5);
  torch::NoGradGuard guard;
  auto image = data.frames.select(1, 0);
  EXPECT_TRUE(torch::equal(a->forward(image, maps, target).frame, b->forward(image, maps, target).frame));
}

TEST_F(TrainingTest, Stage2RequiresForecastingNetwork) {
  auto cfg = tiny_config();
  EXPECT_THROW(train_stage2(*manifest_, nullptr, cfg), ArgumentError);
  EXPECT_THROW(Stage2Trainer(split(Split::RefinerTrain), ForecastNet(nullptr), cfg), ArgumentError);
}

TEST_F(TrainingTest, Stage2LeavesForecastingNetworkUntouched) {
  auto cfg = tiny_config();
  cfg.steps_gm = 1;
  auto gm_ckpt = train_stage1(*manifest_, cfg);
  save_checkpoint(dir_->path() / "frozen.ckpt", gm_ckpt);
  auto gm = load_gm(gm_ckpt);
  const auto before = snapshot(*gm);
  Stage2Trainer trainer(split(Split::RefinerTrain), gm, cfg);
  trainer.step();
  trainer.step();
  EXPECT_TRUE(same_tensors(before, snapshot(*gm)));
  EXPECT_TRUE(same_tensors(load_checkpoint(dir_->path() / "frozen.ckpt").tensors, gm_ckpt.tensors));
}

TEST_F(TrainingTest, Stage2ZeroStepsKeepsInitialization) {
  auto cfg = tiny_config();
  cfg.steps_gm = 0;
  cfg.steps_gr = 0;
  auto gm_ckpt = train_stage1(*manifest_, cfg);
  auto a = train_stage2(*manifest_, &gm_ckpt, cfg);
  auto b = train_stage2(*manifest_, &gm_ckpt, cfg);
  EXPECT_TRUE(same_tensors(a.tensors, b.tensors));
  torch::manual_seed(cfg.seed);
  RefineNet fresh(gr_arch_from_json(a.arch));
  EXPECT_TRUE(same_tensors(a.tensors, module_state(*fresh)));
}

TEST_F(TrainingTest, Stage2CriticsUpdateJointlyThenGenerator) {
  auto cfg = tiny_config();
  cfg.steps_gm = 0;
  auto gm = load_gm(train_stage1(*manifest_, cfg));
  Stage2Trainer trainer(split(Split::RefinerTrain), gm, cfg);
  auto g0 = snapshot(*trainer.gr()), i0 = snapshot(*trainer.image_critic()), v0 = snapshot(*trainer.video_critic());
  trainer.critic_update();
  auto g1 = snapshot(*trainer.gr()), i1 = snapshot(*trainer.image_critic()), v1 = snapshot(*trainer.video_critic());
  EXPECT_TRUE(same_tensors(g0, g1));
  EXPECT_FALSE(same_tensors(i0, i1));
  EXPECT_FALSE(same_tensors(v0, v1));
  trainer.generator_update(0.0);
  EXPECT_FALSE(same_tensors(g1, snapshot(*trainer.gr())));
  EXPECT_TRUE(same_tensors(i1, snapshot(*trainer.image_critic())));
  EXPECT_TRUE(same_tensors(v1, snapshot(*trainer.video_critic())));
}

TEST_F(TrainingTest, Stage2ResumeMatchesUninterruptedRun) {
  auto cfg = tiny_config();
  cfg.steps_gm = 0;
  auto gm = load_gm(train_stage1(*manifest_, cfg));
  Stage2Trainer full(split(Split::RefinerTrain), gm, cfg);
  full.step();
  full.step();
  const auto r3 = full.step();
  Stage2Trainer first(split(Split::RefinerTrain), gm, cfg);
  first.step();
  first.step();
  Stage2Trainer second(split(Split::RefinerTrain), gm, cfg);
  second.resume(first.gr_checkpoint(), first.image_critic_checkpoint(), first.video_critic_checkpoint());
  const auto s3 = second.step();
  EXPECT_EQ(s3.step, 3);
  EXPECT_EQ(s3.report.total, r3.report.total);
  EXPECT_TRUE(same_tensors(snapshot(*second.gr()), snapshot(*full.gr())));
}

TEST_F(TrainingTest, Stage2WindowsComeFromFrozenForecasts) {
  auto cfg = tiny_config();
  cfg.steps_gm = 0;
  auto gm = load_gm(train_stage1(*manifest_, cfg));
  Stage2Trainer trainer(split(Split::RefinerTrain), gm, cfg);
  auto b = trainer.sample_batch();
  EXPECT_EQ(b.coarse.sizes(), (std::vector<int64_t>{2, 4, 3, 16, 16}));
  EXPECT_EQ(b.maps.sizes(), (std::vector<int64_t>{2, 4, 8, 16, 16}));
  EXPECT_EQ(b.real.sizes(), b.coarse.sizes());
}
