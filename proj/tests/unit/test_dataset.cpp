#include "rmvl/dataset.hpp"
#include "rmvl/errors.hpp"
#include "rmvl/image_io.hpp"

#include "helpers.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

using namespace rmvl;
namespace fs = std::filesystem;

namespace {

constexpr int64_t kNeckJoint = 0;
constexpr int64_t kHipJoint = 5;

DatasetConfig small_config() {
  DatasetConfig c;
  c.clips = 12;
  c.clip_length = 42;
  c.height = 32;
  c.width = 32;
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// Hip position from the trajectory formulas, written out independently.
std::pair<double, double> hip_oracle(const ClipMotion& m, double t) {
  const double periods[] = {0.0, 16.0, 12.0, 20.0};
  const double P = periods[m.motion_class];
  const double u = P > 0 ? 0.5 - 0.5 * std::cos(2 * std::numbers::pi * t / P + m.phase) : 0.0;
  double x = m.center_x, y = m.center_y;
  if (m.motion_class == 0) x += m.velocity * t;
  if (m.motion_class == 2) y -= 0.03 * m.amplitude * u;
  if (m.motion_class == 3) y += 0.07 * m.amplitude * u;
  return {x, y};
}

class DatasetTest : public ::testing::Test {
protected:
  static void SetUpTestSuite() {
    dir_ = new rmvl::test::TempDir("dataset");
    manifest_ = new DatasetManifest(synthesize_dataset(small_config(), 7, dir_->path() / "a"));
  }
  static void TearDownTestSuite() {
    delete manifest_;
    delete dir_;
  }
  static rmvl::test::TempDir* dir_;
  static DatasetManifest* manifest_;
};

rmvl::test::TempDir* DatasetTest::dir_ = nullptr;
DatasetManifest* DatasetTest::manifest_ = nullptr;

}  // namespace

TEST_F(DatasetTest, TwelveClipsSplitFourWays) {
  EXPECT_EQ(manifest_->clips.size(), 12u);
  for (Split s : {Split::ForecasterTrain, Split::RefinerTrain, Split::Eval}) {
    auto clips = manifest_->split(s);
    EXPECT_EQ(clips.size(), 4u) << to_string(s);
    std::set<int64_t> classes;
    for (const auto* c : clips) classes.insert(c->motion_class);
    EXPECT_EQ(classes.size(), 4u) << "every split covers every class";
  }
  std::set<std::string> ids;
  for (const auto& c : manifest_->clips) ids.insert(c.id);
  EXPECT_EQ(ids.size(), 12u);
}

TEST_F(DatasetTest, EveryFrameHasKeypoints) {
  for (const auto& c : manifest_->clips) {
    auto poses = load_keypoints(manifest_->root / c.keypoints_file);
    EXPECT_EQ(poses.length(), c.length);
    EXPECT_EQ(poses.joints(), kSkeletonJoints);
    EXPECT_EQ(load_clip(manifest_->root / c.frames_dir).length(), c.length);
  }
}

TEST_F(DatasetTest, SameSeedIsByteIdentical) {
  auto other = synthesize_dataset(small_config(), 7, dir_->path() / "b");
  ASSERT_EQ(other.clips.size(), manifest_->clips.size());
  for (size_t i = 0; i < other.clips.size(); ++i) {
    const auto& a = manifest_->clips[i];
    const auto& b = other.clips[i];
    EXPECT_EQ(slurp(manifest_->root / a.keypoints_file), slurp(other.root / b.keypoints_file));
    for (int64_t t = 0; t < a.length; ++t) {
      const auto name = clip_frame_name(t);
      ASSERT_EQ(slurp(manifest_->root / a.frames_dir / name), slurp(other.root / b.frames_dir / name));
    }
  }
  EXPECT_EQ(slurp(manifest_->root / "manifest.json"), slurp(other.root / "manifest.json"));
}

TEST_F(DatasetTest, DifferentSeedDiffers) {
  auto cfg = small_config();
  cfg.clips = 4;
  auto other = synthesize_dataset(cfg, 8, dir_->path() / "c");
  EXPECT_NE(slurp(manifest_->root / manifest_->clips[0].keypoints_file),
            slurp(other.root / other.clips[0].keypoints_file));
}

TEST_F(DatasetTest, KeypointsFollowClosedFormTrajectory) {
  const double px = 1.0 / 32.0;
  for (const auto& c : manifest_->clips) {
    auto poses = load_keypoints(manifest_->root / c.keypoints_file);
    const auto coords = poses.coords();
    for (int64_t t = 0; t < c.length; ++t) {
      const auto [hx, hy] = hip_oracle(c.motion, static_cast<double>(t));
      EXPECT_LT(std::abs(coords[t][kHipJoint][0].item<double>() - hx), px);
      EXPECT_LT(std::abs(coords[t][kHipJoint][1].item<double>() - hy), px);
      EXPECT_LT(std::abs(coords[t][kNeckJoint][1].item<double>() - (hy - 0.2 * c.motion.scale)), px);
    }
  }
}

TEST(Dataset, RenderedFigureCoversEveryVisibleJoint) {
  // At 64x64 limbs are thicker than a pixel diagonal, so the pixel nearest each joint is
  // pure figure colour: all joint pixels of a frame share one colour.
  rmvl::test::TempDir dir("render");
  auto cfg = small_config();
  cfg.clips = 4;
  cfg.height = 64;
  cfg.width = 64;
  auto manifest = synthesize_dataset(cfg, 3, dir.path());
  for (const auto& c : manifest.clips) {
    auto poses = load_keypoints(manifest.root / c.keypoints_file);
    auto clip = load_clip(manifest.root / c.frames_dir);
    for (int64_t t = 0; t < c.length; t += 5) {
      const torch::Tensor frame = clip.frame(t).pixels();
      const auto& pose = poses[t];
      torch::Tensor colour;
      for (int64_t j = 0; j < pose.size(); ++j) {
        if (!pose[j].visible) continue;
        const auto [row, col] = joint_pixel(pose[j], 64, 64);
        auto px = frame.index({torch::indexing::Slice(), row, col});
        if (!colour.defined()) {
          colour = px;
        } else {
          EXPECT_TRUE(torch::equal(px, colour)) << c.id << " t=" << t << " joint " << j;
        }
      }
    }
  }
}

TEST_F(DatasetTest, ManifestRoundTrip) {
  auto loaded = DatasetManifest::load(manifest_->root / "manifest.json");
  ASSERT_EQ(loaded.clips.size(), manifest_->clips.size());
  for (size_t i = 0; i < loaded.clips.size(); ++i) {
    EXPECT_EQ(loaded.clips[i].id, manifest_->clips[i].id);
    EXPECT_EQ(loaded.clips[i].split, manifest_->clips[i].split);
    EXPECT_EQ(loaded.clips[i].motion.phase, manifest_->clips[i].motion.phase);
  }
  EXPECT_EQ(loaded.seed, 7u);
}

TEST_F(DatasetTest, LoadSplitAndSubset) {
  auto batch = load_split(*manifest_, Split::Eval);
  EXPECT_EQ(batch.size(), 4);
  EXPECT_EQ(batch.frames.sizes(), (std::vector<int64_t>{4, 42, 3, 32, 32}));
  EXPECT_EQ(batch.coords.sizes(), (std::vector<int64_t>{4, 42, 8, 2}));
  auto sub = subset(batch, {2, 0});
  EXPECT_EQ(sub.ids, (std::vector<std::string>{batch.ids[2], batch.ids[0]}));
  EXPECT_TRUE(torch::equal(sub.frames[0], batch.frames[2]));
}

TEST(Dataset, ShortClipsAreArgumentError) {
  rmvl::test::TempDir dir("short");
  auto cfg = small_config();
  cfg.clip_length = 41;
  EXPECT_THROW(synthesize_dataset(cfg, 0, dir.path()), ArgumentError);
}

TEST(Dataset, UnwritableRootIsIoError) {
  rmvl::test::TempDir dir("unwritable");
  std::ofstream(dir.path() / "file") << "x";
  auto cfg = small_config();
  cfg.clips = 1;
  EXPECT_THROW(synthesize_dataset(cfg, 0, dir.path() / "file" / "sub"), IoError);
}

TEST(Dataset, SplitNames) {
  for (Split s : {Split::ForecasterTrain, Split::RefinerTrain, Split::Eval}) {
    EXPECT_EQ(split_from_string(to_string(s)), s);
  }
  EXPECT_THROW(split_from_string("bogus"), ArgumentError);
}
