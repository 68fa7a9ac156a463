#pragma once

// Objective terms for both generators and both critics.
//
// Conventions:
//   * L1 terms use mean reduction, so values do not scale with resolution.
//   * Batched sample tensors carry channels on dim 1: images [B, C, H, W], videos in
//     volume layout [B, C, K, H, W]. Conditions use the same layout.
//   * Scalar results are 0-dim tensors that stay on the autograd graph.

#include "rmvl/critics.hpp"

#include <nlohmann/json_fwd.hpp>

#include <functional>
#include <random>

namespace rmvl {

inline constexpr double kDefaultGradientPenaltyWeight = 10.0;

/// Mean |pred - target|.
torch::Tensor loss_reconstruction(const torch::Tensor& pred, const torch::Tensor& target);

/// Mean |mask|. Throws ArgumentError when any entry is outside [0, 1].
torch::Tensor loss_sparsity(const torch::Tensor& mask);

/// Critic scores of [sample, condition] per batch entry.
torch::Tensor critic_scores(const CriticFn& critic, const torch::Tensor& sample,
                            const torch::Tensor& cond);

/// Batch mean of (||grad_{[x_hat, cond]} critic([x_hat, cond])||_2 - 1)^2 where
/// x_hat = eps * real + (1 - eps) * fake with one eps ~ U[0, 1] per sample. The gradient
/// is taken with respect to the whole concatenated input, condition channels included.
/// The result is differentiable with respect to the critic's parameters.
torch::Tensor gradient_penalty(const CriticFn& critic, const torch::Tensor& real,
                               const torch::Tensor& fake, const torch::Tensor& cond,
                               std::mt19937_64& rng);

/// Same penalty for a fixed interpolation point (no sampling).
torch::Tensor gradient_penalty_at(const CriticFn& critic, const torch::Tensor& point,
                                  const torch::Tensor& cond);

/// -mean critic([fake, cond]).
torch::Tensor loss_generator_image(const CriticFn& image_critic, const torch::Tensor& fake,
                                   const torch::Tensor& cond);

struct CriticLoss {
  torch::Tensor total;       // fake_score - real_score + lambda * gp
  torch::Tensor real_score;  // batch mean
  torch::Tensor fake_score;  // batch mean
  torch::Tensor penalty;
};

/// Wasserstein critic loss with gradient penalty; layout-agnostic (image or volume).
CriticLoss loss_critic(const CriticFn& critic, const torch::Tensor& real, const torch::Tensor& fake,
                       const torch::Tensor& cond, double lambda, std::mt19937_64& rng);

inline CriticLoss loss_critic_image(const CriticFn& image_critic, const torch::Tensor& real,
                                    const torch::Tensor& fake, const torch::Tensor& cond,
                                    double lambda, std::mt19937_64& rng) {
  return loss_critic(image_critic, real, fake, cond, lambda, rng);
}

inline CriticLoss loss_critic_video(const CriticFn& video_critic, const torch::Tensor& real,
                                    const torch::Tensor& fake, const torch::Tensor& cond,
                                    double lambda, std::mt19937_64& rng) {
  return loss_critic(video_critic, real, fake, cond, lambda, rng);
}

/// -critic_V([clip, conds]) - (1/K) sum_k critic_I([frame_k, cond_k]), batch mean.
/// `refined` and `conds` are in volume layout [B, C, K, H, W].
torch::Tensor loss_generator_refine(const torch::Tensor& refined, const torch::Tensor& conds,
                                    const CriticFn& image_critic, const CriticFn& video_critic);

/// Maps a batch of frames [B, C, H, W] to features [B, ...].
using FeatureExtractor = std::function<torch::Tensor(const torch::Tensor&)>;

/// ||C1(target) - C1(pred)||^2 + ||C2(target) - C2(pred)||^2 per sample, batch mean.
torch::Tensor loss_feature_similarity(const torch::Tensor& pred, const torch::Tensor& target,
                                      const FeatureExtractor& appearance,
                                      const FeatureExtractor& structure);

/// Fixed-weight random convolution stack with global average pooling. Weights come from
/// a private RNG seeded by `seed`, so extractors are reproducible and never trained.
class RandomConvFeaturesImpl : public torch::nn::Module {
public:
  RandomConvFeaturesImpl(uint64_t seed, int64_t in_channels, std::vector<int64_t> widths,
                         bool grayscale_gradients = false);
  torch::Tensor forward(const torch::Tensor& x);

private:
  bool gradients_;
  std::vector<torch::nn::Conv2d> convs_;
};
TORCH_MODULE(RandomConvFeatures);

/// Default appearance (colour) and structure (edge) extractors for the feature loss.
FeatureExtractor default_appearance_extractor(int64_t image_channels = 3);
FeatureExtractor default_structure_extractor(int64_t image_channels = 3);

/// Fills every parameter of `module` with He-scaled normals from a seeded private RNG.
void init_from_seed(torch::nn::Module& module, uint64_t seed);

struct LossWeights {
  double rec = 1.0;
  double sparsity = 1.0;
  double gen = 1.0;
  double feat = 1.0;
};

/// Named scalar losses of one training step. `total` is the generator objective:
/// w_rec * rec + w_sparsity * sparsity + w_gen * gen + w_feat * feat. `critic` is the
/// critic objective (its gradient penalty already weighted) and `gp` the raw penalty.
struct LossReport {
  double rec = 0.0;
  double sparsity = 0.0;
  double gen = 0.0;
  double critic = 0.0;
  double gp = 0.0;
  double feat = 0.0;
  double total = 0.0;

  static double weighted_total(const LossWeights& w, double rec, double sparsity, double gen,
                               double feat);
};

}  // namespace rmvl
