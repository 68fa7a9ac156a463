#include "rmvl/losses.hpp"

#include "rmvl/errors.hpp"

#include <sstream>

namespace F = torch::nn::functional;

namespace rmvl {
namespace {

void require_same_shape(const torch::Tensor& a, const torch::Tensor& b, const char* what) {
  if (!a.sizes().equals(b.sizes())) {
    std::ostringstream os;
    os << what << ": shapes " << a.sizes() << " and " << b.sizes() << " differ";
    throw ShapeError(os.str());
  }
}

void require_condition(const torch::Tensor& sample, const torch::Tensor& cond, const char* what) {
  bool ok = sample.dim() == cond.dim() && sample.dim() >= 2 && sample.size(0) == cond.size(0);
  for (int64_t d = 2; ok && d < sample.dim(); ++d) ok = sample.size(d) == cond.size(d);
  if (!ok) {
    std::ostringstream os;
    os << what << ": sample " << sample.sizes() << " and condition " << cond.sizes()
       << " must agree on every dim but channels";
    throw ShapeError(os.str());
  }
}

// One epsilon per sample, broadcast over the remaining dims.
torch::Tensor sample_epsilon(const torch::Tensor& like, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> eps(static_cast<size_t>(like.size(0)));
  for (auto& e : eps) e = u(rng);
  std::vector<int64_t> shape(static_cast<size_t>(like.dim()), 1);
  shape[0] = like.size(0);
  return torch::tensor(eps, torch::kDouble).view(shape).to(like.scalar_type());
}

}  // namespace

torch::Tensor loss_reconstruction(const torch::Tensor& pred, const torch::Tensor& target) {
  require_same_shape(pred, target, "loss_reconstruction");
  return (pred - target).abs().mean();
}

torch::Tensor loss_sparsity(const torch::Tensor& mask) {
  if (mask.numel() == 0) throw ShapeError("loss_sparsity: empty mask");
  {
    torch::NoGradGuard guard;
    if (!torch::isfinite(mask).all().item<bool>() || mask.min().item<double>() < 0.0 ||
        mask.max().item<double>() > 1.0) {
      throw ArgumentError("loss_sparsity: mask values must lie in [0, 1]");
    }
  }
  return mask.abs().mean();
}

torch::Tensor critic_scores(const CriticFn& critic, const torch::Tensor& sample,
                            const torch::Tensor& cond) {
  require_condition(sample, cond, "critic_scores");
  auto s = critic(torch::cat({sample, cond}, 1));
  return s.reshape({sample.size(0)});
}

torch::Tensor gradient_penalty_at(const CriticFn& critic, const torch::Tensor& point,
                                  const torch::Tensor& cond) {
  require_condition(point, cond, "gradient_penalty");
  auto input = torch::cat({point.detach(), cond.detach()}, 1).requires_grad_(true);
  auto score = critic(input);
  if (!score.requires_grad()) {
    throw ContractViolation("gradient_penalty: critic output is not differentiable w.r.t. its input");
  }
  auto grads = torch::autograd::grad({score.sum()}, {input}, {}, /*retain_graph=*/true,
                                     /*create_graph=*/true, /*allow_unused=*/true);
  if (grads.empty() || !grads[0].defined()) {
    throw ContractViolation("gradient_penalty: critic output does not depend on its input");
  }
  auto norm = grads[0].flatten(1).norm(2, 1);
  return (norm - 1).square().mean();
}

torch::Tensor gradient_penalty(const CriticFn& critic, const torch::Tensor& real,
                               const torch::Tensor& fake, const torch::Tensor& cond,
                               std::mt19937_64& rng) {
  require_same_shape(real, fake, "gradient_penalty");
  auto eps = sample_epsilon(real, rng);
  auto point = eps * real.detach() + (1 - eps) * fake.detach();
  return gradient_penalty_at(critic, point, cond);
}

torch::Tensor loss_generator_image(const CriticFn& image_critic, const torch::Tensor& fake,
                                   const torch::Tensor& cond) {
  return -critic_scores(image_critic, fake, cond).mean();
}

CriticLoss loss_critic(const CriticFn& critic, const torch::Tensor& real, const torch::Tensor& fake,
                       const torch::Tensor& cond, double lambda, std::mt19937_64& rng) {
  require_same_shape(real, fake, "loss_critic");
  if (!(lambda >= 0.0)) throw ArgumentError("loss_critic: lambda must be non-negative");
  CriticLoss out;
  out.real_score = critic_scores(critic, real.detach(), cond.detach()).mean();
  out.fake_score = critic_scores(critic, fake.detach(), cond.detach()).mean();
  out.penalty = gradient_penalty(critic, real, fake, cond, rng);
  out.total = out.fake_score - out.real_score + lambda * out.penalty;
  return out;
}

torch::Tensor loss_generator_refine(const torch::Tensor& refined, const torch::Tensor& conds,
                                    const CriticFn& image_critic, const CriticFn& video_critic) {
  if (refined.dim() != 5) throw ShapeError("loss_generator_refine: expected [B, C, K, H, W]");
  require_condition(refined, conds, "loss_generator_refine");
  const int64_t B = refined.size(0), K = refined.size(2);
  auto video = critic_scores(video_critic, refined, conds);  // [B]
  auto frames = refined.transpose(1, 2).reshape({B * K, refined.size(1), refined.size(3), refined.size(4)});
  auto frame_conds = conds.transpose(1, 2).reshape({B * K, conds.size(1), conds.size(3), conds.size(4)});
  auto per_frame = critic_scores(image_critic, frames, frame_conds).view({B, K});
  return (-video - per_frame.mean(1)).mean();
}

torch::Tensor loss_feature_similarity(const torch::Tensor& pred, const torch::Tensor& target,
                                      const FeatureExtractor& appearance,
                                      const FeatureExtractor& structure) {
  require_same_shape(pred, target, "loss_feature_similarity");
  auto term = [&](const FeatureExtractor& f) {
    auto a = f(target);
    auto b = f(pred);
    if (!a.sizes().equals(b.sizes()) || a.dim() < 1 || a.size(0) != pred.size(0)) {
      throw ContractViolation("loss_feature_similarity: extractor output shape is inconsistent");
    }
    return (a - b).square().flatten(1).sum(1);
  };
  return (term(appearance) + term(structure)).mean();
}

void init_from_seed(torch::nn::Module& module, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  torch::NoGradGuard guard;
  for (auto& p : module.parameters()) {
    if (p.dim() < 2) {
      p.zero_();
      continue;
    }
    const double fan_in = static_cast<double>(p.numel() / p.size(0));
    const double std = std::sqrt(2.0 / fan_in);
    std::vector<double> values(static_cast<size_t>(p.numel()));
    for (auto& v : values) v = normal(rng) * std;
    p.copy_(torch::tensor(values, torch::kDouble).view(p.sizes()).to(p.scalar_type()));
  }
}

RandomConvFeaturesImpl::RandomConvFeaturesImpl(uint64_t seed, int64_t in_channels,
                                               std::vector<int64_t> widths, bool grayscale_gradients)
    : gradients_(grayscale_gradients) {
  int64_t in = grayscale_gradients ? 2 : in_channels;
  for (size_t i = 0; i < widths.size(); ++i) {
    convs_.push_back(register_module(
        "conv" + std::to_string(i + 1),
        torch::nn::Conv2d(torch::nn::Conv2dOptions(in, widths[i], 3).stride(2).padding(1))));
    in = widths[i];
  }
  init_from_seed(*this, seed);
  for (auto& p : parameters()) p.requires_grad_(false);
}

torch::Tensor RandomConvFeaturesImpl::forward(const torch::Tensor& x) {
  auto h = x;
  if (gradients_) {
    auto gray = x.mean(1, /*keepdim=*/true);
    auto gx = F::pad(gray.diff(1, 3), F::PadFuncOptions({0, 1, 0, 0}));
    auto gy = F::pad(gray.diff(1, 2), F::PadFuncOptions({0, 0, 0, 1}));
    h = torch::cat({gx, gy}, 1);
  }
  for (auto& c : convs_) h = torch::relu(c->forward(h));
  return h.mean({2, 3});
}

FeatureExtractor default_appearance_extractor(int64_t image_channels) {
  RandomConvFeatures net(0xA11CEull, image_channels, std::vector<int64_t>{16, 32});
  return [net](const torch::Tensor& x) mutable { return net->forward(x); };
}

FeatureExtractor default_structure_extractor(int64_t image_channels) {
  RandomConvFeatures net(0x5EEDull, image_channels, std::vector<int64_t>{16, 32}, true);
  return [net](const torch::Tensor& x) mutable { return net->forward(x); };
}

double LossReport::weighted_total(const LossWeights& w, double rec, double sparsity, double gen,
                                  double feat) {
  return w.rec * rec + w.sparsity * sparsity + w.gen * gen + w.feat * feat;
}

}  // namespace rmvl
