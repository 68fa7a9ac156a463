#pragma once

#include "rmvl/gm.hpp"
#include "rmvl/gr.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <functional>
#include <random>
#include <string>

namespace rmvl::test {

/// Uniform values in [lo, hi] from torch's generator after seeding it.
inline torch::Tensor uniform(std::vector<int64_t> shape, double lo, double hi, uint64_t seed) {
  torch::manual_seed(seed);
  return torch::rand(shape, torch::kFloat32) * (hi - lo) + lo;
}

inline GMArch tiny_gm_arch(int64_t side = 8, int64_t joints = 2) {
  GMArch a;
  a.height = side;
  a.width = side;
  a.joints = joints;
  a.stages = 2;
  a.base_width = 2;
  a.max_width = 4;
  return a;
}

inline GRArch tiny_gr_arch() {
  GRArch a;
  a.clip_length = 4;
  a.height = 8;
  a.width = 8;
  a.joints = 2;
  a.base_width = 2;
  return a;
}

inline bool bitwise_equal(const torch::Tensor& a, const torch::Tensor& b) {
  return a.sizes().equals(b.sizes()) && a.scalar_type() == b.scalar_type() && torch::equal(a, b);
}

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("rmvl_test_" + tag + "_" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

private:
  std::filesystem::path path_;
};

/// Relative disagreement of an analytic and a numeric derivative.
inline double relative_error(double analytic, double numeric) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
  return std::abs(analytic - numeric) / scale;
}

/// Central-difference derivative of `f` with respect to entry `index` of `param`
/// (flattened), perturbing it in place.
inline double central_difference(const std::function<double()>& f, torch::Tensor param, int64_t index,
                                  double h) {
  torch::NoGradGuard guard;
  auto flat = param.view({-1});
  const double orig = flat[index].item<double>();
  flat[index] = orig + h;
  const double up = f();
  flat[index] = orig - h;
  const double down = f();
  flat[index] = orig;
  return (up - down) / (2 * h);
}

}  // namespace rmvl::test
