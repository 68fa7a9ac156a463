#pragma once

// Versioned checkpoint container.
//
//   bytes 0..7    magic "RMVLCKPT"
//   bytes 8..11   format version, uint32 little-endian
//   bytes 12..19  header length N, uint64 little-endian
//   next N bytes  UTF-8 JSON header
//   remainder     entry payloads, back to back
//
// The header holds the stage tag, an architecture descriptor, free-form metadata and
// an entry table: {name, kind: "tensor"|"bytes", dtype, shape, offset, nbytes}, with
// offsets relative to the first payload byte. Tensors are stored as raw little-endian
// float32.

#include <torch/torch.h>

#include <nlohmann/json.hpp>

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace rmvl {

inline constexpr uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  std::string stage;  // "lstm", "gm", "gr", "critic-image", "critic-video"
  nlohmann::json arch = nlohmann::json::object();
  nlohmann::json meta = nlohmann::json::object();
  std::vector<std::pair<std::string, torch::Tensor>> tensors;
  std::map<std::string, std::string> blobs;

  const torch::Tensor& tensor(const std::string& name) const;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);
/// Loads and checks the stage tag.
Checkpoint load_checkpoint(const std::filesystem::path& path, const std::string& expected_stage);

/// Copies a module's parameters and buffers into named tensors.
std::vector<std::pair<std::string, torch::Tensor>> module_state(const torch::nn::Module& module);
/// Loads named tensors into a module; names and shapes must match exactly.
void load_module_state(torch::nn::Module& module,
                       const std::vector<std::pair<std::string, torch::Tensor>>& state);

/// Serializes optimizer state (moments, step counts) to bytes and back.
std::string optimizer_state(const torch::optim::Optimizer& opt);
void load_optimizer_state(torch::optim::Optimizer& opt, const std::string& bytes);

}  // namespace rmvl
