#include "rmvl/checkpoint.hpp"

#include "rmvl/errors.hpp"
#include "rmvl/image_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

namespace fs = std::filesystem;
using json = nlohmann::json;

static_assert(std::endian::native == std::endian::little,
              "checkpoint payloads are written in host order and must be little-endian");

namespace rmvl {
namespace {

constexpr char kMagic[8] = {'R', 'M', 'V', 'L', 'C', 'K', 'P', 'T'};

template <typename T>
void append_pod(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

template <typename T>
T read_pod(const std::string& in, size_t& pos, const fs::path& path) {
  if (pos + sizeof(T) > in.size()) throw IoError("truncated checkpoint " + path.string());
  T v;
  std::memcpy(&v, in.data() + pos, sizeof(T));
  pos += sizeof(T);
  return v;
}

}  // namespace

const torch::Tensor& Checkpoint::tensor(const std::string& name) const {
  for (const auto& [n, t] : tensors) {
    if (n == name) return t;
  }
  throw IoError("checkpoint has no tensor '" + name + "'");
}

void save_checkpoint(const fs::path& path, const Checkpoint& ckpt) {
  std::string payload;
  json entries = json::array();
  for (const auto& [name, t] : ckpt.tensors) {
    auto c = t.detach().to(torch::kCPU, torch::kFloat32).contiguous();
    const size_t nbytes = static_cast<size_t>(c.numel()) * sizeof(float);
    entries.push_back({{"name", name},
                       {"kind", "tensor"},
                       {"dtype", "float32"},
                       {"shape", c.sizes().vec()},
                       {"offset", payload.size()},
                       {"nbytes", nbytes}});
    payload.append(static_cast<const char*>(c.data_ptr()), nbytes);
  }
  for (const auto& [name, bytes] : ckpt.blobs) {
    entries.push_back({{"name", name},
                       {"kind", "bytes"},
                       {"offset", payload.size()},
                       {"nbytes", bytes.size()}});
    payload += bytes;
  }
  json header = {{"stage", ckpt.stage}, {"format_version", kCheckpointVersion},
                 {"arch", ckpt.arch},   {"meta", ckpt.meta},
                 {"entries", entries}};
  const std::string h = header.dump();
  std::string out(kMagic, sizeof kMagic);
  append_pod<uint32_t>(out, kCheckpointVersion);
  append_pod<uint64_t>(out, h.size());
  out += h;
  out += payload;
  write_file_atomic(path, out);
}

Checkpoint load_checkpoint(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  const std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (data.size() < sizeof kMagic || std::memcmp(data.data(), kMagic, sizeof kMagic) != 0) {
    throw IoError(path.string() + " is not an rmvl checkpoint");
  }
  size_t pos = sizeof kMagic;
  const auto version = read_pod<uint32_t>(data, pos, path);
  if (version != kCheckpointVersion) {
    throw IoError("unsupported checkpoint version " + std::to_string(version) + " in " + path.string());
  }
  const auto hlen = read_pod<uint64_t>(data, pos, path);
  if (pos + hlen > data.size()) throw IoError("truncated checkpoint header " + path.string());
  Checkpoint ckpt;
  const size_t base = pos + hlen;
  try {
    const json header = json::parse(data.begin() + static_cast<std::ptrdiff_t>(pos),
                                    data.begin() + static_cast<std::ptrdiff_t>(base));
    ckpt.stage = header.at("stage").get<std::string>();
    ckpt.arch = header.at("arch");
    ckpt.meta = header.at("meta");
    for (const auto& e : header.at("entries")) {
      const auto offset = e.at("offset").get<size_t>();
      const auto nbytes = e.at("nbytes").get<size_t>();
      if (base + offset + nbytes > data.size()) {
        throw IoError("checkpoint entry '" + e.at("name").get<std::string>() + "' out of bounds");
      }
      const char* src = data.data() + base + offset;
      if (e.at("kind").get<std::string>() == "tensor") {
        if (e.at("dtype").get<std::string>() != "float32") throw IoError("unsupported tensor dtype");
        const auto shape = e.at("shape").get<std::vector<int64_t>>();
        auto t = torch::empty(shape, torch::kFloat32);
        if (static_cast<size_t>(t.numel()) * sizeof(float) != nbytes) {
          throw IoError("checkpoint tensor size mismatch");
        }
        std::memcpy(t.data_ptr(), src, nbytes);
        ckpt.tensors.emplace_back(e.at("name").get<std::string>(), t);
      } else {
        ckpt.blobs[e.at("name").get<std::string>()] = std::string(src, nbytes);
      }
    }
  } catch (const json::exception& e) {
    throw IoError("malformed checkpoint header in " + path.string() + ": " + e.what());
  }
  return ckpt;
}

Checkpoint load_checkpoint(const fs::path& path, const std::string& expected_stage) {
  Checkpoint c = load_checkpoint(path);
  if (c.stage != expected_stage) {
    throw IoError(path.string() + " holds a '" + c.stage + "' checkpoint, expected '" +
                  expected_stage + "'");
  }
  return c;
}

std::vector<std::pair<std::string, torch::Tensor>> module_state(const torch::nn::Module& module) {
  std::vector<std::pair<std::string, torch::Tensor>> out;
  for (const auto& p : module.named_parameters()) out.emplace_back(p.key(), p.value().detach().clone());
  for (const auto& b : module.named_buffers()) out.emplace_back(b.key(), b.value().detach().clone());
  return out;
}

void load_module_state(torch::nn::Module& module,
                       const std::vector<std::pair<std::string, torch::Tensor>>& state) {
  std::map<std::string, torch::Tensor> by_name(state.begin(), state.end());
  torch::NoGradGuard guard;
  size_t used = 0;
  auto assign = [&](const std::string& name, torch::Tensor& dst) {
    auto it = by_name.find(name);
    if (it == by_name.end()) throw IoError("checkpoint is missing parameter '" + name + "'");
    if (!it->second.sizes().equals(dst.sizes())) {
      std::ostringstream os;
      os << "parameter '" << name << "' has shape " << it->second.sizes() << " in the checkpoint but "
         << dst.sizes() << " in the network";
      throw IoError(os.str());
    }
    dst.copy_(it->second);
    ++used;
  };
  for (auto& p : module.named_parameters()) assign(p.key(), p.value());
  for (auto& b : module.named_buffers()) assign(b.key(), b.value());
  if (used != by_name.size()) throw IoError("checkpoint carries parameters the network does not have");
}

std::string optimizer_state(const torch::optim::Optimizer& opt) {
  torch::serialize::OutputArchive archive;
  opt.save(archive);
  std::ostringstream os;
  archive.save_to(os);
  return os.str();
}

void load_optimizer_state(torch::optim::Optimizer& opt, const std::string& bytes) {
  std::istringstream is(bytes);
  torch::serialize::InputArchive archive;
  archive.load_from(is);
  opt.load(archive);
}

}  // namespace rmvl
