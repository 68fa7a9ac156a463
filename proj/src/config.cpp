#include "rmvl/config.hpp"

#include "rmvl/errors.hpp"
#include "rmvl/image_io.hpp"

#include <nlohmann/json.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace rmvl {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    size_t used = 0;
    const double d = std::stod(v, &used);
    if (used == v.size() && std::isfinite(d)) return d;
  } catch (const std::exception&) {
  }
  throw ArgumentError("config: '" + key + "' expects a number, got '" + v + "'");
}

int64_t parse_int(const std::string& key, const std::string& v) {
  int64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ArgumentError("config: '" + key + "' expects an integer, got '" + v + "'");
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "off" || v == "no") return false;
  throw ArgumentError("config: '" + key + "' expects true or false, got '" + v + "'");
}

std::string fmt(double d) {
  std::ostringstream os;
  os.precision(17);
  os << d;
  return os.str();
}

struct Field {
  std::function<void(TrainConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const TrainConfig&)> get;
};

#define RMVL_DOUBLE(name)                                                                        \
  {                                                                                              \
#name, {[](TrainConfig& c, const std::string& k, const std::string& v) { c.name = parse_double(k, v); }, \
            [](const TrainConfig& c) { return fmt(c.name); } }                                   \
  }
#define RMVL_INT(name)                                                                           \
  {                                                                                              \
#name, {[](TrainConfig& c, const std::string& k, const std::string& v) { c.name = parse_int(k, v); }, \
            [](const TrainConfig& c) { return std::to_string(c.name); } }                        \
  }

const std::vector<std::pair<std::string, Field>>& fields() {
  static const std::vector<std::pair<std::string, Field>> table = {
      RMVL_DOUBLE(lr),
      RMVL_DOUBLE(beta1),
      RMVL_DOUBLE(beta2),
      RMVL_INT(batch),
      RMVL_INT(steps),
      RMVL_INT(steps_lstm),
      RMVL_INT(steps_gm),
      RMVL_INT(steps_gr),
      RMVL_INT(ratio),
      {"seed",
       {[](TrainConfig& c, const std::string& k, const std::string& v) {
          const int64_t s = parse_int(k, v);
          if (s < 0) throw ArgumentError("config: 'seed' must be non-negative");
          c.seed = static_cast<uint64_t>(s);
        },
        [](const TrainConfig& c) { return std::to_string(c.seed); }}},
      RMVL_DOUBLE(lambda_gp),
      RMVL_DOUBLE(w_rec),
      RMVL_DOUBLE(w_sparsity),
      RMVL_DOUBLE(w_gen),
      RMVL_DOUBLE(w_feat),
      RMVL_INT(k_max),
      RMVL_INT(clip_k),
      RMVL_INT(observed),
      RMVL_INT(predict),
      RMVL_DOUBLE(sigma),
      RMVL_DOUBLE(lstm_lr),
      RMVL_INT(lstm_hidden),
      RMVL_INT(lstm_layers),
      RMVL_INT(gm_stages),
      RMVL_INT(gm_base_width),
      RMVL_INT(gm_max_width),
      {"gm_dense",
       {[](TrainConfig& c, const std::string& k, const std::string& v) { c.gm_dense = parse_bool(k, v); },
        [](const TrainConfig& c) { return std::string(c.gm_dense ? "true" : "false"); }}},
      {"gm_residual",
       {[](TrainConfig& c, const std::string&, const std::string& v) {
          if (v == "mask") {
            c.gm_residual = ResidualMode::Mask;
          } else if (v == "difference") {
            c.gm_residual = ResidualMode::Difference;
          } else {
            throw ArgumentError("config: 'gm_residual' must be mask or difference, got '" + v + "'");
          }
        },
        [](const TrainConfig& c) {
          return std::string(c.gm_residual == ResidualMode::Mask ? "mask" : "difference");
        }}},
      RMVL_INT(gr_base_width),
      RMVL_INT(clips),
      RMVL_INT(clip_length),
      RMVL_INT(height),
      RMVL_INT(width),
      RMVL_INT(classes),
      RMVL_INT(checkpoint_every),
      RMVL_INT(log_every),
  };
  return table;
}

#undef RMVL_DOUBLE
#undef RMVL_INT

}  // namespace

int64_t TrainConfig::stage_steps(const std::string& stage) const {
  int64_t s = -1;
  if (stage == "lstm") s = steps_lstm;
  else if (stage == "gm") s = steps_gm;
  else if (stage == "gr") s = steps_gr;
  else throw ArgumentError("unknown stage '" + stage + "'");
  return s >= 0 ? s : steps;
}

DatasetConfig TrainConfig::dataset() const {
  DatasetConfig d;
  d.clips = clips;
  d.clip_length = clip_length;
  d.height = height;
  d.width = width;
  d.classes = classes;
  return d;
}

void TrainConfig::validate() const {
  auto positive = [](bool ok, const char* what) {
    if (!ok) throw ArgumentError(std::string("config: ") + what);
  };
  positive(lr > 0 && lstm_lr > 0, "learning rates must be positive");
  positive(beta1 >= 0 && beta1 < 1 && beta2 >= 0 && beta2 < 1, "betas must lie in [0, 1)");
  positive(batch >= 1, "batch must be positive");
  positive(steps >= 0, "steps must be non-negative");
  positive(steps_lstm >= -1 && steps_gm >= -1 && steps_gr >= -1, "per-stage steps must be >= -1");
  positive(ratio >= 1, "ratio must be positive");
  positive(lambda_gp >= 0, "lambda_gp must be non-negative");
  positive(w_rec >= 0 && w_sparsity >= 0 && w_gen >= 0 && w_feat >= 0, "loss weights must be non-negative");
  positive(k_max >= 1, "k_max must be positive");
  positive(clip_k >= 4 && clip_k % 4 == 0, "clip_k must be a positive multiple of 4");
  positive(observed >= 2 && predict >= 1, "observed must be >= 2 and predict >= 1");
  positive(sigma > 0, "sigma must be positive");
  positive(lstm_hidden >= 1 && lstm_layers >= 1, "LSTM sizes must be positive");
  positive(gm_stages >= 1 && gm_base_width >= 1 && gm_max_width >= gm_base_width, "bad G_M widths");
  positive(gr_base_width >= 1, "gr_base_width must be positive");
  positive(clips >= 1 && clip_length >= kMinClipLength && height >= 8 && width >= 8 && classes >= 1,
           "bad corpus size");
  positive(checkpoint_every >= 0 && log_every >= 0, "intervals must be non-negative");
}

void TrainConfig::set(const std::string& key, const std::string& value) {
  for (const auto& [name, field] : fields()) {
    if (name == key) {
      field.set(*this, key, value);
      return;
    }
  }
  throw ArgumentError("config: unknown key '" + key + "'");
}

std::string TrainConfig::to_text() const {
  std::string out;
  for (const auto& [name, field] : fields()) out += name + " = " + field.get(*this) + "\n";
  return out;
}

nlohmann::json TrainConfig::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [name, field] : fields()) j[name] = field.get(*this);
  return j;
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  TrainConfig c;
  for (const auto& [key, value] : j.items()) c.set(key, value.get<std::string>());
  c.validate();
  return c;
}

TrainConfig TrainConfig::parse(const std::string& text) {
  TrainConfig c;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ArgumentError("config line " + std::to_string(lineno) + ": expected key = value");
    }
    c.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  c.validate();
  return c;
}

TrainConfig TrainConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

void TrainConfig::save(const std::filesystem::path& path) const { write_file_atomic(path, to_text()); }

const std::vector<std::string>& TrainConfig::keys() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const auto& [name, field] : fields()) n.push_back(name);
    return n;
  }();
  return names;
}

}  // namespace rmvl
