// Python bindings. Arrays cross the boundary as numpy float32 in channel-first layout
// (frames [C, H, W], clips [K, C, H, W], maps [J, H, W]).

#include "rmvl/checkpoint.hpp"
#include "rmvl/config.hpp"
#include "rmvl/dataset.hpp"
#include "rmvl/errors.hpp"
#include "rmvl/image_io.hpp"
#include "rmvl/losses.hpp"
#include "rmvl/metrics.hpp"
#include "rmvl/pipeline.hpp"
#include "rmvl/residual.hpp"
#include "rmvl/training.hpp"

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <nlohmann/json.hpp>

namespace py = pybind11;
using namespace rmvl;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;

torch::Tensor to_tensor(const FloatArray& a) {
  std::vector<int64_t> shape(a.shape(), a.shape() + a.ndim());
  return torch::from_blob(const_cast<float*>(a.data()), shape, torch::kFloat32).clone();
}

py::array_t<float> to_numpy(const torch::Tensor& t) {
  auto c = t.detach().to(torch::kCPU, torch::kFloat32).contiguous();
  py::array_t<float> out(c.sizes().vec());
  std::memcpy(out.mutable_data(), c.data_ptr<float>(), static_cast<size_t>(c.numel()) * sizeof(float));
  return out;
}

py::object to_python(const nlohmann::json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

nlohmann::json from_python(const py::object& o) {
  return nlohmann::json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

Pose pose_from(const FloatArray& coords, const std::optional<std::vector<bool>>& visible) {
  auto c = to_tensor(coords);
  if (c.dim() != 2 || c.size(1) != 2) throw ShapeError("expected coords of shape [J, 2]");
  std::vector<Joint> joints;
  for (int64_t j = 0; j < c.size(0); ++j) {
    const bool vis = visible ? (*visible)[static_cast<size_t>(j)] : true;
    joints.push_back({c[j][0].item<double>(), c[j][1].item<double>(), vis});
  }
  return Pose(std::move(joints));
}

/// Loaded networks bundled for generation from Python.
struct Generator {
  ForecastNet gm{nullptr};
  std::optional<RefineNet> gr;
  std::optional<PoseForecaster> lstm;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Two-stage residual video generation";
  m.attr("__version__") = "0.1.0";

  py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);
  py::register_exception<ArgumentError>(m, "ArgumentError", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);
  py::register_exception<ContractViolation>(m, "ContractViolation", PyExc_RuntimeError);

  // Composition.
  m.def("compose_frame",
        [](const FloatArray& base, const FloatArray& mask, const FloatArray& content) {
          return to_numpy(compose_frame(Frame(to_tensor(base)),
                                        ResidualDecomposition(to_tensor(mask), to_tensor(content)))
                              .pixels());
        },
        py::arg("base"), py::arg("mask"), py::arg("content"),
        "m * c + (1 - m) * base for a [C, H, W] frame and a [1, H, W] mask.");
  m.def("compose_clip",
        [](const FloatArray& base, const FloatArray& mask, const FloatArray& content) {
          return to_numpy(compose_clip(VideoClip(to_tensor(base)),
                                       SpatiotemporalResidual(to_tensor(mask), to_tensor(content)))
                              .frames());
        },
        py::arg("base"), py::arg("mask"), py::arg("content"));
  m.def("compose_difference",
        [](const FloatArray& base, const FloatArray& delta) {
          return to_numpy(compose_difference(Frame(to_tensor(base)), to_tensor(delta)).pixels());
        },
        py::arg("base"), py::arg("delta"));

  // Conditions.
  m.def("render_heatmaps",
        [](const FloatArray& coords, int64_t height, int64_t width, double sigma,
           std::optional<std::vector<bool>> visible) {
          return to_numpy(render_heatmaps(pose_from(coords, visible), height, width, sigma).heatmaps());
        },
        py::arg("coords"), py::arg("height"), py::arg("width"), py::arg("sigma") = kDefaultHeatmapSigma,
        py::arg("visible") = py::none(), "Peak-normalized Gaussian heatmaps [J, H, W] for coords [J, 2].");
  m.def("synthesize_dataset",
        [](const std::filesystem::path& root, int64_t clips, int64_t clip_length, int64_t height,
           int64_t width, int64_t classes, uint64_t seed) {
          DatasetConfig c;
          c.clips = clips;
          c.clip_length = clip_length;
          c.height = height;
          c.width = width;
          c.classes = classes;
          synthesize_dataset(c, seed, root);
          return root / "manifest.json";
        },
        py::arg("root"), py::arg("clips") = 12, py::arg("clip_length") = 48, py::arg("height") = 64,
        py::arg("width") = 64, py::arg("classes") = 4, py::arg("seed") = 0,
        "Writes the synthetic corpus under root and returns the manifest path.");
  m.def("load_keypoints", [](const std::filesystem::path& path) { return to_numpy(load_keypoints(path).coords()); },
        py::arg("path"), "Keypoints file as a [T, J, 2] array.");

  // Losses and metrics.
  m.def("loss_reconstruction",
        [](const FloatArray& a, const FloatArray& b) {
          return loss_reconstruction(to_tensor(a), to_tensor(b)).item<double>();
        },
        py::arg("pred"), py::arg("target"));
  m.def("loss_sparsity", [](const FloatArray& mask) { return loss_sparsity(to_tensor(mask)).item<double>(); },
        py::arg("mask"));
  m.def("mse", [](const FloatArray& a, const FloatArray& b) { return mse(to_tensor(a), to_tensor(b)); },
        py::arg("a"), py::arg("b"), "Mean squared error on [0, 1]-rescaled pixels of [-1, 1] inputs.");
  m.def("psnr", [](const FloatArray& a, const FloatArray& b) {
          return psnr(Frame(to_tensor(a)), Frame(to_tensor(b)));
        },
        py::arg("a"), py::arg("b"));
  m.def("psnr_from_mse", &psnr_from_mse, py::arg("mse"));
  m.def("acd_identity",
        [](const FloatArray& video, const FloatArray& ref, uint64_t seed) {
          return acd_identity(VideoClip(to_tensor(video)), Frame(to_tensor(ref)),
                              FrameEmbedder::random_conv(seed));
        },
        py::arg("video"), py::arg("ref"), py::arg("seed") = 0xACD);
  m.def("acd_content",
        [](const FloatArray& video, uint64_t seed) {
          return acd_content(VideoClip(to_tensor(video)), FrameEmbedder::random_conv(seed));
        },
        py::arg("video"), py::arg("seed") = 0xACD);

  // Training helpers.
  m.def("sample_time_jumps",
        [](int64_t clip_len, int64_t k_max, uint64_t seed, int64_t n) {
          std::mt19937_64 rng(seed);
          py::array_t<int64_t> out({n, int64_t{2}});
          auto* p = out.mutable_data();
          for (int64_t i = 0; i < n; ++i) {
            const auto [t, k] = sample_time_jump(clip_len, k_max, rng);
            p[2 * i] = t;
            p[2 * i + 1] = k;
          }
          return out;
        },
        py::arg("clip_len"), py::arg("k_max"), py::arg("seed"), py::arg("n"),
        "n draws of (t, k) as an [n, 2] array.");
  m.def("parse_config", [](const std::string& text) { return to_python(TrainConfig::parse(text).to_json()); },
        py::arg("text"), "Validated key = value config as a dict of strings.");
  m.def("checkpoint_header",
        [](const std::filesystem::path& path) {
          const Checkpoint c = load_checkpoint(path);
          py::dict d;
          d["stage"] = c.stage;
          d["arch"] = to_python(c.arch);
          d["meta"] = to_python(c.meta);
          py::list names;
          for (const auto& [name, t] : c.tensors) names.append(name);
          d["tensors"] = names;
          return d;
        },
        py::arg("path"));
  m.def("write_gif",
        [](const std::filesystem::path& path, py::array_t<uint8_t, py::array::c_style | py::array::forcecast> frames,
           int delay_cs) {
          if (frames.ndim() != 4 || frames.shape(3) != 3) throw ShapeError("expected uint8 frames [N, H, W, 3]");
          std::vector<Image8> images;
          const auto n = frames.shape(0), h = frames.shape(1), w = frames.shape(2);
          for (py::ssize_t i = 0; i < n; ++i) {
            Image8 img = make_image(static_cast<int>(w), static_cast<int>(h), 3);
            std::memcpy(img.data.data(), frames.data(i), static_cast<size_t>(h * w * 3));
            images.push_back(std::move(img));
          }
          write_gif(path, images, delay_cs);
        },
        py::arg("path"), py::arg("frames"), py::arg("delay_cs") = 10);

  // Networks.
  py::class_<ForecastNet>(m, "ForecastNet")
      .def(py::init([](py::object arch, uint64_t seed) {
             torch::manual_seed(seed);
             GMArch a = arch.is_none() ? GMArch() : gm_arch_from_json(from_python(arch));
             return ForecastNet(a);
           }),
           py::arg("arch") = py::none(), py::arg("seed") = 0)
      .def_static("load", [](const std::filesystem::path& p) { return load_gm(load_checkpoint(p, "gm")); })
      .def_property_readonly("arch", [](const ForecastNet& n) { return to_python(to_json(n->arch())); })
      .def("forecast",
           [](ForecastNet& n, const FloatArray& frame, const FloatArray& current, const FloatArray& target) {
             auto r = forecast_frame(n, Frame(to_tensor(frame)), MotionMap(to_tensor(current)),
                                     MotionMap(to_tensor(target)));
             return py::make_tuple(to_numpy(r.frame.pixels()), to_numpy(r.residual.mask()),
                                   to_numpy(r.residual.content()));
           },
           py::arg("frame"), py::arg("current"), py::arg("target"),
           "Returns (frame, mask, content) for one [C, H, W] frame and two [J, H, W] maps.")
      .def("dense_sources",
           [](ForecastNet& n) {
             py::list blocks;
             for (const auto& b : n->decoder()->layout()) {
               py::list src;
               for (const auto& s : b.sources) src.append(py::make_tuple(s.name, s.channels, s.upsample));
               blocks.append(src);
             }
             return blocks;
           },
           "Per decoder block: (name, channels, upsample factor) of each incoming dense source.");

  py::class_<Generator>(m, "Generator")
      .def(py::init([](const std::filesystem::path& gm, std::optional<std::filesystem::path> gr,
                       std::optional<std::filesystem::path> lstm) {
             Generator g;
             g.gm = load_gm(load_checkpoint(gm, "gm"));
             if (gr) g.gr = load_gr(load_checkpoint(*gr, "gr"));
             if (lstm) g.lstm = load_forecaster(load_checkpoint(*lstm, "lstm"));
             return g;
           }),
           py::arg("gm"), py::arg("gr") = py::none(), py::arg("lstm") = py::none())
      .def("generate",
           [](Generator& g, const FloatArray& frame, const FloatArray& history, int64_t steps,
              std::optional<FloatArray> future) {
             const Frame input(to_tensor(frame));
             const auto hist = PoseSequence::from_coords(to_tensor(history));
             RefineNet* gr = g.gr ? &*g.gr : nullptr;
             GenerationResult r = [&] {
               if (future) {
                 return generate_from_poses(g.gm, gr, input, hist[hist.length() - 1],
                                            PoseSequence::from_coords(to_tensor(*future)));
               }
               if (!g.lstm) throw ArgumentError("generate: pass future poses or load a pose forecaster");
               return generate_video(g.gm, gr, *g.lstm, input, hist, steps);
             }();
             py::dict d;
             d["coarse"] = to_numpy(r.coarse.frames());
             d["coarse_masks"] = to_numpy(r.coarse_masks);
             d["poses"] = to_numpy(r.poses.coords());
             if (r.refined) {
               d["refined"] = to_numpy(r.refined->frames());
               d["refine_masks"] = to_numpy(r.refine_masks);
             }
             return d;
           },
           py::arg("frame"), py::arg("history"), py::arg("steps") = 32, py::arg("future") = py::none(),
           "Generates from a [C, H, W] frame and a [T, J, 2] pose history; `future` [S, J, 2] "
           "bypasses the forecaster.");
}
