#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cstring>
#include <sstream>

#include "cli_app.hpp"
#include "scum/augment.hpp"
#include "scum/errors.hpp"
#include "scum/evalkit.hpp"
#include "scum/model.hpp"
#include "scum/scumindex.hpp"

namespace py = pybind11;
using namespace scum;

namespace {

using u8array = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;
using f64array = py::array_t<double, py::array::c_style | py::array::forcecast>;
using Label = std::array<double, kClassCount>;

ImageBuffer to_rgb(const u8array& a) {
  if (a.ndim() != 3 || a.shape(2) != 3) throw DimensionMismatch("expected an (H, W, 3) uint8 array");
  const auto h = static_cast<std::size_t>(a.shape(0)), w = static_cast<std::size_t>(a.shape(1));
  return ImageBuffer(w, h, std::vector<std::uint8_t>(a.data(), a.data() + a.size()));
}

GrayImage to_gray(const u8array& a) {
  if (a.ndim() != 2) throw DimensionMismatch("expected an (H, W) uint8 array");
  const auto h = static_cast<std::size_t>(a.shape(0)), w = static_cast<std::size_t>(a.shape(1));
  return GrayImage(w, h, std::vector<std::uint8_t>(a.data(), a.data() + a.size()));
}

u8array from_rgb(const ImageBuffer& img) {
  u8array out({img.height(), img.width(), std::size_t{3}});
  std::memcpy(out.mutable_data(), img.data().data(), img.data().size());
  return out;
}

u8array from_gray(const GrayImage& img) {
  u8array out({img.height(), img.width()});
  std::memcpy(out.mutable_data(), img.data().data(), img.data().size());
  return out;
}

f64array from_matrix(const ProbabilityMatrix& m) {
  f64array out({m.rows(), m.cols()});
  std::copy(m.cells().begin(), m.cells().end(), out.mutable_data());
  return out;
}

ProbabilityMatrix to_matrix(const f64array& a, ClassMode mode) {
  if (a.ndim() != 2) throw DimensionMismatch("expected a 2-D probability matrix");
  return ProbabilityMatrix(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)),
                           std::vector<double>(a.data(), a.data() + a.size()), mode);
}

std::vector<Probabilities> to_probs(const f64array& a) {
  if (a.ndim() != 2 || a.shape(1) != 3) throw DimensionMismatch("expected an (N, 3) probability array");
  std::vector<Probabilities> out(static_cast<std::size_t>(a.shape(0)));
  for (std::size_t i = 0; i < out.size(); ++i) std::copy_n(a.data() + 3 * i, 3, out[i].begin());
  return out;
}

py::tuple labeled(const LabeledPatch& p) { return py::make_tuple(from_rgb(p.image), p.label.weights()); }

std::vector<LabeledPatch> to_dataset(const std::vector<u8array>& images, const std::vector<Label>& labels) {
  if (images.size() != labels.size()) throw CountMismatch("one label per image is required");
  std::vector<LabeledPatch> out;
  out.reserve(images.size());
  for (std::size_t i = 0; i < images.size(); ++i) out.push_back({to_rgb(images[i]), SoftLabel(labels[i])});
  return out;
}

CameraProfile make_profile(std::optional<u8array> background, std::uint8_t threshold, double floor,
                           ClassMode mode, std::size_t crop_top) {
  PatchGridSpec grid;
  grid.crop_top = crop_top;
  CameraProfile p = CameraProfile::all_river("python", grid);
  if (background) {
    p.background = to_gray(*background);
    for (auto& v : p.background.data()) v = v != 0 ? 1 : 0;
  }
  p.binarize_threshold = threshold;
  p.probability_floor = floor;
  p.class_mode = mode;
  p.validate();
  return p;
}

py::dict analysis_dict(const FrameAnalysis& a) {
  py::dict d;
  d["raw_matrix"] = from_matrix(a.raw_matrix);
  d["matrix"] = from_matrix(a.matrix);
  d["heatmap"] = from_gray(a.heatmap);
  d["mask"] = from_gray(a.mask);
  d["ratio_percent"] = a.ratio.ratio_percent;
  d["scum_pixels"] = a.ratio.scum_pixels;
  d["river_pixels"] = a.ratio.river_pixels;
  d["mean_probability"] = a.mean_probability();
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "River scum monitoring core: augmentation, patch classifier and scum-on-river index";

  auto base = py::register_exception<Error>(m, "ScumError");
  py::register_exception<DimensionMismatch>(m, "DimensionMismatch", base);
  py::register_exception<InvalidParam>(m, "InvalidParam", base);
  py::register_exception<CountMismatch>(m, "CountMismatch", base);
  py::register_exception<EmptyRiver>(m, "EmptyRiver", base);
  py::register_exception<DegenerateDataset>(m, "DegenerateDataset", base);
  py::register_exception<EmptySet>(m, "EmptySet", base);
  py::register_exception<IoError>(m, "IoError", base);
  py::register_exception<FormatError>(m, "FormatError", base);

  py::enum_<AugmentPolicy>(m, "AugmentPolicy")
      .value("NONE", AugmentPolicy::None)
      .value("MIXUP", AugmentPolicy::Mixup)
      .value("CUTOUT", AugmentPolicy::Cutout)
      .value("RICAP", AugmentPolicy::Ricap);
  py::enum_<ClassMode>(m, "ClassMode").value("C1", ClassMode::C1Only).value("C0_PLUS_C1", ClassMode::C0PlusC1);

  // imagecore
  m.def(
      "crop_far_region",
      [](const u8array& frame, std::size_t crop_top) {
        PatchGridSpec spec;
        spec.crop_top = crop_top;
        return from_rgb(crop_far_region(to_rgb(frame), spec));
      },
      py::arg("frame"), py::arg("crop_top") = PatchGridSpec{}.crop_top);
  m.def(
      "extract_patches",
      [](const u8array& cropped) {
        std::vector<u8array> out;
        for (const auto& p : extract_patches(to_rgb(cropped), PatchGridSpec{})) out.push_back(from_rgb(p.pixels));
        return out;
      },
      py::arg("cropped"), "20 patches of 128x256 in row-major grid order");

  // augment
  m.def(
      "sample_beta",
      [](double alpha, std::size_t n, std::uint64_t seed) {
        Rng rng(seed);
        std::vector<double> xs(n);
        for (auto& x : xs) x = sample_beta(rng, alpha);
        return f64array(static_cast<py::ssize_t>(n), xs.data());
      },
      py::arg("alpha"), py::arg("n"), py::arg("seed") = 0);
  m.def(
      "mixup",
      [](const u8array& a, Label la, const u8array& b, Label lb, double lam) {
        return labeled(mixup({to_rgb(a), SoftLabel(la)}, {to_rgb(b), SoftLabel(lb)}, lam));
      },
      py::arg("a"), py::arg("label_a"), py::arg("b"), py::arg("label_b"), py::arg("lam"));
  m.def(
      "cutout",
      [](const u8array& a, Label la, double drop_rate, std::uint64_t seed, std::uint8_t fill) {
        Rng rng(seed);
        const auto r = cutout({to_rgb(a), SoftLabel(la)}, drop_rate, rng, fill);
        return py::make_tuple(from_rgb(r.sample.image), r.sample.label.weights(),
                              py::make_tuple(r.region.x0, r.region.y0, r.region.x1, r.region.y1));
      },
      py::arg("image"), py::arg("label"), py::arg("drop_rate"), py::arg("seed") = 0, py::arg("fill") = 128,
      "returns (image, label, (x0, y0, x1, y1)) with the erased rectangle");
  m.def(
      "ricap",
      [](const std::vector<u8array>& images, const std::vector<Label>& labels, std::uint64_t seed) {
        const auto src = to_dataset(images, labels);
        if (src.size() != 4) throw CountMismatch("RICAP needs exactly four sources");
        Rng rng(seed);
        return labeled(ricap(src[0], src[1], src[2], src[3], rng));
      },
      py::arg("images"), py::arg("labels"), py::arg("seed") = 0);

  // model
  py::class_<TinyConvNet>(m, "TinyConvNet")
      .def(py::init([](std::uint64_t seed) {
             Rng rng(seed);
             return TinyConvNet::initialize(rng);
           }),
           py::arg("seed") = 0)
      .def_static("load", &TinyConvNet::load, py::arg("path"))
      .def("save", &TinyConvNet::save, py::arg("path"))
      .def("predict", [](const TinyConvNet& n, const u8array& patch) { return n.predict(to_rgb(patch)); },
           py::arg("patch"))
      .def_property_readonly("parameter_count", &TinyConvNet::parameter_count)
      .def("to_bytes",
           [](const TinyConvNet& n) {
             const auto b = n.serialize();
             return py::bytes(reinterpret_cast<const char*>(b.data()), b.size());
           })
      .def_static("from_bytes",
                  [](const py::bytes& b) {
                    const std::string s = b;
                    return TinyConvNet::deserialize(
                        std::span(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
                  })
      .def("__eq__", [](const TinyConvNet& a, const TinyConvNet& b) { return a == b; });

  m.def(
      "train",
      [](const std::vector<u8array>& images, const std::vector<Label>& labels, std::size_t epochs,
         std::size_t batch_size, double learning_rate, std::uint64_t seed, AugmentPolicy policy,
         double mixup_alpha, double cutout_drop_rate) {
        const auto data = to_dataset(images, labels);
        TrainConfig cfg;
        cfg.epochs = epochs;
        cfg.batch_size = batch_size;
        cfg.learning_rate = learning_rate;
        cfg.seed = seed;
        cfg.augment_policy = policy;
        cfg.augment_params = AugmentParams(mixup_alpha, cutout_drop_rate);
        TrainReport report;
        TinyConvNet net = [&] {
          py::gil_scoped_release release;
          return train(data, cfg, &report);
        }();
        return py::make_tuple(std::move(net), report.epoch_mean_loss, report.train_accuracy);
      },
      py::arg("images"), py::arg("labels"), py::arg("epochs") = TrainConfig{}.epochs,
      py::arg("batch_size") = TrainConfig{}.batch_size, py::arg("learning_rate") = TrainConfig{}.learning_rate,
      py::arg("seed") = 0, py::arg("policy") = AugmentPolicy::None,
      py::arg("mixup_alpha") = AugmentParams::kDefaultMixupAlpha,
      py::arg("cutout_drop_rate") = AugmentParams::kDefaultCutoutDropRate,
      "returns (net, epoch_mean_losses, train_accuracy)");
  m.def(
      "soft_cross_entropy", [](Probabilities p, Label t) { return soft_cross_entropy(p, SoftLabel(t)); },
      py::arg("pred"), py::arg("target"));

  // scumindex
  m.def(
      "assemble_matrix",
      [](const f64array& probs, ClassMode mode) { return from_matrix(assemble_matrix(to_probs(probs), mode)); },
      py::arg("patch_probs"), py::arg("mode") = ClassMode::C1Only);
  m.def(
      "apply_probability_floor",
      [](const f64array& matrix, double floor) {
        return from_matrix(apply_probability_floor(to_matrix(matrix, ClassMode::C1Only), floor));
      },
      py::arg("matrix"), py::arg("floor") = 0.01);
  m.def(
      "render_heatmap",
      [](const f64array& matrix) { return from_gray(render_heatmap(to_matrix(matrix, ClassMode::C1Only), {})); },
      py::arg("matrix"));
  m.def(
      "binarize", [](const u8array& h, std::uint8_t t) { return from_gray(binarize(to_gray(h), t)); },
      py::arg("heatmap"), py::arg("threshold") = 128);
  m.def(
      "compute_ratio",
      [](const u8array& mask, std::optional<u8array> background) {
        const auto r = compute_ratio(to_gray(mask), make_profile(std::move(background), 128, 0.01,
                                                                 ClassMode::C1Only, PatchGridSpec{}.crop_top));
        return py::make_tuple(r.ratio_percent, r.scum_pixels, r.river_pixels);
      },
      py::arg("mask"), py::arg("background") = py::none(),
      "returns (ratio_percent, scum_pixels, river_pixels)");
  m.def(
      "analyze_probabilities",
      [](const f64array& probs, std::optional<u8array> background, std::uint8_t threshold, double floor,
         ClassMode mode) {
        const auto profile = make_profile(std::move(background), threshold, floor, mode, PatchGridSpec{}.crop_top);
        return analysis_dict(analyze_probabilities(to_probs(probs), profile));
      },
      py::arg("patch_probs"), py::arg("background") = py::none(), py::arg("threshold") = 128,
      py::arg("floor") = 0.01, py::arg("mode") = ClassMode::C1Only);
  m.def(
      "analyze_frame",
      [](const u8array& frame, const TinyConvNet& net, std::optional<u8array> background, std::uint8_t threshold,
         double floor, ClassMode mode) {
        const ImageBuffer img = to_rgb(frame);
        const auto profile = make_profile(std::move(background), threshold, floor, mode,
                                          PatchGridSpec::for_frame_height(img.height()).crop_top);
        return analysis_dict(analyze_frame(img, net, profile));
      },
      py::arg("frame"), py::arg("net"), py::arg("background") = py::none(), py::arg("threshold") = 128,
      py::arg("floor") = 0.01, py::arg("mode") = ClassMode::C1Only);

  // evalkit
  m.def(
      "generate_synthetic_dataset",
      [](std::size_t n_per_class, std::uint64_t seed, double noise_sigma) {
        SynthSceneSpec spec;
        spec.seed = seed;
        spec.noise_sigma = noise_sigma;
        const auto data = generate_synthetic_dataset(spec, n_per_class);
        std::vector<u8array> images;
        std::vector<Label> labels;
        for (const auto& s : data) {
          images.push_back(from_rgb(s.image));
          labels.push_back(s.label.weights());
        }
        return py::make_tuple(images, labels);
      },
      py::arg("n_per_class"), py::arg("seed") = SynthSceneSpec{}.seed,
      py::arg("noise_sigma") = SynthSceneSpec{}.noise_sigma, "returns (images, labels)");
  m.def(
      "compute_metrics",
      [](const std::array<std::array<std::uint64_t, kClassCount>, kClassCount>& counts) {
        const Metrics mt = compute_metrics(ConfusionMatrix::from_counts(counts));
        py::dict d;
        d["accuracy"] = mt.accuracy;
        d["precision"] = mt.precision;
        d["recall"] = mt.recall;
        d["macro_precision"] = mt.macro_precision;
        d["macro_recall"] = mt.macro_recall;
        d["c1_recall"] = mt.headline_recall();
        return d;
      },
      py::arg("confusion"), "rows are true classes, columns predicted classes");

  // cli
  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        const int code = cli::run(args, out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "runs the scumwatch command line; returns (exit_code, stdout, stderr)");
}
