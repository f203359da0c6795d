#include "scum/evalkit.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "scum/errors.hpp"
#include "scum/png_io.hpp"

namespace scum {

namespace {

struct Rgb {
  double r, g, b;
};

constexpr Rgb kWater{52, 72, 58};
constexpr Rgb kScum{172, 150, 108};
constexpr std::array<Rgb, 4> kReflections{{{150, 166, 198},  // sky
                                           {96, 102, 120},   // building facade
                                           {40, 48, 66},     // bridge shadow
                                           {120, 132, 160}}};

std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::floor(v + 0.5), 0.0, 255.0));
}

// Float canvas so blobs and noise can be layered before quantization.
struct Canvas {
  std::size_t width, height;
  std::vector<Rgb> px;

  Canvas(std::size_t w, std::size_t h, Rgb fill) : width(w), height(h), px(w * h, fill) {}
  Rgb& at(std::size_t x, std::size_t y) { return px[y * width + x]; }

  ImageBuffer finish(Rng& rng, double sigma) const {
    ImageBuffer out(width, height);
    for (std::size_t y = 0; y < height; ++y) {
      for (std::size_t x = 0; x < width; ++x) {
        const Rgb& c = px[y * width + x];
        const double n = sigma > 0.0 ? sigma * rng.normal() : 0.0;
        out.set_pixel(x, y, to_byte(c.r + n), to_byte(c.g + n), to_byte(c.b + n));
      }
    }
    return out;
  }
};

void paint_water(Canvas& cv, Rng& rng) {
  // Gentle vertical shading with a random tilt.
  const double tilt = 12.0 * (rng.uniform() - 0.5);
  for (std::size_t y = 0; y < cv.height; ++y) {
    const double shade = tilt * (static_cast<double>(y) / static_cast<double>(cv.height) - 0.5);
    for (std::size_t x = 0; x < cv.width; ++x) {
      cv.at(x, y) = Rgb{kWater.r + shade, kWater.g + shade, kWater.b + shade};
    }
  }
}

// Adds round blobs until the covered fraction reaches `density`.
void paint_blobs(Canvas& cv, Rng& rng, double density, double radius_min, double radius_max) {
  std::vector<std::uint8_t> covered(cv.width * cv.height, 0);
  const auto target = static_cast<std::size_t>(std::ceil(density * static_cast<double>(covered.size())));
  std::size_t count = 0;
  while (count < target) {
    const double cx = rng.uniform() * static_cast<double>(cv.width);
    const double cy = rng.uniform() * static_cast<double>(cv.height);
    const double radius = radius_min + rng.uniform() * (radius_max - radius_min);
    const double jitter = 20.0 * (rng.uniform() - 0.5);
    const Rgb color{kScum.r + jitter, kScum.g + jitter, kScum.b + 0.5 * jitter};
    const auto x0 = static_cast<std::ptrdiff_t>(std::floor(cx - radius));
    const auto x1 = static_cast<std::ptrdiff_t>(std::ceil(cx + radius));
    const auto y0 = static_cast<std::ptrdiff_t>(std::floor(cy - radius));
    const auto y1 = static_cast<std::ptrdiff_t>(std::ceil(cy + radius));
    for (auto y = std::max<std::ptrdiff_t>(y0, 0); y <= std::min<std::ptrdiff_t>(y1, static_cast<std::ptrdiff_t>(cv.height) - 1); ++y) {
      for (auto x = std::max<std::ptrdiff_t>(x0, 0); x <= std::min<std::ptrdiff_t>(x1, static_cast<std::ptrdiff_t>(cv.width) - 1); ++x) {
        const double dx = static_cast<double>(x) + 0.5 - cx;
        const double dy = static_cast<double>(y) + 0.5 - cy;
        if (dx * dx + dy * dy > radius * radius) continue;
        const auto idx = static_cast<std::size_t>(y) * cv.width + static_cast<std::size_t>(x);
        cv.px[idx] = color;
        if (covered[idx] == 0) {
          covered[idx] = 1;
          ++count;
        }
      }
    }
  }
}

// Mirrored structures: horizontal reflection bands, a brightness gradient and
// a few thin vertical poles.
void paint_reflections(Canvas& cv, Rng& rng) {
  std::size_t y = 0;
  while (y < cv.height) {
    const std::size_t band = 4 + rng.uniform_int(0, 16);
    const Rgb base = kReflections[rng.uniform_int(0, kReflections.size() - 1)];
    for (std::size_t yy = y; yy < std::min(cv.height, y + band); ++yy) {
      const double ripple = 6.0 * std::sin(static_cast<double>(yy) * 0.9);
      for (std::size_t x = 0; x < cv.width; ++x) {
        const double grad = 20.0 * (static_cast<double>(x) / static_cast<double>(cv.width) - 0.5);
        cv.at(x, yy) = Rgb{base.r + ripple + grad, base.g + ripple + grad, base.b + ripple + grad};
      }
    }
    y += band;
  }
  const std::size_t poles = rng.uniform_int(0, 3);
  for (std::size_t p = 0; p < poles; ++p) {
    const std::size_t x0 = rng.uniform_int(0, cv.width - 1);
    const std::size_t w = 2 + rng.uniform_int(0, 3);
    for (std::size_t yy = 0; yy < cv.height; ++yy) {
      for (std::size_t x = x0; x < std::min(cv.width, x0 + w); ++x) cv.at(x, yy) = kReflections[2];
    }
  }
}

std::string format_weight(double w) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", w);
  return buf;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(field);
  return out;
}

double parse_double(const std::string& text, const std::filesystem::path& where) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw FormatError("bad number '" + text + "' in " + where.string());
  }
}

}  // namespace

void ConfusionMatrix::add(ClassId truth, ClassId predicted, std::uint64_t count) {
  counts_[static_cast<std::size_t>(truth)][static_cast<std::size_t>(predicted)] += count;
}

std::uint64_t ConfusionMatrix::total() const {
  std::uint64_t n = 0;
  for (const auto& row : counts_) n += std::accumulate(row.begin(), row.end(), std::uint64_t{0});
  return n;
}

ConfusionMatrix ConfusionMatrix::from_counts(
    const std::array<std::array<std::uint64_t, kClassCount>, kClassCount>& counts) {
  ConfusionMatrix cm;
  cm.counts_ = counts;
  return cm;
}

Metrics compute_metrics(const ConfusionMatrix& cm) {
  const std::uint64_t total = cm.total();
  if (total == 0) throw EmptySet("confusion matrix is empty");
  const auto& c = cm.counts();
  Metrics m;
  std::uint64_t trace = 0;
  for (std::size_t k = 0; k < kClassCount; ++k) {
    trace += c[k][k];
    std::uint64_t col = 0, row = 0;
    for (std::size_t j = 0; j < kClassCount; ++j) {
      col += c[j][k];
      row += c[k][j];
    }
    m.precision[k] = col == 0 ? 0.0 : static_cast<double>(c[k][k]) / static_cast<double>(col);
    m.recall[k] = row == 0 ? 0.0 : static_cast<double>(c[k][k]) / static_cast<double>(row);
  }
  m.accuracy = static_cast<double>(trace) / static_cast<double>(total);
  m.macro_precision = std::accumulate(m.precision.begin(), m.precision.end(), 0.0) / kClassCount;
  m.macro_recall = std::accumulate(m.recall.begin(), m.recall.end(), 0.0) / kClassCount;
  return m;
}

ConfusionMatrix evaluate(const Classifier& classifier, std::span<const LabeledPatch> samples) {
  ConfusionMatrix cm;
  for (const auto& s : samples) {
    const Probabilities p = classifier.predict(s.image);
    const auto pred = static_cast<ClassId>(std::max_element(p.begin(), p.end()) - p.begin());
    cm.add(s.label.argmax(), pred);
  }
  return cm;
}

void SynthSceneSpec::validate() const {
  auto in_unit = [](double v) { return v > 0.0 && v < 1.0; };
  if (patch_width == 0 || patch_height == 0) throw InvalidParam("patch size must be positive");
  if (!in_unit(early_density_min) || !in_unit(early_density_max) || !in_unit(thick_density_min) ||
      !in_unit(thick_density_max) || early_density_min > early_density_max ||
      thick_density_min > thick_density_max) {
    throw InvalidParam("blob densities must be ordered ranges inside (0, 1)");
  }
  if (early_density_max >= thick_density_min) {
    throw InvalidParam("early and grow-thick density ranges must be disjoint");
  }
  if (!(noise_sigma >= 0.0)) throw InvalidParam("noise sigma must be non-negative");
}

ImageBuffer render_texture(ClassId cls, const SynthSceneSpec& spec, Rng& rng, std::size_t width,
                           std::size_t height) {
  Canvas cv(width, height, kWater);
  switch (cls) {
    case ClassId::EarlyScum: {
      paint_water(cv, rng);
      const double d = spec.early_density_min +
                       rng.uniform() * (spec.early_density_max - spec.early_density_min);
      paint_blobs(cv, rng, d, 2.0, 5.0);
      break;
    }
    case ClassId::GrowThickScum: {
      paint_water(cv, rng);
      const double d = spec.thick_density_min +
                       rng.uniform() * (spec.thick_density_max - spec.thick_density_min);
      paint_blobs(cv, rng, d, 3.0, 9.0);
      break;
    }
    case ClassId::Background:
      paint_reflections(cv, rng);
      break;
  }
  return cv.finish(rng, spec.noise_sigma);
}

std::vector<LabeledPatch> generate_synthetic_dataset(const SynthSceneSpec& spec,
                                                     std::size_t n_per_class) {
  spec.validate();
  if (n_per_class == 0) throw InvalidParam("n_per_class must be at least 1");
  std::vector<LabeledPatch> out;
  out.reserve(3 * n_per_class);
  for (std::size_t i = 0; i < 3 * n_per_class; ++i) {
    const auto cls = static_cast<ClassId>(i % kClassCount);
    Rng rng(mix_seed(spec.seed, i));
    out.push_back(LabeledPatch{render_texture(cls, spec, rng, spec.patch_width, spec.patch_height),
                               SoftLabel::one_hot(cls)});
  }
  return out;
}

std::vector<SyntheticFrame> generate_synthetic_frame_sequence(
    const SynthSceneSpec& spec, std::span<const ScheduleEntry> schedule, const PatchGridSpec& grid) {
  spec.validate();
  std::vector<SyntheticFrame> frames;
  frames.reserve(schedule.size());
  for (std::size_t f = 0; f < schedule.size(); ++f) {
    const ScheduleEntry& entry = schedule[f];
    std::vector<std::uint8_t> scum(grid.patch_count(), 0);
    for (auto cell : entry.scum_cells) {
      if (cell >= grid.patch_count()) {
        throw InvalidParam("scheduled cell " + std::to_string(cell) + " is outside the grid");
      }
      scum[cell] = 1;
    }
    // Seeded by timestamp so a frame's texture does not depend on which
    // slice of the schedule it was rendered with. The xor keeps frame seeds
    // apart from dataset patch seeds.
    const Rng frame_rng(mix_seed(spec.seed ^ 0x5eedf00dULL,
                                 static_cast<std::uint64_t>(entry.timestamp.minutes_since_epoch())));
    ImageBuffer frame(grid.grid_width(), grid.frame_height());
    if (grid.crop_top > 0) {
      Rng far = frame_rng.derive(grid.patch_count());
      const ImageBuffer top =
          render_texture(ClassId::Background, spec, far, grid.grid_width(), grid.crop_top);
      blit(top, 0, 0, grid.grid_width(), grid.crop_top, frame, 0, 0);
    }
    GrayImage truth(grid.grid_width(), grid.grid_height(), 0);
    for (std::size_t cell = 0; cell < grid.patch_count(); ++cell) {
      Rng cell_rng = frame_rng.derive(cell);
      const auto cls = scum[cell] != 0 ? ClassId::GrowThickScum : ClassId::Background;
      const ImageBuffer tex =
          render_texture(cls, spec, cell_rng, grid.patch_width, grid.patch_height);
      const std::size_t r = cell / grid.cols, c = cell % grid.cols;
      blit(tex, 0, 0, grid.patch_width, grid.patch_height, frame, c * grid.patch_width,
           grid.crop_top + r * grid.patch_height);
      if (scum[cell] != 0) {
        for (std::size_t y = r * grid.patch_height; y < (r + 1) * grid.patch_height; ++y) {
          for (std::size_t x = c * grid.patch_width; x < (c + 1) * grid.patch_width; ++x) {
            truth.at(x, y) = 1;
          }
        }
      }
    }
    const auto cells = static_cast<double>(std::count(scum.begin(), scum.end(), std::uint8_t{1}));
    frames.push_back(SyntheticFrame{entry.timestamp, std::move(frame), std::move(truth),
                                    100.0 * cells / static_cast<double>(grid.patch_count())});
  }
  return frames;
}

std::vector<ScheduleEntry> single_peak_schedule(Timestamp start, std::size_t frame_count,
                                                std::size_t peak_index, std::size_t peak_cells,
                                                std::size_t cadence_minutes,
                                                const PatchGridSpec& grid) {
  if (peak_index >= frame_count) throw InvalidParam("peak index outside the sequence");
  if (peak_cells == 0 || peak_cells > grid.patch_count()) {
    throw InvalidParam("peak cell count must be in [1, patch count]");
  }
  // Fixed fill order so the scum region grows and shrinks contiguously from
  // the bottom-left of the grid.
  std::vector<std::size_t> order;
  for (std::size_t r = grid.rows; r-- > 0;) {
    for (std::size_t c = 0; c < grid.cols; ++c) order.push_back(r * grid.cols + c);
  }
  std::vector<ScheduleEntry> out;
  out.reserve(frame_count);
  for (std::size_t i = 0; i < frame_count; ++i) {
    const std::size_t distance = i > peak_index ? i - peak_index : peak_index - i;
    const std::size_t cells = distance >= peak_cells ? 0 : peak_cells - distance;
    out.push_back(ScheduleEntry{
        start.plus_minutes(static_cast<std::int64_t>(i * cadence_minutes)),
        std::vector<std::size_t>(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(cells))});
  }
  return out;
}

std::string_view to_string(Split split) { return split == Split::Train ? "train" : "test"; }

std::vector<Split> split_train_test(std::size_t n, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction >= 0.0 && train_fraction <= 1.0)) {
    throw InvalidParam("train fraction must be in [0, 1]");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.uniform_int(0, i - 1)]);
  const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n)));
  std::vector<Split> out(n, Split::Test);
  for (std::size_t i = 0; i < n_train; ++i) out[order[i]] = Split::Train;
  return out;
}

void write_manifest(const std::filesystem::path& manifest, std::span<const ManifestEntry> entries) {
  std::ofstream out(manifest, std::ios::trunc);
  if (!out) throw IoError("cannot write manifest " + manifest.string());
  for (const auto& e : entries) {
    const std::string p = e.path.generic_string();
    if (p.find_first_of(",\n") != std::string::npos) {
      throw InvalidParam("manifest paths may not contain commas or newlines: " + p);
    }
    out << p;
    for (double w : e.label.weights()) out << ',' << format_weight(w);
    out << ',' << to_string(e.split) << '\n';
  }
  if (!out) throw IoError("failed writing manifest " + manifest.string());
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& manifest) {
  std::ifstream in(manifest);
  if (!in) throw IoError("cannot open manifest " + manifest.string());
  std::vector<ManifestEntry> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto f = split_fields(line);
    if (f.size() != 5) {
      throw FormatError(manifest.string() + ":" + std::to_string(line_no) +
                        ": expected path,w0,w1,w2,split");
    }
    Split split = Split::Train;
    if (f[4] == "test") {
      split = Split::Test;
    } else if (f[4] != "train") {
      throw FormatError(manifest.string() + ":" + std::to_string(line_no) + ": unknown split '" +
                        f[4] + "'");
    }
    try {
      out.push_back(ManifestEntry{f[0],
                                  SoftLabel({parse_double(f[1], manifest),
                                             parse_double(f[2], manifest),
                                             parse_double(f[3], manifest)}),
                                  split});
    } catch (const InvalidParam& e) {
      throw FormatError(manifest.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::filesystem::path export_dataset(const std::filesystem::path& dir,
                                     std::span<const LabeledPatch> patches,
                                     std::span<const Split> splits) {
  if (splits.size() != patches.size()) throw CountMismatch("one split per patch is required");
  std::filesystem::create_directories(dir / "patches");
  std::vector<ManifestEntry> entries;
  entries.reserve(patches.size());
  for (std::size_t i = 0; i < patches.size(); ++i) {
    char name[64];
    std::snprintf(name, sizeof name, "patch_%06zu_c%zu.png", i,
                  static_cast<std::size_t>(patches[i].label.argmax()));
    const std::filesystem::path rel = std::filesystem::path("patches") / name;
    png::write_rgb(dir / rel, patches[i].image);
    entries.push_back(ManifestEntry{rel, patches[i].label, splits[i]});
  }
  const auto manifest = dir / "manifest.txt";
  write_manifest(manifest, entries);
  return manifest;
}

std::vector<LabeledPatch> load_dataset(const std::filesystem::path& manifest) {
  const auto base = manifest.parent_path();
  std::vector<LabeledPatch> out;
  for (const auto& e : read_manifest(manifest)) {
    out.push_back(LabeledPatch{png::read_rgb(base / e.path), e.label});
  }
  return out;
}

std::vector<LabeledPatch> load_dataset(const std::filesystem::path& manifest, Split split) {
  const auto base = manifest.parent_path();
  std::vector<LabeledPatch> out;
  for (const auto& e : read_manifest(manifest)) {
    if (e.split == split) out.push_back(LabeledPatch{png::read_rgb(base / e.path), e.label});
  }
  return out;
}

}  // namespace scum
