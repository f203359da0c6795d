#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "scum/augment.hpp"
#include "scum/image.hpp"
#include "scum/model.hpp"
#include "scum/timestamp.hpp"

namespace scum {

/// 3x3 counts; rows are the true class, columns the predicted class.
class ConfusionMatrix {
 public:
  void add(ClassId truth, ClassId predicted, std::uint64_t count = 1);
  std::uint64_t at(ClassId truth, ClassId predicted) const {
    return counts_[static_cast<std::size_t>(truth)][static_cast<std::size_t>(predicted)];
  }
  std::uint64_t total() const;
  const std::array<std::array<std::uint64_t, kClassCount>, kClassCount>& counts() const noexcept {
    return counts_;
  }

  static ConfusionMatrix from_counts(
      const std::array<std::array<std::uint64_t, kClassCount>, kClassCount>& counts);

 private:
  std::array<std::array<std::uint64_t, kClassCount>, kClassCount> counts_{};
};

struct Metrics {
  double accuracy = 0.0;
  std::array<double, kClassCount> precision{};
  std::array<double, kClassCount> recall{};
  double macro_precision = 0.0;
  double macro_recall = 0.0;

  /// Grow-thick scum recall, the headline figure for scum monitoring.
  double headline_recall() const { return recall[static_cast<std::size_t>(ClassId::GrowThickScum)]; }
};

/// Throws EmptySet when the matrix is empty. Precision of a class that was
/// never predicted is 0; likewise recall of a class with no samples.
Metrics compute_metrics(const ConfusionMatrix& cm);

/// Predicted class = argmax of the classifier output, truth = label argmax.
ConfusionMatrix evaluate(const Classifier& classifier, std::span<const LabeledPatch> samples);

/// Texture parameters for the synthetic river patches.
struct SynthSceneSpec {
  std::size_t patch_width = 256;
  std::size_t patch_height = 128;
  double early_density_min = 0.02;  // C0 sparse blobs
  double early_density_max = 0.08;
  double thick_density_min = 0.25;  // C1 dense blobs
  double thick_density_max = 0.5;
  double noise_sigma = 6.0;
  std::uint64_t seed = 2021;

  /// Throws InvalidParam unless the density ranges are valid and disjoint.
  void validate() const;
};

/// One synthetic patch of the requested class.
ImageBuffer render_texture(ClassId cls, const SynthSceneSpec& spec, Rng& rng, std::size_t width,
                           std::size_t height);

/// 3 * n_per_class one-hot patches, classes interleaved (C0, C1, C2, C0, ...).
/// Patch i is rendered from its own derived seed.
std::vector<LabeledPatch> generate_synthetic_dataset(const SynthSceneSpec& spec,
                                                     std::size_t n_per_class);

struct ScheduleEntry {
  Timestamp timestamp;
  std::vector<std::size_t> scum_cells;  // row-major grid indices
};

struct SyntheticFrame {
  Timestamp timestamp;
  ImageBuffer frame;       // full frame including the far region
  GrayImage truth_mask;    // cropped resolution, 1 = scum
  double truth_ratio_percent = 0.0;
};

/// Full frames whose scheduled cells carry grow-thick scum texture and all
/// other cells (and the far region) background texture.
std::vector<SyntheticFrame> generate_synthetic_frame_sequence(
    const SynthSceneSpec& spec, std::span<const ScheduleEntry> schedule,
    const PatchGridSpec& grid = {});

/// Ten-minute cadence schedule with one scum event. The number of scum cells
/// rises by one per frame to `peak_cells` at `peak_index` and falls back by
/// one per frame; all other frames are clean.
std::vector<ScheduleEntry> single_peak_schedule(Timestamp start, std::size_t frame_count,
                                                std::size_t peak_index, std::size_t peak_cells,
                                                std::size_t cadence_minutes = 10,
                                                const PatchGridSpec& grid = {});

enum class Split { Train, Test };

std::string_view to_string(Split split);

/// Deterministic train/test assignment with round(train_fraction * n) train
/// items chosen by a seeded shuffle.
std::vector<Split> split_train_test(std::size_t n, double train_fraction, std::uint64_t seed);

struct ManifestEntry {
  std::filesystem::path path;  // relative to the manifest directory
  SoftLabel label;
  Split split = Split::Train;
};

/// One line per patch: `path,w0,w1,w2,split`.
void write_manifest(const std::filesystem::path& manifest, std::span<const ManifestEntry> entries);
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& manifest);

/// Writes every patch as PNG under `dir` and a `manifest.txt` next to them.
/// Returns the manifest path.
std::filesystem::path export_dataset(const std::filesystem::path& dir,
                                     std::span<const LabeledPatch> patches,
                                     std::span<const Split> splits);

/// Loads the patches of a manifest, optionally restricted to one split.
std::vector<LabeledPatch> load_dataset(const std::filesystem::path& manifest);
std::vector<LabeledPatch> load_dataset(const std::filesystem::path& manifest, Split split);

}  // namespace scum
