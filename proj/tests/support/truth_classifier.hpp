#pragma once

#include <map>
#include <span>
#include <vector>

#include "scum/evalkit.hpp"
#include "scum/model.hpp"

namespace scum::oracle {

/// Classifier that knows the generator's ground truth: it memorizes every
/// patch of the given frames and answers C1 for patches under the truth mask.
class TruthClassifier final : public Classifier {
 public:
  explicit TruthClassifier(std::span<const SyntheticFrame> frames, const PatchGridSpec& grid = {})
      : grid_(grid) {
    for (const auto& f : frames) {
      const auto patches = extract_patches(crop_far_region(f.frame, grid), grid);
      for (const auto& p : patches) {
        const bool scum = f.truth_mask.at(p.grid_col * grid.patch_width, p.grid_row * grid.patch_height) != 0;
        const auto bytes = p.pixels.data();
        known_[std::vector<std::uint8_t>(bytes.begin(), bytes.end())] = scum;
      }
    }
  }

  Probabilities predict(const ImageBuffer& patch) const override {
    const auto bytes = patch.data();
    const auto it = known_.find(std::vector<std::uint8_t>(bytes.begin(), bytes.end()));
    if (it == known_.end()) return {0.0, 0.0, 1.0};
    return it->second ? Probabilities{0.0, 1.0, 0.0} : Probabilities{0.0, 0.0, 1.0};
  }
  std::size_t input_width() const override { return grid_.patch_width; }
  std::size_t input_height() const override { return grid_.patch_height; }

 private:
  PatchGridSpec grid_;
  std::map<std::vector<std::uint8_t>, bool> known_;
};

}  // namespace scum::oracle
