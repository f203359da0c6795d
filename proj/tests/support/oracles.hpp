#pragma once

// Independent reference computations used by the unit and acceptance tests.
// None of these call into the code they check.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "scum/augment.hpp"
#include "scum/image.hpp"

namespace scum::oracle {

/// Beta(a, b) by Johnk's rejection method on std::mt19937_64.
inline double johnk_beta(std::mt19937_64& gen, double a, double b) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (;;) {
    const double x = std::pow(u(gen), 1.0 / a);
    const double y = std::pow(u(gen), 1.0 / b);
    if (x + y <= 1.0 && x + y > 0.0) return x / (x + y);
  }
}

inline double symmetric_beta_variance(double alpha) {
  return alpha * alpha / ((2 * alpha) * (2 * alpha) * (2 * alpha + 1));
}

struct Moments {
  double mean = 0.0;
  double variance = 0.0;
};

inline Moments moments(std::span<const double> xs) {
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  var /= static_cast<double>(xs.size());
  return {mean, var};
}

/// One-sample Kolmogorov-Smirnov statistic against U(0,1).
inline double ks_uniform_statistic(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double lo = static_cast<double>(i) / n;
    const double hi = static_cast<double>(i + 1) / n;
    d = std::max({d, std::abs(xs[i] - lo), std::abs(hi - xs[i])});
  }
  return d;
}

/// Asymptotic KS critical value at the 1% level.
inline double ks_critical_1pct(std::size_t n) { return 1.6276 / std::sqrt(static_cast<double>(n)); }

/// Counts pixels whose three channels all equal `v`.
inline std::size_t count_value(const ImageBuffer& img, std::uint8_t v) {
  std::size_t n = 0;
  for (std::size_t y = 0; y < img.height(); ++y) {
    for (std::size_t x = 0; x < img.width(); ++x) {
      if (img.at(x, y, 0) == v && img.at(x, y, 1) == v && img.at(x, y, 2) == v) ++n;
    }
  }
  return n;
}

/// 4-connected components of pixels equal to gray `v`, with their bounding boxes.
struct Component {
  std::size_t pixels = 0;
  std::size_t x0 = 0, y0 = 0, x1 = 0, y1 = 0;  // half-open
};

inline std::vector<Component> components(const ImageBuffer& img, std::uint8_t v) {
  const std::size_t w = img.width(), h = img.height();
  auto is_fill = [&](std::size_t x, std::size_t y) {
    return img.at(x, y, 0) == v && img.at(x, y, 1) == v && img.at(x, y, 2) == v;
  };
  std::vector<char> seen(w * h, 0);
  std::vector<Component> out;
  std::vector<std::pair<std::size_t, std::size_t>> stack;
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      if (seen[y * w + x] || !is_fill(x, y)) continue;
      Component c{0, x, y, x + 1, y + 1};
      stack.push_back({x, y});
      seen[y * w + x] = 1;
      while (!stack.empty()) {
        const auto [cx, cy] = stack.back();
        stack.pop_back();
        ++c.pixels;
        c.x0 = std::min(c.x0, cx);
        c.y0 = std::min(c.y0, cy);
        c.x1 = std::max(c.x1, cx + 1);
        c.y1 = std::max(c.y1, cy + 1);
        const std::array<std::pair<long, long>, 4> nbrs{{{-1, 0}, {1, 0}, {0, -1}, {0, 1}}};
        for (const auto& [dx, dy] : nbrs) {
          const long nx = static_cast<long>(cx) + dx, ny = static_cast<long>(cy) + dy;
          if (nx < 0 || ny < 0 || nx >= static_cast<long>(w) || ny >= static_cast<long>(h)) continue;
          const auto ux = static_cast<std::size_t>(nx), uy = static_cast<std::size_t>(ny);
          if (seen[uy * w + ux] || !is_fill(ux, uy)) continue;
          seen[uy * w + ux] = 1;
          stack.push_back({ux, uy});
        }
      }
      out.push_back(c);
    }
  }
  return out;
}

/// A source patch whose pixels name their origin: R = tag, G = x, B = y.
/// Requires width <= 256 and height <= 256.
inline ImageBuffer tagged_source(std::uint8_t tag, std::size_t width, std::size_t height) {
  ImageBuffer img(width, height);
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      img.set_pixel(x, y, tag, static_cast<std::uint8_t>(x), static_cast<std::uint8_t>(y));
    }
  }
  return img;
}

/// Per-source pixel attribution of a composite built from tagged sources
/// 0..3. `consistent` is false if any source's pixels are not a single
/// rigid translation of that source.
struct Attribution {
  std::array<std::size_t, 4> counts{};
  std::size_t foreign = 0;
  bool consistent = true;
};

inline Attribution attribute_pixels(const ImageBuffer& composite) {
  Attribution a;
  std::array<bool, 4> have_shift{};
  std::array<std::pair<long, long>, 4> shift{};
  for (std::size_t y = 0; y < composite.height(); ++y) {
    for (std::size_t x = 0; x < composite.width(); ++x) {
      const std::size_t tag = composite.at(x, y, 0);
      if (tag > 3) {
        ++a.foreign;
        continue;
      }
      ++a.counts[tag];
      const std::pair<long, long> s{static_cast<long>(composite.at(x, y, 1)) - static_cast<long>(x),
                                    static_cast<long>(composite.at(x, y, 2)) - static_cast<long>(y)};
      if (!have_shift[tag]) {
        have_shift[tag] = true;
        shift[tag] = s;
      } else if (shift[tag] != s) {
        a.consistent = false;
      }
    }
  }
  return a;
}

/// Scum and river pixel counts by direct per-pixel tally.
struct PixelCounts {
  std::uint64_t scum = 0;
  std::uint64_t river = 0;
};

inline PixelCounts brute_force_counts(const GrayImage& mask, const GrayImage& background) {
  PixelCounts c;
  for (std::size_t y = 0; y < mask.height(); ++y) {
    for (std::size_t x = 0; x < mask.width(); ++x) {
      if (background.at(x, y) != 0) continue;
      ++c.river;
      if (mask.at(x, y) != 0) ++c.scum;
    }
  }
  return c;
}

/// Nearest-centroid classifier on per-channel pixel means.
class NearestCentroid {
 public:
  explicit NearestCentroid(std::span<const LabeledPatch> train) {
    std::array<std::size_t, kClassCount> n{};
    for (const auto& s : train) {
      const auto k = static_cast<std::size_t>(s.label.argmax());
      const auto f = features(s.image);
      for (std::size_t c = 0; c < 3; ++c) centroids_[k][c] += f[c];
      ++n[k];
    }
    for (std::size_t k = 0; k < kClassCount; ++k) {
      for (std::size_t c = 0; c < 3; ++c) centroids_[k][c] /= static_cast<double>(std::max<std::size_t>(n[k], 1));
    }
  }

  static std::array<double, 3> features(const ImageBuffer& img) {
    std::array<double, 3> f{};
    for (std::size_t y = 0; y < img.height(); ++y) {
      for (std::size_t x = 0; x < img.width(); ++x) {
        for (std::size_t c = 0; c < 3; ++c) f[c] += img.at(x, y, c);
      }
    }
    for (auto& v : f) v /= static_cast<double>(img.pixel_count());
    return f;
  }

  std::size_t classify(const ImageBuffer& img) const {
    const auto f = features(img);
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < kClassCount; ++k) {
      double d = 0.0;
      for (std::size_t c = 0; c < 3; ++c) d += (f[c] - centroids_[k][c]) * (f[c] - centroids_[k][c]);
      if (d < best_d) {
        best_d = d;
        best = k;
      }
    }
    return best;
  }

  double accuracy(std::span<const LabeledPatch> test) const {
    std::size_t ok = 0;
    for (const auto& s : test) ok += classify(s.image) == static_cast<std::size_t>(s.label.argmax());
    return static_cast<double>(ok) / static_cast<double>(test.size());
  }

 private:
  std::array<std::array<double, 3>, kClassCount> centroids_{};
};

}  // namespace scum::oracle
