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
#include "scum/rng.hpp"

namespace scum {

using Probabilities = std::array<double, kClassCount>;

/// Patch classifier. Implementations return a point on the 3-simplex.
class Classifier {
 public:
  virtual ~Classifier() = default;

  virtual Probabilities predict(const ImageBuffer& patch) const = 0;
  virtual std::size_t input_width() const = 0;
  virtual std::size_t input_height() const = 0;

  std::array<std::string_view, kClassCount> class_names() const {
    return {class_name(ClassId::EarlyScum), class_name(ClassId::GrowThickScum),
            class_name(ClassId::Background)};
  }
};

struct NetShape {
  std::size_t patch_width = 256;
  std::size_t patch_height = 128;
  std::size_t downsample = 4;
  std::array<std::size_t, 3> channels{8, 16, 16};

  std::size_t input_width() const noexcept { return patch_width / downsample; }
  std::size_t input_height() const noexcept { return patch_height / downsample; }

  /// Throws InvalidParam if the downsampled input cannot be halved three
  /// times.
  void validate() const;

  friend bool operator==(const NetShape&, const NetShape&) = default;
};

/// Dense CHW tensor of doubles.
struct Tensor {
  std::size_t channels = 0, height = 0, width = 0;
  std::vector<double> values;

  Tensor() = default;
  Tensor(std::size_t c, std::size_t h, std::size_t w)
      : channels(c), height(h), width(w), values(c * h * w, 0.0) {}

  double& at(std::size_t c, std::size_t y, std::size_t x) {
    return values[(c * height + y) * width + x];
  }
  double at(std::size_t c, std::size_t y, std::size_t x) const {
    return values[(c * height + y) * width + x];
  }
};

/// Average-pools a patch by shape.downsample and maps 8-bit values to
/// [-0.5, 0.5]. Throws DimensionMismatch if the patch size differs from the
/// shape.
Tensor to_input(const ImageBuffer& patch, const NetShape& shape);

struct ParamTensor {
  std::string name;
  std::vector<std::size_t> dims;
  std::vector<double> values;

  friend bool operator==(const ParamTensor&, const ParamTensor&) = default;
};

/// Three conv stages (3x3 same-padding conv, bias, ReLU, 2x2 max-pool), a
/// global average pool, and an affine map to three logits.
///
/// Parameter order: conv{1,2,3}.weight [out, in, 3, 3], conv{1,2,3}.bias,
/// head.weight [3, C], head.bias.
class TinyConvNet final : public Classifier {
 public:
  /// All parameters zero.
  explicit TinyConvNet(NetShape shape = {});

  /// Glorot-uniform convolutions with zero biases. The head is zero unless
  /// `random_head` is set, in which case it is Glorot-uniform as well.
  static TinyConvNet initialize(Rng& rng, NetShape shape = {}, bool random_head = false);

  Probabilities predict(const ImageBuffer& patch) const override;
  std::size_t input_width() const override { return shape_.patch_width; }
  std::size_t input_height() const override { return shape_.patch_height; }

  std::array<double, kClassCount> logits(const Tensor& input) const;
  Probabilities predict_input(const Tensor& input) const;

  const NetShape& shape() const noexcept { return shape_; }
  std::vector<ParamTensor>& parameters() noexcept { return params_; }
  const std::vector<ParamTensor>& parameters() const noexcept { return params_; }
  std::size_t parameter_count() const;

  /// Rounds every parameter to the nearest float32.
  void quantize_to_float();

  std::vector<std::uint8_t> serialize() const;
  static TinyConvNet deserialize(std::span<const std::uint8_t> bytes);
  void save(const std::filesystem::path& path) const;
  static TinyConvNet load(const std::filesystem::path& path);

  friend bool operator==(const TinyConvNet& a, const TinyConvNet& b) {
    return a.shape_ == b.shape_ && a.params_ == b.params_;
  }

 private:
  NetShape shape_;
  std::vector<ParamTensor> params_;
};

/// Numerically stable softmax.
Probabilities softmax(const std::array<double, kClassCount>& logits);

/// -sum_k target_k * log(max(pred_k, 1e-12)).
double soft_cross_entropy(const Probabilities& pred, const SoftLabel& target);

/// Gradient buffers with the same layout as TinyConvNet::parameters().
using Gradients = std::vector<std::vector<double>>;

Gradients zero_gradients(const TinyConvNet& net);

/// Forward + backward pass for one sample. Adds d(loss)/d(param) into
/// `grads` and returns the loss.
double accumulate_gradient(const TinyConvNet& net, const Tensor& input, const SoftLabel& target,
                           Gradients& grads);

struct TrainConfig {
  std::size_t epochs = 10;
  std::size_t batch_size = 4;
  double learning_rate = 0.1;
  std::uint64_t seed = 0;
  AugmentPolicy augment_policy = AugmentPolicy::None;
  AugmentParams augment_params;
  NetShape shape;

  void validate() const;
};

struct TrainReport {
  std::vector<double> epoch_mean_loss;
  double train_accuracy = 0.0;  // on the unaugmented training set
};

/// Augments one training sample according to `policy`. Partners for mixup
/// and RICAP are drawn uniformly from the whole dataset.
LabeledPatch augment_sample(std::span<const LabeledPatch> dataset, std::size_t index,
                            AugmentPolicy policy, const AugmentParams& params, Rng& rng);

/// Mini-batch SGD with a fixed learning rate on soft-target cross-entropy.
/// Throws DegenerateDataset when a class has no sample whose label argmax is
/// that class.
TinyConvNet train(std::span<const LabeledPatch> dataset, const TrainConfig& cfg, Rng& rng,
                  TrainReport* report = nullptr);

/// Same as above with Rng(cfg.seed).
TinyConvNet train(std::span<const LabeledPatch> dataset, const TrainConfig& cfg,
                  TrainReport* report = nullptr);

}  // namespace scum
