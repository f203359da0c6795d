#include "scum/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <numeric>

#include "scum/errors.hpp"

namespace scum {

namespace {

constexpr std::size_t kStages = 3;
constexpr std::size_t kKernel = 3;
constexpr char kMagic[8] = {'S', 'C', 'U', 'M', 'N', 'E', 'T', '\0'};
constexpr std::uint32_t kFormatVersion = 1;
// Maps [0, 255] to [-2, 2], roughly unit variance for natural scenes.
constexpr double kInputGain = 4.0;

// Parameter slots.
constexpr std::size_t conv_weight(std::size_t stage) { return 2 * stage; }
constexpr std::size_t conv_bias(std::size_t stage) { return 2 * stage + 1; }
constexpr std::size_t kHeadWeight = 2 * kStages;
constexpr std::size_t kHeadBias = 2 * kStages + 1;

std::size_t in_channels(const NetShape& shape, std::size_t stage) {
  return stage == 0 ? ImageBuffer::kChannels : shape.channels[stage - 1];
}

std::vector<ParamTensor> make_params(const NetShape& shape) {
  std::vector<ParamTensor> params;
  for (std::size_t s = 0; s < kStages; ++s) {
    const std::size_t cin = in_channels(shape, s);
    const std::size_t cout = shape.channels[s];
    const std::string prefix = "conv" + std::to_string(s + 1);
    params.push_back({prefix + ".weight", {cout, cin, kKernel, kKernel},
                      std::vector<double>(cout * cin * kKernel * kKernel, 0.0)});
    params.push_back({prefix + ".bias", {cout}, std::vector<double>(cout, 0.0)});
  }
  const std::size_t last = shape.channels[kStages - 1];
  params.push_back({"head.weight", {kClassCount, last}, std::vector<double>(kClassCount * last, 0.0)});
  params.push_back({"head.bias", {kClassCount}, std::vector<double>(kClassCount, 0.0)});
  return params;
}

void glorot_fill(std::vector<double>& values, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (auto& v : values) v = (2.0 * rng.uniform() - 1.0) * limit;
}

// Same-padding 3x3 convolution plus bias.
Tensor conv_forward(const Tensor& x, const std::vector<double>& weight,
                    const std::vector<double>& bias, std::size_t cout) {
  const std::size_t cin = x.channels, h = x.height, w = x.width;
  Tensor z(cout, h, w);
  for (std::size_t o = 0; o < cout; ++o) {
    double* zo = &z.values[o * h * w];
    std::fill(zo, zo + h * w, bias[o]);
    for (std::size_t i = 0; i < cin; ++i) {
      const double* xi = &x.values[i * h * w];
      const double* k = &weight[(o * cin + i) * kKernel * kKernel];
      for (std::size_t ky = 0; ky < kKernel; ++ky) {
        for (std::size_t kx = 0; kx < kKernel; ++kx) {
          const double kv = k[ky * kKernel + kx];
          // Output rows/cols whose tap (y + ky - 1, x + kx - 1) is in range.
          const std::size_t y0 = ky == 0 ? 1 : 0;
          const std::size_t y1 = ky == 2 ? h - 1 : h;
          const std::size_t x0 = kx == 0 ? 1 : 0;
          const std::size_t x1 = kx == 2 ? w - 1 : w;
          for (std::size_t y = y0; y < y1; ++y) {
            const double* src = xi + (y + ky - 1) * w;
            double* dst = zo + y * w;
            for (std::size_t xx = x0; xx < x1; ++xx) dst[xx] += kv * src[xx + kx - 1];
          }
        }
      }
    }
  }
  return z;
}

// Accumulates weight/bias gradients; writes the input gradient when dx is
// non-null.
void conv_backward(const Tensor& x, const std::vector<double>& weight, const Tensor& dz,
                   std::vector<double>& dweight, std::vector<double>& dbias, Tensor* dx) {
  const std::size_t cin = x.channels, cout = dz.channels, h = x.height, w = x.width;
  if (dx != nullptr) *dx = Tensor(cin, h, w);
  for (std::size_t o = 0; o < cout; ++o) {
    const double* dzo = &dz.values[o * h * w];
    dbias[o] += std::accumulate(dzo, dzo + h * w, 0.0);
    for (std::size_t i = 0; i < cin; ++i) {
      const double* xi = &x.values[i * h * w];
      const std::size_t kbase = (o * cin + i) * kKernel * kKernel;
      for (std::size_t ky = 0; ky < kKernel; ++ky) {
        for (std::size_t kx = 0; kx < kKernel; ++kx) {
          const std::size_t y0 = ky == 0 ? 1 : 0;
          const std::size_t y1 = ky == 2 ? h - 1 : h;
          const std::size_t x0 = kx == 0 ? 1 : 0;
          const std::size_t x1 = kx == 2 ? w - 1 : w;
          double acc = 0.0;
          const double kv = weight[kbase + ky * kKernel + kx];
          double* dxi = dx != nullptr ? &dx->values[i * h * w] : nullptr;
          for (std::size_t y = y0; y < y1; ++y) {
            const double* src = xi + (y + ky - 1) * w;
            const double* g = dzo + y * w;
            for (std::size_t xx = x0; xx < x1; ++xx) acc += g[xx] * src[xx + kx - 1];
            if (dxi != nullptr) {
              double* d = dxi + (y + ky - 1) * w;
              for (std::size_t xx = x0; xx < x1; ++xx) d[xx + kx - 1] += kv * g[xx];
            }
          }
          dweight[kbase + ky * kKernel + kx] += acc;
        }
      }
    }
  }
}

struct StageCache {
  Tensor input;
  Tensor pre_activation;
  std::vector<std::uint32_t> pool_argmax;  // flat index into pre_activation
};

// ReLU followed by 2x2 max-pool. Ties resolve to the first position in scan
// order.
Tensor relu_pool_forward(const Tensor& z, std::vector<std::uint32_t>& argmax) {
  const std::size_t c = z.channels, h = z.height / 2, w = z.width / 2;
  Tensor p(c, h, w);
  argmax.assign(c * h * w, 0);
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        double best = -std::numeric_limits<double>::infinity();
        std::size_t best_idx = 0;
        for (std::size_t dy = 0; dy < 2; ++dy) {
          for (std::size_t dx = 0; dx < 2; ++dx) {
            const std::size_t idx = (ch * z.height + 2 * y + dy) * z.width + 2 * x + dx;
            if (z.values[idx] > best) {
              best = z.values[idx];
              best_idx = idx;
            }
          }
        }
        const std::size_t out = (ch * h + y) * w + x;
        p.values[out] = std::max(best, 0.0);
        argmax[out] = static_cast<std::uint32_t>(best_idx);
      }
    }
  }
  return p;
}

struct ForwardCache {
  std::array<StageCache, kStages> stages;
  std::vector<double> pooled;  // global average of the last stage
  std::array<double, kClassCount> logits{};
};

void forward(const TinyConvNet& net, const Tensor& input, ForwardCache& cache) {
  const auto& params = net.parameters();
  const auto& shape = net.shape();
  Tensor x = input;
  for (std::size_t s = 0; s < kStages; ++s) {
    StageCache& sc = cache.stages[s];
    sc.pre_activation = conv_forward(x, params[conv_weight(s)].values,
                                     params[conv_bias(s)].values, shape.channels[s]);
    sc.input = std::move(x);
    x = relu_pool_forward(sc.pre_activation, sc.pool_argmax);
  }
  const std::size_t c = x.channels, hw = x.height * x.width;
  cache.pooled.assign(c, 0.0);
  for (std::size_t ch = 0; ch < c; ++ch) {
    const double* v = &x.values[ch * hw];
    cache.pooled[ch] = std::accumulate(v, v + hw, 0.0) / static_cast<double>(hw);
  }
  const auto& hw_w = params[kHeadWeight].values;
  const auto& hw_b = params[kHeadBias].values;
  for (std::size_t k = 0; k < kClassCount; ++k) {
    double acc = hw_b[k];
    for (std::size_t ch = 0; ch < c; ++ch) acc += hw_w[k * c + ch] * cache.pooled[ch];
    cache.logits[k] = acc;
  }
}

void check_input(const NetShape& shape, const Tensor& input) {
  if (input.channels != ImageBuffer::kChannels || input.height != shape.input_height() ||
      input.width != shape.input_width()) {
    throw DimensionMismatch("network input tensor has the wrong shape");
  }
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  void expect(std::span<const char> magic) {
    need(magic.size());
    if (std::memcmp(bytes_.data() + pos_, magic.data(), magic.size()) != 0) {
      throw FormatError("model file has a bad magic header");
    }
    pos_ += magic.size();
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) throw FormatError("model file is truncated");
  }
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

void NetShape::validate() const {
  if (downsample == 0 || patch_width % downsample != 0 || patch_height % downsample != 0) {
    throw InvalidParam("patch size must be divisible by the downsample factor");
  }
  constexpr std::size_t kPoolFactor = 1u << kStages;
  if (input_width() == 0 || input_height() == 0 || input_width() % kPoolFactor != 0 ||
      input_height() % kPoolFactor != 0) {
    throw InvalidParam("downsampled input must be divisible by 8 in both dimensions");
  }
  for (auto c : channels) {
    if (c == 0) throw InvalidParam("channel counts must be positive");
  }
}

Tensor to_input(const ImageBuffer& patch, const NetShape& shape) {
  if (patch.width() != shape.patch_width || patch.height() != shape.patch_height) {
    throw DimensionMismatch("classifier expects " + std::to_string(shape.patch_width) + "x" +
                            std::to_string(shape.patch_height) + " patches, got " +
                            std::to_string(patch.width()) + "x" + std::to_string(patch.height()));
  }
  const std::size_t f = shape.downsample;
  const std::size_t h = shape.input_height(), w = shape.input_width();
  Tensor t(ImageBuffer::kChannels, h, w);
  const double scale = 1.0 / (255.0 * static_cast<double>(f * f));
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      std::array<unsigned, ImageBuffer::kChannels> sum{};
      for (std::size_t dy = 0; dy < f; ++dy) {
        for (std::size_t dx = 0; dx < f; ++dx) {
          for (std::size_t c = 0; c < ImageBuffer::kChannels; ++c) {
            sum[c] += patch.at(x * f + dx, y * f + dy, c);
          }
        }
      }
      for (std::size_t c = 0; c < ImageBuffer::kChannels; ++c) {
        t.at(c, y, x) = (sum[c] * scale - 0.5) * kInputGain;
      }
    }
  }
  return t;
}

TinyConvNet::TinyConvNet(NetShape shape) : shape_(shape) {
  shape_.validate();
  params_ = make_params(shape_);
}

TinyConvNet TinyConvNet::initialize(Rng& rng, NetShape shape, bool random_head) {
  TinyConvNet net(shape);
  for (std::size_t s = 0; s < kStages; ++s) {
    const std::size_t cin = in_channels(shape, s);
    const std::size_t cout = shape.channels[s];
    glorot_fill(net.params_[conv_weight(s)].values, cin * kKernel * kKernel,
                cout * kKernel * kKernel, rng);
  }
  if (random_head) {
    glorot_fill(net.params_[kHeadWeight].values, shape.channels[kStages - 1], kClassCount, rng);
  }
  net.quantize_to_float();
  return net;
}

std::array<double, kClassCount> TinyConvNet::logits(const Tensor& input) const {
  check_input(shape_, input);
  ForwardCache cache;
  forward(*this, input, cache);
  return cache.logits;
}

Probabilities TinyConvNet::predict_input(const Tensor& input) const {
  return softmax(logits(input));
}

Probabilities TinyConvNet::predict(const ImageBuffer& patch) const {
  return predict_input(to_input(patch, shape_));
}

std::size_t TinyConvNet::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.values.size();
  return n;
}

void TinyConvNet::quantize_to_float() {
  for (auto& p : params_) {
    for (auto& v : p.values) v = static_cast<double>(static_cast<float>(v));
  }
}

// Layout (all integers u32 little-endian):
//   magic "SCUMNET\0", version, patch_width, patch_height, downsample,
//   tensor count, then per tensor: rank, dims..., then every tensor's values
//   as f32 little-endian in parameter order.
std::vector<std::uint8_t> TinyConvNet::serialize() const {
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  put_u32(out, kFormatVersion);
  put_u32(out, static_cast<std::uint32_t>(shape_.patch_width));
  put_u32(out, static_cast<std::uint32_t>(shape_.patch_height));
  put_u32(out, static_cast<std::uint32_t>(shape_.downsample));
  put_u32(out, static_cast<std::uint32_t>(params_.size()));
  for (const auto& p : params_) {
    put_u32(out, static_cast<std::uint32_t>(p.dims.size()));
    for (auto d : p.dims) put_u32(out, static_cast<std::uint32_t>(d));
  }
  for (const auto& p : params_) {
    for (double v : p.values) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  }
  return out;
}

TinyConvNet TinyConvNet::deserialize(std::span<const std::uint8_t> bytes) {
  ByteReader in(bytes);
  in.expect(kMagic);
  if (const auto version = in.u32(); version != kFormatVersion) {
    throw FormatError("unsupported model format version " + std::to_string(version));
  }
  NetShape shape;
  shape.patch_width = in.u32();
  shape.patch_height = in.u32();
  shape.downsample = in.u32();
  const std::uint32_t count = in.u32();
  if (count != 2 * kStages + 2) throw FormatError("unexpected layer count in model file");
  std::vector<std::vector<std::size_t>> dims(count);
  for (auto& d : dims) {
    const std::uint32_t rank = in.u32();
    if (rank > 4) throw FormatError("tensor rank too large in model file");
    for (std::uint32_t i = 0; i < rank; ++i) d.push_back(in.u32());
  }
  for (std::size_t s = 0; s < kStages; ++s) {
    if (dims[conv_weight(s)].empty()) throw FormatError("malformed conv shape in model file");
    shape.channels[s] = dims[conv_weight(s)][0];
  }
  try {
    shape.validate();
  } catch (const InvalidParam& e) {
    throw FormatError(std::string("model file shape invalid: ") + e.what());
  }
  TinyConvNet net(shape);
  for (std::size_t t = 0; t < count; ++t) {
    if (net.params_[t].dims != dims[t]) {
      throw FormatError("layer shape table inconsistent for " + net.params_[t].name);
    }
  }
  for (auto& p : net.params_) {
    for (auto& v : p.values) v = static_cast<double>(in.f32());
  }
  if (!in.done()) throw FormatError("trailing bytes in model file");
  return net;
}

void TinyConvNet::save(const std::filesystem::path& path) const {
  const auto bytes = serialize();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

TinyConvNet TinyConvNet::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open model file " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return deserialize(bytes);
}

Probabilities softmax(const std::array<double, kClassCount>& logits) {
  const double m = *std::max_element(logits.begin(), logits.end());
  Probabilities p{};
  double sum = 0.0;
  for (std::size_t k = 0; k < kClassCount; ++k) {
    p[k] = std::exp(logits[k] - m);
    sum += p[k];
  }
  for (auto& v : p) v /= sum;
  return p;
}

double soft_cross_entropy(const Probabilities& pred, const SoftLabel& target) {
  constexpr double kFloor = 1e-12;
  double loss = 0.0;
  for (std::size_t k = 0; k < kClassCount; ++k) {
    if (target[k] == 0.0) continue;
    loss -= target[k] * std::log(std::max(pred[k], kFloor));
  }
  return std::max(loss, 0.0);
}

Gradients zero_gradients(const TinyConvNet& net) {
  Gradients g;
  for (const auto& p : net.parameters()) g.emplace_back(p.values.size(), 0.0);
  return g;
}

double accumulate_gradient(const TinyConvNet& net, const Tensor& input, const SoftLabel& target,
                           Gradients& grads) {
  check_input(net.shape(), input);
  ForwardCache cache;
  forward(net, input, cache);
  const Probabilities p = softmax(cache.logits);
  const double loss = soft_cross_entropy(p, target);

  const auto& params = net.parameters();
  const std::size_t c = cache.pooled.size();
  std::array<double, kClassCount> dlogits{};
  for (std::size_t k = 0; k < kClassCount; ++k) dlogits[k] = p[k] - target[k];

  std::vector<double> dpooled(c, 0.0);
  for (std::size_t k = 0; k < kClassCount; ++k) {
    grads[kHeadBias][k] += dlogits[k];
    for (std::size_t ch = 0; ch < c; ++ch) {
      grads[kHeadWeight][k * c + ch] += dlogits[k] * cache.pooled[ch];
      dpooled[ch] += dlogits[k] * params[kHeadWeight].values[k * c + ch];
    }
  }

  // Gradient w.r.t. the last pooled map: spread the global average.
  const StageCache& last = cache.stages[kStages - 1];
  const std::size_t ph = last.pre_activation.height / 2, pw = last.pre_activation.width / 2;
  Tensor dpool(c, ph, pw);
  for (std::size_t ch = 0; ch < c; ++ch) {
    std::fill_n(&dpool.values[ch * ph * pw], ph * pw, dpooled[ch] / static_cast<double>(ph * pw));
  }

  for (std::size_t s = kStages; s-- > 0;) {
    const StageCache& sc = cache.stages[s];
    Tensor dz(sc.pre_activation.channels, sc.pre_activation.height, sc.pre_activation.width);
    for (std::size_t i = 0; i < dpool.values.size(); ++i) {
      const std::uint32_t idx = sc.pool_argmax[i];
      if (sc.pre_activation.values[idx] > 0.0) dz.values[idx] += dpool.values[i];
    }
    Tensor dx;
    conv_backward(sc.input, params[conv_weight(s)].values, dz, grads[conv_weight(s)],
                  grads[conv_bias(s)], s > 0 ? &dx : nullptr);
    dpool = std::move(dx);
  }
  return loss;
}

void TrainConfig::validate() const {
  if (epochs == 0) throw InvalidParam("epochs must be positive");
  if (batch_size == 0) throw InvalidParam("batch_size must be positive");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw InvalidParam("learning_rate must be finite and non-negative");
  }
  shape.validate();
}

LabeledPatch augment_sample(std::span<const LabeledPatch> dataset, std::size_t index,
                            AugmentPolicy policy, const AugmentParams& params, Rng& rng) {
  const LabeledPatch& base = dataset[index];
  auto pick = [&]() -> const LabeledPatch& { return dataset[rng.uniform_int(0, dataset.size() - 1)]; };
  switch (policy) {
    case AugmentPolicy::None:
      return base;
    case AugmentPolicy::Mixup: {
      const LabeledPatch& other = pick();
      const double lambda = sample_beta(rng, params.mixup_alpha());
      return mixup(base, other, lambda);
    }
    case AugmentPolicy::Cutout:
      return cutout(base, params.cutout_drop_rate(), rng, params.cutout_fill()).sample;
    case AugmentPolicy::Ricap: {
      const LabeledPatch& s2 = pick();
      const LabeledPatch& s3 = pick();
      const LabeledPatch& s4 = pick();
      return ricap(base, s2, s3, s4, rng);
    }
  }
  return base;
}

TinyConvNet train(std::span<const LabeledPatch> dataset, const TrainConfig& cfg, Rng& rng,
                  TrainReport* report) {
  cfg.validate();
  if (dataset.empty()) throw DegenerateDataset("training set is empty");
  std::array<std::size_t, kClassCount> per_class{};
  for (const auto& s : dataset) ++per_class[static_cast<std::size_t>(s.label.argmax())];
  for (std::size_t k = 0; k < kClassCount; ++k) {
    if (per_class[k] == 0) {
      throw DegenerateDataset("class " + std::string(class_name(static_cast<ClassId>(k))) +
                              " has no training samples");
    }
  }

  TinyConvNet net = TinyConvNet::initialize(rng, cfg.shape);
  const std::uint64_t augment_seed = rng.next_u64();
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);
  std::uint64_t sample_counter = 0;

  if (report != nullptr) *report = TrainReport{};
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[rng.uniform_int(0, i - 1)]);
    }
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      Gradients grads = zero_gradients(net);
      for (std::size_t j = start; j < end; ++j) {
        Rng sample_rng(mix_seed(augment_seed, sample_counter++));
        const LabeledPatch sample =
            augment_sample(dataset, order[j], cfg.augment_policy, cfg.augment_params, sample_rng);
        epoch_loss += accumulate_gradient(net, to_input(sample.image, cfg.shape), sample.label, grads);
      }
      const double step = cfg.learning_rate / static_cast<double>(end - start);
      auto& params = net.parameters();
      for (std::size_t t = 0; t < params.size(); ++t) {
        for (std::size_t i = 0; i < params[t].values.size(); ++i) {
          params[t].values[i] -= step * grads[t][i];
        }
      }
    }
    const double mean_loss = epoch_loss / static_cast<double>(order.size());
    if (!std::isfinite(mean_loss)) throw Error("training diverged: non-finite loss");
    if (report != nullptr) report->epoch_mean_loss.push_back(mean_loss);
  }

  net.quantize_to_float();
  if (report != nullptr) {
    std::size_t correct = 0;
    for (const auto& s : dataset) {
      const Probabilities p = net.predict(s.image);
      const auto pred = static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
      if (pred == static_cast<std::size_t>(s.label.argmax())) ++correct;
    }
    report->train_accuracy = static_cast<double>(correct) / static_cast<double>(dataset.size());
  }
  return net;
}

TinyConvNet train(std::span<const LabeledPatch> dataset, const TrainConfig& cfg,
                  TrainReport* report) {
  Rng rng(cfg.seed);
  return train(dataset, cfg, rng, report);
}

}  // namespace scum
