#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "scum/errors.hpp"
#include "scum/evalkit.hpp"
#include "scum/model.hpp"
#include "support/gradcheck.hpp"

using namespace scum;

namespace {

ImageBuffer random_patch(std::uint64_t seed) {
  Rng rng(seed);
  ImageBuffer img(256, 128);
  for (auto& v : img.data()) v = static_cast<std::uint8_t>(rng.next_u64());
  return img;
}

std::vector<LabeledPatch> small_dataset(std::size_t n_per_class) {
  return generate_synthetic_dataset(SynthSceneSpec{}, n_per_class);
}

}  // namespace

TEST_CASE("zero head predicts uniform probabilities") {
  Rng rng(1);
  const TinyConvNet net = TinyConvNet::initialize(rng);
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto p = net.predict(random_patch(s));
    for (double v : p) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  }
}

TEST_CASE("predictions lie on the simplex and repeat exactly") {
  Rng rng(2);
  const TinyConvNet net = TinyConvNet::initialize(rng, NetShape{}, true);
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto img = random_patch(100 + s);
    const auto p = net.predict(img);
    double sum = 0.0;
    for (double v : p) {
      CHECK(v >= 0.0);
      sum += v;
    }
    CHECK(std::abs(sum - 1.0) <= 1e-6);
    CHECK(net.predict(img) == p);
  }
  CHECK_THROWS_AS(net.predict(ImageBuffer(128, 128)), DimensionMismatch);
}

TEST_CASE("to_input pools and scales") {
  const Tensor t = to_input(ImageBuffer(256, 128, 255), NetShape{});
  CHECK(t.channels == 3);
  CHECK(t.height == 32);
  CHECK(t.width == 64);
  for (double v : t.values) CHECK(v == doctest::Approx(2.0));
  ImageBuffer half(256, 128, 0);
  for (std::size_t y = 0; y < 4; ++y) {
    for (std::size_t x = 0; x < 2; ++x) half.set_pixel(x, y, 255, 255, 255);
  }
  // One 4x4 block half white: mean 127.5 -> 0.
  CHECK(to_input(half, NetShape{}).at(0, 0, 0) == doctest::Approx(0.0));
}

TEST_CASE("soft cross-entropy reference values") {
  const Probabilities third{1.0 / 3, 1.0 / 3, 1.0 / 3};
  CHECK(soft_cross_entropy(third, SoftLabel::one_hot(ClassId::Background)) == doctest::Approx(std::log(3.0)));
  CHECK(soft_cross_entropy(third, SoftLabel({0.2, 0.3, 0.5})) == doctest::Approx(std::log(3.0)));
  CHECK(soft_cross_entropy({0.5, 0.5, 0.0}, SoftLabel({0.5, 0.5, 0.0})) == doctest::Approx(std::log(2.0)));
  CHECK(soft_cross_entropy({1.0, 0.0, 0.0}, SoftLabel::one_hot(ClassId::EarlyScum)) == doctest::Approx(0.0));
  // Clamp keeps the loss finite when the target class has zero mass.
  CHECK(std::isfinite(soft_cross_entropy({1.0, 0.0, 0.0}, SoftLabel::one_hot(ClassId::Background))));
}

TEST_CASE("softmax is shift invariant") {
  const std::array<double, 3> z{0.3, -1.2, 2.5};
  const auto p = softmax(z);
  for (double shift : {-100.0, -1.0, 7.5, 500.0}) {
    const auto q = softmax({z[0] + shift, z[1] + shift, z[2] + shift});
    for (std::size_t k = 0; k < 3; ++k) CHECK(q[k] == doctest::Approx(p[k]).epsilon(1e-12));
  }
}

TEST_CASE("analytic gradients match central differences") {
  Rng rng(3);
  const TinyConvNet net = TinyConvNet::initialize(rng, NetShape{}, true);
  for (const auto& target : {SoftLabel::one_hot(ClassId::GrowThickScum), SoftLabel({0.3, 0.45, 0.25})}) {
    const Tensor input = oracle::random_input(net.shape(), rng);
    for (const auto& p : oracle::gradient_probes(net, input, target, 20, rng)) {
      CAPTURE(p.tensor);
      CAPTURE(p.index);
      CAPTURE(p.analytic);
      CAPTURE(p.numeric);
      CHECK(p.relative_error <= 1e-3);
    }
  }
}

TEST_CASE("one small full-batch step does not increase the loss") {
  Rng rng(4);
  TinyConvNet net = TinyConvNet::initialize(rng, NetShape{}, true);
  const auto data = small_dataset(2);
  std::vector<Tensor> inputs;
  for (std::size_t i = 0; i < 4; ++i) inputs.push_back(to_input(data[i].image, net.shape()));
  auto batch_loss = [&](const TinyConvNet& n) {
    double l = 0.0;
    for (std::size_t i = 0; i < 4; ++i) l += soft_cross_entropy(n.predict_input(inputs[i]), data[i].label);
    return l / 4;
  };
  Gradients g = zero_gradients(net);
  double before = 0.0;
  for (std::size_t i = 0; i < 4; ++i) before += accumulate_gradient(net, inputs[i], data[i].label, g);
  before /= 4;
  CHECK(before == doctest::Approx(batch_loss(net)));
  auto& params = net.parameters();
  for (std::size_t t = 0; t < params.size(); ++t) {
    for (std::size_t i = 0; i < params[t].values.size(); ++i) params[t].values[i] -= 1e-4 * g[t][i] / 4;
  }
  CHECK(batch_loss(net) <= before);
}

TEST_CASE("parameter budget") {
  const TinyConvNet net;
  CHECK(net.parameter_count() < 100000);
  std::size_t n = 0;
  for (const auto& p : net.parameters()) n += p.values.size();
  CHECK(n == net.parameter_count());
}

TEST_CASE("serialization round trips bit-exactly") {
  Rng rng(5);
  const TinyConvNet net = TinyConvNet::initialize(rng, NetShape{}, true);
  const auto bytes = net.serialize();
  REQUIRE(bytes.size() > 8);
  CHECK(std::string(bytes.begin(), bytes.begin() + 7) == "SCUMNET");
  const TinyConvNet back = TinyConvNet::deserialize(bytes);
  CHECK(back == net);
  CHECK(back.serialize() == bytes);

  const auto path = std::filesystem::temp_directory_path() / "scumwatch_model_test.bin";
  net.save(path);
  CHECK(TinyConvNet::load(path) == net);

  auto truncated = bytes;
  truncated.resize(bytes.size() - 3);
  CHECK_THROWS_AS(TinyConvNet::deserialize(truncated), FormatError);
  auto bad = bytes;
  bad[0] = 'X';
  CHECK_THROWS_AS(TinyConvNet::deserialize(bad), FormatError);
  CHECK_THROWS_AS(TinyConvNet::load("/nonexistent/model.bin"), IoError);
}

TEST_CASE("training rejects degenerate datasets") {
  TrainConfig cfg;
  CHECK_THROWS_AS(train(std::vector<LabeledPatch>{}, cfg), DegenerateDataset);
  auto data = small_dataset(3);
  std::erase_if(data, [](const LabeledPatch& s) { return s.label.argmax() == ClassId::Background; });
  CHECK_THROWS_AS(train(data, cfg), DegenerateDataset);
  cfg.batch_size = 0;
  CHECK_THROWS_AS(train(small_dataset(1), cfg), InvalidParam);
}

TEST_CASE("zero learning rate leaves the initial weights") {
  TrainConfig cfg;
  cfg.learning_rate = 0.0;
  cfg.epochs = 2;
  cfg.seed = 17;
  const TinyConvNet net = train(small_dataset(4), cfg);
  Rng rng(17);
  CHECK(net == TinyConvNet::initialize(rng, cfg.shape));
}

TEST_CASE("training is deterministic for every policy") {
  const auto data = small_dataset(4);
  for (auto policy : {AugmentPolicy::None, AugmentPolicy::Mixup, AugmentPolicy::Cutout, AugmentPolicy::Ricap}) {
    CAPTURE(to_string(policy));
    TrainConfig cfg;
    cfg.epochs = 2;
    cfg.seed = 9;
    cfg.augment_policy = policy;
    TrainReport r1, r2;
    const auto a = train(data, cfg, &r1);
    const auto b = train(data, cfg, &r2);
    CHECK(a.serialize() == b.serialize());
    CHECK(r1.epoch_mean_loss == r2.epoch_mean_loss);
    for (double l : r1.epoch_mean_loss) CHECK(std::isfinite(l));
  }
}

TEST_CASE("baseline training fits the synthetic set") {
  TrainConfig cfg;
  cfg.seed = 1;
  TrainReport report;
  train(small_dataset(60), cfg, &report);
  CHECK(report.epoch_mean_loss.size() == 10);
  CHECK(report.epoch_mean_loss.back() < report.epoch_mean_loss.front());
  CHECK(report.train_accuracy >= 0.95);
}

TEST_CASE("augment_sample keeps labels on the simplex") {
  const auto data = small_dataset(3);
  const AugmentParams params;
  for (auto policy : {AugmentPolicy::None, AugmentPolicy::Mixup, AugmentPolicy::Cutout, AugmentPolicy::Ricap}) {
    for (std::size_t i = 0; i < data.size(); ++i) {
      Rng rng(mix_seed(3, i));
      const auto s = augment_sample(data, i, policy, params, rng);
      double sum = 0.0;
      for (std::size_t k = 0; k < 3; ++k) sum += s.label[k];
      CHECK(std::abs(sum - 1.0) <= 1e-9);
      if (policy == AugmentPolicy::None) CHECK(s == data[i]);
      if (policy == AugmentPolicy::Cutout) CHECK(s.label == data[i].label);
    }
  }
}
