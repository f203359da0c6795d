#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "cli_app.hpp"
#include "scum/png_io.hpp"
#include "support/oracles.hpp"

using namespace scum;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run_cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

// One small synthetic dataset shared by the tests in this file.
const fs::path& dataset_dir() {
  static const fs::path dir = [] {
    const fs::path d = fs::temp_directory_path() / "scumwatch_cli_dataset";
    fs::remove_all(d);
    const auto r = run_cli({"synth", "dataset", "--output-dir", d.string(), "--n-per-class", "12", "--seed", "5"});
    REQUIRE(r.code == 0);
    return d;
  }();
  return dir;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  return dir;
}

}  // namespace

TEST_CASE("usage errors exit with 2") {
  CHECK(run_cli({}).code == 2);
  CHECK(run_cli({"frobnicate"}).code == 2);
  CHECK(run_cli({"train", "--set", "nonsense=1"}).code == 2);
  CHECK(run_cli({"train", "--config", "/nonexistent/x.conf"}).code == 2);
  CHECK(run_cli({"--help"}).code == 0);
}

TEST_CASE("missing manifest exits with 2 and names the path") {
  const auto r = run_cli({"train", "--manifest", "/nonexistent/manifest.txt"});
  CHECK(r.code == 2);
  CHECK(r.err.find("/nonexistent/manifest.txt") != std::string::npos);
}

TEST_CASE("config file values and flag overrides") {
  const fs::path dir = fresh_dir("scumwatch_cli_conf");
  fs::create_directories(dir);
  std::ofstream(dir / "run.conf") << "# run\nmanifest = " << (dataset_dir() / "manifest.txt").string()
                                  << "\nepochs = 1\nmodel = " << (dir / "m.bin").string()
                                  << "\naugment_policy = cutout\n";
  const auto r = run_cli({"train", "--config", (dir / "run.conf").string(), "--epochs", "2"});
  CHECK(r.code == 0);
  CHECK(fs::exists(dir / "m.bin"));
  CHECK(r.out.find("cutout") != std::string::npos);
  std::ofstream(dir / "bad.conf") << "epochs = 1\nunknown_key = 3\n";
  CHECK(run_cli({"train", "--config", (dir / "bad.conf").string()}).code == 2);
}

TEST_CASE("sweep trains one model per policy") {
  const fs::path dir = fresh_dir("scumwatch_cli_sweep");
  const auto r = run_cli({"train", "--manifest", (dataset_dir() / "manifest.txt").string(), "--model",
                          (dir / "model.bin").string(), "--epochs", "1", "--sweep",
                          "baseline,mixup,cutout,ricap", "--report", (dir / "report.csv").string()});
  REQUIRE(r.code == 0);
  const auto rows = lines_of(r.out);
  REQUIRE(rows.size() == 5);
  CHECK(rows[0].find("test_accuracy") != std::string::npos);
  const std::vector<std::string> names{"baseline", "mixup", "cutout", "ricap"};
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(rows[i + 1].rfind(names[i], 0) == 0);
    CHECK(fs::exists(dir / ("model_" + names[i] + ".bin")));
  }
  CHECK(lines_of(slurp(dir / "report.csv")).size() == 5);
}

TEST_CASE("train then eval") {
  const fs::path dir = fresh_dir("scumwatch_cli_eval");
  const auto manifest = (dataset_dir() / "manifest.txt").string();
  REQUIRE(run_cli({"train", "--manifest", manifest, "--model", (dir / "m.bin").string(), "--epochs", "1"}).code == 0);
  const auto r = run_cli({"eval", "--manifest", manifest, "--model", (dir / "m.bin").string(), "--split", "all"});
  CHECK(r.code == 0);
  CHECK(r.out.find("samples 36") != std::string::npos);
  CHECK(r.out.find("confusion") != std::string::npos);
  CHECK(run_cli({"eval", "--manifest", manifest, "--model", (dir / "m.bin").string(), "--split", "dev"}).code == 2);
  CHECK(run_cli({"eval", "--manifest", manifest, "--model", (dir / "none.bin").string()}).code == 2);
}

TEST_CASE("synth dataset split is reproducible") {
  const fs::path a = fresh_dir("scumwatch_cli_split_a");
  const fs::path b = fresh_dir("scumwatch_cli_split_b");
  for (const auto& d : {a, b}) {
    REQUIRE(run_cli({"synth", "dataset", "--output-dir", d.string(), "--n-per-class", "10", "--seed", "9"}).code == 0);
  }
  const auto ma = slurp(a / "manifest.txt");
  CHECK(ma == slurp(b / "manifest.txt"));
  std::size_t n_test = 0;
  for (const auto& line : lines_of(ma)) n_test += line.ends_with(",test");
  CHECK(n_test == 3);
}

TEST_CASE("augment-preview with n = 0 writes nothing") {
  const fs::path dir = fresh_dir("scumwatch_cli_preview0");
  const auto r = run_cli({"augment-preview", "--manifest", (dataset_dir() / "manifest.txt").string(), "--output-dir",
                          dir.string(), "--n", "0"});
  CHECK(r.code == 0);
  CHECK((!fs::exists(dir) || fs::is_empty(dir)));
}

TEST_CASE("ricap previews carry simplex sidecars") {
  const fs::path dir = fresh_dir("scumwatch_cli_ricap");
  REQUIRE(run_cli({"augment-preview", "--manifest", (dataset_dir() / "manifest.txt").string(), "--output-dir",
                   dir.string(), "--n", "4", "--policy", "ricap"})
              .code == 0);
  std::size_t pngs = 0;
  for (const auto& e : fs::directory_iterator(dir)) pngs += e.path().extension() == ".png";
  CHECK(pngs == 4);
  for (int i = 0; i < 4; ++i) {
    std::ifstream side(dir / ("ricap_00" + std::to_string(i) + ".txt"));
    double w0 = -1, w1 = -1, w2 = -1;
    side >> w0 >> w1 >> w2;
    CHECK(std::abs(w0 + w1 + w2 - 1.0) <= 1e-9);
    CHECK(png::read_rgb(dir / ("ricap_00" + std::to_string(i) + ".png")).width() == 256);
  }
}

TEST_CASE("cutout previews contain one fill-valued square") {
  const fs::path dir = fresh_dir("scumwatch_cli_cutout");
  REQUIRE(run_cli({"augment-preview", "--manifest", (dataset_dir() / "manifest.txt").string(), "--output-dir",
                   dir.string(), "--n", "6", "--policy", "cutout", "--cutout-drop-rate", "0.3"})
              .code == 0);
  for (int i = 0; i < 6; ++i) {
    const auto img = png::read_rgb(dir / ("cutout_00" + std::to_string(i) + ".png"));
    const auto comps = oracle::components(img, 128);
    REQUIRE(comps.size() == 1);
    const auto& c = comps[0];
    // Filled completely: a clipped square is still a solid rectangle.
    CHECK(c.pixels == (c.x1 - c.x0) * (c.y1 - c.y0));
    CHECK(c.x1 - c.x0 <= 99);
    CHECK(c.y1 - c.y0 <= 99);
  }
}

TEST_CASE("synth sequence then index") {
  const fs::path frames = fresh_dir("scumwatch_cli_frames");
  const fs::path out = fresh_dir("scumwatch_cli_index");
  const fs::path model = out / "m.bin";
  REQUIRE(run_cli({"synth", "sequence", "--output-dir", frames.string(), "--frames", "6", "--peak-index", "3",
                   "--peak-cells", "2"})
              .code == 0);
  CHECK(lines_of(slurp(frames / "ground_truth.csv")).size() == 7);
  REQUIRE(run_cli({"train", "--manifest", (dataset_dir() / "manifest.txt").string(), "--model", model.string(),
                   "--epochs", "1"})
              .code == 0);
  const auto r = run_cli({"index", "--model", model.string(), "--frames-dir", frames.string(), "--output-dir",
                          out.string(), "--emit-all", "--threads", "2"});
  REQUIRE(r.code == 0);
  const auto csv = lines_of(slurp(out / "index.csv"));
  REQUIRE(csv.size() == 7);
  CHECK(csv[0] == "timestamp,camera_id,ratio_percent,mean_probability,scum_pixels,river_pixels");
  CHECK(csv[1].rfind("2021-07-01T00:00Z,cam1,", 0) == 0);
  CHECK(fs::exists(out / "cam1_20210701-0000_heatmap.png"));
  CHECK(fs::exists(out / "cam1_20210701-0050_mask.png"));

  CHECK(run_cli({"index", "--model", model.string(), "--frames-dir", "/nonexistent"}).code == 2);
  CHECK(run_cli({"index", "--model", model.string(), "--frames-dir", frames.string(), "--output-dir", out.string(),
                 "--binarize-threshold", "300"})
            .code == 2);
  CHECK(run_cli({"index", "--model", model.string(), "--frames-dir", frames.string(), "--output-dir", out.string(),
                 "--background-mask", "/nonexistent/bg.png"})
            .code == 2);
}

TEST_CASE("a corrupt model is a processing error") {
  const fs::path dir = fresh_dir("scumwatch_cli_corrupt");
  fs::create_directories(dir);
  std::ofstream(dir / "bad.bin") << "garbage";
  const auto r = run_cli({"eval", "--manifest", (dataset_dir() / "manifest.txt").string(), "--model",
                          (dir / "bad.bin").string()});
  CHECK(r.code == 1);
}
