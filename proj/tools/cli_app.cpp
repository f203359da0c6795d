#include "cli_app.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "scum/augment.hpp"
#include "scum/config.hpp"
#include "scum/errors.hpp"
#include "scum/evalkit.hpp"
#include "scum/model.hpp"
#include "scum/pipeline.hpp"
#include "scum/png_io.hpp"
#include "scum/scumindex.hpp"

namespace scum::cli {

namespace fs = std::filesystem;

namespace {

struct Invocation {
  std::string config_path;
  std::map<std::string, std::string> overrides;
  std::vector<std::string> sets;
};

std::string dashed(std::string_view key) {
  std::string s(key);
  std::replace(s.begin(), s.end(), '_', '-');
  return "--" + s;
}

void bind_keys(CLI::App* cmd, Invocation& inv, std::initializer_list<std::string_view> keys) {
  for (auto key : keys) {
    std::string k(key);
    cmd->add_option_function<std::string>(
        dashed(key), [&inv, k](const std::string& v) { inv.overrides[k] = v; },
        "overrides config key '" + k + "'");
  }
}

void bind_common(CLI::App* cmd, Invocation& inv) {
  cmd->add_option("--config", inv.config_path, "flat key = value config file");
  cmd->add_option("--set", inv.sets, "override any config key: --set key=value");
  bind_keys(cmd, inv, {"seed", "threads"});
}

RunConfig build_config(const Invocation& inv) {
  RunConfig cfg;
  if (!inv.config_path.empty()) {
    if (!fs::exists(inv.config_path)) throw ConfigError("config file not found: " + inv.config_path);
    cfg = RunConfig::load(inv.config_path);
  }
  for (const auto& s : inv.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'");
    cfg.set(s.substr(0, eq), s.substr(eq + 1));
  }
  for (const auto& [k, v] : inv.overrides) cfg.set(k, v);
  return cfg;
}

fs::path existing_path(const RunConfig& cfg, std::string_view key, std::string_view what) {
  const fs::path p = cfg.require(key);
  if (!fs::exists(p)) throw ConfigError(std::string(what) + " not found: " + p.string());
  return p;
}

AugmentParams augment_params(const RunConfig& cfg) {
  const auto fill = cfg.get_int("cutout_fill", AugmentParams::kDefaultCutoutFill);
  if (fill < 0 || fill > 255) throw ConfigError("cutout_fill must be in [0, 255]");
  try {
    return AugmentParams(cfg.get_double("mixup_alpha", AugmentParams::kDefaultMixupAlpha),
                         cfg.get_double("cutout_drop_rate", AugmentParams::kDefaultCutoutDropRate),
                         static_cast<std::uint8_t>(fill));
  } catch (const InvalidParam& e) {
    throw ConfigError(e.what());
  }
}

AugmentPolicy policy_from(std::string_view text) {
  try {
    return parse_augment_policy(text);
  } catch (const InvalidParam& e) {
    throw ConfigError(e.what());
  }
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

TrainConfig train_config(const RunConfig& cfg) {
  TrainConfig tc;
  tc.epochs = cfg.get_uint("epochs", tc.epochs);
  tc.batch_size = cfg.get_uint("batch_size", tc.batch_size);
  tc.learning_rate = cfg.get_double("learning_rate", tc.learning_rate);
  tc.seed = cfg.get_uint("seed", tc.seed);
  tc.augment_policy = policy_from(cfg.get_string("augment_policy", "baseline"));
  tc.augment_params = augment_params(cfg);
  try {
    tc.validate();
  } catch (const InvalidParam& e) {
    throw ConfigError(e.what());
  }
  return tc;
}

std::string pct(double v) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%.1f", 100.0 * v);
  return buf;
}

fs::path sweep_model_path(const fs::path& base, AugmentPolicy policy) {
  fs::path p = base;
  p.replace_filename(base.stem().string() + "_" + std::string(to_string(policy)) +
                     base.extension().string());
  return p;
}

int cmd_train(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const fs::path manifest = existing_path(cfg, "manifest", "manifest");
  const fs::path model_path = cfg.get_string("model", "model.bin");
  TrainConfig base = train_config(cfg);

  std::vector<AugmentPolicy> policies{base.augment_policy};
  const bool sweep = cfg.has("sweep");
  if (sweep) {
    policies.clear();
    for (const auto& name : split_list(cfg.require("sweep"))) policies.push_back(policy_from(name));
    if (policies.empty()) throw ConfigError("sweep lists no policies");
  }

  const auto train_set = load_dataset(manifest, Split::Train);
  auto test_set = load_dataset(manifest, Split::Test);
  if (train_set.empty()) throw ConfigError("manifest has no train split: " + manifest.string());
  if (test_set.empty()) err << "warning: manifest has no test split; reporting on train split\n";
  const auto& eval_set = test_set.empty() ? train_set : test_set;

  std::ostringstream table;
  table << "augmentation  test_accuracy  precision  recall  c1_recall\n";
  std::ostringstream report_csv;
  report_csv << "augmentation,test_accuracy,macro_precision,macro_recall,c1_recall\n";
  for (const auto policy : policies) {
    TrainConfig tc = base;
    tc.augment_policy = policy;
    TrainReport rep;
    const TinyConvNet net = train(train_set, tc, &rep);
    const fs::path path = sweep && policies.size() > 1 ? sweep_model_path(model_path, policy) : model_path;
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    net.save(path);
    const Metrics m = compute_metrics(evaluate(net, eval_set));
    char line[160];
    std::snprintf(line, sizeof line, "%-12s  %13s  %9s  %6s  %9s\n",
                  std::string(to_string(policy)).c_str(), pct(m.accuracy).c_str(),
                  pct(m.macro_precision).c_str(), pct(m.macro_recall).c_str(),
                  pct(m.headline_recall()).c_str());
    table << line;
    std::snprintf(line, sizeof line, "%s,%.6f,%.6f,%.6f,%.6f\n",
                  std::string(to_string(policy)).c_str(), m.accuracy, m.macro_precision,
                  m.macro_recall, m.headline_recall());
    report_csv << line;
    err << "trained " << to_string(policy) << " -> " << path.string() << " (final epoch loss "
        << rep.epoch_mean_loss.back() << ")\n";
  }
  out << table.str();
  if (const auto report = cfg.get("report")) {
    std::ofstream f(*report, std::ios::trunc);
    if (!f) throw IoError("cannot write report " + *report);
    f << report_csv.str();
  }
  return kExitOk;
}

int cmd_eval(const RunConfig& cfg, std::ostream& out, std::ostream&) {
  const fs::path manifest = existing_path(cfg, "manifest", "manifest");
  const fs::path model_path = existing_path(cfg, "model", "model file");
  const std::string split = cfg.get_string("split", "test");
  std::vector<LabeledPatch> samples;
  if (split == "all") {
    samples = load_dataset(manifest);
  } else if (split == "test" || split == "train") {
    samples = load_dataset(manifest, split == "test" ? Split::Test : Split::Train);
  } else {
    throw ConfigError("split must be train, test or all");
  }
  const TinyConvNet net = TinyConvNet::load(model_path);
  const ConfusionMatrix cm = evaluate(net, samples);
  const Metrics m = compute_metrics(cm);
  char line[160];
  std::snprintf(line, sizeof line, "samples %llu  accuracy %.4f  macro_precision %.4f  macro_recall %.4f\n",
                static_cast<unsigned long long>(cm.total()), m.accuracy, m.macro_precision,
                m.macro_recall);
  out << line;
  out << "class              precision  recall\n";
  for (std::size_t k = 0; k < kClassCount; ++k) {
    std::snprintf(line, sizeof line, "%-17s  %9.4f  %6.4f\n",
                  std::string(class_name(static_cast<ClassId>(k))).c_str(), m.precision[k],
                  m.recall[k]);
    out << line;
  }
  out << "confusion (rows true, cols predicted)\n";
  for (const auto& row : cm.counts()) {
    std::snprintf(line, sizeof line, "%8llu %8llu %8llu\n", static_cast<unsigned long long>(row[0]),
                  static_cast<unsigned long long>(row[1]), static_cast<unsigned long long>(row[2]));
    out << line;
  }
  return kExitOk;
}

CameraProfile profile_for(const RunConfig& cfg, const std::string& camera_id) {
  auto key = [&](std::string_view k) { return cfg.camera_key(camera_id, k); };
  CameraProfile p;
  p.camera_id = camera_id;
  p.grid.crop_top = cfg.get_uint(key("crop_top"), p.grid.crop_top);
  const auto threshold = cfg.get_int(key("binarize_threshold"), p.binarize_threshold);
  if (threshold < 0 || threshold > 255) throw ConfigError("binarize_threshold must be in [0, 255]");
  p.binarize_threshold = static_cast<std::uint8_t>(threshold);
  p.probability_floor = cfg.get_double(key("probability_floor"), p.probability_floor);
  try {
    p.class_mode = parse_class_mode(cfg.get_string(key("class_mode"), "c1"));
  } catch (const InvalidParam& e) {
    throw ConfigError(e.what());
  }
  if (const auto mask = cfg.get(key("background_mask")); mask && !mask->empty()) {
    if (!fs::exists(*mask)) throw ConfigError("background mask not found: " + *mask);
    p.background = load_background_mask(*mask);
  } else {
    p.background = GrayImage(p.grid.grid_width(), p.grid.grid_height(), 0);
  }
  try {
    p.validate();
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  return p;
}

int cmd_index(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const fs::path model_path = existing_path(cfg, "model", "model file");
  const fs::path frames_dir = existing_path(cfg, "frames_dir", "frames directory");
  if (!fs::is_directory(frames_dir)) throw ConfigError("not a directory: " + frames_dir.string());
  const fs::path output_dir = cfg.get_string("output_dir", "index_out");
  const fs::path csv_path = cfg.get_string("csv", (output_dir / "index.csv").string());

  IndexOptions opts;
  opts.output_dir = output_dir;
  opts.emission_threshold_percent = cfg.get_double("emission_threshold", 5.0);
  opts.emit_all = cfg.get_bool("emit_all", false);
  opts.threads = std::max<std::uint64_t>(1, cfg.get_uint("threads", 1));

  const FrameScan scan = scan_frame_directory(frames_dir);
  for (const auto& w : scan.warnings) err << "warning: " << w << '\n';

  std::map<std::string, CameraProfile> profiles;
  for (const auto& f : scan.frames) {
    if (!profiles.count(f.camera_id)) profiles.emplace(f.camera_id, profile_for(cfg, f.camera_id));
  }
  for (const auto& id : cfg.camera_ids()) {
    if (!profiles.count(id)) profiles.emplace(id, profile_for(cfg, id));
  }

  const TinyConvNet net = TinyConvNet::load(model_path);
  fs::create_directories(output_dir);
  if (csv_path.has_parent_path()) fs::create_directories(csv_path.parent_path());
  std::ofstream csv(csv_path, std::ios::trunc);
  if (!csv) throw IoError("cannot write " + csv_path.string());

  const IndexRun run = run_index(
      scan.frames, net, [&](const std::string& id) -> const CameraProfile& { return profiles.at(id); },
      opts, csv, err);
  csv.close();
  out << "indexed " << scan.frames.size() << " frames (" << run.failed << " skipped, "
      << run.emitted << " heatmaps) -> " << csv_path.string() << '\n';
  return kExitOk;
}

int cmd_augment_preview(const RunConfig& cfg, std::ostream& out, std::ostream&) {
  const fs::path manifest = existing_path(cfg, "manifest", "manifest");
  const fs::path output_dir = cfg.get_string("output_dir", "augment_preview");
  const std::uint64_t n = cfg.get_uint("n", 4);
  const std::uint64_t seed = cfg.get_uint("seed", 0);
  const std::string which = cfg.get_string("policy", "all");
  const AugmentParams params = augment_params(cfg);

  std::vector<AugmentPolicy> ops;
  if (which == "all") {
    ops = {AugmentPolicy::Mixup, AugmentPolicy::Cutout, AugmentPolicy::Ricap};
  } else {
    for (const auto& name : split_list(which)) ops.push_back(policy_from(name));
  }
  if (n == 0) {
    out << "nothing to preview\n";
    return kExitOk;
  }
  const auto dataset = load_dataset(manifest);
  if (dataset.empty()) throw ConfigError("manifest lists no patches: " + manifest.string());
  fs::create_directories(output_dir);
  std::size_t written = 0;
  for (const auto op : ops) {
    for (std::uint64_t i = 0; i < n; ++i) {
      Rng rng(mix_seed(seed, i));
      const std::size_t base = rng.uniform_int(0, dataset.size() - 1);
      const LabeledPatch sample = augment_sample(dataset, base, op, params, rng);
      char stem[64];
      std::snprintf(stem, sizeof stem, "%s_%03llu", std::string(to_string(op)).c_str(),
                    static_cast<unsigned long long>(i));
      png::write_rgb(output_dir / (std::string(stem) + ".png"), sample.image);
      std::ofstream side(output_dir / (std::string(stem) + ".txt"), std::ios::trunc);
      char label[128];
      std::snprintf(label, sizeof label, "%.17g %.17g %.17g\n", sample.label[0], sample.label[1],
                    sample.label[2]);
      side << label;
      if (!side) throw IoError("cannot write label sidecar for " + std::string(stem));
      ++written;
    }
  }
  out << "wrote " << written << " previews to " << output_dir.string() << '\n';
  return kExitOk;
}

int cmd_synth_dataset(const RunConfig& cfg, std::ostream& out, std::ostream&) {
  SynthSceneSpec spec;
  spec.seed = cfg.get_uint("seed", spec.seed);
  spec.noise_sigma = cfg.get_double("noise_sigma", spec.noise_sigma);
  const auto n = cfg.get_uint("n_per_class", 100);
  const double fraction = cfg.get_double("train_fraction", 0.9);
  const fs::path dir = cfg.get_string("output_dir", "synth_dataset");
  std::vector<LabeledPatch> patches;
  std::vector<Split> splits;
  try {
    patches = generate_synthetic_dataset(spec, n);
    splits = split_train_test(patches.size(), fraction, spec.seed);
  } catch (const InvalidParam& e) {
    throw ConfigError(e.what());
  }
  const fs::path manifest = export_dataset(dir, patches, splits);
  out << "wrote " << patches.size() << " patches, manifest " << manifest.string() << '\n';
  return kExitOk;
}

int cmd_synth_sequence(const RunConfig& cfg, std::ostream& out, std::ostream&) {
  SynthSceneSpec spec;
  spec.seed = cfg.get_uint("seed", spec.seed);
  spec.noise_sigma = cfg.get_double("noise_sigma", spec.noise_sigma);
  const std::string camera = cfg.get_string("camera_id", "cam1");
  const std::string start_text = cfg.get_string("start", "20210701-0000");
  const auto start = Timestamp::parse_compact(start_text);
  if (!start) throw ConfigError("start must be YYYYMMDD-HHMM, got '" + start_text + "'");
  const auto frames = cfg.get_uint("frames", 144);
  const auto cadence = cfg.get_uint("cadence_minutes", 10);
  const auto peak_index = cfg.get_uint("peak_index", frames / 2);
  const auto peak_cells = cfg.get_uint("peak_cells", 8);
  const fs::path dir = cfg.get_string("output_dir", "synth_frames");

  std::vector<ScheduleEntry> schedule;
  try {
    schedule = single_peak_schedule(*start, frames, peak_index, peak_cells, cadence);
  } catch (const InvalidParam& e) {
    throw ConfigError(e.what());
  }
  fs::create_directories(dir);
  std::ofstream truth(dir / "ground_truth.csv", std::ios::trunc);
  truth << "timestamp,camera_id,truth_ratio_percent\n";
  // One frame at a time keeps memory flat for long sequences.
  for (const auto& entry : schedule) {
    const auto rendered = generate_synthetic_frame_sequence(spec, std::span(&entry, 1));
    png::write_rgb(dir / frame_file_name(camera, entry.timestamp), rendered.front().frame);
    char ratio[32];
    std::snprintf(ratio, sizeof ratio, "%.3f", rendered.front().truth_ratio_percent);
    truth << entry.timestamp.iso() << ',' << camera << ',' << ratio << '\n';
  }
  out << "wrote " << schedule.size() << " frames to " << dir.string() << '\n';
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"River scum monitoring: patch classifier training and scum-on-river index"};
  app.require_subcommand(1);
  Invocation inv;
  bool emit_all = false;

  auto* train_cmd = app.add_subcommand("train", "train the patch classifier from a manifest");
  bind_common(train_cmd, inv);
  bind_keys(train_cmd, inv,
            {"manifest", "model", "epochs", "batch_size", "learning_rate", "augment_policy",
             "mixup_alpha", "cutout_drop_rate", "cutout_fill", "sweep", "report"});

  auto* eval_cmd = app.add_subcommand("eval", "evaluate a model on a manifest split");
  bind_common(eval_cmd, inv);
  bind_keys(eval_cmd, inv, {"manifest", "model", "split"});

  auto* index_cmd = app.add_subcommand("index", "compute the scum-on-river index for frames");
  bind_common(index_cmd, inv);
  bind_keys(index_cmd, inv,
            {"model", "frames_dir", "output_dir", "csv", "emission_threshold", "binarize_threshold",
             "probability_floor", "class_mode", "background_mask", "crop_top"});
  index_cmd->add_flag("--emit-all", emit_all, "write heatmap/mask PNGs for every frame");

  auto* preview_cmd = app.add_subcommand("augment-preview", "write augmented sample patches");
  bind_common(preview_cmd, inv);
  bind_keys(preview_cmd, inv,
            {"manifest", "output_dir", "n", "policy", "mixup_alpha", "cutout_drop_rate",
             "cutout_fill"});

  auto* synth_cmd = app.add_subcommand("synth", "generate synthetic datasets and frame sequences");
  synth_cmd->require_subcommand(1);
  auto* synth_dataset = synth_cmd->add_subcommand("dataset", "labeled patch dataset + manifest");
  bind_common(synth_dataset, inv);
  bind_keys(synth_dataset, inv, {"output_dir", "n_per_class", "train_fraction", "noise_sigma"});
  auto* synth_sequence = synth_cmd->add_subcommand("sequence", "ten-minute frame sequence");
  bind_common(synth_sequence, inv);
  bind_keys(synth_sequence, inv,
            {"output_dir", "camera_id", "start", "frames", "cadence_minutes", "peak_index",
             "peak_cells", "noise_sigma"});

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }

  try {
    RunConfig cfg = build_config(inv);
    if (emit_all) cfg.set("emit_all", "true");
    if (train_cmd->parsed()) return cmd_train(cfg, out, err);
    if (eval_cmd->parsed()) return cmd_eval(cfg, out, err);
    if (index_cmd->parsed()) return cmd_index(cfg, out, err);
    if (preview_cmd->parsed()) return cmd_augment_preview(cfg, out, err);
    if (synth_dataset->parsed()) return cmd_synth_dataset(cfg, out, err);
    if (synth_sequence->parsed()) return cmd_synth_sequence(cfg, out, err);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitProcessing;
  }
  return kExitConfig;
}

}  // namespace scum::cli
