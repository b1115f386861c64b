#pragma once

// Experiment plumbing: a single JSON config naming the datasets, asset pool,
// policy and training settings; a synthetic bundle writer that produces such
// a config; and the p-grid sweep that trains, evaluates and summarizes.

#include <algorithm>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "tda/assets.hpp"
#include "tda/bias_metrics.hpp"
#include "tda/cbi.hpp"
#include "tda/dataset.hpp"
#include "tda/synth.hpp"
#include "tda/trainer.hpp"

namespace tda {

namespace fs = std::filesystem;

struct DatasetPaths {
  fs::path images;
  fs::path labels;
  fs::path manifest;  // optional
};

struct ExperimentConfig {
  fs::path base_dir;  // relative paths resolve against this
  DatasetPaths train;
  std::optional<DatasetPaths> test;
  fs::path asset_index;
  fs::path output_dir = "sweep";
  TrainConfig train_config;  // carries the policy
  std::vector<double> p_grid{0.0, 0.25, 0.5, 0.75, 1.0};

  fs::path resolve(const fs::path& p) const {
    if (p.empty() || p.is_absolute()) return p;
    return base_dir / p;
  }

  void validate() const {
    if (p_grid.empty()) throw ValidationError("experiment: p_grid is empty");
    for (double p : p_grid)
      if (!(p >= 0.0 && p <= 1.0))
        throw ValidationError("experiment: p_grid value " + nlohmann::json(p).dump() +
                              " outside [0,1]");
    if (train.images.empty() || train.labels.empty())
      throw ValidationError("experiment: train.images and train.labels are required");
    if (asset_index.empty()) throw ValidationError("experiment: asset_index is required");
    train_config.validate();
  }

  // Launch-time existence check of every referenced input.
  void check_paths(bool need_test) const {
    auto need = [&](const fs::path& p, const char* what) {
      if (!fs::exists(resolve(p)))
        throw IoError(std::string("experiment: ") + what + " not found: " + resolve(p).string());
    };
    need(train.images, "train.images");
    need(train.labels, "train.labels");
    if (!train.manifest.empty()) need(train.manifest, "train.manifest");
    need(asset_index, "asset_index");
    if (need_test) {
      if (!test) throw ValidationError("experiment: a test dataset is required");
      need(test->images, "test.images");
      need(test->labels, "test.labels");
    }
  }
};

// Sorted ascending, duplicates removed.
inline std::vector<double> normalize_p_grid(std::vector<double> grid) {
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

inline nlohmann::json to_json(const DatasetPaths& d) {
  nlohmann::json j = {{"images", d.images.generic_string()}, {"labels", d.labels.generic_string()}};
  if (!d.manifest.empty()) j["manifest"] = d.manifest.generic_string();
  return j;
}

inline DatasetPaths dataset_paths_from_json(const nlohmann::json& j) {
  DatasetPaths d;
  d.images = j.at("images").get<std::string>();
  d.labels = j.at("labels").get<std::string>();
  if (j.contains("manifest") && !j["manifest"].is_null()) d.manifest = j["manifest"].get<std::string>();
  return d;
}

inline nlohmann::json to_json(const ExperimentConfig& c) {
  nlohmann::json j = {{"train", to_json(c.train)},
                      {"asset_index", c.asset_index.generic_string()},
                      {"output_dir", c.output_dir.generic_string()},
                      {"policy", to_json(c.train_config.policy)},
                      {"train_config", to_json(c.train_config)},
                      {"p_grid", c.p_grid}};
  if (c.test) j["test"] = to_json(*c.test);
  if (c.train_config.positive_class) j["positive_class"] = *c.train_config.positive_class;
  return j;
}

inline ExperimentConfig experiment_from_json(const nlohmann::json& j, const fs::path& base_dir) {
  ExperimentConfig c;
  c.base_dir = base_dir;
  try {
    c.train = dataset_paths_from_json(j.at("train"));
    if (j.contains("test") && !j["test"].is_null()) c.test = dataset_paths_from_json(j["test"]);
    c.asset_index = j.at("asset_index").get<std::string>();
    if (j.contains("output_dir")) c.output_dir = j["output_dir"].get<std::string>();
    if (j.contains("train_config")) c.train_config = train_config_from_json(j["train_config"]);
    if (j.contains("policy")) c.train_config.policy = policy_from_json(j["policy"]);
    if (j.contains("p_grid")) c.p_grid = j["p_grid"].get<std::vector<double>>();
    if (j.contains("positive_class") && !j["positive_class"].is_null())
      c.train_config.positive_class = j["positive_class"].get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("experiment config: ") + e.what());
  }
  c.validate();
  c.p_grid = normalize_p_grid(c.p_grid);
  return c;
}

inline ExperimentConfig load_experiment(const fs::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text::read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
  return experiment_from_json(j, path.parent_path());
}

// ---------------------------------------------------------------------------
// Loaded inputs

struct ExperimentInputs {
  Dataset train;
  std::optional<Dataset> test;
  std::optional<Manifest> manifest;
  std::vector<ArtifactAsset> assets;
};

inline ExperimentInputs load_inputs(const ExperimentConfig& cfg, bool need_test) {
  cfg.check_paths(need_test);
  ExperimentInputs in;
  in.train = load_dataset(cfg.resolve(cfg.train.images), cfg.resolve(cfg.train.labels));
  if (!cfg.train.manifest.empty()) in.manifest = load_manifest(cfg.resolve(cfg.train.manifest));
  if (need_test) {
    in.test = load_dataset(cfg.resolve(cfg.test->images), cfg.resolve(cfg.test->labels));
    if (in.test->classes != in.train.classes)
      throw ValidationError("experiment: test classes {" + in.test->classes[0] + "," +
                            in.test->classes[1] + "} differ from train classes {" +
                            in.train.classes[0] + "," + in.train.classes[1] + "}");
    if (in.test->samples.empty()) throw ValidationError("experiment: test set is empty");
  }
  in.assets = load_asset_index(cfg.resolve(cfg.asset_index));
  return in;
}

// Runs CBI for one model against the eval split of the policy's kind.
inline CbiResult evaluate(const ToyModel& model, const Dataset& test,
                          const std::vector<ArtifactAsset>& assets, const AugmentationPolicy& policy,
                          bool keep_pairs = false) {
  const auto eval = select_assets(assets, policy.bias_kind, Split::eval);
  if (eval.empty())
    throw ValidationError("no eval-split " + std::string(to_string(policy.bias_kind)) + " assets");
  std::vector<RasterImage> images;
  std::vector<std::string> truth, ids;
  images.reserve(test.samples.size());
  for (const auto& s : test.samples) {
    images.push_back(s.image);
    truth.push_back(s.label);
    ids.push_back(s.sample_id);
  }
  CbiOptions opt;
  opt.positive_class = model.positive_class();
  opt.glasses_fraction = policy.glasses_horizontal_fraction;
  opt.keep_pairs = keep_pairs;
  opt.sample_ids = std::move(ids);
  return run_cbi(model, images, truth, test.classes, eval, policy.bias_kind, opt);
}

// ---------------------------------------------------------------------------
// Synthetic bundle: train split (biased), clean test split, asset pool and a
// ready-to-run experiment.json.

struct SynthBundleConfig {
  SynthConfig synth;
  int test_n_per_class = 500;
  AssetPoolSpec asset_pool;
};

inline nlohmann::json to_json(const SynthBundleConfig& b) {
  auto j = to_json(b.synth);
  j["test_n_per_class"] = b.test_n_per_class;
  j["asset_pool"] = {{"frames_train", b.asset_pool.frames_train},
                     {"frames_eval", b.asset_pool.frames_eval},
                     {"rulers_train", b.asset_pool.rulers_train},
                     {"rulers_eval", b.asset_pool.rulers_eval},
                     {"glasses_train", b.asset_pool.glasses_train},
                     {"glasses_eval", b.asset_pool.glasses_eval},
                     {"seed", b.asset_pool.seed}};
  return j;
}

inline SynthBundleConfig synth_bundle_from_json(const nlohmann::json& j) {
  SynthBundleConfig b;
  b.synth = synth_config_from_json(j);
  try {
    if (j.contains("test_n_per_class")) b.test_n_per_class = j["test_n_per_class"].get<int>();
    if (j.contains("asset_pool")) {
      const auto& a = j["asset_pool"];
      auto& s = b.asset_pool;
      s.frames_train = a.value("frames_train", s.frames_train);
      s.frames_eval = a.value("frames_eval", s.frames_eval);
      s.rulers_train = a.value("rulers_train", s.rulers_train);
      s.rulers_eval = a.value("rulers_eval", s.rulers_eval);
      s.glasses_train = a.value("glasses_train", s.glasses_train);
      s.glasses_eval = a.value("glasses_eval", s.glasses_eval);
      s.seed = a.value("seed", s.seed);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("synth config: ") + e.what());
  }
  if (b.test_n_per_class < 1) throw ValidationError("synth: test_n_per_class must be >= 1");
  return b;
}

struct SynthBundle {
  SynthDataset train;
  BiasReport report;
  std::size_t test_size = 0;
  fs::path experiment_path;
};

inline SynthConfig test_split_config(const SynthBundleConfig& b) {
  SynthConfig t = b.synth;
  t.n_per_class = b.test_n_per_class;
  t.bias_rate_c1 = 0.0;
  t.bias_rate_c2 = 0.0;
  t.seed = b.synth.seed + 1;
  t.id_prefix = b.synth.id_prefix + "test_";
  return t;
}

inline SynthBundle write_synth_bundle(const fs::path& dir, const SynthBundleConfig& b) {
  b.synth.validate();
  AssetPoolSpec pool = b.asset_pool;
  pool.size = b.synth.image_size;
  const auto assets = make_builtin_assets(pool);

  SynthBundle out;
  out.train = generate(b.synth, assets);
  const auto test = generate(test_split_config(b), assets);
  out.test_size = test.data.samples.size();
  out.report = bias_report(out.train.manifest);

  save_asset_index(dir / "assets", assets);
  write_dataset(dir / "train", out.train.data, out.train.manifest);
  write_dataset(dir / "test", test.data, test.manifest);
  text::write_file(dir / "train" / "bias_report.json", to_json(out.report).dump(2) + "\n");
  text::write_file(dir / "train" / "bias_report.txt", render_text(out.report));
  text::write_file(dir / "synth_config.json", to_json(b).dump(2) + "\n");

  ExperimentConfig exp;
  exp.train = {"train/images", "train/labels.csv", "train/manifest.csv"};
  exp.test = DatasetPaths{"test/images", "test/labels.csv", "test/manifest.csv"};
  exp.asset_index = "assets/index.json";
  exp.output_dir = "sweep";
  exp.train_config.policy.bias_kind = b.synth.artifact_kind;
  out.experiment_path = dir / "experiment.json";
  text::write_file(out.experiment_path, to_json(exp).dump(2) + "\n");
  return out;
}

// ---------------------------------------------------------------------------
// Sweep

struct SweepRow {
  double p = 0.0;
  bool ok = false;
  std::string error;
  CbiReport averaged;
  double final_loss = 0.0;
  std::size_t applied_last_epoch = 0;
};

inline std::string p_label(double p) { return "p_" + nlohmann::json(p).dump(); }

inline nlohmann::json to_json(const SweepRow& r) {
  nlohmann::json j = {{"p", r.p}, {"status", r.ok ? "ok" : "failed"}};
  if (!r.ok) {
    j["error"] = r.error;
    return j;
  }
  j["final_loss"] = r.final_loss;
  j["applied_last_epoch"] = r.applied_last_epoch;
  j["report"] = to_json(r.averaged);
  return j;
}

// Writes <out>/<p_label>/{model.json, train_log.jsonl, cbi_report.json,
// cbi_report.txt} for each grid value and returns the summary JSON. A row
// that fails is recorded and the sweep moves on.
inline nlohmann::json run_sweep(const ExperimentConfig& cfg, const ExperimentInputs& in,
                                const fs::path& out_dir, std::ostream* log = nullptr) {
  if (!in.test) throw ValidationError("sweep: a test dataset is required");
  const auto& classes = in.train.classes;
  const auto& policy = cfg.train_config.policy;

  nlohmann::json eval_ids = nlohmann::json::array();
  for (const auto* a : select_assets(in.assets, policy.bias_kind, Split::eval)) eval_ids.push_back(a->asset_id);

  nlohmann::json summary = {
      {"format", "tda-sweep-summary"},
      {"version", 1},
      {"bias_kind", to_string(policy.bias_kind)},
      {"classes", classes},
      {"positive_class", cfg.train_config.positive_class.value_or(classes[0])},
      {"direction_labels",
       {{"c1_to_c2", classes[0] + " to " + classes[1]}, {"c2_to_c1", classes[1] + " to " + classes[0]}}},
      {"n_train", in.train.samples.size()},
      {"n_test", in.test->samples.size()},
      {"eval_assets", eval_ids},
      {"train_config", to_json(cfg.train_config)},
      {"policy", to_json(policy)}};
  if (in.manifest) {
    const auto rep = bias_report(*in.manifest);
    const std::string tag(to_string(policy.bias_kind));
    for (const auto& r : rep.rows)
      if (r.artifact == tag) summary["train_class_ratio"] = class_ratio_json(r.class_ratio);
  }

  nlohmann::json rows = nlohmann::json::array();
  for (double p : normalize_p_grid(cfg.p_grid)) {
    SweepRow row;
    row.p = p;
    try {
      TrainConfig tc = cfg.train_config;
      tc.policy.probability_p = p;
      auto trained = train(in.train, tc, in.assets);
      const auto res = evaluate(trained.model, *in.test, in.assets, tc.policy);
      const auto dir = out_dir / p_label(p);
      text::write_file(dir / "model.json", to_json(trained.model).dump(2) + "\n");
      text::write_file(dir / "train_log.jsonl", format_train_log(trained.log));
      text::write_file(dir / "cbi_report.json", to_json(res).dump(2) + "\n");
      text::write_file(dir / "cbi_report.txt", render_text(res));
      row.ok = true;
      row.averaged = res.averaged;
      if (!trained.log.empty()) {
        row.final_loss = trained.log.back().mean_loss;
        row.applied_last_epoch = trained.log.back().applied;
      }
      if (log)
        *log << p_label(p) << ": switched " << text::fixed(res.averaged.switched_count, 1) << ", F1_diff "
             << text::percent(res.averaged.f1_diff) << "\n";
    } catch (const std::exception& e) {
      row.ok = false;
      row.error = e.what();
      if (log) *log << p_label(p) << ": failed: " << e.what() << "\n";
    }
    rows.push_back(to_json(row));
  }
  summary["rows"] = rows;
  return summary;
}

// Text table from the summary JSON alone, so reloading summary.json and
// re-rendering reproduces summary.txt byte for byte.
inline std::string render_summary(const nlohmann::json& s) {
  try {
    const auto classes = s.at("classes").get<std::vector<std::string>>();
    std::vector<std::vector<std::string>> cells;
    cells.push_back(cbi_table_header(classes, "p"));
    std::string failures;
    for (const auto& row : s.at("rows")) {
      const auto label = text::fixed(row.at("p").get<double>(), 2);
      if (row.at("status").get<std::string>() != "ok") {
        cells.push_back({label, "failed"});
        failures += "p=" + label + " failed: " + row.value("error", std::string()) + "\n";
        continue;
      }
      cells.push_back(cbi_table_row(label, cbi_report_from_json(row.at("report"))));
    }
    std::string out = "bias: " + s.at("bias_kind").get<std::string>() + ", positive class: " +
                      s.at("positive_class").get<std::string>() + ", n_test: " +
                      std::to_string(s.at("n_test").get<std::size_t>()) + "\n";
    out += text::render_table(cells);
    out += failures;
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("summary: ") + e.what());
  }
}

inline bool all_rows_ok(const nlohmann::json& summary) {
  for (const auto& row : summary.at("rows"))
    if (row.at("status").get<std::string>() != "ok") return false;
  return true;
}

inline void write_summary(const fs::path& out_dir, const nlohmann::json& summary) {
  text::write_file(out_dir / "summary.json", summary.dump(2) + "\n");
  text::write_file(out_dir / "summary.txt", render_summary(nlohmann::json::parse(summary.dump())));
}

}  // namespace tda
