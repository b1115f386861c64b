// tda: command-line front end for the targeted data augmentation toolkit.
//
//   tda stats MANIFEST [--out DIR]
//   tda synth [--config FILE] [--seed N] [--bias-kind K] --out DIR
//   tda train --config EXPERIMENT [--p P] [--seed N] [--bias-kind K] [--asset-index F] [--out DIR]
//   tda cbi --config EXPERIMENT --model MODEL [--bias-kind K] [--asset-index F] [--out DIR] [--pairs]
//   tda sweep --config EXPERIMENT [--p P] [--seed N] [--bias-kind K] [--asset-index F] [--out DIR]
//   tda preview --image IN --asset-index F --asset-id ID --out OUT.png [--seed N] [--config POLICY]
//
// Exit codes: 0 ok, 2 validation, 3 I/O, 4 computation.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "tda/tda.hpp"

namespace fs = std::filesystem;
using namespace tda;

namespace {

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<double> p;
  std::string bias_kind;
  std::string asset_index;
  std::string out;
  std::string manifest;
  std::string model;
  std::string image;
  std::string asset_id;
  bool pairs = false;
};

nlohmann::json read_json(const fs::path& path) {
  try {
    return nlohmann::json::parse(text::read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

ExperimentConfig experiment_with_overrides(const Options& o) {
  if (o.config.empty()) throw ValidationError("--config is required");
  auto cfg = load_experiment(o.config);
  auto& policy = cfg.train_config.policy;
  if (o.seed) {
    cfg.train_config.seed = *o.seed;
    policy.seed = *o.seed;
  }
  if (o.p) {
    policy.probability_p = *o.p;
    cfg.p_grid = {*o.p};
  }
  if (!o.bias_kind.empty()) policy.bias_kind = parse_artifact_kind(o.bias_kind);
  if (!o.asset_index.empty()) cfg.asset_index = fs::absolute(o.asset_index);
  cfg.train_config.validate();
  cfg.validate();
  return cfg;
}

int cmd_stats(const Options& o) {
  const auto manifest = load_manifest(o.manifest);
  const auto rep = bias_report(manifest);
  if (rep.empty_manifest) std::cerr << "warning: manifest " << o.manifest << " has no records\n";
  const auto txt = render_text(rep);
  std::cout << txt;
  if (!o.out.empty()) {
    text::write_file(fs::path(o.out) / "bias_report.json", to_json(rep).dump(2) + "\n");
    text::write_file(fs::path(o.out) / "bias_report.txt", txt);
  }
  return 0;
}

int cmd_synth(const Options& o) {
  SynthBundleConfig b;
  if (!o.config.empty()) b = synth_bundle_from_json(read_json(o.config));
  if (o.seed) b.synth.seed = *o.seed;
  if (!o.bias_kind.empty()) b.synth.artifact_kind = parse_artifact_kind(o.bias_kind);
  const auto bundle = write_synth_bundle(o.out, b);
  for (const auto& w : bundle.train.warnings) std::cerr << "warning: " << w << "\n";
  std::cout << "train: " << bundle.train.data.samples.size() << " images (" << bundle.train.injected_c1
            << " + " << bundle.train.injected_c2 << " with " << to_string(b.synth.artifact_kind)
            << "), test: " << bundle.test_size << " clean images\n";
  std::cout << render_text(bundle.report);
  std::cout << "experiment: " << bundle.experiment_path.string() << "\n";
  return 0;
}

int cmd_train(const Options& o) {
  const auto cfg = experiment_with_overrides(o);
  const auto in = load_inputs(cfg, false);
  const auto trained = train(in.train, cfg.train_config, in.assets);
  const fs::path out = o.out.empty()
                           ? cfg.resolve(cfg.output_dir) / p_label(cfg.train_config.policy.probability_p)
                           : fs::path(o.out);
  text::write_file(out / "model.json", to_json(trained.model).dump(2) + "\n");
  text::write_file(out / "train_log.jsonl", format_train_log(trained.log));
  std::cout << format_train_log(trained.log);
  std::cout << "model: " << (out / "model.json").string() << "\n";
  return 0;
}

int cmd_cbi(const Options& o) {
  const auto cfg = experiment_with_overrides(o);
  const auto in = load_inputs(cfg, true);
  const auto model = model_from_json(read_json(o.model));
  const auto res = evaluate(model, *in.test, in.assets, cfg.train_config.policy, o.pairs);
  const fs::path out = o.out.empty() ? fs::path(o.model).parent_path() : fs::path(o.out);
  const auto txt = render_text(res);
  text::write_file(out / "cbi_report.json", to_json(res).dump(2) + "\n");
  text::write_file(out / "cbi_report.txt", txt);
  if (o.pairs) text::write_file(out / "pairs.csv", format_pairs_csv(res.pairs));
  std::cout << txt;
  return 0;
}

int cmd_sweep(const Options& o) {
  const auto cfg = experiment_with_overrides(o);
  const auto in = load_inputs(cfg, true);
  const fs::path out = o.out.empty() ? cfg.resolve(cfg.output_dir) : fs::path(o.out);
  const auto summary = run_sweep(cfg, in, out, &std::cerr);
  write_summary(out, summary);
  std::cout << render_summary(summary);
  if (!all_rows_ok(summary)) {
    std::cerr << "error: one or more sweep rows failed\n";
    return exit_code(ErrorKind::computation);
  }
  return 0;
}

int cmd_preview(const Options& o) {
  AugmentationPolicy policy;
  if (!o.config.empty()) {
    const auto j = read_json(o.config);
    policy = policy_from_json(j.contains("policy") ? j["policy"] : j);
  }
  const auto image = png::read_rgb(o.image);
  const auto assets = load_asset_index(o.asset_index);
  const ArtifactAsset* asset = nullptr;
  for (const auto& a : assets)
    if (a.asset_id == o.asset_id) asset = &a;
  if (!asset) throw ValidationError("unknown asset id '" + o.asset_id + "' in " + o.asset_index);
  if (!o.bias_kind.empty() && parse_artifact_kind(o.bias_kind) != asset->kind)
    throw ValidationError("asset '" + o.asset_id + "' is a " + std::string(to_string(asset->kind)) +
                          ", not a " + o.bias_kind);
  auto t = GeometricTransform::identity();
  if (o.seed && asset->kind != ArtifactKind::glasses) {
    auto rng = make_rng(*o.seed).split(o.asset_id);
    t = sample_transform(rng, policy.transform_ranges);
  }
  const auto out = insert_artifact(image, *asset, t, policy.glasses_horizontal_fraction);
  png::write_rgb(o.out, out);
  std::cout << "transform: scale " << t.scale << ", rotation " << t.rotation_deg << ", changed pixels "
            << count_changed_pixels(image, out) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Targeted data augmentation toolkit"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&](CLI::App* sub, bool config_required) {
    auto* c = sub->add_option("--config", o.config, "config JSON");
    if (config_required) c->required();
  };
  auto add_seed = [&](CLI::App* sub) { sub->add_option("--seed", o.seed, "override seed"); };
  auto add_p = [&](CLI::App* sub) {
    sub->add_option("--p", o.p, "augmentation probability")->check(CLI::Range(0.0, 1.0));
  };
  auto add_kind = [&](CLI::App* sub) {
    sub->add_option("--bias-kind", o.bias_kind, "frame, ruler or glasses");
  };
  auto add_assets = [&](CLI::App* sub, bool required) {
    auto* a = sub->add_option("--asset-index", o.asset_index, "asset index JSON");
    if (required) a->required();
  };

  auto* stats = app.add_subcommand("stats", "bias statistics of an annotation manifest");
  stats->add_option("manifest", o.manifest, "manifest CSV")->required();
  stats->add_option("--out", o.out, "directory for bias_report.json/.txt");

  auto* synth = app.add_subcommand("synth", "generate a synthetic planted-bias dataset bundle");
  add_common(synth, false);
  add_seed(synth);
  add_kind(synth);
  synth->add_option("--out", o.out, "output directory")->required();

  auto* trn = app.add_subcommand("train", "train one model with targeted augmentation");
  add_common(trn, true);
  add_seed(trn);
  add_p(trn);
  add_kind(trn);
  add_assets(trn, false);
  trn->add_option("--out", o.out, "output directory");

  auto* cbi = app.add_subcommand("cbi", "counterfactual bias insertion report for a model");
  add_common(cbi, true);
  cbi->add_option("--model", o.model, "model JSON")->required();
  add_kind(cbi);
  add_assets(cbi, false);
  cbi->add_option("--out", o.out, "output directory (default: model directory)");
  cbi->add_flag("--pairs", o.pairs, "also write pairs.csv");

  auto* sweep = app.add_subcommand("sweep", "train and evaluate over the p grid");
  add_common(sweep, true);
  add_seed(sweep);
  add_p(sweep);
  add_kind(sweep);
  add_assets(sweep, false);
  sweep->add_option("--out", o.out, "output directory");

  auto* preview = app.add_subcommand("preview", "insert one asset into one image");
  add_common(preview, false);
  preview->add_option("--image", o.image, "input PNG")->required();
  preview->add_option("--asset-id", o.asset_id, "asset id")->required();
  add_assets(preview, true);
  add_seed(preview);
  add_kind(preview);
  preview->add_option("--out", o.out, "output PNG")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return exit_code(ErrorKind::validation);
  }

  try {
    if (*stats) return cmd_stats(o);
    if (*synth) return cmd_synth(o);
    if (*trn) return cmd_train(o);
    if (*cbi) return cmd_cbi(o);
    if (*sweep) return cmd_sweep(o);
    if (*preview) return cmd_preview(o);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(ErrorKind::validation);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(ErrorKind::computation);
  }
  return exit_code(ErrorKind::validation);
}
