#pragma once

// Two-class synthetic image dataset with a planted artifact correlation.
// Class membership is carried by mean image intensity; the artifact is
// injected at a per-class rate so its class ratio can be dialled in.

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "json.hpp"
#include "tda/assets.hpp"
#include "tda/augment.hpp"
#include "tda/bias_metrics.hpp"
#include "tda/dataset.hpp"
#include "tda/policy.hpp"
#include "tda/rng.hpp"

namespace tda {

struct SynthConfig {
  int n_per_class = 2000;
  int image_size = 64;
  double class_signal = 24.0;  // gap between class mean intensities, 8-bit units
  double bias_rate_c1 = 0.26;
  double bias_rate_c2 = 0.052;
  ArtifactKind artifact_kind = ArtifactKind::frame;
  double noise_sigma = 6.0;         // per-image intensity jitter
  double pixel_noise_sigma = 10.0;  // per-pixel texture noise
  double base_intensity = 140.0;
  // Class level applies inside a central disc of this radius (fraction of
  // the side); outside it the level is class-independent. >= 0.75 covers
  // the whole image.
  double signal_radius = 0.3;
  std::vector<std::string> class_names{"malignant", "benign"};
  std::string id_prefix;
  std::uint64_t seed = 2023;

  void validate() const {
    if (n_per_class < 1) throw ValidationError("synth: n_per_class must be >= 1");
    if (image_size < RasterImage::kMinSide)
      throw ValidationError("synth: image_size must be >= " + std::to_string(RasterImage::kMinSide));
    if (!(class_signal > 0.0)) throw ValidationError("synth: class_signal must be > 0");
    for (double r : {bias_rate_c1, bias_rate_c2})
      if (!(r >= 0.0 && r <= 1.0)) throw ValidationError("synth: bias rates must be in [0,1]");
    if (!(noise_sigma >= 0.0) || !(pixel_noise_sigma >= 0.0))
      throw ValidationError("synth: noise sigmas must be >= 0");
    if (!(signal_radius > 0.0)) throw ValidationError("synth: signal_radius must be > 0");
    if (class_names.size() != 2 || class_names[0] == class_names[1])
      throw ValidationError("synth: exactly two distinct class names required");
  }

  // c1 is the darker class and the one the artifact is planted on.
  double class_mean(int cls) const {
    return cls == 0 ? base_intensity - class_signal / 2 : base_intensity + class_signal / 2;
  }
};

struct SynthDataset {
  Dataset data;
  Manifest manifest;
  std::vector<std::string> warnings;
  std::size_t injected_c1 = 0;
  std::size_t injected_c2 = 0;
};

// Artifact-free sample: tinted gray levels plus pixel noise. Channel
// values are kept >= 1 so pure black only ever comes from an artifact.
inline RasterImage synth_clean_image(const SynthConfig& cfg, int cls, CounterRng& rng) {
  const double level = rng.normal(cfg.class_mean(cls), cfg.noise_sigma);
  const double background = rng.normal(cfg.base_intensity, cfg.noise_sigma);
  RasterImage img(cfg.image_size, cfg.image_size);
  constexpr double tint[3] = {1.08, 0.97, 0.86};
  const double c = cfg.image_size / 2.0;
  const double r2 = cfg.signal_radius * cfg.signal_radius * cfg.image_size * cfg.image_size;
  for (int y = 0; y < cfg.image_size; ++y)
    for (int x = 0; x < cfg.image_size; ++x) {
      const double dx = x + 0.5 - c, dy = y + 0.5 - c;
      const double base = dx * dx + dy * dy <= r2 ? level : background;
      const double v = base + rng.normal(0.0, cfg.pixel_noise_sigma);
      auto* p = img.px(x, y);
      for (int c = 0; c < 3; ++c)
        p[c] = static_cast<std::uint8_t>(std::clamp(std::nearbyint(v * tint[c]), 1.0, 255.0));
    }
  return img;
}

inline std::string synth_sample_id(const SynthConfig& cfg, int cls, int k) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%05d", k);
  return cfg.id_prefix + cfg.class_names[cls] + "_" + buf;
}

// Injection uses the train split of `assets` with the default transform
// ranges (identity placement for glasses).
inline SynthDataset generate(const SynthConfig& cfg, const std::vector<ArtifactAsset>& assets) {
  cfg.validate();
  const auto pool = select_assets(assets, cfg.artifact_kind, Split::train);
  const bool need_assets = cfg.bias_rate_c1 > 0 || cfg.bias_rate_c2 > 0;
  if (need_assets && pool.empty())
    throw ValidationError("synth: no train-split " + std::string(to_string(cfg.artifact_kind)) +
                          " assets available");

  SynthDataset out;
  out.data.classes = cfg.class_names;
  const std::string tag(to_string(cfg.artifact_kind));
  Manifest manifest({}, {tag}, {});
  manifest.declare_classes(cfg.class_names);
  const auto root = make_rng(cfg.seed);
  const TransformRanges ranges{};

  for (int cls = 0; cls < 2; ++cls) {
    const double rate = cls == 0 ? cfg.bias_rate_c1 : cfg.bias_rate_c2;
    for (int k = 0; k < cfg.n_per_class; ++k) {
      const auto id = synth_sample_id(cfg, cls, k);
      auto rng = root.split(id);
      auto img = synth_clean_image(cfg, cls, rng);
      AnnotationRecord rec{id, cfg.class_names[cls], {}};
      if (rng.uniform() < rate) {
        const auto& asset = *pool[rng.below(pool.size())];
        const auto t = cfg.artifact_kind == ArtifactKind::glasses ? GeometricTransform::identity()
                                                                  : sample_transform(rng, ranges);
        img = insert_artifact(img, asset, t);
        rec.artifacts.insert(tag);
        ++(cls == 0 ? out.injected_c1 : out.injected_c2);
      }
      manifest.add(std::move(rec));
      out.data.samples.push_back({id, cfg.class_names[cls], std::move(img)});
    }
  }
  if (cfg.bias_rate_c1 > 0 && out.injected_c1 == 0)
    out.warnings.push_back("no artifact instances injected into class '" + cfg.class_names[0] + "'");
  if (cfg.bias_rate_c2 > 0 && out.injected_c2 == 0)
    out.warnings.push_back("no artifact instances injected into class '" + cfg.class_names[1] + "'");
  out.manifest = std::move(manifest);
  return out;
}

// ---------------------------------------------------------------------------
// JSON

inline nlohmann::json to_json(const SynthConfig& c) {
  return {{"n_per_class", c.n_per_class},
          {"image_size", c.image_size},
          {"class_signal", c.class_signal},
          {"bias_rate_c1", c.bias_rate_c1},
          {"bias_rate_c2", c.bias_rate_c2},
          {"artifact_kind", to_string(c.artifact_kind)},
          {"noise_sigma", c.noise_sigma},
          {"pixel_noise_sigma", c.pixel_noise_sigma},
          {"base_intensity", c.base_intensity},
          {"signal_radius", c.signal_radius},
          {"class_names", c.class_names},
          {"id_prefix", c.id_prefix},
          {"seed", c.seed}};
}

inline SynthConfig synth_config_from_json(const nlohmann::json& j, SynthConfig c = {}) {
  try {
    if (j.contains("n_per_class")) c.n_per_class = j["n_per_class"].get<int>();
    if (j.contains("image_size")) c.image_size = j["image_size"].get<int>();
    if (j.contains("class_signal")) c.class_signal = j["class_signal"].get<double>();
    if (j.contains("bias_rate_c1")) c.bias_rate_c1 = j["bias_rate_c1"].get<double>();
    if (j.contains("bias_rate_c2")) c.bias_rate_c2 = j["bias_rate_c2"].get<double>();
    if (j.contains("artifact_kind"))
      c.artifact_kind = parse_artifact_kind(j["artifact_kind"].get<std::string>());
    if (j.contains("noise_sigma")) c.noise_sigma = j["noise_sigma"].get<double>();
    if (j.contains("pixel_noise_sigma")) c.pixel_noise_sigma = j["pixel_noise_sigma"].get<double>();
    if (j.contains("base_intensity")) c.base_intensity = j["base_intensity"].get<double>();
    if (j.contains("signal_radius")) c.signal_radius = j["signal_radius"].get<double>();
    if (j.contains("class_names")) c.class_names = j["class_names"].get<std::vector<std::string>>();
    if (j.contains("id_prefix")) c.id_prefix = j["id_prefix"].get<std::string>();
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("synth config: ") + e.what());
  }
  c.validate();
  return c;
}

}  // namespace tda
