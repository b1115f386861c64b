#pragma once

// Training-time augmentation policy: which artifact to insert, with what
// probability, drawn from which asset split, under which transform ranges.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "tda/augment.hpp"
#include "tda/error.hpp"
#include "tda/rng.hpp"

namespace tda {

struct TransformRanges {
  double scale_min = 0.8;
  double scale_max = 1.25;
  bool rotate = true;
};

struct AugmentationPolicy {
  ArtifactKind bias_kind = ArtifactKind::frame;
  double probability_p = 0.0;
  Split asset_split = Split::train;
  TransformRanges transform_ranges;
  double glasses_horizontal_fraction = kDefaultGlassesFraction;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(probability_p >= 0.0 && probability_p <= 1.0))
      throw ValidationError("policy: probability_p must be in [0,1], got " +
                            std::to_string(probability_p));
    if (!(transform_ranges.scale_min > 0.0) ||
        !(transform_ranges.scale_min <= transform_ranges.scale_max))
      throw ValidationError("policy: scale range must be positive with min <= max");
    if (!(glasses_horizontal_fraction > 0.0 && glasses_horizontal_fraction <= 1.0))
      throw ValidationError("policy: glasses_horizontal_fraction must be in (0,1]");
  }
};

struct AugmentationOutcome {
  bool applied = false;
  std::optional<std::string> asset_id;
  std::optional<GeometricTransform> transform;

  friend bool operator==(const AugmentationOutcome&, const AugmentationOutcome&) = default;
};

// Bernoulli(p) draw; consumes exactly one uniform.
inline bool should_apply(CounterRng& rng, double p) {
  if (!(p >= 0.0 && p <= 1.0))
    throw ValidationError("should_apply: p must be in [0,1], got " + std::to_string(p));
  return rng.uniform() < p;
}

inline GeometricTransform sample_transform(CounterRng& rng, const TransformRanges& r) {
  GeometricTransform t;
  t.scale = r.scale_min == r.scale_max ? r.scale_min : rng.uniform(r.scale_min, r.scale_max);
  if (r.rotate) t.rotation_deg = rng.uniform(0.0, 360.0);
  return t;
}

// Stream for one image visit. Keyed by policy seed, epoch and sample id so
// results do not depend on batch order or thread schedule.
inline CounterRng sample_stream(std::uint64_t seed, std::uint64_t epoch, std::string_view sample_id) {
  return make_rng(seed).split(epoch).split(sample_id);
}

struct Augmented {
  RasterImage image;
  AugmentationOutcome outcome;
};

// Pool is the caller's full asset list; matching kind/split is filtered here.
inline Augmented augment_sample(const RasterImage& image, const AugmentationPolicy& policy,
                                CounterRng& rng, const std::vector<ArtifactAsset>& pool) {
  policy.validate();
  const auto candidates = select_assets(pool, policy.bias_kind, policy.asset_split);
  if (candidates.empty())
    throw ValidationError("policy: no " + std::string(to_string(policy.bias_kind)) + " assets in " +
                          std::string(to_string(policy.asset_split)) + " split");
  if (!should_apply(rng, policy.probability_p)) return {image, {}};

  const auto& asset = *candidates[rng.below(candidates.size())];
  const auto t = policy.bias_kind == ArtifactKind::glasses
                     ? GeometricTransform::identity()
                     : sample_transform(rng, policy.transform_ranges);
  return {insert_artifact(image, asset, t, policy.glasses_horizontal_fraction),
          {true, asset.asset_id, t}};
}

// ---------------------------------------------------------------------------
// JSON

inline nlohmann::json to_json(const AugmentationPolicy& p) {
  return {{"bias_kind", to_string(p.bias_kind)},
          {"probability_p", p.probability_p},
          {"asset_split", to_string(p.asset_split)},
          {"transform_ranges",
           {{"scale_min", p.transform_ranges.scale_min},
            {"scale_max", p.transform_ranges.scale_max},
            {"rotate", p.transform_ranges.rotate}}},
          {"glasses_horizontal_fraction", p.glasses_horizontal_fraction},
          {"seed", p.seed}};
}

// Missing keys keep their defaults.
inline AugmentationPolicy policy_from_json(const nlohmann::json& j) {
  AugmentationPolicy p;
  try {
    if (j.contains("bias_kind")) p.bias_kind = parse_artifact_kind(j["bias_kind"].get<std::string>());
    if (j.contains("probability_p")) p.probability_p = j["probability_p"].get<double>();
    if (j.contains("asset_split")) p.asset_split = parse_split(j["asset_split"].get<std::string>());
    if (j.contains("transform_ranges")) {
      const auto& r = j["transform_ranges"];
      if (r.contains("scale_min")) p.transform_ranges.scale_min = r["scale_min"].get<double>();
      if (r.contains("scale_max")) p.transform_ranges.scale_max = r["scale_max"].get<double>();
      if (r.contains("rotate")) p.transform_ranges.rotate = r["rotate"].get<bool>();
    }
    if (j.contains("glasses_horizontal_fraction"))
      p.glasses_horizontal_fraction = j["glasses_horizontal_fraction"].get<double>();
    if (j.contains("seed")) p.seed = j["seed"].get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("policy: ") + e.what());
  }
  p.validate();
  return p;
}

inline nlohmann::json to_json(const AugmentationOutcome& o) {
  nlohmann::json j = {{"applied", o.applied}, {"asset_id", nullptr}, {"transform", nullptr}};
  if (o.asset_id) j["asset_id"] = *o.asset_id;
  if (o.transform)
    j["transform"] = {{"scale", o.transform->scale},
                      {"rotation_deg", o.transform->rotation_deg},
                      {"dx", o.transform->dx},
                      {"dy", o.transform->dy}};
  return j;
}

}  // namespace tda
