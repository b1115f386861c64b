#pragma once

// Mini-batch SGD on binary cross-entropy with targeted augmentation applied
// to every sample visit before featurization.

#include <cmath>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "tda/augment.hpp"
#include "tda/dataset.hpp"
#include "tda/model.hpp"
#include "tda/policy.hpp"

namespace tda {

struct TrainConfig {
  double learning_rate = 0.05;
  int epochs = 5;
  int batch_size = 16;
  std::uint64_t seed = 1;
  AugmentationPolicy policy;
  double lr_decay_per_epoch = 0.9;
  Architecture architecture = Architecture::linear;
  int hidden_units = 16;
  int feature_side = 32;
  std::optional<std::string> positive_class;  // default: first declared class

  void validate() const {
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
      throw ValidationError("train: learning_rate must be positive");
    if (epochs < 0) throw ValidationError("train: epochs must be >= 0");
    if (batch_size < 1) throw ValidationError("train: batch_size must be >= 1");
    if (!(lr_decay_per_epoch > 0.0 && lr_decay_per_epoch <= 1.0))
      throw ValidationError("train: lr_decay_per_epoch must be in (0,1]");
    if (feature_side < 4) throw ValidationError("train: feature_side must be >= 4");
    if (architecture == Architecture::mlp_1h && hidden_units < 1)
      throw ValidationError("train: hidden_units must be >= 1");
    policy.validate();
  }
};

struct EpochLog {
  int epoch = 0;
  double learning_rate = 0.0;
  double mean_loss = 0.0;
  double accuracy = 0.0;  // on the augmented stream seen this epoch
  std::size_t applied = 0;
  std::size_t samples = 0;
};

struct TrainResult {
  ToyModel model;
  std::vector<EpochLog> log;
};

inline std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, int epoch) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto rng = make_rng(seed).split(hash_string("shuffle")).split(static_cast<std::uint64_t>(epoch));
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  return order;
}

inline TrainResult train(const Dataset& data, const TrainConfig& cfg,
                         const std::vector<ArtifactAsset>& assets) {
  cfg.validate();
  if (data.classes.size() != 2) throw ValidationError("train: dataset must declare 2 classes");
  const std::string positive = cfg.positive_class.value_or(data.classes[0]);
  if (positive != data.classes[0] && positive != data.classes[1])
    throw ValidationError("train: positive class '" + positive + "' not in dataset");
  const std::string negative = positive == data.classes[0] ? data.classes[1] : data.classes[0];
  for (const auto& c : data.classes)
    if (data.count(c) < 2)
      throw ValidationError("train: class '" + c + "' needs at least 2 samples");
  if (cfg.policy.probability_p > 0.0 &&
      select_assets(assets, cfg.policy.bias_kind, cfg.policy.asset_split).empty())
    throw ValidationError("train: no " + std::string(to_string(cfg.policy.bias_kind)) +
                          " assets in " + std::string(to_string(cfg.policy.asset_split)) + " split");

  TrainResult out{ToyModel::initialized(cfg.architecture, cfg.feature_side, cfg.hidden_units,
                                        positive, negative, cfg.seed),
                  {}};
  auto& model = out.model;

  std::vector<FeatureVector> clean;
  std::vector<double> target;
  clean.reserve(data.samples.size());
  for (const auto& s : data.samples) {
    clean.push_back(featurize(s.image, cfg.feature_side));
    target.push_back(s.label == positive ? 1.0 : 0.0);
  }

  const bool augmenting = cfg.policy.probability_p > 0.0;
  auto visit = [&](std::size_t idx, int epoch, FeatureVector& scratch, bool& applied) -> const FeatureVector* {
    applied = false;
    if (!augmenting) return &clean[idx];
    const auto& sample = data.samples[idx];
    auto rng = sample_stream(cfg.policy.seed, static_cast<std::uint64_t>(epoch), sample.sample_id);
    auto res = augment_sample(sample.image, cfg.policy, rng, assets);
    if (!res.outcome.applied) return &clean[idx];
    applied = true;
    scratch = featurize(res.image, cfg.feature_side);
    return &scratch;
  };

  // Input centre: mean of the first epoch's augmented stream.
  if (cfg.epochs > 0 && !data.samples.empty()) {
    std::vector<double> center(model.input_dim(), 0.0);
    FeatureVector scratch;
    bool applied = false;
    for (std::size_t idx = 0; idx < data.samples.size(); ++idx) {
      const auto* x = visit(idx, 0, scratch, applied);
      for (std::size_t i = 0; i < center.size(); ++i) center[i] += (*x)[i];
    }
    for (auto& c : center) c /= static_cast<double>(data.samples.size());
    model.set_input_center(std::move(center));
  }

  std::vector<double> grad(model.param_count());
  double lr = cfg.learning_rate;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    EpochLog log;
    log.epoch = epoch + 1;
    log.learning_rate = lr;
    const auto order = epoch_order(data.samples.size(), cfg.seed, epoch);
    double loss_sum = 0.0;
    std::size_t correct = 0;
    std::size_t step = 0;
    FeatureVector augmented;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size, ++step) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      std::fill(grad.begin(), grad.end(), 0.0);
      double batch_loss = 0.0;
      for (std::size_t k = start; k < end; ++k) {
        const auto idx = order[k];
        bool applied = false;
        const FeatureVector* x = visit(idx, epoch, augmented, applied);
        if (applied) ++log.applied;
        const double l = model.accumulate_gradient(*x, target[idx], grad);
        if ((model.probability(*x) >= 0.5) == (target[idx] == 1.0)) ++correct;
        batch_loss += l;
      }
      if (!std::isfinite(batch_loss))
        throw ComputationError("training diverged: non-finite loss at epoch " +
                               std::to_string(epoch + 1) + ", step " + std::to_string(step));
      const double scale = lr / static_cast<double>(end - start);
      auto p = model.params();
      for (std::size_t i = 0; i < p.size(); ++i) p[i] -= scale * grad[i];
      if (!model.finite())
        throw ComputationError("training diverged: non-finite weights at epoch " +
                               std::to_string(epoch + 1) + ", step " + std::to_string(step));
      loss_sum += batch_loss;
    }
    log.samples = order.size();
    log.mean_loss = order.empty() ? 0.0 : loss_sum / order.size();
    log.accuracy = order.empty() ? 0.0 : static_cast<double>(correct) / order.size();
    out.log.push_back(log);
    lr *= cfg.lr_decay_per_epoch;
  }
  return out;
}

// ---------------------------------------------------------------------------
// JSON

inline nlohmann::json to_json(const EpochLog& e) {
  return {{"epoch", e.epoch},
          {"learning_rate", e.learning_rate},
          {"mean_loss", e.mean_loss},
          {"accuracy", e.accuracy},
          {"applied", e.applied},
          {"samples", e.samples}};
}

// One JSON object per line.
inline std::string format_train_log(const std::vector<EpochLog>& log) {
  std::string out;
  for (const auto& e : log) out += to_json(e).dump() + "\n";
  return out;
}

inline nlohmann::json to_json(const TrainConfig& c) {
  nlohmann::json j = {{"learning_rate", c.learning_rate},
                      {"epochs", c.epochs},
                      {"batch_size", c.batch_size},
                      {"seed", c.seed},
                      {"lr_decay_per_epoch", c.lr_decay_per_epoch},
                      {"architecture", to_string(c.architecture)},
                      {"hidden_units", c.hidden_units},
                      {"feature_side", c.feature_side},
                      {"positive_class", nullptr}};
  if (c.positive_class) j["positive_class"] = *c.positive_class;
  return j;
}

// The policy is carried separately in experiment configs.
inline TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig c = {}) {
  try {
    if (j.contains("learning_rate")) c.learning_rate = j["learning_rate"].get<double>();
    if (j.contains("epochs")) c.epochs = j["epochs"].get<int>();
    if (j.contains("batch_size")) c.batch_size = j["batch_size"].get<int>();
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("lr_decay_per_epoch")) c.lr_decay_per_epoch = j["lr_decay_per_epoch"].get<double>();
    if (j.contains("architecture"))
      c.architecture = parse_architecture(j["architecture"].get<std::string>());
    if (j.contains("hidden_units")) c.hidden_units = j["hidden_units"].get<int>();
    if (j.contains("feature_side")) c.feature_side = j["feature_side"].get<int>();
    if (j.contains("positive_class") && !j["positive_class"].is_null())
      c.positive_class = j["positive_class"].get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("train config: ") + e.what());
  }
  return c;
}

}  // namespace tda
