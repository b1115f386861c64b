#pragma once

// Counterfactual bias insertion: each evaluation asset is inserted into
// every test image (identity transform) and the prediction on the biased
// image is compared with the prediction on the original.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "json.hpp"
#include "tda/augment.hpp"
#include "tda/error.hpp"
#include "tda/model.hpp"
#include "tda/text.hpp"

namespace tda {

struct PredictionPair {
  std::string sample_id;
  std::string original_class;
  double original_prob = 0.0;
  std::string biased_class;
  double biased_prob = 0.0;
  std::string asset_id;
};

// Class-level: probabilities are ignored.
inline int switched(const PredictionPair& pair) {
  return pair.original_class != pair.biased_class ? 1 : 0;
}

struct F1Result {
  double value = 0.0;
  bool degenerate = false;  // 2TP + FP + FN == 0, value defined as 0
};

inline F1Result f1_score(const std::vector<std::string>& predicted,
                         const std::vector<std::string>& truth, const std::string& positive) {
  if (predicted.size() != truth.size())
    throw ValidationError("f1_score: length mismatch (" + std::to_string(predicted.size()) +
                          " predictions, " + std::to_string(truth.size()) + " labels)");
  if (predicted.empty()) throw ValidationError("f1_score: empty input");
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const bool p = predicted[i] == positive;
    const bool t = truth[i] == positive;
    tp += p && t;
    fp += p && !t;
    fn += !p && t;
  }
  const std::size_t denom = 2 * tp + fp + fn;
  if (denom == 0) return {0.0, true};
  return {2.0 * tp / static_cast<double>(denom), tp == 0};
}

struct CbiReport {
  std::string asset_id;  // or "averaged"
  std::size_t n = 0;
  double switched_count = 0.0;  // fractional when averaged
  double switched_pct = 0.0;    // fraction of n
  double dir_c1_to_c2 = 0.0;    // fractions of switched samples
  double dir_c2_to_c1 = 0.0;
  double f1 = 0.0;
  double f1_aug = 0.0;
  double f1_mean = 0.0;
  double f1_diff = 0.0;
  bool f1_degenerate = false;
  bool f1_aug_degenerate = false;

  void finalize_f1() {
    f1_mean = (f1 + f1_aug) / 2.0;
    f1_diff = f1 - f1_aug;
  }
};

struct CbiResult {
  std::vector<std::string> classes;  // {c1, c2}
  std::string positive_class;
  std::vector<CbiReport> per_asset;  // asset-id order
  CbiReport averaged;
  std::vector<PredictionPair> pairs;
};

struct CbiOptions {
  std::string positive_class;  // empty: first class
  double glasses_fraction = kDefaultGlassesFraction;
  bool keep_pairs = false;
  std::vector<std::string> sample_ids;  // for pair dumps; index when empty
};

// Unweighted mean over assets. Directions are pooled over all switches so
// the two fractions still sum to one.
inline CbiReport average_reports(const std::vector<CbiReport>& reps, std::size_t total_switched,
                                 std::size_t total_c1_to_c2) {
  CbiReport avg;
  avg.asset_id = "averaged";
  if (reps.empty()) return avg;
  avg.n = reps.front().n;
  for (const auto& r : reps) {
    avg.switched_count += r.switched_count;
    avg.f1 += r.f1;
    avg.f1_aug += r.f1_aug;
    avg.f1_degenerate = avg.f1_degenerate || r.f1_degenerate;
    avg.f1_aug_degenerate = avg.f1_aug_degenerate || r.f1_aug_degenerate;
  }
  const double k = static_cast<double>(reps.size());
  avg.switched_count /= k;
  avg.f1 /= k;
  avg.f1_aug /= k;
  avg.switched_pct = avg.n ? avg.switched_count / static_cast<double>(avg.n) : 0.0;
  if (total_switched > 0) {
    avg.dir_c1_to_c2 = static_cast<double>(total_c1_to_c2) / total_switched;
    avg.dir_c2_to_c1 = 1.0 - avg.dir_c1_to_c2;
  }
  avg.finalize_f1();
  return avg;
}

template <Classifier C>
CbiResult run_cbi(const C& model, const std::vector<RasterImage>& images,
                  const std::vector<std::string>& truth, const std::vector<std::string>& classes,
                  const std::vector<const ArtifactAsset*>& eval_assets, ArtifactKind kind,
                  const CbiOptions& opt = {}) {
  if (images.empty()) throw ValidationError("run_cbi: empty test set");
  if (images.size() != truth.size())
    throw ValidationError("run_cbi: " + std::to_string(images.size()) + " images but " +
                          std::to_string(truth.size()) + " labels");
  if (classes.size() != 2) throw ValidationError("run_cbi: exactly 2 classes required");
  if (eval_assets.empty()) throw ValidationError("run_cbi: no evaluation assets");
  for (const auto* a : eval_assets) {
    if (a->kind != kind)
      throw ValidationError("run_cbi: asset '" + a->asset_id + "' is " +
                            std::string(to_string(a->kind)) + ", evaluation is for " +
                            std::string(to_string(kind)));
    if (a->split != Split::eval)
      throw ValidationError("run_cbi: asset '" + a->asset_id + "' is not in the eval split");
  }

  CbiResult res;
  res.classes = classes;
  res.positive_class = opt.positive_class.empty() ? classes[0] : opt.positive_class;
  if (res.positive_class != classes[0] && res.positive_class != classes[1])
    throw ValidationError("run_cbi: positive class '" + res.positive_class + "' is not declared");

  const std::size_t n = images.size();
  std::vector<Prediction> original;
  original.reserve(n);
  std::vector<std::string> original_labels;
  for (const auto& img : images) {
    original.push_back(model.predict(img));
    original_labels.push_back(original.back().label);
  }
  const auto f1 = f1_score(original_labels, truth, res.positive_class);

  auto sorted = eval_assets;
  std::sort(sorted.begin(), sorted.end(),
            [](const auto* a, const auto* b) { return a->asset_id < b->asset_id; });

  std::size_t total_switched = 0, total_c1_to_c2 = 0;
  for (const auto* asset : sorted) {
    CbiReport rep;
    rep.asset_id = asset->asset_id;
    rep.n = n;
    std::vector<std::string> biased_labels;
    biased_labels.reserve(n);
    std::size_t sw = 0, c1_to_c2 = 0, c2_to_c1 = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto biased_img =
          insert_artifact(images[i], *asset, GeometricTransform::identity(), opt.glasses_fraction);
      const auto biased = model.predict(biased_img);
      PredictionPair pair{i < opt.sample_ids.size() ? opt.sample_ids[i] : std::to_string(i),
                          original[i].label,
                          original[i].probability,
                          biased.label,
                          biased.probability,
                          asset->asset_id};
      if (switched(pair)) {
        ++sw;
        if (pair.original_class == classes[0])
          ++c1_to_c2;
        else
          ++c2_to_c1;
      }
      biased_labels.push_back(biased.label);
      if (opt.keep_pairs) res.pairs.push_back(std::move(pair));
    }
    rep.switched_count = static_cast<double>(sw);
    rep.switched_pct = static_cast<double>(sw) / n;
    if (sw > 0) {
      rep.dir_c1_to_c2 = static_cast<double>(c1_to_c2) / sw;
      rep.dir_c2_to_c1 = static_cast<double>(c2_to_c1) / sw;
    }
    rep.f1 = f1.value;
    rep.f1_degenerate = f1.degenerate;
    const auto f1a = f1_score(biased_labels, truth, res.positive_class);
    rep.f1_aug = f1a.value;
    rep.f1_aug_degenerate = f1a.degenerate;
    rep.finalize_f1();
    total_switched += sw;
    total_c1_to_c2 += c1_to_c2;
    res.per_asset.push_back(rep);
  }
  res.averaged = average_reports(res.per_asset, total_switched, total_c1_to_c2);
  return res;
}

// Exact recomputation of the derived fields.
inline bool consistent(const CbiReport& r) {
  const bool f1_ok = r.f1_mean == (r.f1 + r.f1_aug) / 2.0 && r.f1_diff == r.f1 - r.f1_aug;
  const bool pct_ok = r.n == 0 || r.switched_pct == r.switched_count / static_cast<double>(r.n);
  const bool dir_ok = r.switched_count == 0.0 ||
                      std::abs(r.dir_c1_to_c2 + r.dir_c2_to_c1 - 1.0) < 1e-12;
  const bool range_ok = r.switched_count >= 0.0 && r.switched_count <= static_cast<double>(r.n);
  return f1_ok && pct_ok && dir_ok && range_ok;
}

// ---------------------------------------------------------------------------
// Output

inline nlohmann::json to_json(const CbiReport& r) {
  return {{"asset_id", r.asset_id},
          {"n", r.n},
          {"switched_count", r.switched_count},
          {"switched_pct", r.switched_pct},
          {"dir_c1_to_c2", r.dir_c1_to_c2},
          {"dir_c2_to_c1", r.dir_c2_to_c1},
          {"f1", r.f1},
          {"f1_aug", r.f1_aug},
          {"f1_mean", r.f1_mean},
          {"f1_diff", r.f1_diff},
          {"f1_degenerate", r.f1_degenerate},
          {"f1_aug_degenerate", r.f1_aug_degenerate}};
}

inline CbiReport cbi_report_from_json(const nlohmann::json& j) {
  CbiReport r;
  r.asset_id = j.at("asset_id").get<std::string>();
  r.n = j.at("n").get<std::size_t>();
  r.switched_count = j.at("switched_count").get<double>();
  r.switched_pct = j.at("switched_pct").get<double>();
  r.dir_c1_to_c2 = j.at("dir_c1_to_c2").get<double>();
  r.dir_c2_to_c1 = j.at("dir_c2_to_c1").get<double>();
  r.f1 = j.at("f1").get<double>();
  r.f1_aug = j.at("f1_aug").get<double>();
  r.f1_mean = j.at("f1_mean").get<double>();
  r.f1_diff = j.at("f1_diff").get<double>();
  r.f1_degenerate = j.value("f1_degenerate", false);
  r.f1_aug_degenerate = j.value("f1_aug_degenerate", false);
  return r;
}

inline nlohmann::json to_json(const CbiResult& res) {
  nlohmann::json per = nlohmann::json::array();
  for (const auto& r : res.per_asset) per.push_back(to_json(r));
  return {{"classes", res.classes},
          {"positive_class", res.positive_class},
          {"direction_labels",
           {{"c1_to_c2", res.classes[0] + " to " + res.classes[1]},
            {"c2_to_c1", res.classes[1] + " to " + res.classes[0]}}},
          {"per_asset", per},
          {"averaged", to_json(res.averaged)}};
}

// Columns: label, switched, %, c1->c2, c2->c1, F1, F1_aug, F1_diff.
inline std::vector<std::string> cbi_table_header(const std::vector<std::string>& classes,
                                                 const std::string& first_column) {
  return {first_column,
          "switched",
          "%",
          classes[0] + " to " + classes[1],
          classes[1] + " to " + classes[0],
          "F1",
          "F1_aug",
          "F1_diff"};
}

inline std::vector<std::string> cbi_table_row(const std::string& label, const CbiReport& r) {
  return {label,
          text::fixed(r.switched_count, 1),
          text::percent(r.switched_pct),
          text::percent(r.dir_c1_to_c2),
          text::percent(r.dir_c2_to_c1),
          text::percent(r.f1),
          text::percent(r.f1_aug),
          text::percent(r.f1_diff)};
}

inline std::string render_text(const CbiResult& res) {
  std::vector<std::vector<std::string>> cells;
  cells.push_back(cbi_table_header(res.classes, "asset"));
  for (const auto& r : res.per_asset) cells.push_back(cbi_table_row(r.asset_id, r));
  cells.push_back(cbi_table_row("averaged", res.averaged));
  return text::render_table(cells);
}

inline std::string format_pairs_csv(const std::vector<PredictionPair>& pairs) {
  std::string out = "sample_id,asset_id,original_class,original_prob,biased_class,biased_prob,switched\n";
  for (const auto& p : pairs) {
    out += text::csv_field(p.sample_id) + "," + text::csv_field(p.asset_id) + "," +
           text::csv_field(p.original_class) + "," + nlohmann::json(p.original_prob).dump() + "," +
           text::csv_field(p.biased_class) + "," + nlohmann::json(p.biased_prob).dump() + "," +
           std::to_string(switched(p)) + "\n";
  }
  return out;
}

}  // namespace tda
