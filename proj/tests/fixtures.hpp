#pragma once

// Shared test fixtures: annotation manifests with the reference artifact
// counts, and two hand-coded classifiers used as CBI oracles.

#include <map>
#include <string>
#include <vector>

#include "tda/tda.hpp"

namespace fixtures {

struct TagCounts {
  std::string cls;
  std::size_t total;
  std::size_t none;
  std::vector<std::pair<std::string, std::size_t>> tags;
};

// Builds records so that each tag lands on exactly `count` distinct records
// of the class, "none" records carry no tag, and every other record has at
// least one tag. Tags are dealt cyclically over the tagged records, so they
// overlap once their counts add up to more than the tagged total.
inline std::vector<tda::AnnotationRecord> build_records(const TagCounts& spec) {
  const std::size_t tagged = spec.total - spec.none;
  std::vector<tda::AnnotationRecord> recs;
  for (std::size_t i = 0; i < spec.total; ++i)
    recs.push_back({spec.cls + "_" + std::to_string(i), spec.cls, {}});
  std::size_t cursor = 0;
  for (const auto& [tag, count] : spec.tags)
    for (std::size_t k = 0; k < count; ++k) recs[cursor++ % tagged].artifacts.insert(tag);
  return recs;
}

inline std::string manifest_csv(const std::vector<std::string>& classes,
                                const std::vector<std::string>& vocabulary,
                                const std::vector<TagCounts>& specs) {
  std::string csv = "# classes: " + classes[0] + "," + classes[1] + "\n# artifacts: ";
  for (std::size_t i = 0; i < vocabulary.size(); ++i) csv += (i ? "," : "") + vocabulary[i];
  csv += "\nsample_id,class_label,artifacts\n";
  for (const auto& s : specs)
    for (const auto& r : build_records(s)) {
      std::string tags;
      for (const auto& t : r.artifacts) tags += (tags.empty() ? "" : ";") + t;
      csv += r.sample_id + "," + r.class_label + "," + tags + "\n";
    }
  return csv;
}

// Skin-lesion annotation counts (malignant declared first: the class ratio
// is malignant over benign).
inline std::string skin_lesion_csv() {
  return manifest_csv({"malignant", "benign"}, {"frame", "hair", "ruler", "others"},
                      {{"benign", 2001, 538, {{"frame", 104}, {"hair", 958}, {"ruler", 422}, {"others", 426}}},
                       {"malignant", 2000, 268, {{"frame", 521}, {"hair", 868}, {"ruler", 586}, {"others", 818}}}});
}

// Face dataset glasses counts.
inline std::string face_csv() {
  return manifest_csv({"male", "female"}, {"glasses"},
                      {{"male", 23766, 21107, {{"glasses", 2659}}},
                       {"female", 23243, 22909, {{"glasses", 334}}}});
}

// Predicts the frame-associated class whenever at least 1% of the pixels
// are pure black (synthetic images never contain pure black on their own).
struct FrameDetector {
  std::string frame_class, other_class;
  tda::Prediction predict(const tda::RasterImage& img) const {
    std::size_t black = 0;
    for (int y = 0; y < img.height(); ++y)
      for (int x = 0; x < img.width(); ++x) {
        const auto* p = img.px(x, y);
        black += p[0] == 0 && p[1] == 0 && p[2] == 0;
      }
    const bool framed = black * 100 >= static_cast<std::size_t>(img.width()) * img.height();
    return framed ? tda::Prediction{frame_class, 1.0} : tda::Prediction{other_class, 0.0};
  }
};

// Region read by the intensity oracle: a lower-central patch inside the
// class-signal disc that no built-in asset reaches.
struct Patch {
  int x0, x1, y0, y1;
};
inline Patch oracle_patch(int w, int h) {
  return {static_cast<int>(0.32 * w), static_cast<int>(0.68 * w), static_cast<int>(0.50 * h),
          static_cast<int>(0.72 * h)};
}

// Reads only the class-signal channel: mean luminance of the patch against
// the midpoint between the two class levels. c1 is the darker class.
struct IntensityOracle {
  std::string c1, c2;
  double threshold;
  tda::Prediction predict(const tda::RasterImage& img) const {
    const auto r = oracle_patch(img.width(), img.height());
    double sum = 0.0;
    int n = 0;
    for (int y = r.y0; y < r.y1; ++y)
      for (int x = r.x0; x < r.x1; ++x, ++n) sum += tda::luminance(img.px(x, y));
    const double mean = sum / n;
    const bool dark = mean < threshold;
    return dark ? tda::Prediction{c1, 1.0} : tda::Prediction{c2, 0.0};
  }
};

// The synthetic palette tints gray levels; the oracle threshold is the
// luminance of the midpoint gray under that tint.
inline double tinted_luminance(double gray) {
  return 0.299 * gray * 1.08 + 0.587 * gray * 0.97 + 0.114 * gray * 0.86;
}

inline tda::SynthConfig clean_test_config(int n_per_class, std::uint64_t seed) {
  tda::SynthConfig c;
  c.n_per_class = n_per_class;
  c.bias_rate_c1 = 0.0;
  c.bias_rate_c2 = 0.0;
  c.seed = seed;
  c.id_prefix = "test_";
  return c;
}

}  // namespace fixtures
