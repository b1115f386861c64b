#pragma once

// Desk-scale classifiers: logistic regression and a one-hidden-layer tanh
// MLP over a downscaled grayscale rendering of the image.

#include <cmath>
#include <concepts>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "tda/error.hpp"
#include "tda/image.hpp"
#include "tda/rng.hpp"

namespace tda {

using FeatureVector = std::vector<double>;

// Box-filter downscale of a w x h plane to side x side; each output is the
// area-weighted mean of the source pixels it covers.
inline std::vector<double> area_downscale(std::span<const double> plane, int w, int h, int side) {
  if (side < 1 || w < 1 || h < 1 || plane.size() != static_cast<std::size_t>(w) * h)
    throw ValidationError("area_downscale: bad dimensions");
  struct Tap {
    int index;
    double weight;
  };
  auto taps = [side](int n) {
    std::vector<std::vector<Tap>> out(side);
    const double step = static_cast<double>(n) / side;
    for (int o = 0; o < side; ++o) {
      const double lo = o * step, hi = (o + 1) * step;
      for (int i = static_cast<int>(std::floor(lo)); i < n && i < hi; ++i) {
        const double overlap = std::min(hi, i + 1.0) - std::max(lo, static_cast<double>(i));
        if (overlap > 0) out[o].push_back({i, overlap / step});
      }
    }
    return out;
  };
  const auto tx = taps(w);
  const auto ty = taps(h);
  std::vector<double> out(static_cast<std::size_t>(side) * side, 0.0);
  for (int oy = 0; oy < side; ++oy)
    for (int ox = 0; ox < side; ++ox) {
      double acc = 0.0;
      for (const auto& [yi, wy] : ty[oy])
        for (const auto& [xi, wx] : tx[ox]) acc += wy * wx * plane[static_cast<std::size_t>(yi) * w + xi];
      out[static_cast<std::size_t>(oy) * side + ox] = acc;
    }
  return out;
}

inline double luminance(const std::uint8_t* rgb) {
  return 0.299 * rgb[0] + 0.587 * rgb[1] + 0.114 * rgb[2];
}

inline FeatureVector featurize(const RasterImage& image, int side) {
  if (side < 4) throw ValidationError("featurize: side must be >= 4");
  if (image.empty()) throw ValidationError("featurize: empty image");
  std::vector<double> lum(image.dims().area());
  for (int y = 0; y < image.height(); ++y)
    for (int x = 0; x < image.width(); ++x)
      lum[static_cast<std::size_t>(y) * image.width() + x] = luminance(image.px(x, y)) / 255.0;
  auto f = area_downscale(lum, image.width(), image.height(), side);
  for (auto& v : f) v = std::clamp(v, 0.0, 1.0);
  return f;
}

inline double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// Binary cross-entropy written in terms of the logit.
template <class T>
T bce_from_logit_as(T z, T y) {
  const T softplus = z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
  return softplus - y * z;
}

inline double bce_from_logit(double z, double y) { return bce_from_logit_as<double>(z, y); }

enum class Architecture { linear, mlp_1h };

inline std::string_view to_string(Architecture a) {
  return a == Architecture::linear ? "linear" : "mlp-1h";
}

inline Architecture parse_architecture(std::string_view s) {
  if (s == "linear") return Architecture::linear;
  if (s == "mlp-1h" || s == "mlp") return Architecture::mlp_1h;
  throw ValidationError("unknown architecture '" + std::string(s) + "' (expected linear or mlp-1h)");
}

struct Prediction {
  std::string label;
  double probability = 0.0;  // of the positive class
};

template <class C>
concept Classifier = requires(const C& c, const RasterImage& img) {
  { c.predict(img) } -> std::convertible_to<Prediction>;
};

// Each input is shifted by a per-feature centre before the first layer.
// Constructed models centre at 0.5; training fits the centre to the mean of
// the (augmented) training stream, which keeps SGD well conditioned and
// stops constant inputs from acting as a second intercept.
inline constexpr double kDefaultInputCenter = 0.5;

// Parameters live in one flat vector:
//   linear : [w (d), b]
//   mlp-1h : [W1 (h x d, row-major), b1 (h), w2 (h), b2]
class ToyModel {
 public:
  ToyModel() = default;

  ToyModel(Architecture arch, int side, int hidden, std::string positive_class,
           std::string negative_class)
      : arch_(arch),
        side_(side),
        hidden_(arch == Architecture::linear ? 0 : hidden),
        positive_(std::move(positive_class)),
        negative_(std::move(negative_class)) {
    if (side < 4) throw ValidationError("model: input side must be >= 4");
    if (arch == Architecture::mlp_1h && hidden < 1)
      throw ValidationError("model: mlp-1h needs at least one hidden unit");
    params_.assign(param_count(), 0.0);
    center_.assign(static_cast<std::size_t>(input_dim()), kDefaultInputCenter);
  }

  // Weights uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)], biases zero.
  static ToyModel initialized(Architecture arch, int side, int hidden, std::string positive,
                              std::string negative, std::uint64_t seed) {
    ToyModel m(arch, side, hidden, std::move(positive), std::move(negative));
    auto rng = make_rng(seed).split(hash_string("init"));
    const int d = m.input_dim();
    const double a = 1.0 / std::sqrt(static_cast<double>(d));
    if (arch == Architecture::linear) {
      for (int i = 0; i < d; ++i) m.params_[i] = rng.uniform(-a, a);
    } else {
      const int h = m.hidden_;
      for (int i = 0; i < h * d; ++i) m.params_[i] = rng.uniform(-a, a);
      const double a2 = 1.0 / std::sqrt(static_cast<double>(h));
      for (int k = 0; k < h; ++k) m.params_[h * d + h + k] = rng.uniform(-a2, a2);
    }
    return m;
  }

  Architecture architecture() const { return arch_; }
  int side() const { return side_; }
  int hidden() const { return hidden_; }
  int input_dim() const { return side_ * side_; }
  const std::string& positive_class() const { return positive_; }
  const std::string& negative_class() const { return negative_; }

  std::size_t param_count() const {
    const std::size_t d = static_cast<std::size_t>(side_) * side_;
    if (arch_ == Architecture::linear) return d + 1;
    const std::size_t h = hidden_;
    return h * d + h + h + 1;
  }

  std::span<const double> input_center() const { return center_; }
  void set_input_center(std::vector<double> c) {
    if (c.size() != center_.size())
      throw ValidationError("model: input centre has " + std::to_string(c.size()) +
                            " entries, expected " + std::to_string(center_.size()));
    center_ = std::move(c);
  }

  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }

  bool finite() const {
    for (double v : params_)
      if (!std::isfinite(v)) return false;
    return true;
  }

  double logit(std::span<const double> x) const {
    check_input(x);
    return logit_as<double>(x);
  }

  double probability(std::span<const double> x) const { return sigmoid(logit(x)); }

  // Loss for one sample; adds d(loss)/d(params) into `grad`.
  double accumulate_gradient(std::span<const double> x, double y, std::span<double> grad) const {
    check_input(x);
    const int d = input_dim();
    if (arch_ == Architecture::linear) {
      const double z = logit(x);
      const double dz = sigmoid(z) - y;
      for (int i = 0; i < d; ++i) grad[i] += dz * (x[i] - center_[i]);
      grad[d] += dz;
      return bce_from_logit(z, y);
    }
    const int h = hidden_;
    std::vector<double> act(h);
    double z = params_[h * d + 2 * h];
    for (int k = 0; k < h; ++k) {
      act[k] = std::tanh(pre_activation(x, k));
      z += params_[h * d + h + k] * act[k];
    }
    const double dz = sigmoid(z) - y;
    for (int k = 0; k < h; ++k) {
      grad[h * d + h + k] += dz * act[k];
      const double da = dz * params_[h * d + h + k] * (1.0 - act[k] * act[k]);
      double* row = grad.data() + static_cast<std::size_t>(k) * d;
      for (int i = 0; i < d; ++i) row[i] += da * (x[i] - center_[i]);
      grad[h * d + k] += da;
    }
    grad[h * d + 2 * h] += dz;
    return bce_from_logit(z, y);
  }

  double loss(std::span<const double> x, double y) const { return bce_from_logit(logit(x), y); }

  // Same loss carried in extended precision; the finite-difference oracle
  // needs it to resolve gradients far below the loss magnitude.
  long double loss_extended(std::span<const double> x, double y) const {
    check_input(x);
    return bce_from_logit_as<long double>(logit_as<long double>(x), y);
  }

  // Positive class iff probability >= 0.5.
  Prediction predict_features(std::span<const double> x) const {
    const double p = probability(x);
    return {p >= 0.5 ? positive_ : negative_, p};
  }

  Prediction predict(const RasterImage& image) const;

  friend bool operator==(const ToyModel&, const ToyModel&) = default;

 private:
  void check_input(std::span<const double> x) const {
    if (x.size() != static_cast<std::size_t>(input_dim()))
      throw ValidationError("model: expected " + std::to_string(input_dim()) +
                            " features, got " + std::to_string(x.size()));
  }

  template <class T>
  T logit_as(std::span<const double> x) const {
    const int d = input_dim();
    if (arch_ == Architecture::linear) {
      T z = params_[d];
      for (int i = 0; i < d; ++i) z += params_[i] * (T(x[i]) - center_[i]);
      return z;
    }
    const int h = hidden_;
    T z = params_[h * d + 2 * h];
    for (int k = 0; k < h; ++k) z += params_[h * d + h + k] * std::tanh(pre_activation<T>(x, k));
    return z;
  }

  template <class T = double>
  T pre_activation(std::span<const double> x, int k) const {
    const int d = input_dim();
    const double* row = params_.data() + static_cast<std::size_t>(k) * d;
    T a = params_[hidden_ * d + k];
    for (int i = 0; i < d; ++i) a += row[i] * (T(x[i]) - center_[i]);
    return a;
  }

  Architecture arch_ = Architecture::linear;
  int side_ = 32;
  int hidden_ = 0;
  std::string positive_;
  std::string negative_;
  std::vector<double> params_;
  std::vector<double> center_;
};

inline Prediction ToyModel::predict(const RasterImage& image) const {
  return predict_features(featurize(image, side_));
}

inline Prediction predict(const ToyModel& model, const RasterImage& image) {
  return model.predict(image);
}

// Max over all parameters of |analytic - numeric| / max(|analytic|, |numeric|, 1e-8),
// numeric being the central difference with step `epsilon`.
inline double gradient_check(const ToyModel& model, std::span<const double> x, double y,
                             double epsilon) {
  if (!(epsilon >= 1e-7 && epsilon <= 1e-3))
    throw ValidationError("gradient_check: epsilon must be in [1e-7, 1e-3]");
  std::vector<double> analytic(model.param_count(), 0.0);
  model.accumulate_gradient(x, y, analytic);
  ToyModel probe = model;
  auto p = probe.params();
  double worst = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double keep = p[i];
    p[i] = keep + epsilon;
    const long double up = probe.loss_extended(x, y);
    p[i] = keep - epsilon;
    const long double down = probe.loss_extended(x, y);
    p[i] = keep;
    // The step actually taken, after rounding keep +/- epsilon to double.
    const long double step = static_cast<long double>(keep + epsilon) - static_cast<long double>(keep - epsilon);
    const double numeric = static_cast<double>((up - down) / step);
    const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), 1e-8});
    worst = std::max(worst, std::abs(analytic[i] - numeric) / denom);
  }
  return worst;
}

// ---------------------------------------------------------------------------
// JSON: architecture, shapes, row-major weights.

inline nlohmann::json to_json(const ToyModel& m) {
  const int d = m.input_dim();
  const auto p = m.params();
  nlohmann::json layers = nlohmann::json::array();
  if (m.architecture() == Architecture::linear) {
    layers.push_back({{"name", "output"},
                      {"shape", {1, d}},
                      {"weights", std::vector<double>(p.begin(), p.begin() + d)},
                      {"bias", {p[d]}}});
  } else {
    const int h = m.hidden();
    layers.push_back({{"name", "hidden"},
                      {"activation", "tanh"},
                      {"shape", {h, d}},
                      {"weights", std::vector<double>(p.begin(), p.begin() + h * d)},
                      {"bias", std::vector<double>(p.begin() + h * d, p.begin() + h * d + h)}});
    layers.push_back({{"name", "output"},
                      {"shape", {1, h}},
                      {"weights", std::vector<double>(p.begin() + h * d + h, p.begin() + h * d + 2 * h)},
                      {"bias", {p[h * d + 2 * h]}}});
  }
  return {{"format", "tda-toy-model"},
          {"version", 1},
          {"architecture", to_string(m.architecture())},
          {"input_side", m.side()},
          {"hidden", m.hidden()},
          {"positive_class", m.positive_class()},
          {"negative_class", m.negative_class()},
          {"input_center", std::vector<double>(m.input_center().begin(), m.input_center().end())},
          {"layers", layers}};
}

inline ToyModel model_from_json(const nlohmann::json& j) {
  try {
    const auto arch = parse_architecture(j.at("architecture").get<std::string>());
    ToyModel m(arch, j.at("input_side").get<int>(), j.value("hidden", 0),
               j.at("positive_class").get<std::string>(), j.at("negative_class").get<std::string>());
    std::vector<double> flat;
    for (const auto& layer : j.at("layers")) {
      const auto w = layer.at("weights").get<std::vector<double>>();
      const auto b = layer.at("bias").get<std::vector<double>>();
      const auto shape = layer.at("shape").get<std::vector<int>>();
      if (shape.size() != 2 || w.size() != static_cast<std::size_t>(shape[0]) * shape[1] ||
          b.size() != static_cast<std::size_t>(shape[0]))
        throw ValidationError("model: layer shape does not match weight count");
      flat.insert(flat.end(), w.begin(), w.end());
      flat.insert(flat.end(), b.begin(), b.end());
    }
    if (flat.size() != m.param_count())
      throw ValidationError("model: expected " + std::to_string(m.param_count()) +
                            " parameters, found " + std::to_string(flat.size()));
    std::copy(flat.begin(), flat.end(), m.params().begin());
    if (j.contains("input_center")) m.set_input_center(j["input_center"].get<std::vector<double>>());
    if (!m.finite()) throw ValidationError("model: non-finite parameter");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("model: ") + e.what());
  }
}

}  // namespace tda
