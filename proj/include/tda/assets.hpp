#pragma once

// Procedurally drawn artifact pools, used when no annotated asset
// collection is at hand. Frames and rulers keep clear of the central
// region of the image even after the largest shrink (scale 0.8) and any
// rotation, so a classifier reading only the centre is unaffected by them.

#include <cmath>
#include <string>
#include <vector>

#include "tda/augment.hpp"
#include "tda/rng.hpp"

namespace tda {

struct AssetPoolSpec {
  int size = 64;  // frame/ruler masks are size x size
  int frames_train = 6;
  int frames_eval = 5;
  int rulers_train = 6;
  int rulers_eval = 5;
  int glasses_train = 30;
  int glasses_eval = 8;
  std::uint64_t seed = 7;
};

namespace detail {

// Elliptical vignette: everything outside the ellipse is frame.
inline BinaryMask vignette_mask(int size, double rx, double ry) {
  BinaryMask m(size, size);
  const double c = size / 2.0;
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      const double u = (x + 0.5 - c) / (rx * size);
      const double v = (y + 0.5 - c) / (ry * size);
      if (u * u + v * v > 1.0) m.set(x, y, true);
    }
  return m;
}

// Rectangular border; thickness per side as a fraction of size (0 = none).
inline BinaryMask border_mask(int size, double left, double top, double right, double bottom) {
  BinaryMask m(size, size);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      const double fx = (x + 0.5) / size;
      const double fy = (y + 0.5) / size;
      if (fx < left || fy < top || fx > 1.0 - right || fy > 1.0 - bottom) m.set(x, y, true);
    }
  return m;
}

// Ruler: a straight band at distance `offset` (fraction of size) from the
// centre, at angle `angle_deg`, `thickness` wide; ticks are dark notches.
inline ArtifactAsset ruler_asset(std::string id, Split split, int size, double offset,
                                 double thickness, double angle_deg, int tick_spacing,
                                 Rgb body, CounterRng& rng) {
  ArtifactAsset a;
  a.asset_id = std::move(id);
  a.kind = ArtifactKind::ruler;
  a.split = split;
  a.mask = BinaryMask(size, size);
  RasterImage src(size, size, Rgb{150, 120, 105});
  const double rad = angle_deg * std::numbers::pi / 180.0;
  const double nx = std::cos(rad), ny = std::sin(rad);  // band normal
  const double c = size / 2.0;
  const double d0 = offset * size;
  const double d1 = (offset + thickness) * size;
  const int jitter = static_cast<int>(rng.below(3));
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      const double px = x + 0.5 - c, py = y + 0.5 - c;
      const double dist = px * nx + py * ny;
      if (dist < d0 || dist > d1) continue;
      a.mask.set(x, y, true);
      const double along = -px * ny + py * nx + size;
      const int pos = static_cast<int>(std::floor(along)) + jitter;
      const bool tick = pos % tick_spacing == 0 && dist < d0 + 0.6 * (d1 - d0);
      src.set(x, y, tick ? Rgb{30, 30, 30} : body);
    }
  a.source = std::move(src);
  return a;
}

// Glasses silhouette on a 48x16 canvas: two lenses and a bridge. Rim-only
// variants leave the lens interior transparent.
inline ArtifactAsset glasses_asset(std::string id, Split split, CounterRng& rng) {
  constexpr int W = 48, H = 16;
  ArtifactAsset a;
  a.asset_id = std::move(id);
  a.kind = ArtifactKind::glasses;
  a.split = split;
  a.mask = BinaryMask(W, H);
  const double rx = rng.uniform(8.0, 11.0);
  const double ry = rng.uniform(5.0, 7.5);
  const bool rim_only = rng.uniform() < 0.5;
  const double rim = rng.uniform(1.2, 2.2);
  const double lens_cx[2] = {W / 2.0 - 2.0 - rx, W / 2.0 + 2.0 + rx};
  const double cy = H / 2.0;
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x) {
      bool on = false;
      for (double cx : lens_cx) {
        const double u = (x + 0.5 - cx) / rx, v = (y + 0.5 - cy) / ry;
        const double r = std::sqrt(u * u + v * v);
        const double inner = 1.0 - rim / std::min(rx, ry);
        if (r <= 1.0 && (!rim_only || r >= inner)) on = true;
      }
      // bridge
      if (std::abs(x + 0.5 - W / 2.0) <= 2.5 && std::abs(y + 0.5 - (cy - 1.5)) <= 1.0) on = true;
      if (on) a.mask.set(x, y, true);
    }
  const auto shade = static_cast<std::uint8_t>(rng.below(40));
  a.color = {shade, shade, shade};
  return a;
}

}  // namespace detail

inline std::vector<ArtifactAsset> make_builtin_assets(const AssetPoolSpec& spec) {
  std::vector<ArtifactAsset> out;
  auto rng = make_rng(spec.seed);
  const int s = spec.size;

  // Frames: vignettes with radii >= 0.42 and borders <= 0.08 thick.
  auto add_frames = [&](Split split, int count, int variant0) {
    for (int k = 0; k < count; ++k) {
      ArtifactAsset a;
      a.asset_id = "frame_" + std::string(to_string(split)) + "_" + std::to_string(k);
      a.kind = ArtifactKind::frame;
      a.split = split;
      const int v = variant0 + k;
      switch (v % 4) {
        case 0:
          a.mask = detail::vignette_mask(s, 0.42 + 0.02 * (v % 5), 0.42 + 0.02 * ((v + 2) % 5));
          break;
        case 1:
          a.mask = detail::border_mask(s, 0.05 + 0.01 * (v % 3), 0.05 + 0.01 * (v % 3),
                                       0.05 + 0.01 * (v % 3), 0.05 + 0.01 * (v % 3));
          break;
        case 2:
          a.mask = detail::vignette_mask(s, 0.47 + 0.01 * (v % 4), 0.47 + 0.01 * (v % 4));
          break;
        default:
          a.mask = detail::border_mask(s, 0.08, 0.03 + 0.01 * (v % 3), 0.08, 0.03 + 0.01 * (v % 3));
          break;
      }
      out.push_back(std::move(a));
    }
  };
  add_frames(Split::train, spec.frames_train, 0);
  add_frames(Split::eval, spec.frames_eval, 101);

  auto add_rulers = [&](Split split, int count) {
    for (int k = 0; k < count; ++k) {
      const double angle = rng.uniform(0.0, 360.0);
      const double offset = rng.uniform(0.38, 0.42);
      const double thick = rng.uniform(0.06, 0.09);
      const int spacing = 3 + static_cast<int>(rng.below(3));
      const Rgb body{static_cast<std::uint8_t>(200 + rng.below(50)),
                     static_cast<std::uint8_t>(190 + rng.below(50)),
                     static_cast<std::uint8_t>(120 + rng.below(100))};
      out.push_back(detail::ruler_asset(
          "ruler_" + std::string(to_string(split)) + "_" + std::to_string(k), split, s, offset,
          thick, angle, spacing, body, rng));
    }
  };
  add_rulers(Split::train, spec.rulers_train);
  add_rulers(Split::eval, spec.rulers_eval);

  for (int k = 0; k < spec.glasses_train; ++k)
    out.push_back(detail::glasses_asset("glasses_train_" + std::to_string(k), Split::train, rng));
  for (int k = 0; k < spec.glasses_eval; ++k)
    out.push_back(detail::glasses_asset("glasses_eval_" + std::to_string(k), Split::eval, rng));
  return out;
}

}  // namespace tda
