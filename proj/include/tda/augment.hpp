#pragma once

// Deterministic compositing primitives for inserting bias artifacts:
// black-frame overlay, ruler transfer through a segmentation mask, and
// glasses placement at eye level. No randomness lives here.

#include <cmath>
#include <filesystem>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "tda/error.hpp"
#include "tda/image.hpp"
#include "tda/png_io.hpp"
#include "tda/text.hpp"

namespace tda {

enum class ArtifactKind { frame, ruler, glasses };
enum class Split { train, eval };

inline std::string_view to_string(ArtifactKind k) {
  switch (k) {
    case ArtifactKind::frame:
      return "frame";
    case ArtifactKind::ruler:
      return "ruler";
    case ArtifactKind::glasses:
      return "glasses";
  }
  return "?";
}

inline std::string_view to_string(Split s) { return s == Split::train ? "train" : "eval"; }

inline ArtifactKind parse_artifact_kind(std::string_view s) {
  const auto t = text::lower(text::trim(s));
  if (t == "frame") return ArtifactKind::frame;
  if (t == "ruler") return ArtifactKind::ruler;
  if (t == "glasses") return ArtifactKind::glasses;
  throw ValidationError("unknown artifact kind '" + std::string(s) +
                        "' (expected frame, ruler or glasses)");
}

inline Split parse_split(std::string_view s) {
  const auto t = text::lower(text::trim(s));
  if (t == "train") return Split::train;
  if (t == "eval") return Split::eval;
  throw ValidationError("unknown split '" + std::string(s) + "' (expected train or eval)");
}

struct GeometricTransform {
  double scale = 1.0;
  double rotation_deg = 0.0;  // rotates +x toward +y (clockwise on screen)
  double dx = 0.0;
  double dy = 0.0;

  static GeometricTransform identity() { return {}; }
  friend bool operator==(const GeometricTransform&, const GeometricTransform&) = default;
};

struct ArtifactAsset {
  std::string asset_id;
  ArtifactKind kind = ArtifactKind::frame;
  Split split = Split::train;
  BinaryMask mask;
  std::optional<RasterImage> source;  // ruler only
  Rgb color{0, 0, 0};                 // glasses fill

  void validate() const {
    if (kind == ArtifactKind::ruler) {
      if (!source)
        throw ValidationError("malformed asset '" + asset_id + "': ruler asset has no source image");
      if (source->dims() != mask.dims())
        throw ValidationError("malformed asset '" + asset_id +
                              "': ruler source and mask dimensions differ");
    } else if (source) {
      throw ValidationError("malformed asset '" + asset_id + "': only ruler assets carry a source");
    }
  }
};

// ---------------------------------------------------------------------------
// Warping
//
// The source raster is stretched onto the target rectangle, then scaled
// and rotated about the centre and translated. Pixel (i, j) has its centre
// at (i + 0.5, j + 0.5). Each target pixel is pulled back through the
// inverse map; masks take the nearest source pixel, images are bilinearly
// interpolated. Anything mapping outside the source reads as 0.

namespace detail {

struct InverseMap {
  double a, b, c, d;  // 2x2 linear part, row-major
  double tx, ty;      // target-space offset (centre + translation)
  double sx, sy;      // source centre

  std::pair<double, double> operator()(int i, int j) const {
    const double u = (i + 0.5) - tx;
    const double v = (j + 0.5) - ty;
    return {a * u + b * v + sx, c * u + d * v + sy};
  }
};

inline InverseMap make_inverse(const GeometricTransform& t, Dims src, Dims dst) {
  if (!(t.scale > 0.0) || !std::isfinite(t.scale))
    throw ValidationError("warp: scale must be positive, got " + std::to_string(t.scale));
  if (!std::isfinite(t.rotation_deg) || !std::isfinite(t.dx) || !std::isfinite(t.dy))
    throw ValidationError("warp: transform parameters must be finite");
  if (dst.width <= 0 || dst.height <= 0)
    throw ValidationError("warp: target dimensions must be positive");

  double deg = std::fmod(t.rotation_deg, 360.0);
  if (deg < 0) deg += 360.0;
  double cs = 1.0, sn = 0.0;
  // Quarter turns are exact so that 90/180/270 degree warps stay lossless.
  if (deg == 90.0) {
    cs = 0.0;
    sn = 1.0;
  } else if (deg == 180.0) {
    cs = -1.0;
  } else if (deg == 270.0) {
    cs = 0.0;
    sn = -1.0;
  } else if (deg != 0.0) {
    const double rad = deg * std::numbers::pi / 180.0;
    cs = std::cos(rad);
    sn = std::sin(rad);
  }
  // Forward linear part: R * S * F, F = diag(dst/src).
  const double fx = static_cast<double>(dst.width) / src.width;
  const double fy = static_cast<double>(dst.height) / src.height;
  // Inverse: F^-1 * S^-1 * R^T
  const double ix = 1.0 / (fx * t.scale);
  const double iy = 1.0 / (fy * t.scale);
  InverseMap m{};
  m.a = ix * cs;
  m.b = ix * sn;
  m.c = -iy * sn;
  m.d = iy * cs;
  m.tx = dst.width / 2.0 + t.dx;
  m.ty = dst.height / 2.0 + t.dy;
  m.sx = src.width / 2.0;
  m.sy = src.height / 2.0;
  return m;
}

}  // namespace detail

inline BinaryMask warp(const BinaryMask& mask, const GeometricTransform& t, Dims target) {
  const auto inv = detail::make_inverse(t, mask.dims(), target);
  BinaryMask out(target.width, target.height);
  for (int j = 0; j < target.height; ++j) {
    for (int i = 0; i < target.width; ++i) {
      const auto [sx, sy] = inv(i, j);
      const double fx = std::floor(sx);
      const double fy = std::floor(sy);
      if (fx < 0 || fy < 0 || fx >= mask.width() || fy >= mask.height()) continue;
      if (mask.at(static_cast<int>(fx), static_cast<int>(fy))) out.set(i, j, true);
    }
  }
  return out;
}

inline RasterImage warp(const RasterImage& img, const GeometricTransform& t, Dims target) {
  const auto inv = detail::make_inverse(t, img.dims(), target);
  RasterImage out(target.width, target.height);
  auto sample = [&](int x, int y, int ch) -> double {
    if (x < 0 || y < 0 || x >= img.width() || y >= img.height()) return 0.0;
    return img.px(x, y)[ch];
  };
  for (int j = 0; j < target.height; ++j) {
    for (int i = 0; i < target.width; ++i) {
      const auto [sx, sy] = inv(i, j);
      const double u = sx - 0.5;
      const double v = sy - 0.5;
      const double u0 = std::floor(u);
      const double v0 = std::floor(v);
      if (u0 < -1 || v0 < -1 || u0 >= img.width() || v0 >= img.height()) continue;
      const int x0 = static_cast<int>(u0);
      const int y0 = static_cast<int>(v0);
      const double wx = u - u0;
      const double wy = v - v0;
      auto* dst = out.px(i, j);
      for (int ch = 0; ch < 3; ++ch) {
        const double top = sample(x0, y0, ch) * (1 - wx) + sample(x0 + 1, y0, ch) * wx;
        const double bot = sample(x0, y0 + 1, ch) * (1 - wx) + sample(x0 + 1, y0 + 1, ch) * wx;
        const double val = std::nearbyint(top * (1 - wy) + bot * wy);
        dst[ch] = static_cast<std::uint8_t>(std::clamp(val, 0.0, 255.0));
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Insertions

inline void require_kind(const ArtifactAsset& asset, ArtifactKind expected) {
  if (asset.kind != expected)
    throw ValidationError("kind mismatch: asset '" + asset.asset_id + "' is " +
                          std::string(to_string(asset.kind)) + ", expected " +
                          std::string(to_string(expected)));
}

inline RasterImage apply_frame(const RasterImage& image, const ArtifactAsset& asset,
                               const GeometricTransform& t) {
  require_kind(asset, ArtifactKind::frame);
  const auto support = warp(asset.mask, t, image.dims());
  RasterImage out = image;
  for (int y = 0; y < image.height(); ++y)
    for (int x = 0; x < image.width(); ++x)
      if (support.at(x, y)) out.set(x, y, {0, 0, 0});
  return out;
}

// Hard copy: masked pixels take the warped source value, no blending.
inline RasterImage transfer_artifact(const RasterImage& target, const ArtifactAsset& asset,
                                     const GeometricTransform& t) {
  require_kind(asset, ArtifactKind::ruler);
  asset.validate();
  const auto support = warp(asset.mask, t, target.dims());
  const auto src = warp(*asset.source, t, target.dims());
  RasterImage out = target;
  for (int y = 0; y < target.height(); ++y)
    for (int x = 0; x < target.width(); ++x)
      if (support.at(x, y)) out.set(x, y, src.at(x, y));
  return out;
}

inline constexpr double kDefaultGlassesFraction = 0.6;

// The glasses mask scaled to `horizontal_fraction` of the image width
// (aspect preserved), centred horizontally, with its vertical centre on
// row floor(height / 3). Rows falling outside the image are clipped.
inline BinaryMask glasses_support(Dims image, const ArtifactAsset& asset,
                                  double horizontal_fraction) {
  if (!(horizontal_fraction > 0.0 && horizontal_fraction <= 1.0))
    throw ValidationError("place_glasses: horizontal_fraction must be in (0, 1]");
  const auto& m = asset.mask;
  const int sw = std::max(1, static_cast<int>(std::lround(horizontal_fraction * image.width)));
  const int sh = std::max(
      1, static_cast<int>(std::lround(static_cast<double>(m.height()) * sw / m.width())));
  if (sh > image.height)
    throw ValidationError("placement overflow: glasses asset '" + asset.asset_id + "' scales to " +
                          std::to_string(sh) + " rows, image has " +
                          std::to_string(image.height));
  const int left = image.width / 2 - sw / 2;
  const int top = image.height / 3 - sh / 2;
  BinaryMask out(image.width, image.height);
  for (int j = 0; j < sh; ++j) {
    const int y = top + j;
    if (y < 0 || y >= image.height) continue;
    const int src_y = std::min(m.height() - 1, static_cast<int>((j + 0.5) * m.height() / sh));
    for (int i = 0; i < sw; ++i) {
      const int x = left + i;
      if (x < 0 || x >= image.width) continue;
      const int src_x = std::min(m.width() - 1, static_cast<int>((i + 0.5) * m.width() / sw));
      if (m.at(src_x, src_y)) out.set(x, y, true);
    }
  }
  return out;
}

inline RasterImage place_glasses(const RasterImage& face, const ArtifactAsset& asset,
                                 double horizontal_fraction = kDefaultGlassesFraction) {
  require_kind(asset, ArtifactKind::glasses);
  const auto support = glasses_support(face.dims(), asset, horizontal_fraction);
  RasterImage out = face;
  for (int y = 0; y < face.height(); ++y)
    for (int x = 0; x < face.width(); ++x)
      if (support.at(x, y)) out.set(x, y, asset.color);
  return out;
}

// Pixels an insertion may touch, in image coordinates.
inline BinaryMask insertion_support(Dims image, const ArtifactAsset& asset,
                                    const GeometricTransform& t,
                                    double glasses_fraction = kDefaultGlassesFraction) {
  if (asset.kind == ArtifactKind::glasses) return glasses_support(image, asset, glasses_fraction);
  return warp(asset.mask, t, image);
}

// Dispatches on asset kind. Glasses ignore the transform.
inline RasterImage insert_artifact(const RasterImage& image, const ArtifactAsset& asset,
                                   const GeometricTransform& t,
                                   double glasses_fraction = kDefaultGlassesFraction) {
  switch (asset.kind) {
    case ArtifactKind::frame:
      return apply_frame(image, asset, t);
    case ArtifactKind::ruler:
      return transfer_artifact(image, asset, t);
    case ArtifactKind::glasses:
      return place_glasses(image, asset, glasses_fraction);
  }
  return image;
}

// ---------------------------------------------------------------------------
// Asset index
//
// {"assets": [{"asset_id": "frame_train_0", "kind": "frame", "split": "train",
//              "mask": "frame_train_0.png", "source": null, "color": [0,0,0]}]}
// Paths are relative to the index file.

inline std::vector<ArtifactAsset> load_asset_index(const std::filesystem::path& index_path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text::read_file(index_path));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(index_path.string() + ": " + e.what());
  }
  const auto base = index_path.parent_path();
  std::vector<ArtifactAsset> assets;
  try {
    for (const auto& a : j.at("assets")) {
      ArtifactAsset asset;
      asset.asset_id = a.at("asset_id").get<std::string>();
      asset.kind = parse_artifact_kind(a.at("kind").get<std::string>());
      asset.split = parse_split(a.at("split").get<std::string>());
      asset.mask = png::read_mask(base / a.at("mask").get<std::string>());
      if (a.contains("source") && !a["source"].is_null())
        asset.source = png::read_rgb(base / a["source"].get<std::string>());
      if (a.contains("color")) {
        const auto c = a["color"].get<std::vector<int>>();
        if (c.size() != 3) throw ValidationError("asset '" + asset.asset_id + "': color needs 3 values");
        for (int k = 0; k < 3; ++k) asset.color[k] = static_cast<std::uint8_t>(std::clamp(c[k], 0, 255));
      }
      asset.validate();
      for (const auto& prev : assets)
        if (prev.asset_id == asset.asset_id)
          throw ValidationError("duplicate asset_id '" + asset.asset_id + "'");
      assets.push_back(std::move(asset));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(index_path.string() + ": " + e.what());
  }
  return assets;
}

// Writes masks (and ruler sources) as PNGs next to index.json.
inline void save_asset_index(const std::filesystem::path& dir,
                             const std::vector<ArtifactAsset>& assets) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string());
  nlohmann::json list = nlohmann::json::array();
  for (const auto& a : assets) {
    a.validate();
    const std::string mask_file = a.asset_id + "_mask.png";
    png::write_mask(dir / mask_file, a.mask);
    nlohmann::json e = {{"asset_id", a.asset_id},
                        {"kind", to_string(a.kind)},
                        {"split", to_string(a.split)},
                        {"mask", mask_file},
                        {"source", nullptr}};
    if (a.source) {
      const std::string src_file = a.asset_id + "_source.png";
      png::write_rgb(dir / src_file, *a.source);
      e["source"] = src_file;
    }
    if (a.kind == ArtifactKind::glasses) e["color"] = {a.color[0], a.color[1], a.color[2]};
    list.push_back(std::move(e));
  }
  text::write_file(dir / "index.json", nlohmann::json{{"assets", list}}.dump(2) + "\n");
}

inline std::vector<const ArtifactAsset*> select_assets(const std::vector<ArtifactAsset>& pool,
                                                       ArtifactKind kind, Split split) {
  std::vector<const ArtifactAsset*> out;
  for (const auto& a : pool)
    if (a.kind == kind && a.split == split) out.push_back(&a);
  return out;
}

}  // namespace tda
