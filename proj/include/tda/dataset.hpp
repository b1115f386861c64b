#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "tda/bias_metrics.hpp"
#include "tda/error.hpp"
#include "tda/image.hpp"
#include "tda/png_io.hpp"
#include "tda/text.hpp"

namespace tda {

struct LabeledImage {
  std::string sample_id;
  std::string label;
  RasterImage image;
};

struct Dataset {
  std::vector<std::string> classes;  // {c1, c2}
  std::vector<LabeledImage> samples;

  std::size_t count(const std::string& label) const {
    std::size_t n = 0;
    for (const auto& s : samples) n += s.label == label;
    return n;
  }
};

// labels.csv: sample_id,class_label. An optional "# classes: a,b" line
// fixes the class order.
inline std::pair<std::vector<std::string>, std::vector<std::pair<std::string, std::string>>>
parse_labels(std::string_view content) {
  std::vector<std::string> classes;
  std::vector<std::pair<std::string, std::string>> rows;
  bool header = false;
  std::size_t line_no = 0;
  for (auto line : text::split(content, '\n')) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto t = text::trim(line);
    if (t.empty()) continue;
    if (t.front() == '#') {
      const auto body = text::trim(std::string_view(t).substr(1));
      if (body.rfind("classes:", 0) == 0)
        for (const auto& c : text::split(std::string_view(body).substr(8), ','))
          if (auto tc = text::trim(c); !tc.empty()) classes.push_back(tc);
      continue;
    }
    const auto f = text::parse_csv_line(line, line_no);
    if (!header) {
      if (f.size() != 2 || text::trim(f[0]) != "sample_id" || text::trim(f[1]) != "class_label")
        throw ValidationError("line " + std::to_string(line_no) +
                              ": expected header 'sample_id,class_label'");
      header = true;
      continue;
    }
    if (f.size() != 2)
      throw ValidationError("line " + std::to_string(line_no) + ": expected 2 fields");
    rows.emplace_back(text::trim(f[0]), text::trim(f[1]));
    if (std::find(classes.begin(), classes.end(), rows.back().second) == classes.end()) {
      if (!classes.empty() && classes.size() >= 2)
        throw ValidationError("line " + std::to_string(line_no) + ": unknown class '" +
                              rows.back().second + "'");
      classes.push_back(rows.back().second);
    }
  }
  return {classes, rows};
}

inline std::string format_labels(const Dataset& d) {
  std::string out = "# classes: " + (d.classes.size() == 2 ? d.classes[0] + "," + d.classes[1] : "") +
                    "\nsample_id,class_label\n";
  for (const auto& s : d.samples) out += text::csv_field(s.sample_id) + "," + text::csv_field(s.label) + "\n";
  return out;
}

// Images are <images_dir>/<sample_id>.png.
inline Dataset load_dataset(const std::filesystem::path& images_dir,
                            const std::filesystem::path& labels_csv) {
  std::vector<std::string> classes;
  std::vector<std::pair<std::string, std::string>> rows;
  try {
    std::tie(classes, rows) = parse_labels(text::read_file(labels_csv));
  } catch (const ValidationError& e) {
    throw ValidationError(labels_csv.string() + ": " + e.what());
  }
  if (classes.size() != 2)
    throw ValidationError(labels_csv.string() + ": expected exactly 2 classes, found " +
                          std::to_string(classes.size()));
  Dataset d;
  d.classes = classes;
  d.samples.reserve(rows.size());
  for (auto& [id, label] : rows)
    d.samples.push_back({id, label, png::read_rgb(images_dir / (id + ".png"))});
  return d;
}

inline void write_dataset(const std::filesystem::path& dir, const Dataset& d, const Manifest& m) {
  std::error_code ec;
  std::filesystem::create_directories(dir / "images", ec);
  if (ec) throw IoError("cannot create " + (dir / "images").string() + ": " + ec.message());
  for (const auto& s : d.samples) png::write_rgb(dir / "images" / (s.sample_id + ".png"), s.image);
  text::write_file(dir / "labels.csv", format_labels(d));
  text::write_file(dir / "manifest.csv", format_manifest(m));
}

}  // namespace tda
