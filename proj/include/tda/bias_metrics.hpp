#pragma once

// Bias identification statistics over an annotated dataset manifest:
// per-class artifact cardinality, artifact ratio, and the class ratio
// between the two classes' artifact ratios.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "tda/error.hpp"
#include "tda/text.hpp"

namespace tda {

inline constexpr std::string_view kNoneTag = "none";

struct AnnotationRecord {
  std::string sample_id;
  std::string class_label;
  std::set<std::string> artifacts;  // empty means "none"
};

// Tags are trimmed and lower-cased; the literal "none" is the empty set.
inline std::string normalize_tag(std::string_view tag) { return text::lower(text::trim(tag)); }

inline std::set<std::string> parse_tag_list(std::string_view field) {
  std::set<std::string> tags;
  for (const auto& part : text::split(field, ';')) {
    auto t = normalize_tag(part);
    if (!t.empty() && t != kNoneTag) tags.insert(std::move(t));
  }
  return tags;
}

class Manifest {
 public:
  Manifest() = default;

  // `classes` fixes the class order (c1, c2); `vocabulary` empty means any tag.
  Manifest(std::vector<std::string> classes, std::vector<std::string> vocabulary,
           std::vector<AnnotationRecord> records)
      : classes_(std::move(classes)), vocabulary_(std::move(vocabulary)) {
    for (auto& v : vocabulary_) v = normalize_tag(v);
    for (auto& r : records) add(std::move(r));
  }

  void add(AnnotationRecord r) {
    r.class_label = text::trim(r.class_label);
    if (r.sample_id.empty()) throw ValidationError("manifest: empty sample_id");
    if (!ids_.insert(r.sample_id).second)
      throw ValidationError("manifest: duplicate sample_id '" + r.sample_id + "'");
    if (!declared_classes_) {
      if (std::find(classes_.begin(), classes_.end(), r.class_label) == classes_.end())
        classes_.push_back(r.class_label);
    } else {
      check_class(r.class_label);
    }
    std::set<std::string> tags;
    for (const auto& t : r.artifacts) {
      auto n = normalize_tag(t);
      if (n.empty() || n == kNoneTag) continue;
      if (!vocabulary_.empty() &&
          std::find(vocabulary_.begin(), vocabulary_.end(), n) == vocabulary_.end())
        throw ValidationError("manifest: sample '" + r.sample_id + "' has tag '" + n +
                              "' outside the declared vocabulary");
      tags.insert(std::move(n));
    }
    r.artifacts = std::move(tags);
    records_.push_back(std::move(r));
  }

  // Once declared, records with other labels are rejected.
  void declare_classes(std::vector<std::string> classes) {
    for (auto& c : classes) c = text::trim(c);
    for (const auto& r : records_)
      if (std::find(classes.begin(), classes.end(), r.class_label) == classes.end())
        throw ValidationError("manifest: record '" + r.sample_id + "' has undeclared class '" +
                              r.class_label + "'");
    classes_ = std::move(classes);
    declared_classes_ = true;
  }

  void check_class(const std::string& label) const {
    if (std::find(classes_.begin(), classes_.end(), label) == classes_.end()) {
      std::string known;
      for (const auto& c : classes_) known += (known.empty() ? "" : ", ") + c;
      throw ValidationError("unknown class label '" + label + "' (declared: " + known + ")");
    }
  }

  const std::vector<std::string>& classes() const { return classes_; }
  const std::vector<std::string>& vocabulary() const { return vocabulary_; }
  const std::vector<AnnotationRecord>& records() const { return records_; }
  bool empty() const { return records_.empty(); }

  std::size_t class_total(const std::string& label) const {
    return static_cast<std::size_t>(std::count_if(
        records_.begin(), records_.end(), [&](const auto& r) { return r.class_label == label; }));
  }

 private:
  std::vector<std::string> classes_;
  std::vector<std::string> vocabulary_;
  std::vector<AnnotationRecord> records_;
  std::set<std::string> ids_;
  bool declared_classes_ = false;
};

// ---------------------------------------------------------------------------
// Statistics

inline std::size_t artifact_cardinality(const Manifest& m, const std::string& cls,
                                        std::string_view artifact) {
  if (m.empty()) return 0;
  m.check_class(cls);
  const auto tag = normalize_tag(artifact);
  std::size_t n = 0;
  for (const auto& r : m.records()) {
    if (r.class_label != cls) continue;
    if (tag == kNoneTag ? r.artifacts.empty() : r.artifacts.contains(tag)) ++n;
  }
  return n;
}

inline double artifact_ratio(const Manifest& m, const std::string& cls, std::string_view artifact) {
  if (!m.empty()) m.check_class(cls);
  const auto total = m.class_total(cls);
  if (total == 0)
    throw ComputationError("artifact_ratio: division by zero, class '" + cls + "' has no records");
  return static_cast<double>(artifact_cardinality(m, cls, artifact)) / static_cast<double>(total);
}

struct ClassRatio {
  enum class Kind { finite, infinite, undefined };
  Kind kind = Kind::undefined;
  double value = std::numeric_limits<double>::quiet_NaN();

  bool finite() const { return kind == Kind::finite; }

  std::string display() const {
    switch (kind) {
      case Kind::finite:
        return text::fixed(value, 2);
      case Kind::infinite:
        return "inf";
      case Kind::undefined:
        break;
    }
    return "undefined";
  }
};

inline ClassRatio class_ratio(double ratio_c1, double ratio_c2) {
  if (!(ratio_c1 >= 0.0 && ratio_c1 <= 1.0) || !(ratio_c2 >= 0.0 && ratio_c2 <= 1.0))
    throw ValidationError("class_ratio: inputs must lie in [0,1]");
  if (ratio_c2 > 0.0) return {ClassRatio::Kind::finite, ratio_c1 / ratio_c2};
  if (ratio_c1 > 0.0)
    return {ClassRatio::Kind::infinite, std::numeric_limits<double>::infinity()};
  return {};
}

struct BiasStatsRow {
  std::string artifact;
  std::size_t count_c1 = 0;
  double ratio_c1 = 0.0;
  std::size_t count_c2 = 0;
  double ratio_c2 = 0.0;
  ClassRatio class_ratio;
};

struct BiasReport {
  std::vector<std::string> classes;  // {c1, c2}, may be empty for an empty manifest
  std::vector<BiasStatsRow> rows;
  std::size_t total_c1 = 0;
  std::size_t total_c2 = 0;
  bool empty_manifest = false;
};

// Tag order: declared vocabulary, else lexicographic; "none" last.
inline std::vector<std::string> report_tags(const Manifest& m) {
  std::vector<std::string> tags;
  if (!m.vocabulary().empty()) {
    for (const auto& v : m.vocabulary())
      if (v != kNoneTag && std::find(tags.begin(), tags.end(), v) == tags.end()) tags.push_back(v);
  } else {
    std::set<std::string> seen;
    for (const auto& r : m.records()) seen.insert(r.artifacts.begin(), r.artifacts.end());
    tags.assign(seen.begin(), seen.end());
  }
  tags.emplace_back(kNoneTag);
  return tags;
}

inline BiasReport bias_report(const Manifest& m) {
  BiasReport rep;
  if (m.empty()) {
    rep.empty_manifest = true;
    if (m.classes().size() == 2) rep.classes = m.classes();
    return rep;
  }
  if (m.classes().size() != 2) {
    std::string found;
    for (const auto& c : m.classes()) found += (found.empty() ? "" : ", ") + c;
    throw ValidationError("bias_report: exactly 2 classes supported, found " +
                          std::to_string(m.classes().size()) + " (" + found + ")");
  }
  rep.classes = m.classes();
  const auto& c1 = rep.classes[0];
  const auto& c2 = rep.classes[1];
  rep.total_c1 = m.class_total(c1);
  rep.total_c2 = m.class_total(c2);
  for (const auto& tag : report_tags(m)) {
    BiasStatsRow row;
    row.artifact = tag;
    row.count_c1 = artifact_cardinality(m, c1, tag);
    row.count_c2 = artifact_cardinality(m, c2, tag);
    row.ratio_c1 = artifact_ratio(m, c1, tag);
    row.ratio_c2 = artifact_ratio(m, c2, tag);
    row.class_ratio = class_ratio(row.ratio_c1, row.ratio_c2);
    rep.rows.push_back(std::move(row));
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Manifest CSV
//
//   # classes: malignant,benign      (optional, fixes c1/c2 order)
//   # artifacts: frame,ruler,hair    (optional, closes the tag vocabulary)
//   sample_id,class_label,artifacts
//   img_0001,malignant,frame;ruler
//   img_0002,benign,

inline Manifest parse_manifest(std::string_view content) {
  Manifest m;
  std::vector<std::string> classes;
  std::vector<std::string> vocabulary;
  bool header_seen = false;
  std::vector<AnnotationRecord> pending;
  std::size_t line_no = 0;
  for (auto line : text::split(content, '\n')) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto t = text::trim(line);
    if (t.empty()) continue;
    if (t.front() == '#') {
      const auto body = text::trim(std::string_view(t).substr(1));
      const auto colon = body.find(':');
      if (colon == std::string::npos) continue;
      const auto key = text::lower(text::trim(std::string_view(body).substr(0, colon)));
      const auto values = text::split(std::string_view(body).substr(colon + 1), ',');
      auto& dest = key == "classes" ? classes : vocabulary;
      if (key != "classes" && key != "artifacts") continue;
      for (const auto& v : values)
        if (auto tv = text::trim(v); !tv.empty()) dest.push_back(tv);
      continue;
    }
    auto fields = text::parse_csv_line(line, line_no);
    if (!header_seen) {
      if (fields.size() != 3 || text::trim(fields[0]) != "sample_id" ||
          text::trim(fields[1]) != "class_label" || text::trim(fields[2]) != "artifacts")
        throw ValidationError("line " + std::to_string(line_no) +
                              ": expected header 'sample_id,class_label,artifacts'");
      header_seen = true;
      m = Manifest({}, vocabulary, {});
      if (!classes.empty()) m.declare_classes(classes);
      continue;
    }
    if (fields.size() != 3)
      throw ValidationError("line " + std::to_string(line_no) + ": expected 3 fields, got " +
                            std::to_string(fields.size()));
    AnnotationRecord r{text::trim(fields[0]), text::trim(fields[1]), parse_tag_list(fields[2])};
    if (r.class_label.empty())
      throw ValidationError("line " + std::to_string(line_no) + ": empty class_label");
    try {
      m.add(std::move(r));
    } catch (const ValidationError& e) {
      throw ValidationError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!header_seen) {
    // Header-less empty file is an empty manifest.
    m = Manifest({}, vocabulary, {});
    if (!classes.empty()) m.declare_classes(classes);
  }
  return m;
}

inline Manifest load_manifest(const std::filesystem::path& path) {
  try {
    return parse_manifest(text::read_file(path));
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

inline std::string format_manifest(const Manifest& m) {
  std::string out;
  if (!m.classes().empty()) {
    out += "# classes: ";
    for (std::size_t i = 0; i < m.classes().size(); ++i)
      out += (i ? "," : "") + m.classes()[i];
    out += "\n";
  }
  if (!m.vocabulary().empty()) {
    out += "# artifacts: ";
    for (std::size_t i = 0; i < m.vocabulary().size(); ++i)
      out += (i ? "," : "") + m.vocabulary()[i];
    out += "\n";
  }
  out += "sample_id,class_label,artifacts\n";
  for (const auto& r : m.records()) {
    std::string tags;
    for (const auto& t : r.artifacts) tags += (tags.empty() ? "" : ";") + t;
    out += text::csv_field(r.sample_id) + "," + text::csv_field(r.class_label) + "," +
           text::csv_field(tags) + "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Report rendering

inline nlohmann::json class_ratio_json(const ClassRatio& q) {
  switch (q.kind) {
    case ClassRatio::Kind::finite:
      return q.value;
    case ClassRatio::Kind::infinite:
      return "inf";
    case ClassRatio::Kind::undefined:
      break;
  }
  return nullptr;
}

inline nlohmann::json to_json(const BiasReport& rep) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : rep.rows) {
    rows.push_back({{"artifact", r.artifact},
                    {"count_c1", r.count_c1},
                    {"ratio_c1", r.ratio_c1},
                    {"count_c2", r.count_c2},
                    {"ratio_c2", r.ratio_c2},
                    {"class_ratio", class_ratio_json(r.class_ratio)}});
  }
  return {{"classes", rep.classes},
          {"rows", rows},
          {"totals", {{"c1", rep.total_c1}, {"c2", rep.total_c2}}},
          {"empty", rep.empty_manifest}};
}

// Ratios as percentages with 2 decimals, class ratio with 2 decimals.
inline std::string render_text(const BiasReport& rep) {
  const std::string c1 = rep.classes.size() == 2 ? rep.classes[0] : "c1";
  const std::string c2 = rep.classes.size() == 2 ? rep.classes[1] : "c2";
  std::vector<std::vector<std::string>> cells;
  cells.push_back({"type", "|" + c1 + "|", "Q_artifact", "|" + c2 + "|", "Q_artifact", "Q_class"});
  for (const auto& r : rep.rows)
    cells.push_back({r.artifact, std::to_string(r.count_c1), text::percent(r.ratio_c1),
                     std::to_string(r.count_c2), text::percent(r.ratio_c2),
                     r.class_ratio.display()});
  cells.push_back({"total", std::to_string(rep.total_c1), "", std::to_string(rep.total_c2), "", ""});
  auto out = text::render_table(cells);
  if (rep.empty_manifest) out += "(empty manifest)\n";
  return out;
}

}  // namespace tda
