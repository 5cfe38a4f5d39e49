#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "cxrs/error.hpp"
#include "cxrs/image.hpp"
#include "cxrs/image_io.hpp"
#include "cxrs/rng.hpp"
#include "cxrs/scoring.hpp"

namespace cxrs {

// One metadata CSV row: a single rater's scores for a single image, plus the
// image's demographic fields. Optional fields stay absent when blank.
struct MetadataRow {
  std::string image_id;
  std::string patient_id;
  std::optional<int> age;
  std::optional<std::string> sex;       // male | female
  std::optional<std::string> location;
  std::optional<std::string> view;      // PA | AP
  std::optional<std::string> position;  // upright | supine
  GeographicScore geo;
  OpacityScore opac;
  std::string rater_id;
};

// One image with consensus labels: each label is the across-rater mean of the
// total score, mapped linearly onto [0,1].
struct CxrRecord {
  std::string image_id;
  std::string patient_id;
  std::optional<int> age;
  std::optional<std::string> sex;
  std::optional<std::string> location;
  std::optional<std::string> view;
  std::optional<std::string> position;
  Image pixels;  // empty for metadata-only stubs
  NormalizedScore geo_label{0.0, TargetKind::kGeographic};
  NormalizedScore opac_label{0.0, TargetKind::kOpacity};

  double label(TargetKind kind) const {
    return kind == TargetKind::kGeographic ? geo_label.value : opac_label.value;
  }
};

struct PreprocessConfig {
  double crop_fraction = 0.08;
  int target_width = 224;
  int target_height = 224;

  void validate() const {
    if (!(crop_fraction >= 0.0 && crop_fraction < 0.4)) {
      throw ValidationError("crop_fraction must be in [0, 0.4)");
    }
    if (target_width < 8 || target_height < 8) {
      throw ValidationError("target dimensions must be at least 8 pixels");
    }
  }
};

inline Image preprocess_image(const Image& img, const PreprocessConfig& cfg) {
  cfg.validate();
  Image out = resize_bilinear(crop_borders(img, cfg.crop_fraction), cfg.target_width,
                              cfg.target_height);
  clamp_unit(out);
  return out;
}

namespace detail {

inline const std::vector<std::string>& metadata_columns() {
  static const std::vector<std::string> cols = {
      "image_id", "patient_id", "age",        "sex",       "location", "view",
      "position", "geo_right",  "geo_left",   "opac_right", "opac_left", "rater_id"};
  return cols;
}

// RFC-style CSV split: quoted fields may contain commas and doubled quotes.
inline std::vector<std::string> split_csv_line(const std::string& line, int line_no) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(ch);
      }
    } else if (ch == '"' && cur.empty()) {
      quoted = true;
    } else if (ch == ',') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  if (quoted) {
    throw FormatError("metadata line " + std::to_string(line_no) + ": unterminated quote");
  }
  fields.push_back(cur);
  return fields;
}

inline int parse_int_field(const std::string& s, const char* column, int line_no) {
  std::size_t pos = 0;
  int value = 0;
  try {
    value = std::stoi(s, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != s.size() || s.empty()) {
    throw FormatError("metadata line " + std::to_string(line_no) + ": column '" +
                      std::string(column) + "' value '" + s + "' is not an integer");
  }
  return value;
}

inline std::optional<std::string> enum_field(const std::string& raw,
                                             const std::vector<std::string>& allowed,
                                             const char* column, int line_no) {
  if (raw.empty()) return std::nullopt;
  for (const auto& a : allowed) {
    if (raw == a) return raw;
  }
  std::string legal;
  for (const auto& a : allowed) legal += (legal.empty() ? "" : "|") + a;
  throw FormatError("metadata line " + std::to_string(line_no) + ": column '" +
                    std::string(column) + "' value '" + raw + "' not in {" + legal + "}");
}

}  // namespace detail

// Parses the metadata CSV (documented header, one row per image-rater pair).
// Header problems raise schema errors naming the column; bad cell values
// raise format errors carrying the line number.
inline std::vector<MetadataRow> load_metadata(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open metadata file '" + path + "'");

  std::string line;
  if (!std::getline(f, line)) throw SchemaError("metadata file '" + path + "' is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();

  const auto header = detail::split_csv_line(line, 1);
  const auto& expected = detail::metadata_columns();
  for (const auto& col : expected) {
    if (std::find(header.begin(), header.end(), col) == header.end()) {
      throw SchemaError("metadata is missing required column '" + col + "'");
    }
  }
  for (const auto& col : header) {
    if (std::find(expected.begin(), expected.end(), col) == expected.end()) {
      throw SchemaError("metadata has unknown column '" + col + "'");
    }
  }
  if (header != expected) {
    std::string want;
    for (const auto& c : expected) want += (want.empty() ? "" : ",") + c;
    throw SchemaError("metadata columns must appear in the order: " + want);
  }

  std::vector<MetadataRow> rows;
  int line_no = 1;
  while (std::getline(f, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = detail::split_csv_line(line, line_no);
    if (fields.size() != expected.size()) {
      throw FormatError("metadata line " + std::to_string(line_no) + ": expected " +
                        std::to_string(expected.size()) + " fields, got " +
                        std::to_string(fields.size()));
    }

    MetadataRow row;
    row.image_id = fields[0];
    row.patient_id = fields[1];
    if (row.image_id.empty() || row.patient_id.empty()) {
      throw FormatError("metadata line " + std::to_string(line_no) +
                        ": image_id and patient_id must be non-empty");
    }
    if (!fields[2].empty()) {
      const int age = detail::parse_int_field(fields[2], "age", line_no);
      if (age < 0 || age > 130) {
        throw FormatError("metadata line " + std::to_string(line_no) + ": age " +
                          std::to_string(age) + " out of range");
      }
      row.age = age;
    }
    row.sex = detail::enum_field(fields[3], {"male", "female"}, "sex", line_no);
    if (!fields[4].empty()) row.location = fields[4];
    row.view = detail::enum_field(fields[5], {"PA", "AP"}, "view", line_no);
    row.position = detail::enum_field(fields[6], {"upright", "supine"}, "position", line_no);
    row.geo.right_lung = detail::parse_int_field(fields[7], "geo_right", line_no);
    row.geo.left_lung = detail::parse_int_field(fields[8], "geo_left", line_no);
    row.opac.right_lung = detail::parse_int_field(fields[9], "opac_right", line_no);
    row.opac.left_lung = detail::parse_int_field(fields[10], "opac_left", line_no);
    row.rater_id = fields[11];
    if (row.rater_id.empty()) {
      throw FormatError("metadata line " + std::to_string(line_no) + ": rater_id empty");
    }
    try {
      total_score(row.geo);
      total_score(row.opac);
    } catch (const ValidationError& e) {
      throw FormatError("metadata line " + std::to_string(line_no) + ": " + e.what());
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

// Groups rater rows by image (first-appearance order) into consensus records.
// All rows of an image must agree on the demographic fields.
inline std::vector<CxrRecord> group_records(const std::vector<MetadataRow>& rows) {
  std::vector<CxrRecord> records;
  std::map<std::string, std::size_t> index;
  std::map<std::string, std::set<std::string>> raters_seen;
  std::map<std::string, double> geo_sum, opac_sum;
  std::map<std::string, int> votes;

  for (const auto& row : rows) {
    auto it = index.find(row.image_id);
    if (it == index.end()) {
      CxrRecord rec;
      rec.image_id = row.image_id;
      rec.patient_id = row.patient_id;
      rec.age = row.age;
      rec.sex = row.sex;
      rec.location = row.location;
      rec.view = row.view;
      rec.position = row.position;
      index[row.image_id] = records.size();
      records.push_back(std::move(rec));
    } else {
      const CxrRecord& rec = records[it->second];
      if (rec.patient_id != row.patient_id || rec.age != row.age || rec.sex != row.sex ||
          rec.location != row.location || rec.view != row.view ||
          rec.position != row.position) {
        throw FormatError("metadata rows for image '" + row.image_id +
                          "' disagree on demographic fields");
      }
    }
    if (!raters_seen[row.image_id].insert(row.rater_id).second) {
      throw FormatError("rater '" + row.rater_id + "' scored image '" + row.image_id +
                        "' more than once");
    }
    geo_sum[row.image_id] += total_score(row.geo);
    opac_sum[row.image_id] += total_score(row.opac);
    votes[row.image_id] += 1;
  }

  for (auto& rec : records) {
    const double n = votes[rec.image_id];
    rec.geo_label = normalize_value(geo_sum[rec.image_id] / n, TargetKind::kGeographic);
    rec.opac_label = normalize_value(opac_sum[rec.image_id] / n, TargetKind::kOpacity);
  }
  return records;
}

// Rater panels for one target kind, keyed by image in first-appearance order;
// ratings carry total scores.
inline std::vector<RaterPanel> make_rater_panels(const std::vector<MetadataRow>& rows,
                                                 TargetKind kind) {
  std::vector<RaterPanel> panels;
  std::map<std::string, std::size_t> index;
  for (const auto& row : rows) {
    const int total = kind == TargetKind::kGeographic ? total_score(row.geo)
                                                      : total_score(row.opac);
    auto it = index.find(row.image_id);
    if (it == index.end()) {
      index[row.image_id] = panels.size();
      panels.push_back({row.image_id, {}});
      it = index.find(row.image_id);
    }
    panels[it->second].ratings.emplace_back(row.rater_id, static_cast<double>(total));
  }
  return panels;
}

// Subjects-by-category count table over total scores 0..max_total(kind).
// Inter-rater agreement statistics need the same rater count per image.
inline AgreementTable agreement_table_from_rows(const std::vector<MetadataRow>& rows,
                                                TargetKind kind) {
  const auto panels = make_rater_panels(rows, kind);
  if (panels.empty()) throw ValidationError("no metadata rows to build agreement from");
  const std::size_t raters = panels.front().ratings.size();
  std::vector<std::vector<long long>> counts;
  for (const auto& panel : panels) {
    if (panel.ratings.size() != raters) {
      throw ValidationError("image '" + panel.image_id + "' has " +
                            std::to_string(panel.ratings.size()) + " ratings but '" +
                            panels.front().image_id + "' has " + std::to_string(raters) +
                            "; agreement needs a constant rater count");
    }
    std::vector<long long> row(static_cast<std::size_t>(max_total(kind)) + 1, 0);
    for (const auto& [rater, total] : panel.ratings) {
      row[static_cast<std::size_t>(total)] += 1;
    }
    counts.push_back(std::move(row));
  }
  return make_agreement_table(std::move(counts));
}

struct CategoryCount {
  std::string label;
  std::size_t count = 0;
  double percent = 0.0;  // of the block's denominator, rounded to 0.1
};

struct DatasetSummary {
  std::size_t image_count = 0;
  std::size_t patient_count = 0;
  std::optional<double> age_mean;
  std::optional<double> age_std;
  std::vector<CategoryCount> age_bins;  // patient-level
  std::vector<CategoryCount> sex;       // patient-level
  std::vector<CategoryCount> location;  // patient-level
  std::vector<CategoryCount> view;      // image-level
  std::vector<CategoryCount> position;  // image-level

  std::string to_text() const;
  nlohmann::ordered_json to_json() const;
};

namespace detail {

inline double percent_of(std::size_t count, std::size_t denom) {
  if (denom == 0) return 0.0;
  return std::round(1000.0 * static_cast<double>(count) / static_cast<double>(denom)) / 10.0;
}

inline std::vector<CategoryCount> count_block(
    const std::vector<std::pair<std::string, std::size_t>>& counts, std::size_t denom) {
  std::vector<CategoryCount> out;
  for (const auto& [label, count] : counts) {
    out.push_back({label, count, percent_of(count, denom)});
  }
  return out;
}

inline std::string age_bin_label(int age) {
  if (age < 20) return "<20";
  if (age >= 90) return "90+";
  const int lo = (age / 10) * 10;
  return std::to_string(lo) + "-" + std::to_string(lo + 9);
}

}  // namespace detail

// Demographic and protocol roll-up. Age, sex, and location are tallied per
// patient (first record wins for a patient's fields); view and position per
// image.
inline DatasetSummary summarize(const std::vector<CxrRecord>& records) {
  if (records.empty()) throw ValidationError("cannot summarize an empty record list");

  DatasetSummary s;
  s.image_count = records.size();

  struct PatientInfo {
    std::optional<int> age;
    std::optional<std::string> sex;
    std::optional<std::string> location;
  };
  std::map<std::string, PatientInfo> patients;
  std::vector<std::string> patient_order;
  for (const auto& rec : records) {
    auto [it, inserted] = patients.try_emplace(rec.patient_id);
    if (inserted) {
      patient_order.push_back(rec.patient_id);
      it->second = {rec.age, rec.sex, rec.location};
    } else {
      if (!it->second.age) it->second.age = rec.age;
      if (!it->second.sex) it->second.sex = rec.sex;
      if (!it->second.location) it->second.location = rec.location;
    }
  }
  s.patient_count = patients.size();

  // Age statistics and bins over patients with a known age.
  std::vector<int> ages;
  static const char* kAgeBins[] = {"<20",   "20-29", "30-39", "40-49", "50-59",
                                   "60-69", "70-79", "80-89", "90+"};
  std::map<std::string, std::size_t> age_counts;
  for (const char* bin : kAgeBins) age_counts[bin] = 0;
  std::size_t age_unknown = 0;
  for (const auto& id : patient_order) {
    const auto& p = patients[id];
    if (p.age) {
      ages.push_back(*p.age);
      age_counts[detail::age_bin_label(*p.age)] += 1;
    } else {
      ++age_unknown;
    }
  }
  if (!ages.empty()) {
    double mean = 0.0;
    for (int a : ages) mean += a;
    mean /= static_cast<double>(ages.size());
    s.age_mean = mean;
    if (ages.size() > 1) {
      double ss = 0.0;
      for (int a : ages) ss += (a - mean) * (a - mean);
      s.age_std = std::sqrt(ss / static_cast<double>(ages.size() - 1));
    }
  }
  std::vector<std::pair<std::string, std::size_t>> age_pairs;
  for (const char* bin : kAgeBins) age_pairs.emplace_back(bin, age_counts[bin]);
  age_pairs.emplace_back("Unknown", age_unknown);
  s.age_bins = detail::count_block(age_pairs, s.patient_count);

  auto patient_block = [&](auto getter, std::vector<std::string> known_order) {
    std::map<std::string, std::size_t> counts;
    std::size_t unknown = 0;
    std::vector<std::string> order = std::move(known_order);
    for (const auto& id : patient_order) {
      const auto& value = getter(patients[id]);
      if (!value) {
        ++unknown;
        continue;
      }
      if (counts.find(*value) == counts.end() &&
          std::find(order.begin(), order.end(), *value) == order.end()) {
        order.push_back(*value);
      }
      counts[*value] += 1;
    }
    std::vector<std::pair<std::string, std::size_t>> pairs;
    for (const auto& label : order) pairs.emplace_back(label, counts[label]);
    pairs.emplace_back("Unknown", unknown);
    return detail::count_block(pairs, s.patient_count);
  };
  s.sex = patient_block([](const PatientInfo& p) -> const std::optional<std::string>& {
    return p.sex;
  }, {"male", "female"});
  s.location = patient_block([](const PatientInfo& p) -> const std::optional<std::string>& {
    return p.location;
  }, {});

  auto image_block = [&](auto getter, std::vector<std::string> order) {
    std::map<std::string, std::size_t> counts;
    std::size_t unknown = 0;
    for (const auto& rec : records) {
      const auto& value = getter(rec);
      if (value) {
        counts[*value] += 1;
      } else {
        ++unknown;
      }
    }
    std::vector<std::pair<std::string, std::size_t>> pairs;
    for (const auto& label : order) pairs.emplace_back(label, counts[label]);
    pairs.emplace_back("Unknown", unknown);
    return detail::count_block(pairs, s.image_count);
  };
  s.view = image_block([](const CxrRecord& r) -> const std::optional<std::string>& {
    return r.view;
  }, {"PA", "AP"});
  s.position = image_block([](const CxrRecord& r) -> const std::optional<std::string>& {
    return r.position;
  }, {"upright", "supine"});
  return s;
}

inline std::string DatasetSummary::to_text() const {
  char buf[128];
  std::string out;
  auto line = [&](const std::string& left, const std::string& right) {
    std::snprintf(buf, sizeof(buf), "%-28s %s\n", left.c_str(), right.c_str());
    out += buf;
  };
  auto block = [&](const char* title, const std::vector<CategoryCount>& cats) {
    out += title;
    out += "\n";
    for (const auto& c : cats) {
      std::snprintf(buf, sizeof(buf), "  %-26s %zu (%.1f%%)\n", c.label.c_str(), c.count,
                    c.percent);
      out += buf;
    }
  };

  line("Patients", std::to_string(patient_count));
  line("Images", std::to_string(image_count));
  if (age_mean) {
    std::snprintf(buf, sizeof(buf), "%.1f +/- %.1f", *age_mean, age_std.value_or(0.0));
    line("Age (years), mean", buf);
  } else {
    line("Age (years), mean", "n/a");
  }
  block("Age (years)", age_bins);
  block("Sex", sex);
  block("Location", location);
  block("View", view);
  block("Position", position);
  return out;
}

inline nlohmann::ordered_json DatasetSummary::to_json() const {
  auto block = [](const std::vector<CategoryCount>& cats) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& c : cats) {
      arr.push_back({{"label", c.label}, {"count", c.count}, {"percent", c.percent}});
    }
    return arr;
  };
  nlohmann::ordered_json j;
  j["patient_count"] = patient_count;
  j["image_count"] = image_count;
  if (age_mean) j["age_mean"] = *age_mean;
  if (age_std) j["age_std"] = *age_std;
  j["age_bins"] = block(age_bins);
  j["sex"] = block(sex);
  j["location"] = block(location);
  j["view"] = block(view);
  j["position"] = block(position);
  return j;
}

// Attaches preprocessed pixels to metadata records: <images_dir>/<image_id>.png
// cropped, resized, and clamped to the working resolution.
inline std::vector<CxrRecord> load_dataset(const std::string& metadata_path,
                                           const std::string& images_dir,
                                           const PreprocessConfig& cfg,
                                           std::vector<std::string>* warnings = nullptr) {
  auto records = group_records(load_metadata(metadata_path));
  for (auto& rec : records) {
    const auto path = std::filesystem::path(images_dir) / (rec.image_id + ".png");
    std::string warning;
    Image raw = load_png(path.string(), warnings ? &warning : nullptr);
    if (warnings && !warning.empty()) warnings->push_back(rec.image_id + ": " + warning);
    rec.pixels = preprocess_image(raw, cfg);
  }
  return records;
}

// ---------------------------------------------------------------------------
// Synthetic data: rendered chest-style images whose labels are computed from
// the rendered pixels themselves, so the learning task has zero label noise.

struct EllipseSpec {
  double cx = 0.0, cy = 0.0;  // centre, pixel coordinates
  double rx = 1.0, ry = 1.0;  // radii, pixels
  double amplitude = 0.0;     // brightness added inside (opacities only)

  bool contains(double x, double y) const {
    const double u = (x - cx) / rx, v = (y - cy) / ry;
    return u * u + v * v <= 1.0;
  }
};

struct SyntheticScene {
  int width = 0, height = 0;
  double body_intensity = 0.65;
  double lung_intensity = 0.22;
  EllipseSpec right_lung, left_lung;
  std::vector<EllipseSpec> opacities;
};

// Body background, darker lung fields, and opacity ellipses blended by
// maximum amplitude; everything clamped to [0,1].
inline Image render_scene(const SyntheticScene& scene) {
  Image img;
  img.width = scene.width;
  img.height = scene.height;
  img.pixels.assign(static_cast<std::size_t>(scene.width) * scene.height, 0.0);
  for (int y = 0; y < scene.height; ++y) {
    for (int x = 0; x < scene.width; ++x) {
      double value = scene.body_intensity;
      const bool in_right = scene.right_lung.contains(x, y);
      const bool in_left = scene.left_lung.contains(x, y);
      if (in_right || in_left) {
        double amp = 0.0;
        for (const auto& op : scene.opacities) {
          if (op.contains(x, y)) amp = std::max(amp, op.amplitude);
        }
        value = scene.lung_intensity + amp;
      }
      img.at(x, y) = std::clamp(value, 0.0, 1.0);
    }
  }
  return img;
}

struct SceneScores {
  GeographicScore geo;
  OpacityScore opac;
};

namespace detail {

// Geographic grade from the covered fraction of a lung field.
inline int geo_grade_from_fraction(double fraction) {
  if (fraction <= 0.0) return 0;
  if (fraction < 0.25) return 1;
  if (fraction < 0.50) return 2;
  if (fraction < 0.75) return 3;
  return 4;
}

// Opacity grade from the mean brightness lift over the covered pixels.
inline int opac_grade_from_mean(double mean_lift) {
  if (mean_lift <= 0.0) return 0;
  if (mean_lift < 0.35) return 1;
  if (mean_lift < 0.55) return 2;
  return 3;
}

}  // namespace detail

// Scores a rendered scene by direct pixel counting: a lung pixel counts as
// involved when it sits above the lung base intensity. Uses the clamped
// rendered image, so labels are a pure function of the visible pixels.
inline SceneScores score_scene(const SyntheticScene& scene, const Image& img) {
  auto score_lung = [&](const EllipseSpec& lung) {
    long long lung_pixels = 0, covered = 0;
    double lift_sum = 0.0;
    for (int y = 0; y < img.height; ++y) {
      for (int x = 0; x < img.width; ++x) {
        if (!lung.contains(x, y)) continue;
        ++lung_pixels;
        const double lift = img.at(x, y) - scene.lung_intensity;
        if (lift > 1e-9) {
          ++covered;
          lift_sum += lift;
        }
      }
    }
    const double fraction =
        lung_pixels == 0 ? 0.0 : static_cast<double>(covered) / lung_pixels;
    const double mean_lift = covered == 0 ? 0.0 : lift_sum / covered;
    return std::pair<int, int>{detail::geo_grade_from_fraction(fraction),
                               detail::opac_grade_from_mean(mean_lift)};
  };
  const auto [geo_r, opac_r] = score_lung(scene.right_lung);
  const auto [geo_l, opac_l] = score_lung(scene.left_lung);
  return {{geo_r, geo_l}, {opac_r, opac_l}};
}

// Draws a random scene: fixed lung geometry, random intensities, and K
// elliptical opacities (K = 0 roughly one time in eight).
inline SyntheticScene draw_scene(int width, int height, Rng& rng) {
  SyntheticScene scene;
  scene.width = width;
  scene.height = height;
  scene.body_intensity = rng.uniform(0.55, 0.78);
  scene.lung_intensity = rng.uniform(0.15, 0.30);
  scene.right_lung = {0.32 * width, 0.50 * height, 0.17 * width, 0.32 * height, 0.0};
  scene.left_lung = {0.68 * width, 0.50 * height, 0.17 * width, 0.32 * height, 0.0};

  std::size_t count = 0;
  if (rng.uniform01() >= 0.12) count = 1 + rng.uniform_index(6);
  for (std::size_t k = 0; k < count; ++k) {
    const EllipseSpec& lung = rng.bernoulli(0.5) ? scene.right_lung : scene.left_lung;
    // Polar draw inside the lung ellipse keeps the opacity centre in-field.
    const double ang = rng.uniform(0.0, 2.0 * std::acos(-1.0));
    const double rad = std::sqrt(rng.uniform01());
    EllipseSpec op;
    op.cx = lung.cx + rad * std::cos(ang) * lung.rx * 0.85;
    op.cy = lung.cy + rad * std::sin(ang) * lung.ry * 0.85;
    op.rx = rng.uniform(0.15, 0.75) * lung.rx;
    op.ry = rng.uniform(0.15, 0.75) * lung.ry;
    op.amplitude = rng.uniform(0.20, 0.85);
    scene.opacities.push_back(op);
  }
  return scene;
}

// Deterministic synthetic cohort at the given resolution. Demographics are
// randomized; labels come from score_scene over the rendered pixels.
inline std::vector<CxrRecord> generate_synthetic(std::size_t count, std::uint64_t seed,
                                                 int width, int height) {
  if (count < 1) throw ValidationError("synthetic count must be >= 1");
  if (width < 32 || height < 32) {
    throw ValidationError("synthetic images need at least 32 pixels per side");
  }

  static const char* kLocations[] = {"Italy", "Spain", "USA", "France", "Taiwan",
                                     "Canada", "Israel", "Vietnam"};
  std::vector<CxrRecord> records;
  records.reserve(count);
  std::string last_patient;
  for (std::size_t i = 0; i < count; ++i) {
    Rng rng(derive_seed(seed, i));
    const SyntheticScene scene = draw_scene(width, height, rng);

    CxrRecord rec;
    char id[32];
    std::snprintf(id, sizeof(id), "synth_%04zu", i);
    rec.image_id = id;
    if (!last_patient.empty() && rng.bernoulli(0.12)) {
      rec.patient_id = last_patient;  // a second image of the same patient
    } else {
      std::snprintf(id, sizeof(id), "SP%04zu", i);
      rec.patient_id = id;
    }
    last_patient = rec.patient_id;
    if (!rng.bernoulli(0.19)) rec.age = static_cast<int>(12 + rng.uniform_index(76));
    if (!rng.bernoulli(0.05)) rec.sex = rng.bernoulli(0.61) ? "male" : "female";
    if (!rng.bernoulli(0.08)) rec.location = kLocations[rng.uniform_index(8)];
    rec.view = rng.bernoulli(0.754) ? "PA" : "AP";
    rec.position = rng.bernoulli(0.869) ? "upright" : "supine";

    rec.pixels = render_scene(scene);
    const SceneScores scores = score_scene(scene, rec.pixels);
    rec.geo_label = normalize(total_score(scores.geo), TargetKind::kGeographic);
    rec.opac_label = normalize(total_score(scores.opac), TargetKind::kOpacity);
    records.push_back(std::move(rec));
  }
  return records;
}

}  // namespace cxrs
