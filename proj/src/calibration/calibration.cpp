#include "osteo/calibration.hpp"

#include <algorithm>
#include <cmath>

#include "../common/text.hpp"
#include "osteo/error.hpp"
#include "osteo/png_io.hpp"

namespace osteo::calibration {

double ReferenceLine::length_px() const {
  return std::hypot(p1.x - p0.x, p1.y - p0.y);
}

std::string_view to_string(Source s) {
  return s == Source::UserSupplied ? "user_supplied" : "reference_table";
}

Source parse_source(std::string_view s) {
  if (s == "user_supplied") {
    return Source::UserSupplied;
  }
  if (s == "reference_table") {
    return Source::ReferenceTable;
  }
  fail(ErrorCode::UnknownKey, "unknown calibration source '" + std::string(s) + "'");
}

CalibrationRecord set_scale(const ReferenceLine& line, double known_length_cm, Source source) {
  const double len = line.length_px();
  require(std::isfinite(len) && len >= 1.0, ErrorCode::InvalidParameter,
          "reference line must be at least 1 px long");
  require(std::isfinite(known_length_cm) && known_length_cm > 0.0, ErrorCode::InvalidParameter,
          "known length must be > 0 cm");
  return CalibrationRecord{line, known_length_cm, known_length_cm / len, source};
}

double measure_length(const ReferenceLine& line, const CalibrationRecord& cal) {
  return line.length_px() * cal.scale_cm_per_px;
}

FemurReferenceTable FemurReferenceTable::parse(const std::string& csv) {
  FemurReferenceTable table;
  const auto lines = text::data_lines(csv);
  require(!lines.empty(), ErrorCode::Schema, "femur table is empty");
  bool header = true;
  for (const auto& [no, line] : lines) {
    const auto cols = text::split(line, ',');
    const std::string where = "femur table line " + std::to_string(no);
    require(cols.size() == 3, ErrorCode::Schema, where + ": expected sex,age_years,femur_length_cm");
    if (header) {
      header = false;
      if (cols[0] == "sex") {
        continue;
      }
    }
    const std::string sex = text::lower(cols[0]);
    require(!sex.empty(), ErrorCode::Schema, where + ": empty sex");
    const double age = text::parse_double(cols[1], where + " age_years");
    const double len = text::parse_double(cols[2], where + " femur_length_cm");
    require(std::isfinite(age) && age >= 0.0, ErrorCode::Schema, where + ": age must be >= 0");
    require(std::isfinite(len) && len > 0.0, ErrorCode::Schema, where + ": length must be > 0");
    auto& rows = table.by_sex_[sex];
    const bool dup = std::any_of(rows.begin(), rows.end(), [&](const auto& r) { return r.first == age; });
    require(!dup, ErrorCode::Schema, where + ": duplicate (sex, age) key");
    rows.emplace_back(age, len);
  }
  for (auto& [sex, rows] : table.by_sex_) {
    std::sort(rows.begin(), rows.end());
  }
  require(!table.by_sex_.empty(), ErrorCode::Schema, "femur table has no rows");
  return table;
}

extern const char* const kBundledFemurTableCsv;

const FemurReferenceTable& FemurReferenceTable::bundled() {
  static const FemurReferenceTable table = parse(kBundledFemurTableCsv);
  return table;
}

FemurReferenceTable FemurReferenceTable::load(const std::filesystem::path& path) {
  const auto bytes = io::read_bytes(path);
  return parse(std::string(bytes.begin(), bytes.end()));
}

double FemurReferenceTable::estimate(std::string_view sex, double age_years) const {
  require(std::isfinite(age_years) && age_years >= 0.0, ErrorCode::InvalidParameter, "age must be >= 0");
  const auto it = by_sex_.find(text::lower(sex));
  require(it != by_sex_.end(), ErrorCode::UnknownKey, "no femur reference rows for sex '" + std::string(sex) + "'");
  const auto& rows = it->second;
  if (age_years <= rows.front().first) {
    return rows.front().second;
  }
  if (age_years >= rows.back().first) {
    return rows.back().second;
  }
  const auto hi = std::upper_bound(rows.begin(), rows.end(), age_years,
                                   [](double a, const auto& r) { return a < r.first; });
  const auto lo = hi - 1;
  if (lo->first == age_years) {
    return lo->second;
  }
  const double t = (age_years - lo->first) / (hi->first - lo->first);
  return lo->second + t * (hi->second - lo->second);
}

std::vector<std::string> FemurReferenceTable::sexes() const {
  std::vector<std::string> out;
  for (const auto& [sex, rows] : by_sex_) {
    out.push_back(sex);
  }
  return out;
}

std::size_t FemurReferenceTable::rows() const {
  std::size_t n = 0;
  for (const auto& [sex, rows] : by_sex_) {
    n += rows.size();
  }
  return n;
}

double estimate_femur_length(std::string_view sex, double age_years, const FemurReferenceTable& table) {
  return table.estimate(sex, age_years);
}

nlohmann::json to_json(const CalibrationRecord& cal) {
  return nlohmann::json{
      {"line", {{"p0", {cal.line.p0.x, cal.line.p0.y}}, {"p1", {cal.line.p1.x, cal.line.p1.y}}}},
      {"known_length_cm", cal.known_length_cm},
      {"scale_cm_per_px", cal.scale_cm_per_px},
      {"source", std::string(to_string(cal.source))},
  };
}

CalibrationRecord calibration_from_json(const nlohmann::json& j) {
  try {
    const auto& line = j.at("line");
    const auto p0 = line.at("p0").get<std::vector<double>>();
    const auto p1 = line.at("p1").get<std::vector<double>>();
    require(p0.size() == 2 && p1.size() == 2, ErrorCode::Schema, "line endpoints must be [x, y]");
    const ReferenceLine ref{{p0[0], p0[1]}, {p1[0], p1[1]}};
    const Source source = j.contains("source") ? parse_source(j.at("source").get<std::string>()) : Source::UserSupplied;
    CalibrationRecord rec = set_scale(ref, j.at("known_length_cm").get<double>(), source);
    if (j.contains("scale_cm_per_px")) {
      const double stored = j.at("scale_cm_per_px").get<double>();
      require(std::fabs(stored - rec.scale_cm_per_px) <= 1e-12 * rec.scale_cm_per_px, ErrorCode::Schema,
              "scale_cm_per_px disagrees with line and known_length_cm");
      rec.scale_cm_per_px = stored;
    }
    return rec;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Schema, std::string("calibration record: ") + e.what());
  }
}

}  // namespace osteo::calibration
