#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

namespace osteo::calibration {

struct Point {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Point&) const = default;
};

/// Segment drawn on the image; endpoints may be sub-pixel.
struct ReferenceLine {
  Point p0;
  Point p1;

  double length_px() const;
  bool operator==(const ReferenceLine&) const = default;
};

enum class Source { UserSupplied, ReferenceTable };

std::string_view to_string(Source s);
Source parse_source(std::string_view s);

struct CalibrationRecord {
  ReferenceLine line;
  double known_length_cm = 0.0;
  double scale_cm_per_px = 0.0;
  Source source = Source::UserSupplied;

  bool operator==(const CalibrationRecord&) const = default;
};

/// scale = known_length_cm / |line|. Lines shorter than one pixel and
/// non-positive lengths are rejected.
CalibrationRecord set_scale(const ReferenceLine& line, double known_length_cm, Source source = Source::UserSupplied);

double measure_length(const ReferenceLine& line, const CalibrationRecord& cal);

/// Femur length by sex and age, read from `sex,age_years,femur_length_cm`
/// CSV. Lines starting with '#' are comments. Sex keys are case-folded.
class FemurReferenceTable {
 public:
  static FemurReferenceTable parse(const std::string& csv);
  static FemurReferenceTable load(const std::filesystem::path& path);
  /// The placeholder table compiled in from data/femur_reference_placeholder.csv.
  /// Its values are illustrative, not clinical reference data.
  static const FemurReferenceTable& bundled();

  /// Linear in age between bracketing rows, clamped at the ends.
  double estimate(std::string_view sex, double age_years) const;

  std::vector<std::string> sexes() const;
  std::size_t rows() const;

 private:
  std::map<std::string, std::vector<std::pair<double, double>>, std::less<>> by_sex_;  // sorted by age
};

double estimate_femur_length(std::string_view sex, double age_years, const FemurReferenceTable& table);

nlohmann::json to_json(const CalibrationRecord& cal);
/// Validates the record, including that the stored scale agrees with the
/// line and known length.
CalibrationRecord calibration_from_json(const nlohmann::json& j);

}  // namespace osteo::calibration
