#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "osteo/calibration.hpp"
#include "osteo/image.hpp"

namespace osteo::margin {

enum class EnnekingStage { IB, IIA, IIB };

inline constexpr std::array<EnnekingStage, 3> kStages = {EnnekingStage::IIB, EnnekingStage::IB, EnnekingStage::IIA};

std::string_view to_string(EnnekingStage s);
/// Accepts "IB", "IIA", "IIB" in any case; anything else is UnknownKey.
EnnekingStage parse_stage(std::string_view s);

struct CorrelationFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r = 0.0;
  double r_squared = 0.0;
  std::size_t n_points = 0;
};

/// Ordinary least squares with Pearson r. r is 0 when the ys are constant.
CorrelationFit fit_linear(std::span<const double> xs, std::span<const double> ys);

struct MaskMean {
  double mean = 0.0;
  std::size_t pixels = 0;
};

MaskMean weighted_mask_mean(const GrayImage& img, const BinaryMask& mask);
/// Pixel-count weighted combination of per-mask means.
double pool(std::span<const MaskMean> means);
double pooled_mask_mean(const GrayImage& img, std::span<const BinaryMask> masks);

enum class RadiusRule {
  EquivalentArea,  // sqrt(area / pi)
  MaxInscribed,    // largest distance from a foreground pixel to the background edge
  Circumscribed,   // farthest foreground pixel edge from the centroid
};

std::string_view to_string(RadiusRule r);
RadiusRule parse_radius_rule(std::string_view s);

double lesion_radius(const BinaryMask& mask, const calibration::CalibrationRecord& cal,
                     RadiusRule rule = RadiusRule::EquivalentArea);

struct TableRow {
  EnnekingStage stage = EnnekingStage::IB;
  double injury_radius_cm = 0.0;
  double margin_radius_cm = 0.0;
};

/// `stage,injury_radius_cm,margin_radius_cm` CSV.
std::vector<TableRow> parse_margin_table(const std::string& csv);

/// The published suggested-margin table, embedded at build time.
const std::string& reference_table_csv();
const std::vector<TableRow>& reference_table();

struct StageLine {
  double slope = 0.0;
  double intercept = 0.0;
  double max_residual = 0.0;  // worst |fit - row| over the fitted rows
  std::size_t rows = 0;
};

class MarginModel {
 public:
  MarginModel(std::array<StageLine, 3> lines, double r_min, double r_max);

  const StageLine& line(EnnekingStage s) const { return lines_[static_cast<std::size_t>(s)]; }
  double r_min() const { return r_min_; }
  double r_max() const { return r_max_; }

 private:
  std::array<StageLine, 3> lines_;  // indexed by EnnekingStage
  double r_min_;
  double r_max_;
};

/// Per-stage least squares through the rows; the valid range is the span of
/// injury radii present. Each stage needs two distinct radii.
MarginModel fit_margin_model(std::span<const TableRow> rows);

/// Model fitted from the embedded table once, on first use.
const MarginModel& reference_model();

struct MarginPrediction {
  EnnekingStage stage = EnnekingStage::IB;
  double lesion_radius_cm = 0.0;
  double margin_radius_cm = 0.0;
  bool extrapolated = false;  // radius outside the model's valid range

  bool operator==(const MarginPrediction&) const = default;
};

MarginPrediction predict_margin(const MarginModel& model, EnnekingStage stage, double radius_cm);

/// Inclusive grid r_min, r_min + step, ... up to r_max.
std::vector<MarginPrediction> margin_table(const MarginModel& model, EnnekingStage stage, double r_min = 0.50,
                                           double r_max = 4.75, double step = 0.25);

/// Two-column CSV (radius to 2 places, margin to 6) for one stage.
std::string margin_table_csv(std::span<const MarginPrediction> rows);

/// `{stage, lesion_radius_cm, margin_radius_cm, extrapolated}`.
nlohmann::ordered_json to_json(const MarginPrediction& p);
MarginPrediction prediction_from_json(const nlohmann::json& j);

}  // namespace osteo::margin
