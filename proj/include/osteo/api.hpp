#pragma once

// JSON payloads shared by the CLI and the HTTP service, so both print the
// same bytes for the same inputs.

#include "json.hpp"
#include "osteo/calibration.hpp"
#include "osteo/error.hpp"
#include "osteo/margin.hpp"
#include "osteo/pipeline/mri.hpp"
#include "osteo/pipeline/xray.hpp"

namespace osteo::api {

using nlohmann::ordered_json;

/// `{stage, radius_cm, margin_cm, extrapolated, valid_range_cm: [lo, hi]}`.
ordered_json margin_json(const margin::MarginPrediction& p, const margin::MarginModel& model = margin::reference_model());

/// `{stage, rows: [{radius_cm, margin_cm, extrapolated}, ...]}` on the
/// default 0.50 to 4.75 cm grid.
ordered_json margin_table_json(margin::EnnekingStage stage, const margin::MarginModel& model = margin::reference_model());

/// Calibration record plus the measured line length in pixels.
ordered_json calibration_json(const calibration::CalibrationRecord& cal);

ordered_json segmentation_json(const xray::XraySegmentation& r);
ordered_json segmentation_json(const mri::MriSegmentation& r);

ordered_json quality_json(const mri::QualityVerdict& v);

/// `{"error": {"code", "message", "step"?}}`.
ordered_json error_json(const Error& e);
ordered_json error_json(std::string_view code, const std::string& message);

/// Compact one-line dump followed by a newline.
std::string dump(const ordered_json& j);

}  // namespace osteo::api
