#include "osteo/api.hpp"

namespace osteo::api {

ordered_json margin_json(const margin::MarginPrediction& p, const margin::MarginModel& model) {
  ordered_json j;
  j["stage"] = std::string(margin::to_string(p.stage));
  j["radius_cm"] = p.lesion_radius_cm;
  j["margin_cm"] = p.margin_radius_cm;
  j["extrapolated"] = p.extrapolated;
  j["valid_range_cm"] = {model.r_min(), model.r_max()};
  return j;
}

ordered_json margin_table_json(margin::EnnekingStage stage, const margin::MarginModel& model) {
  ordered_json j;
  j["stage"] = std::string(margin::to_string(stage));
  j["rows"] = ordered_json::array();
  for (const auto& p : margin::margin_table(model, stage)) {
    j["rows"].push_back({{"radius_cm", p.lesion_radius_cm}, {"margin_cm", p.margin_radius_cm}, {"extrapolated", p.extrapolated}});
  }
  return j;
}

ordered_json calibration_json(const calibration::CalibrationRecord& cal) {
  ordered_json j = calibration::to_json(cal);
  j["line_length_px"] = cal.line.length_px();
  return j;
}

ordered_json segmentation_json(const xray::XraySegmentation& r) {
  ordered_json j;
  j["modality"] = "xray";
  j["width"] = r.lesion_mask.width();
  j["height"] = r.lesion_mask.height();
  j["foreground_pixels"] = r.lesion_mask.count();
  j["otsu_threshold"] = r.otsu_threshold;
  j["otsu_pixels"] = r.otsu_mask.count();
  j["converged"] = r.converged;
  j["chan_vese_iterations"] = r.chan_vese_iterations;
  j["stretch_degenerate"] = r.stretch_degenerate;
  return j;
}

ordered_json segmentation_json(const mri::MriSegmentation& r) {
  ordered_json j;
  j["modality"] = "mri";
  j["width"] = r.labels.width();
  j["height"] = r.labels.height();
  const auto& c = r.labels.counts();
  j["label_counts"] = {c[0], c[1], c[2]};
  j["tumor_pixels"] = r.tumor_mask.count();
  j["neighbor_pixels"] = r.neighbor_mask.count();
  j["centroids"] = r.centroids;
  j["otsu_thresholds"] = r.otsu_thresholds;
  j["kmeans_iterations"] = r.quality.kmeans_iterations;
  j["refined_pixels"] = r.quality.refined_pixels;
  j["labels_degenerate"] = r.quality.labels_degenerate;
  return j;
}

ordered_json quality_json(const mri::QualityVerdict& v) {
  ordered_json j;
  j["accepted"] = v.accepted;
  j["reasons"] = v.reasons;
  j["saturated_fraction"] = v.saturated_fraction;
  j["stddev"] = v.stddev;
  return j;
}

ordered_json error_json(const Error& e) {
  ordered_json j = error_json(to_string(e.code()), e.detail());
  if (!e.step().empty()) {
    j["error"]["step"] = e.step();
  }
  return j;
}

ordered_json error_json(std::string_view code, const std::string& message) {
  ordered_json j;
  j["error"] = {{"code", std::string(code)}, {"message", message}};
  return j;
}

std::string dump(const ordered_json& j) {
  return j.dump() + "\n";
}

}  // namespace osteo::api
