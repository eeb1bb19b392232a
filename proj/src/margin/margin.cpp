#include "osteo/margin.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>

#include "../common/text.hpp"
#include "osteo/error.hpp"

namespace osteo::margin {

extern const char* const kSafetyMarginTableCsv;

std::string_view to_string(EnnekingStage s) {
  switch (s) {
    case EnnekingStage::IB:
      return "IB";
    case EnnekingStage::IIA:
      return "IIA";
    case EnnekingStage::IIB:
      return "IIB";
  }
  return "?";
}

EnnekingStage parse_stage(std::string_view s) {
  const std::string k = text::lower(text::trim(s));
  if (k == "ib") return EnnekingStage::IB;
  if (k == "iia") return EnnekingStage::IIA;
  if (k == "iib") return EnnekingStage::IIB;
  fail(ErrorCode::UnknownKey, "unknown stage '" + std::string(s) + "' (expected IB, IIA or IIB)");
}

CorrelationFit fit_linear(std::span<const double> xs, std::span<const double> ys) {
  require(xs.size() == ys.size(), ErrorCode::DimensionMismatch, "xs and ys differ in length");
  require(xs.size() >= 2, ErrorCode::InsufficientData, "need at least 2 points");
  const double n = static_cast<double>(xs.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    require(std::isfinite(xs[i]) && std::isfinite(ys[i]), ErrorCode::InvalidParameter, "non-finite point");
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  require(sxx > 0.0, ErrorCode::InsufficientData, "xs are all equal");
  CorrelationFit fit;
  fit.n_points = xs.size();
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r = syy > 0.0 ? std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0) : 0.0;
  fit.r_squared = fit.r * fit.r;
  return fit;
}

MaskMean weighted_mask_mean(const GrayImage& img, const BinaryMask& mask) {
  require(img.width() == mask.width() && img.height() == mask.height(), ErrorCode::DimensionMismatch,
          "mask and image differ in size");
  require(!mask.empty(), ErrorCode::EmptyMask, "mask has no foreground pixels");
  double sum = 0.0;
  for (std::size_t i = 0; i < img.size(); ++i) {
    if (mask[i]) {
      sum += img[i];
    }
  }
  return {sum / static_cast<double>(mask.count()), mask.count()};
}

double pool(std::span<const MaskMean> means) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const MaskMean& m : means) {
    sum += m.mean * static_cast<double>(m.pixels);
    n += m.pixels;
  }
  require(n > 0, ErrorCode::EmptyMask, "no pixels to pool");
  return sum / static_cast<double>(n);
}

double pooled_mask_mean(const GrayImage& img, std::span<const BinaryMask> masks) {
  std::vector<MaskMean> means;
  for (const BinaryMask& m : masks) {
    means.push_back(weighted_mask_mean(img, m));
  }
  return pool(means);
}

std::string_view to_string(RadiusRule r) {
  switch (r) {
    case RadiusRule::EquivalentArea:
      return "equivalent_area";
    case RadiusRule::MaxInscribed:
      return "max_inscribed";
    case RadiusRule::Circumscribed:
      return "circumscribed";
  }
  return "?";
}

RadiusRule parse_radius_rule(std::string_view s) {
  if (s == "equivalent_area") return RadiusRule::EquivalentArea;
  if (s == "max_inscribed") return RadiusRule::MaxInscribed;
  if (s == "circumscribed") return RadiusRule::Circumscribed;
  fail(ErrorCode::UnknownKey, "unknown radius rule '" + std::string(s) + "'");
}

namespace {

// Largest Euclidean distance from a foreground pixel centre to the nearest
// background pixel centre, less the half pixel up to that pixel's edge. The
// outside of the image counts as background.
double max_inscribed_px(const BinaryMask& mask) {
  const int w = mask.width();
  const int h = mask.height();
  std::vector<std::pair<int, int>> boundary;
  for (int y = -1; y <= h; ++y) {
    for (int x = -1; x <= w; ++x) {
      const bool outside = x < 0 || y < 0 || x >= w || y >= h;
      if (!outside && mask.at(x, y)) {
        continue;
      }
      bool touches = false;
      for (int dy = -1; dy <= 1 && !touches; ++dy) {
        for (int dx = -1; dx <= 1 && !touches; ++dx) {
          const int nx = x + dx;
          const int ny = y + dy;
          touches = nx >= 0 && ny >= 0 && nx < w && ny < h && mask.at(nx, ny);
        }
      }
      if (touches) {
        boundary.emplace_back(x, y);
      }
    }
  }
  double best = 0.0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!mask.at(x, y)) {
        continue;
      }
      double d2 = std::numeric_limits<double>::infinity();
      for (const auto& [bx, by] : boundary) {
        const double dx = x - bx;
        const double dy = y - by;
        d2 = std::min(d2, dx * dx + dy * dy);
      }
      best = std::max(best, d2);
    }
  }
  return std::sqrt(best) - 0.5;
}

double circumscribed_px(const BinaryMask& mask) {
  double cx = 0.0;
  double cy = 0.0;
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (mask.at(x, y)) {
        cx += x;
        cy += y;
      }
    }
  }
  const double n = static_cast<double>(mask.count());
  cx /= n;
  cy /= n;
  double best = 0.0;
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (mask.at(x, y)) {
        best = std::max(best, std::hypot(x - cx, y - cy));
      }
    }
  }
  // Pixel centres sit half a pixel inside the region's edge.
  return best + 0.5;
}

}  // namespace

double lesion_radius(const BinaryMask& mask, const calibration::CalibrationRecord& cal, RadiusRule rule) {
  require(!mask.empty(), ErrorCode::EmptyMask, "lesion mask has no foreground pixels");
  require(std::isfinite(cal.scale_cm_per_px) && cal.scale_cm_per_px > 0.0, ErrorCode::InvalidParameter,
          "calibration scale must be > 0");
  double px = 0.0;
  switch (rule) {
    case RadiusRule::EquivalentArea:
      px = std::sqrt(static_cast<double>(mask.count()) / std::numbers::pi);
      break;
    case RadiusRule::MaxInscribed:
      px = max_inscribed_px(mask);
      break;
    case RadiusRule::Circumscribed:
      px = circumscribed_px(mask);
      break;
  }
  return px * cal.scale_cm_per_px;
}

std::vector<TableRow> parse_margin_table(const std::string& csv) {
  std::vector<TableRow> rows;
  bool header = true;
  for (const auto& [no, line] : text::data_lines(csv)) {
    const auto cols = text::split(line, ',');
    const std::string where = "margin table line " + std::to_string(no);
    require(cols.size() == 3, ErrorCode::Schema, where + ": expected stage,injury_radius_cm,margin_radius_cm");
    if (header) {
      header = false;
      if (cols[0] == "stage") {
        continue;
      }
    }
    TableRow r;
    try {
      r.stage = parse_stage(cols[0]);
    } catch (const Error& e) {
      fail(ErrorCode::Schema, where + ": " + e.detail());
    }
    r.injury_radius_cm = text::parse_double(cols[1], where + " injury_radius_cm");
    r.margin_radius_cm = text::parse_double(cols[2], where + " margin_radius_cm");
    rows.push_back(r);
  }
  return rows;
}

const std::string& reference_table_csv() {
  static const std::string csv(kSafetyMarginTableCsv);
  return csv;
}

const std::vector<TableRow>& reference_table() {
  static const std::vector<TableRow> rows = parse_margin_table(reference_table_csv());
  return rows;
}

MarginModel::MarginModel(std::array<StageLine, 3> lines, double r_min, double r_max)
    : lines_(lines), r_min_(r_min), r_max_(r_max) {
  require(r_min_ <= r_max_, ErrorCode::InvalidParameter, "model range is empty");
}

MarginModel fit_margin_model(std::span<const TableRow> rows) {
  std::array<StageLine, 3> lines{};
  double r_min = std::numeric_limits<double>::infinity();
  double r_max = -std::numeric_limits<double>::infinity();
  for (const EnnekingStage stage : kStages) {
    std::vector<double> xs;
    std::vector<double> ys;
    for (const TableRow& r : rows) {
      if (r.stage == stage) {
        xs.push_back(r.injury_radius_cm);
        ys.push_back(r.margin_radius_cm);
      }
    }
    require(xs.size() >= 2, ErrorCode::InsufficientData,
            "stage " + std::string(to_string(stage)) + " has " + std::to_string(xs.size()) + " rows, need 2");
    const CorrelationFit fit = fit_linear(xs, ys);
    StageLine& line = lines[static_cast<std::size_t>(stage)];
    line.slope = fit.slope;
    line.intercept = fit.intercept;
    line.rows = xs.size();
    for (std::size_t i = 0; i < xs.size(); ++i) {
      line.max_residual = std::max(line.max_residual, std::fabs(fit.slope * xs[i] + fit.intercept - ys[i]));
      r_min = std::min(r_min, xs[i]);
      r_max = std::max(r_max, xs[i]);
    }
  }
  return MarginModel(lines, r_min, r_max);
}

const MarginModel& reference_model() {
  static const MarginModel model = fit_margin_model(reference_table());
  return model;
}

MarginPrediction predict_margin(const MarginModel& model, EnnekingStage stage, double radius_cm) {
  require(std::isfinite(radius_cm) && radius_cm > 0.0, ErrorCode::InvalidParameter, "radius must be > 0 cm");
  const StageLine& line = model.line(stage);
  MarginPrediction p;
  p.stage = stage;
  p.lesion_radius_cm = radius_cm;
  p.margin_radius_cm = line.slope * radius_cm + line.intercept;
  p.extrapolated = radius_cm < model.r_min() || radius_cm > model.r_max();
  return p;
}

std::vector<MarginPrediction> margin_table(const MarginModel& model, EnnekingStage stage, double r_min,
                                           double r_max, double step) {
  require(std::isfinite(r_min) && std::isfinite(r_max) && r_min <= r_max, ErrorCode::InvalidParameter,
          "r_min must not exceed r_max");
  require(std::isfinite(step) && step > 0.0, ErrorCode::InvalidParameter, "step must be > 0");
  const auto count = static_cast<std::size_t>(std::floor((r_max - r_min) / step + 1e-9)) + 1;
  std::vector<MarginPrediction> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    out.push_back(predict_margin(model, stage, r_min + static_cast<double>(i) * step));
  }
  return out;
}

std::string margin_table_csv(std::span<const MarginPrediction> rows) {
  std::string out = "injury_radius_cm,margin_radius_cm\n";
  char buf[64];
  for (const MarginPrediction& p : rows) {
    std::snprintf(buf, sizeof buf, "%.2f,%.6f\n", p.lesion_radius_cm, p.margin_radius_cm);
    out += buf;
  }
  return out;
}

nlohmann::ordered_json to_json(const MarginPrediction& p) {
  nlohmann::ordered_json j;
  j["stage"] = std::string(to_string(p.stage));
  j["lesion_radius_cm"] = p.lesion_radius_cm;
  j["margin_radius_cm"] = p.margin_radius_cm;
  j["extrapolated"] = p.extrapolated;
  return j;
}

MarginPrediction prediction_from_json(const nlohmann::json& j) {
  try {
    MarginPrediction p;
    p.stage = parse_stage(j.at("stage").get<std::string>());
    p.lesion_radius_cm = j.at("lesion_radius_cm").get<double>();
    p.margin_radius_cm = j.at("margin_radius_cm").get<double>();
    p.extrapolated = j.at("extrapolated").get<bool>();
    return p;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Schema, std::string("margin prediction: ") + e.what());
  }
}

}  // namespace osteo::margin
