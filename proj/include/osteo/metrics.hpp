#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "osteo/image.hpp"

namespace osteo::metrics {

struct ConfusionCounts {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  std::uint64_t tn = 0;

  std::uint64_t total() const { return tp + fp + fn + tn; }
  bool operator==(const ConfusionCounts&) const = default;
};

/// Per-image metric row. Foreground is the positive class for the binary
/// metrics; micro metrics pool both classes, which for a single-label
/// two-class pixel task all reduce to (tp + tn) / total.
struct MetricRow {
  std::string name;
  ConfusionCounts counts;
  double dice = 0.0;
  double jaccard_binary = 0.0;
  double jaccard_micro = 0.0;
  double sensitivity = 0.0;
  double recall_binary = 0.0;
  double recall_micro = 0.0;
  double f1_binary = 0.0;
  double f1_micro = 0.0;
  double accuracy_binary = 0.0;

  bool operator==(const MetricRow&) const = default;
};

/// Column order used by the CSV and JSON writers.
inline constexpr const char* kMetricNames[] = {"jaccard_micro", "accuracy_binary", "sensitivity",   "f1_micro",
                                               "f1_binary",     "recall_micro",    "recall_binary", "dice",
                                               "jaccard_binary"};

double metric_value(const MetricRow& row, std::string_view metric);

struct MetricsReport {
  std::vector<MetricRow> rows;
  MetricRow mean;  // unweighted per-image means; name "mean", counts summed
};

ConfusionCounts confusion(const BinaryMask& pred, const BinaryMask& gt);

/// Empty-mask conventions: when gt and pred are both empty, dice, jaccard
/// and sensitivity are 1; when exactly one is empty they are 0.
MetricRow metrics_from_counts(const ConfusionCounts& c, std::string name = {});
MetricRow evaluate_pair(const BinaryMask& pred, const BinaryMask& gt, std::string name = {});

struct MaskPair {
  std::string name;
  BinaryMask pred;
  BinaryMask gt;
};

/// Rows are evaluated in parallel and reduced in input order.
MetricsReport evaluate_batch(const std::vector<MaskPair>& pairs);

std::string report_csv(const MetricsReport& report);
std::string report_json(const MetricsReport& report);

/// One row as `{name, tp, fp, fn, tn, <metrics>}`, the layout both writers use.
nlohmann::ordered_json to_json(const MetricRow& row);
MetricRow metric_row_from_json(const nlohmann::json& j);

}  // namespace osteo::metrics
