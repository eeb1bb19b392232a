#include "osteo/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <future>
#include <thread>

#include "json.hpp"

#include "osteo/error.hpp"

namespace osteo::metrics {

namespace {

double ratio(std::uint64_t num, std::uint64_t den) {
  return static_cast<double>(num) / static_cast<double>(den);
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

namespace {

template <class Row>
auto& field(Row& row, std::string_view metric) {
  if (metric == "jaccard_micro") return row.jaccard_micro;
  if (metric == "accuracy_binary") return row.accuracy_binary;
  if (metric == "sensitivity") return row.sensitivity;
  if (metric == "f1_micro") return row.f1_micro;
  if (metric == "f1_binary") return row.f1_binary;
  if (metric == "recall_micro") return row.recall_micro;
  if (metric == "recall_binary") return row.recall_binary;
  if (metric == "dice") return row.dice;
  if (metric == "jaccard_binary") return row.jaccard_binary;
  fail(ErrorCode::UnknownKey, "unknown metric '" + std::string(metric) + "'");
}

}  // namespace

double metric_value(const MetricRow& row, std::string_view metric) {
  return field(row, metric);
}

ConfusionCounts confusion(const BinaryMask& pred, const BinaryMask& gt) {
  require(pred.width() == gt.width() && pred.height() == gt.height(), ErrorCode::DimensionMismatch,
          "prediction is " + std::to_string(pred.width()) + "x" + std::to_string(pred.height()) +
              ", reference is " + std::to_string(gt.width()) + "x" + std::to_string(gt.height()));
  ConfusionCounts c;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool p = pred[i];
    const bool g = gt[i];
    if (p && g) {
      ++c.tp;
    } else if (p) {
      ++c.fp;
    } else if (g) {
      ++c.fn;
    } else {
      ++c.tn;
    }
  }
  return c;
}

MetricRow metrics_from_counts(const ConfusionCounts& c, std::string name) {
  require(c.total() > 0, ErrorCode::InvalidParameter, "confusion counts are all zero");
  MetricRow r;
  r.name = std::move(name);
  r.counts = c;
  const std::uint64_t fg_any = c.tp + c.fp + c.fn;
  if (fg_any == 0) {
    r.dice = 1.0;
    r.jaccard_binary = 1.0;
  } else {
    r.dice = ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn);
    r.jaccard_binary = ratio(c.tp, fg_any);
  }
  // Sensitivity is undefined for an empty reference; follow the same
  // convention keyed on whether the prediction is also empty.
  if (c.tp + c.fn == 0) {
    r.sensitivity = c.fp == 0 ? 1.0 : 0.0;
  } else {
    r.sensitivity = ratio(c.tp, c.tp + c.fn);
  }
  r.recall_binary = r.sensitivity;
  r.f1_binary = r.dice;
  r.accuracy_binary = ratio(c.tp + c.tn, c.total());
  r.f1_micro = r.accuracy_binary;
  r.recall_micro = r.accuracy_binary;
  // Micro Jaccard: pooled TP over pooled TP+FP+FN across both classes.
  const std::uint64_t correct = c.tp + c.tn;
  const std::uint64_t wrong = c.fp + c.fn;
  r.jaccard_micro = ratio(correct, correct + 2 * wrong);
  return r;
}

MetricRow evaluate_pair(const BinaryMask& pred, const BinaryMask& gt, std::string name) {
  return metrics_from_counts(confusion(pred, gt), std::move(name));
}

MetricsReport evaluate_batch(const std::vector<MaskPair>& pairs) {
  require(!pairs.empty(), ErrorCode::InsufficientData, "batch is empty");
  MetricsReport report;
  report.rows.resize(pairs.size());

  const std::size_t workers =
      std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, std::min<std::size_t>(pairs.size(), 16));
  std::vector<std::future<void>> jobs;
  for (std::size_t w = 0; w < workers; ++w) {
    jobs.push_back(std::async(std::launch::async, [&, w] {
      for (std::size_t i = w; i < pairs.size(); i += workers) {
        report.rows[i] = evaluate_pair(pairs[i].pred, pairs[i].gt, pairs[i].name);
      }
    }));
  }
  for (auto& j : jobs) {
    j.get();
  }

  MetricRow& m = report.mean;
  m.name = "mean";
  for (const MetricRow& r : report.rows) {
    m.counts.tp += r.counts.tp;
    m.counts.fp += r.counts.fp;
    m.counts.fn += r.counts.fn;
    m.counts.tn += r.counts.tn;
    m.dice += r.dice;
    m.jaccard_binary += r.jaccard_binary;
    m.jaccard_micro += r.jaccard_micro;
    m.sensitivity += r.sensitivity;
    m.recall_binary += r.recall_binary;
    m.recall_micro += r.recall_micro;
    m.f1_binary += r.f1_binary;
    m.f1_micro += r.f1_micro;
    m.accuracy_binary += r.accuracy_binary;
  }
  const double n = static_cast<double>(report.rows.size());
  for (double* v : {&m.dice, &m.jaccard_binary, &m.jaccard_micro, &m.sensitivity, &m.recall_binary,
                    &m.recall_micro, &m.f1_binary, &m.f1_micro, &m.accuracy_binary}) {
    *v /= n;
  }
  return report;
}

std::string report_csv(const MetricsReport& report) {
  std::string out = "name,tp,fp,fn,tn";
  for (const char* m : kMetricNames) {
    out += ',';
    out += m;
  }
  out += '\n';
  auto line = [&](const MetricRow& r) {
    out += r.name + ',' + std::to_string(r.counts.tp) + ',' + std::to_string(r.counts.fp) + ',' +
           std::to_string(r.counts.fn) + ',' + std::to_string(r.counts.tn);
    for (const char* m : kMetricNames) {
      out += ',' + fmt(metric_value(r, m));
    }
    out += '\n';
  };
  for (const MetricRow& r : report.rows) {
    line(r);
  }
  line(report.mean);
  return out;
}

nlohmann::ordered_json to_json(const MetricRow& r) {
  nlohmann::ordered_json j;
  j["name"] = r.name;
  j["tp"] = r.counts.tp;
  j["fp"] = r.counts.fp;
  j["fn"] = r.counts.fn;
  j["tn"] = r.counts.tn;
  for (const char* m : kMetricNames) {
    j[m] = metric_value(r, m);
  }
  return j;
}

MetricRow metric_row_from_json(const nlohmann::json& j) {
  try {
    MetricRow r;
    r.name = j.at("name").get<std::string>();
    r.counts = {j.at("tp").get<std::uint64_t>(), j.at("fp").get<std::uint64_t>(), j.at("fn").get<std::uint64_t>(),
                j.at("tn").get<std::uint64_t>()};
    for (const char* m : kMetricNames) {
      field(r, m) = j.at(m).get<double>();
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Schema, std::string("metric row: ") + e.what());
  }
}

std::string report_json(const MetricsReport& report) {
  nlohmann::ordered_json j;
  j["rows"] = nlohmann::ordered_json::array();
  for (const MetricRow& r : report.rows) {
    j["rows"].push_back(to_json(r));
  }
  j["mean"] = to_json(report.mean);
  return j.dump(2) + "\n";
}

}  // namespace osteo::metrics
