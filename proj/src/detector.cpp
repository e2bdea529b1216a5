#include "logad/detector.hpp"

#include <algorithm>
#include <cmath>

#include "logad/csv.hpp"
#include "logad/errors.hpp"

namespace logad {

double compute_threshold(std::span<const double> training_mae) {
  if (training_mae.empty()) throw ThresholdError("threshold needs at least one training error");
  if (!std::all_of(training_mae.begin(), training_mae.end(), [](double v) { return std::isfinite(v); })) {
    throw ThresholdError("training errors must be finite");
  }
  return *std::max_element(training_mae.begin(), training_mae.end());
}

std::size_t AnomalyReport::anomaly_count() const {
  return static_cast<std::size_t>(
      std::count_if(points.begin(), points.end(), [](const AnomalyPoint& p) { return p.is_anomaly; }));
}

AnomalyReport detect(LstmModel& model, const WindowedDataset& test_set, double threshold) {
  const auto pred = predict_series(model, test_set);
  AnomalyReport report;
  report.threshold = threshold;
  report.points.reserve(test_set.samples);
  for (std::size_t s = 0; s < test_set.samples; ++s) {
    AnomalyPoint p;
    p.time = test_set.target_times[s];
    const auto target = test_set.target(s);
    p.actual.assign(target.begin(), target.end());
    for (std::size_t f = 0; f < test_set.features; ++f) {
      p.predicted.push_back(pred.predictions(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(f)));
    }
    p.mae = pred.mae[s];
    p.is_anomaly = p.mae > threshold;
    report.points.push_back(std::move(p));
  }
  return report;
}

std::string format_anomaly_report(const AnomalyReport& report) {
  std::string out = "time,mae,threshold,is_anomaly\n";
  const std::string threshold = csv::format_double(report.threshold);
  for (const auto& p : report.points) {
    out += format_iso(p.time) + "," + csv::format_double(p.mae) + "," + threshold + "," +
           (p.is_anomaly ? "1" : "0") + "\n";
  }
  return out;
}

std::string format_prediction_trace(const WindowedDataset& ds, const SeriesPrediction& pred) {
  std::string out = "time";
  for (const auto& name : ds.feature_names) out += "," + csv::escape("actual_" + name);
  for (const auto& name : ds.feature_names) out += "," + csv::escape("predicted_" + name);
  out += '\n';
  for (std::size_t s = 0; s < ds.samples; ++s) {
    out += format_iso(ds.target_times[s]);
    for (double v : ds.target(s)) out += "," + csv::format_double(v);
    for (std::size_t f = 0; f < ds.features; ++f) {
      out += "," + csv::format_double(pred.predictions(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(f)));
    }
    out += '\n';
  }
  return out;
}

}  // namespace logad
