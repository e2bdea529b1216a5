#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "logad/featurizer.hpp"
#include "logad/neuralnet.hpp"

namespace logad {

/// Maximum per-sample training MAE. Throws ThresholdError on empty or non-finite input.
double compute_threshold(std::span<const double> training_mae);

struct AnomalyPoint {
  Instant time{};
  std::vector<double> actual;
  std::vector<double> predicted;
  double mae = 0.0;
  bool is_anomaly = false;
  bool operator==(const AnomalyPoint&) const = default;
};

struct AnomalyReport {
  double threshold = 0.0;
  std::vector<AnomalyPoint> points;  // chronological

  std::size_t anomaly_count() const;
  bool operator==(const AnomalyReport&) const = default;
};

/// Flags every sample whose MAE exceeds `threshold`.
AnomalyReport detect(LstmModel& model, const WindowedDataset& test_set, double threshold);

/// CSV `time,mae,threshold,is_anomaly`.
std::string format_anomaly_report(const AnomalyReport& report);

/// CSV `time,actual_<f>...,predicted_<f>...` for plotting.
std::string format_prediction_trace(const WindowedDataset& ds, const SeriesPrediction& pred);

}  // namespace logad
