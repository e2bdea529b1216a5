#pragma once

// Glue between the stages: records -> model-ready frame -> stateful datasets.

#include <cstddef>
#include <vector>

#include "logad/anonymizer.hpp"
#include "logad/featurizer.hpp"
#include "logad/neuralnet.hpp"

namespace logad {

/// Bucketize, build features, optional hourly cumsum, then normalize with the
/// scale fitted on the first `train_frac` of the rows.
FeatureFrame featurize_records(const std::vector<AnonRecord>& records, const FeatureConfig& cfg,
                               double train_frac);

/// Normalizes a raw frame (one carrying no metadata) on its training span.
/// Frames that are already normalized are returned unchanged.
FeatureFrame prepare_frame(const FeatureFrame& frame, Normalization kind, double train_frac);

struct Datasets {
  WindowedDataset train;
  WindowedDataset val;
};

/// Chronological split and windows on each side. Both sides share one batch size:
/// the largest divisor of gcd(train samples, validation samples) within `batch_cap`.
Datasets make_datasets(const FeatureFrame& frame, std::size_t steps, double train_frac,
                       std::size_t batch_cap = 256);

}  // namespace logad
