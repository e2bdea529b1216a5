#include "logad/pipeline.hpp"

#include <numeric>

namespace logad {

FeatureFrame featurize_records(const std::vector<AnonRecord>& records, const FeatureConfig& cfg,
                               double train_frac) {
  auto frame = build_features(bucketize(records, cfg), cfg);
  if (cfg.cumsum) frame = apply_cumsum(frame);
  return prepare_frame(frame, cfg.normalization, train_frac);
}

FeatureFrame prepare_frame(const FeatureFrame& frame, Normalization kind, double train_frac) {
  if (frame.norm_meta()) return frame;
  const auto [train, val] = split_rows(frame.rows(), train_frac);
  return normalize(frame, kind, train);
}

Datasets make_datasets(const FeatureFrame& frame, std::size_t steps, double train_frac,
                       std::size_t batch_cap) {
  const auto [train_rows, val_rows] = split_frame(frame, train_frac);
  auto train = make_windows(train_rows, steps);
  auto val = make_windows(val_rows, steps);
  // one lane count for both sides so the model sees the same stateful regime
  const auto batch = select_batch_size(std::gcd(train.samples, val.samples), batch_cap);
  return {assign_lanes(std::move(train), batch), assign_lanes(std::move(val), batch)};
}

}  // namespace logad
