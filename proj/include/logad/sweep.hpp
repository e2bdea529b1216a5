#pragma once

// Hyperparameter sweeps: one-parameter-at-a-time around a base setup, or a full grid.

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "logad/anonymizer.hpp"
#include "logad/featurizer.hpp"
#include "logad/neuralnet.hpp"

namespace logad {

/// One configuration, i.e. one `[lr, epochs, steps, bucket, cumsum, norm, topN]` tuple.
struct SweepPoint {
  double learning_rate = 0.01;
  std::size_t epochs = 50;
  std::size_t steps = 6;
  std::chrono::seconds bucket{std::chrono::minutes{10}};
  bool cumsum = false;
  Normalization normalization = Normalization::minmax;
  int top_n = 10;
  bool operator==(const SweepPoint&) const = default;
};

enum class SweepMode { one_at_a_time, grid };
SweepMode parse_sweep_mode(std::string_view s);

struct SweepSpec {
  SweepPoint base;
  // Empty list: parameter not varied.
  std::vector<double> learning_rates;
  std::vector<std::size_t> epochs;
  std::vector<std::size_t> steps;
  std::vector<std::chrono::seconds> buckets;
  std::vector<bool> cumsum;
  std::vector<Normalization> normalizations;
  std::vector<int> top_n;
  SweepMode mode = SweepMode::one_at_a_time;

  FeatureMode feature_mode = FeatureMode::univariate;
  std::chrono::seconds top_window{std::chrono::hours{24}};
  double train_frac = 0.8;
  std::size_t hidden_units = 128;
  LossKind loss = LossKind::mae;
  std::size_t batch_cap = 256;
  std::uint64_t base_seed = 42;
  /// 0: use every available core.
  std::size_t workers = 1;
};

/// Grid: the Cartesian product. One-at-a-time: for each varied parameter in the order
/// lr, epochs, steps, bucket, cumsum, norm, top_n, one row per listed value.
std::vector<SweepPoint> expand_sweep(const SweepSpec& spec);

/// Either an anonymized event stream or a raw univariate series. Series inputs ignore
/// the bucket, cumsum and top_n settings.
struct SweepData {
  std::vector<AnonRecord> records;
  std::optional<std::vector<double>> series;
};

struct SweepRow {
  enum class Status { ok, diverged, failed };

  SweepPoint point;
  std::size_t batch_size = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  Status status = Status::ok;
  std::size_t diverged_epoch = 0;
  std::string error;
  double runtime_seconds = 0.0;
};

struct SweepReport {
  std::vector<SweepRow> rows;  // in expand_sweep() order
};

/// Trains one model per configuration with seed base_seed + index. A diverging or
/// failing configuration is recorded, never fatal.
SweepReport run_sweep(const SweepSpec& spec, const SweepData& data);

/// CSV `lr,epochs,steps,bucket_min,cumsum,norm,top_n,batch_size,train_loss,val_loss,status`.
/// Loss fields are empty unless status is "ok".
std::string format_sweep_report(const SweepReport& report);

}  // namespace logad
