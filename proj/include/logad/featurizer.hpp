#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "logad/anonymizer.hpp"
#include "logad/timeutil.hpp"

namespace logad {

enum class FeatureMode { univariate, multivariate };
enum class Normalization { none, minmax, sigmoid };

std::string_view to_string(FeatureMode m);
std::string_view to_string(Normalization n);
/// Accepts "uni"/"univariate", "multi"/"multivariate". Throws ConfigError.
FeatureMode parse_feature_mode(std::string_view s);
/// Accepts "none", "minmax", "sigmoid" (case-insensitive). Throws ConfigError.
Normalization parse_normalization(std::string_view s);

struct FeatureConfig {
  std::chrono::seconds bucket{std::chrono::minutes{10}};
  int top_n = 10;
  FeatureMode mode = FeatureMode::univariate;
  bool cumsum = false;
  Normalization normalization = Normalization::minmax;
  std::chrono::seconds top_window{std::chrono::hours{24}};

  /// Throws ConfigError unless bucket > 0, top_n >= 1 and top_window >= bucket.
  void validate() const;
};

struct Bucket {
  Instant start{};
  std::uint64_t count = 0;
  std::int64_t severity_sum = 0;
  std::int64_t facility_sum = 0;
  std::map<PatternHash, std::uint64_t> pattern_counts;
};

/// Contiguous, gap-filled bucket grid aligned to multiples of `width` since the epoch.
struct BucketSeries {
  std::chrono::seconds width{};
  std::vector<Bucket> buckets;
};

/// Throws EmptySeriesError on empty input. `records` must be sorted by timestamp.
BucketSeries bucketize(const std::vector<AnonRecord>& records, const FeatureConfig& cfg);

/// Top `cfg.top_n` patterns over the trailing `cfg.top_window` that ends at the start of
/// bucket `at` (the bucket itself is excluded). Ranked by count, ties by key order.
std::vector<PatternHash> top_patterns(const BucketSeries& series, std::size_t at,
                                      const FeatureConfig& cfg);

/// Share of all events whose pattern is among the corpus-wide `top_n`.
double top_coverage(const std::vector<AnonRecord>& records, int top_n);

struct RowRange {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const noexcept { return end - begin; }
  bool operator==(const RowRange&) const = default;
};

struct ColumnScale {
  double min = 0.0;
  double max = 0.0;
  bool operator==(const ColumnScale&) const = default;
};

struct NormMeta {
  Normalization kind = Normalization::none;
  RowRange fit_span;
  std::vector<ColumnScale> columns;  // minmax only
  bool operator==(const NormMeta&) const = default;
};

/// Time-indexed feature matrix, row-major.
class FeatureFrame {
 public:
  FeatureFrame() = default;
  FeatureFrame(std::vector<Instant> times, std::chrono::seconds stride,
               std::vector<std::string> names, std::vector<double> values);

  std::size_t rows() const noexcept { return times_.size(); }
  std::size_t cols() const noexcept { return names_.size(); }
  std::chrono::seconds stride() const noexcept { return stride_; }
  const std::vector<Instant>& times() const noexcept { return times_; }
  const std::vector<std::string>& feature_names() const noexcept { return names_; }
  const std::vector<double>& values() const noexcept { return values_; }

  double at(std::size_t r, std::size_t c) const { return values_[r * cols() + c]; }
  double& at(std::size_t r, std::size_t c) { return values_[r * cols() + c]; }
  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(values_).subspan(r * cols(), cols());
  }
  std::vector<double> column(std::size_t c) const;

  const std::optional<NormMeta>& norm_meta() const noexcept { return norm_meta_; }
  void set_norm_meta(std::optional<NormMeta> m) { norm_meta_ = std::move(m); }

  /// Rows [range.begin, range.end); keeps norm_meta.
  FeatureFrame slice(RowRange range) const;

  bool operator==(const FeatureFrame&) const = default;

 private:
  std::vector<Instant> times_;
  std::chrono::seconds stride_{};
  std::vector<std::string> names_;
  std::vector<double> values_;
  std::optional<NormMeta> norm_meta_;
};

/// Univariate: [freq_top]. Multivariate: [avg_severity, avg_facility, freq_top, freq_nontop].
FeatureFrame build_features(const BucketSeries& series, const FeatureConfig& cfg);

/// Running sums of the freq_* columns, restarting at every wall-clock hour.
/// Throws ConfigError unless the stride divides one hour.
FeatureFrame apply_cumsum(const FeatureFrame& frame);

/// Fits on `fit_span` only (minmax) and records NormMeta.
FeatureFrame normalize(const FeatureFrame& frame, Normalization kind, RowRange fit_span);

/// Inverse of `normalize`; identity when the frame carries no metadata.
FeatureFrame denormalize(const FeatureFrame& frame);

/// Chronological split with floor on the training side. Throws SplitError.
std::pair<RowRange, RowRange> split_rows(std::size_t rows, double train_frac);
std::pair<FeatureFrame, FeatureFrame> split_frame(const FeatureFrame& frame, double train_frac);

/// One-column frame for raw synthetic series, stamped from the epoch at `stride`.
FeatureFrame series_frame(std::span<const double> values, std::string name = "value",
                          std::chrono::seconds stride = std::chrono::minutes{10});

/// Sliding-window samples. Sample k reads rows [k, k+steps) and predicts row k+steps.
struct WindowedDataset {
  std::size_t steps = 0;
  std::size_t features = 0;
  std::size_t samples = 0;
  std::vector<double> inputs;   // samples x steps x features
  std::vector<double> targets;  // samples x features
  std::vector<Instant> target_times;
  std::vector<std::string> feature_names;
  /// 0 until assign_lanes() runs.
  std::size_t batch_size = 0;

  std::span<const double> input(std::size_t sample) const {
    return std::span<const double>(inputs).subspan(sample * steps * features, steps * features);
  }
  std::span<const double> target(std::size_t sample) const {
    return std::span<const double>(targets).subspan(sample * features, features);
  }
  std::size_t batches() const noexcept { return batch_size ? samples / batch_size : 0; }
  /// Lane i walks the i-th contiguous segment, so (batch k+1, lane i) follows (k, i).
  std::size_t sample_at(std::size_t batch, std::size_t lane) const noexcept {
    return lane * batches() + batch;
  }
};

/// Throws DatasetError when rows <= steps.
WindowedDataset make_windows(const FeatureFrame& frame, std::size_t steps);

/// Largest divisor of n_samples that does not exceed cap.
std::size_t select_batch_size(std::size_t n_samples, std::size_t cap = 256);

/// Throws DatasetError unless batch_size divides the sample count.
WindowedDataset assign_lanes(WindowedDataset dataset, std::size_t batch_size);

/// CSV: `time,<feature...>` plus a JSON sidecar at `<path>.meta.json`.
std::string format_frame(const FeatureFrame& frame);
std::string format_frame_meta(const FeatureFrame& frame);
FeatureFrame parse_frame(std::string_view csv_text, std::string_view meta_json);
void save_frame(const FeatureFrame& frame, const std::string& path);
FeatureFrame load_frame(const std::string& path);
std::string frame_meta_path(const std::string& frame_path);

}  // namespace logad
