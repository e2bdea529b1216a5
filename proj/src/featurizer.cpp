#include "logad/featurizer.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "json.hpp"

#include "logad/csv.hpp"
#include "logad/errors.hpp"

namespace logad {

namespace {

using std::chrono::seconds;

constexpr std::string_view kFreqTop = "freq_top";
constexpr std::string_view kFreqNonTop = "freq_nontop";

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

Instant floor_to(Instant t, seconds width) {
  const auto n = t.time_since_epoch().count();
  const auto w = width.count();
  auto q = n / w;
  if (n % w != 0 && n < 0) --q;
  return Instant{seconds{q * w}};
}

std::vector<PatternHash> rank_top(const std::map<PatternHash, std::uint64_t>& counts, int top_n) {
  std::vector<std::pair<PatternHash, std::uint64_t>> v;
  v.reserve(counts.size());
  for (const auto& [key, n] : counts) {
    if (n > 0) v.emplace_back(key, n);
  }
  const auto keep = std::min(v.size(), static_cast<std::size_t>(top_n));
  std::partial_sort(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(keep), v.end(),
                    [](const auto& a, const auto& b) {
                      return a.second != b.second ? a.second > b.second : a.first < b.first;
                    });
  std::vector<PatternHash> out;
  out.reserve(keep);
  for (std::size_t i = 0; i < keep; ++i) out.push_back(v[i].first);
  return out;
}

std::size_t window_buckets(const FeatureConfig& cfg) {
  return static_cast<std::size_t>(cfg.top_window.count() / cfg.bucket.count());
}

bool is_frequency_column(std::string_view name) { return name.starts_with("freq_"); }

}  // namespace

std::string_view to_string(FeatureMode m) {
  return m == FeatureMode::univariate ? "uni" : "multi";
}

std::string_view to_string(Normalization n) {
  switch (n) {
    case Normalization::none: return "none";
    case Normalization::minmax: return "minmax";
    case Normalization::sigmoid: return "sigmoid";
  }
  return "none";
}

FeatureMode parse_feature_mode(std::string_view s) {
  const auto v = lower(s);
  if (v == "uni" || v == "univariate") return FeatureMode::univariate;
  if (v == "multi" || v == "multivariate") return FeatureMode::multivariate;
  throw ConfigError("unknown feature mode '" + std::string(s) + "'");
}

Normalization parse_normalization(std::string_view s) {
  const auto v = lower(s);
  if (v == "none") return Normalization::none;
  if (v == "minmax") return Normalization::minmax;
  if (v == "sigmoid") return Normalization::sigmoid;
  throw ConfigError("unknown normalization '" + std::string(s) + "'");
}

void FeatureConfig::validate() const {
  if (bucket.count() <= 0) throw ConfigError("bucket must be positive");
  if (top_n < 1) throw ConfigError("top_n must be at least 1");
  if (top_window < bucket) throw ConfigError("top window must be at least one bucket");
}

BucketSeries bucketize(const std::vector<AnonRecord>& records, const FeatureConfig& cfg) {
  cfg.validate();
  if (records.empty()) throw EmptySeriesError("no records to bucketize");
  BucketSeries series;
  series.width = cfg.bucket;
  const Instant origin = floor_to(records.front().timestamp, cfg.bucket);
  const Instant last = records.back().timestamp;
  if (last < records.front().timestamp) throw Error("bucketize requires time-sorted records");
  const auto n = static_cast<std::size_t>((last - origin) / cfg.bucket) + 1;
  series.buckets.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    series.buckets[i].start = origin + cfg.bucket * static_cast<long long>(i);
  }
  for (const auto& r : records) {
    if (r.timestamp < origin) throw Error("bucketize requires time-sorted records");
    auto& b = series.buckets[static_cast<std::size_t>((r.timestamp - origin) / cfg.bucket)];
    ++b.count;
    b.severity_sum += r.severity;
    b.facility_sum += r.facility;
    ++b.pattern_counts[r.pattern];
  }
  return series;
}

std::vector<PatternHash> top_patterns(const BucketSeries& series, std::size_t at,
                                      const FeatureConfig& cfg) {
  cfg.validate();
  const std::size_t span = window_buckets(cfg);
  const std::size_t end = std::min(at, series.buckets.size());
  const std::size_t begin = end > span ? end - span : 0;
  std::map<PatternHash, std::uint64_t> counts;
  for (std::size_t i = begin; i < end; ++i) {
    for (const auto& [key, n] : series.buckets[i].pattern_counts) counts[key] += n;
  }
  return rank_top(counts, cfg.top_n);
}

double top_coverage(const std::vector<AnonRecord>& records, int top_n) {
  if (records.empty()) return 0.0;
  std::map<PatternHash, std::uint64_t> counts;
  for (const auto& r : records) ++counts[r.pattern];
  std::uint64_t covered = 0;
  for (const auto& key : rank_top(counts, top_n)) covered += counts[key];
  return static_cast<double>(covered) / static_cast<double>(records.size());
}

FeatureFrame::FeatureFrame(std::vector<Instant> times, std::chrono::seconds stride,
                           std::vector<std::string> names, std::vector<double> values)
    : times_(std::move(times)), stride_(stride), names_(std::move(names)), values_(std::move(values)) {
  if (values_.size() != times_.size() * names_.size()) {
    throw ShapeError("frame values do not match rows x columns");
  }
  for (std::size_t i = 1; i < times_.size(); ++i) {
    if (times_[i] - times_[i - 1] != stride_) throw ShapeError("frame times are not uniformly spaced");
  }
}

std::vector<double> FeatureFrame::column(std::size_t c) const {
  std::vector<double> out(rows());
  for (std::size_t r = 0; r < rows(); ++r) out[r] = at(r, c);
  return out;
}

FeatureFrame FeatureFrame::slice(RowRange range) const {
  if (range.begin > range.end || range.end > rows()) throw ShapeError("frame slice out of range");
  std::vector<Instant> t(times_.begin() + static_cast<std::ptrdiff_t>(range.begin),
                         times_.begin() + static_cast<std::ptrdiff_t>(range.end));
  std::vector<double> v(values_.begin() + static_cast<std::ptrdiff_t>(range.begin * cols()),
                        values_.begin() + static_cast<std::ptrdiff_t>(range.end * cols()));
  FeatureFrame out(std::move(t), stride_, names_, std::move(v));
  out.norm_meta_ = norm_meta_;
  return out;
}

FeatureFrame build_features(const BucketSeries& series, const FeatureConfig& cfg) {
  cfg.validate();
  if (series.buckets.empty()) throw EmptySeriesError("no buckets to featurize");
  const bool multi = cfg.mode == FeatureMode::multivariate;
  std::vector<std::string> names;
  if (multi) {
    names = {"avg_severity", "avg_facility", std::string(kFreqTop), std::string(kFreqNonTop)};
  } else {
    names = {std::string(kFreqTop)};
  }

  const std::size_t span = window_buckets(cfg);
  std::map<PatternHash, std::uint64_t> window;  // trailing counts excluding the current bucket
  std::vector<Instant> times;
  std::vector<double> values;
  times.reserve(series.buckets.size());
  values.reserve(series.buckets.size() * names.size());

  for (std::size_t at = 0; at < series.buckets.size(); ++at) {
    if (at > 0) {
      for (const auto& [key, n] : series.buckets[at - 1].pattern_counts) window[key] += n;
      if (at > span) {
        for (const auto& [key, n] : series.buckets[at - 1 - span].pattern_counts) {
          auto it = window.find(key);
          it->second -= n;
          if (it->second == 0) window.erase(it);
        }
      }
    }
    const auto top = rank_top(window, cfg.top_n);
    const Bucket& b = series.buckets[at];
    std::uint64_t freq_top = 0;
    for (const auto& key : top) {
      auto it = b.pattern_counts.find(key);
      if (it != b.pattern_counts.end()) freq_top += it->second;
    }
    times.push_back(b.start);
    if (multi) {
      const double n = static_cast<double>(b.count);
      values.push_back(b.count ? static_cast<double>(b.severity_sum) / n : 0.0);
      values.push_back(b.count ? static_cast<double>(b.facility_sum) / n : 0.0);
      values.push_back(static_cast<double>(freq_top));
      values.push_back(static_cast<double>(b.count - freq_top));
    } else {
      values.push_back(static_cast<double>(freq_top));
    }
  }
  return FeatureFrame(std::move(times), series.width, std::move(names), std::move(values));
}

FeatureFrame apply_cumsum(const FeatureFrame& frame) {
  constexpr long long hour = 3600;
  const long long stride = frame.stride().count();
  if (stride <= 0 || hour % stride != 0) {
    throw ConfigError("cumulative sum needs a bucket that divides one hour (got " +
                      std::to_string(stride) + " s)");
  }
  FeatureFrame out = frame;
  for (std::size_t c = 0; c < out.cols(); ++c) {
    if (!is_frequency_column(out.feature_names()[c])) continue;
    double running = 0.0;
    for (std::size_t r = 0; r < out.rows(); ++r) {
      if (out.times()[r].time_since_epoch().count() % hour == 0) running = 0.0;
      running += out.at(r, c);
      out.at(r, c) = running;
    }
  }
  return out;
}

FeatureFrame normalize(const FeatureFrame& frame, Normalization kind, RowRange fit_span) {
  if (fit_span.size() == 0 || fit_span.end > frame.rows()) {
    throw DatasetError("normalization fit span must be a non-empty row range inside the frame");
  }
  FeatureFrame out = frame;
  NormMeta meta;
  meta.kind = kind;
  meta.fit_span = fit_span;
  switch (kind) {
    case Normalization::none:
      break;
    case Normalization::sigmoid:
      for (std::size_t r = 0; r < out.rows(); ++r) {
        for (std::size_t c = 0; c < out.cols(); ++c) out.at(r, c) = 1.0 / (1.0 + std::exp(-out.at(r, c)));
      }
      break;
    case Normalization::minmax:
      for (std::size_t c = 0; c < out.cols(); ++c) {
        ColumnScale s{frame.at(fit_span.begin, c), frame.at(fit_span.begin, c)};
        for (std::size_t r = fit_span.begin; r < fit_span.end; ++r) {
          s.min = std::min(s.min, frame.at(r, c));
          s.max = std::max(s.max, frame.at(r, c));
        }
        const double range = s.max - s.min;
        for (std::size_t r = 0; r < out.rows(); ++r) {
          out.at(r, c) = range > 0.0 ? (frame.at(r, c) - s.min) / range : 0.0;
        }
        meta.columns.push_back(s);
      }
      break;
  }
  out.set_norm_meta(std::move(meta));
  return out;
}

FeatureFrame denormalize(const FeatureFrame& frame) {
  FeatureFrame out = frame;
  out.set_norm_meta(std::nullopt);
  if (!frame.norm_meta()) return out;
  const auto& meta = *frame.norm_meta();
  switch (meta.kind) {
    case Normalization::none:
      break;
    case Normalization::sigmoid:
      for (std::size_t r = 0; r < out.rows(); ++r) {
        for (std::size_t c = 0; c < out.cols(); ++c) {
          const double y = out.at(r, c);
          out.at(r, c) = std::log(y / (1.0 - y));
        }
      }
      break;
    case Normalization::minmax:
      if (meta.columns.size() != out.cols()) throw ShapeError("normalization metadata column mismatch");
      for (std::size_t c = 0; c < out.cols(); ++c) {
        const auto& s = meta.columns[c];
        for (std::size_t r = 0; r < out.rows(); ++r) {
          out.at(r, c) = out.at(r, c) * (s.max - s.min) + s.min;
        }
      }
      break;
  }
  return out;
}

std::pair<RowRange, RowRange> split_rows(std::size_t rows, double train_frac) {
  if (!(train_frac > 0.0 && train_frac < 1.0)) {
    throw SplitError("training fraction must lie strictly between 0 and 1");
  }
  const auto cut = static_cast<std::size_t>(std::floor(static_cast<double>(rows) * train_frac));
  if (cut == 0 || cut == rows) {
    throw SplitError("split of " + std::to_string(rows) + " rows at " + csv::format_double(train_frac) +
                     " leaves one side empty");
  }
  return {RowRange{0, cut}, RowRange{cut, rows}};
}

std::pair<FeatureFrame, FeatureFrame> split_frame(const FeatureFrame& frame, double train_frac) {
  const auto [train, val] = split_rows(frame.rows(), train_frac);
  return {frame.slice(train), frame.slice(val)};
}

FeatureFrame series_frame(std::span<const double> values, std::string name,
                          std::chrono::seconds stride) {
  std::vector<Instant> times(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    times[i] = Instant{stride * static_cast<long long>(i)};
  }
  return FeatureFrame(std::move(times), stride, {std::move(name)},
                      std::vector<double>(values.begin(), values.end()));
}

WindowedDataset make_windows(const FeatureFrame& frame, std::size_t steps) {
  if (steps == 0) throw DatasetError("window length must be at least 1");
  if (frame.rows() <= steps) {
    throw DatasetError("need more than " + std::to_string(steps) + " rows for windows of " +
                       std::to_string(steps) + " steps, got " + std::to_string(frame.rows()));
  }
  WindowedDataset ds;
  ds.steps = steps;
  ds.features = frame.cols();
  ds.samples = frame.rows() - steps;
  ds.feature_names = frame.feature_names();
  ds.inputs.reserve(ds.samples * steps * ds.features);
  ds.targets.reserve(ds.samples * ds.features);
  for (std::size_t k = 0; k < ds.samples; ++k) {
    for (std::size_t r = k; r < k + steps; ++r) {
      const auto row = frame.row(r);
      ds.inputs.insert(ds.inputs.end(), row.begin(), row.end());
    }
    const auto target = frame.row(k + steps);
    ds.targets.insert(ds.targets.end(), target.begin(), target.end());
    ds.target_times.push_back(frame.times()[k + steps]);
  }
  return ds;
}

std::size_t select_batch_size(std::size_t n_samples, std::size_t cap) {
  if (n_samples == 0) throw DatasetError("batch selection needs at least one sample");
  if (cap == 0) throw ConfigError("batch size cap must be positive");
  std::size_t best = 1;
  for (std::size_t d = 1; d * d <= n_samples; ++d) {
    if (n_samples % d != 0) continue;
    if (d <= cap) best = std::max(best, d);
    const std::size_t pair = n_samples / d;
    if (pair <= cap) best = std::max(best, pair);
  }
  return best;
}

WindowedDataset assign_lanes(WindowedDataset dataset, std::size_t batch_size) {
  if (batch_size == 0 || dataset.samples % batch_size != 0) {
    throw DatasetError("batch size " + std::to_string(batch_size) + " does not divide " +
                       std::to_string(dataset.samples) + " samples");
  }
  dataset.batch_size = batch_size;
  return dataset;
}

// ---- persistence ----------------------------------------------------------

std::string frame_meta_path(const std::string& frame_path) { return frame_path + ".meta.json"; }

std::string format_frame(const FeatureFrame& frame) {
  std::string out = "time";
  for (const auto& name : frame.feature_names()) out += "," + csv::escape(name);
  out += '\n';
  for (std::size_t r = 0; r < frame.rows(); ++r) {
    out += format_iso(frame.times()[r]);
    for (std::size_t c = 0; c < frame.cols(); ++c) out += "," + csv::format_double(frame.at(r, c));
    out += '\n';
  }
  return out;
}

std::string format_frame_meta(const FeatureFrame& frame) {
  nlohmann::ordered_json j;
  j["stride_seconds"] = frame.stride().count();
  if (const auto& m = frame.norm_meta()) {
    j["normalization"] = std::string(to_string(m->kind));
    j["fit_rows"] = {m->fit_span.begin, m->fit_span.end};
    auto cols = nlohmann::ordered_json::array();
    for (std::size_t c = 0; c < m->columns.size(); ++c) {
      cols.push_back({{"name", frame.feature_names()[c]},
                      {"min", m->columns[c].min},
                      {"max", m->columns[c].max}});
    }
    j["columns"] = std::move(cols);
  } else {
    j["normalization"] = nullptr;
  }
  return j.dump(2) + "\n";
}

FeatureFrame parse_frame(std::string_view csv_text, std::string_view meta_json) {
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(meta_json);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("frame metadata: ") + e.what());
  }
  bool complete = true;
  const auto ls = csv::lines(csv_text, &complete);
  if (ls.empty() || !complete) throw FormatError("frame: empty or truncated file");
  const auto header = csv::split(ls.front());
  if (!header || header->empty() || header->front() != "time") {
    throw FormatError("frame: header must start with 'time'");
  }
  std::vector<std::string> names(header->begin() + 1, header->end());
  std::vector<Instant> times;
  std::vector<double> values;
  for (std::size_t i = 1; i < ls.size(); ++i) {
    const auto fields = csv::split(ls[i]);
    if (!fields || fields->size() != names.size() + 1) {
      throw FormatError("frame: line " + std::to_string(i + 1) + " has the wrong field count");
    }
    const auto t = parse_iso((*fields)[0]);
    if (!t) throw FormatError("frame: bad time on line " + std::to_string(i + 1));
    times.push_back(*t);
    for (std::size_t c = 1; c < fields->size(); ++c) {
      const auto v = csv::parse_double((*fields)[c]);
      if (!v) throw FormatError("frame: bad number on line " + std::to_string(i + 1));
      values.push_back(*v);
    }
  }
  try {
    const seconds stride{meta.at("stride_seconds").get<long long>()};
    FeatureFrame frame(std::move(times), stride, std::move(names), std::move(values));
    const auto& norm = meta.at("normalization");
    if (!norm.is_null()) {
      NormMeta m;
      m.kind = parse_normalization(norm.get<std::string>());
      const auto fit = meta.at("fit_rows");
      m.fit_span = {fit.at(0).get<std::size_t>(), fit.at(1).get<std::size_t>()};
      if (m.kind == Normalization::minmax) {
        for (const auto& col : meta.at("columns")) {
          m.columns.push_back({col.at("min").get<double>(), col.at("max").get<double>()});
        }
        if (m.columns.size() != frame.cols()) throw FormatError("frame metadata: column count mismatch");
      }
      frame.set_norm_meta(std::move(m));
    }
    return frame;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("frame metadata: ") + e.what());
  } catch (const ShapeError& e) {
    throw FormatError(std::string("frame: ") + e.what());
  } catch (const ConfigError& e) {
    throw FormatError(std::string("frame metadata: ") + e.what());
  }
}

void save_frame(const FeatureFrame& frame, const std::string& path) {
  csv::write_file(path, format_frame(frame));
  csv::write_file(frame_meta_path(path), format_frame_meta(frame));
}

FeatureFrame load_frame(const std::string& path) {
  return parse_frame(csv::read_file(path), csv::read_file(frame_meta_path(path)));
}

}  // namespace logad
