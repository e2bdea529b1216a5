#include "logad/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <thread>

#include <fmt/format.h>

#include "logad/csv.hpp"
#include "logad/errors.hpp"
#include "logad/pipeline.hpp"

namespace logad {

SweepMode parse_sweep_mode(std::string_view s) {
  if (s == "one" || s == "one-at-a-time" || s == "oat") return SweepMode::one_at_a_time;
  if (s == "grid") return SweepMode::grid;
  throw ConfigError("unknown sweep mode '" + std::string(s) + "'");
}

std::vector<SweepPoint> expand_sweep(const SweepSpec& spec) {
  std::vector<SweepPoint> out;
  if (spec.mode == SweepMode::one_at_a_time) {
    auto vary = [&](const auto& values, auto member) {
      for (const auto& v : values) {
        SweepPoint p = spec.base;
        p.*member = v;
        out.push_back(p);
      }
    };
    vary(spec.learning_rates, &SweepPoint::learning_rate);
    vary(spec.epochs, &SweepPoint::epochs);
    vary(spec.steps, &SweepPoint::steps);
    vary(spec.buckets, &SweepPoint::bucket);
    vary(spec.cumsum, &SweepPoint::cumsum);
    vary(spec.normalizations, &SweepPoint::normalization);
    vary(spec.top_n, &SweepPoint::top_n);
    if (out.empty()) out.push_back(spec.base);
    return out;
  }

  out.push_back(spec.base);
  auto cross = [&](const auto& values, auto member) {
    if (values.empty()) return;
    std::vector<SweepPoint> next;
    next.reserve(out.size() * values.size());
    for (const auto& p : out) {
      for (const auto& v : values) {
        SweepPoint q = p;
        q.*member = v;
        next.push_back(q);
      }
    }
    out = std::move(next);
  };
  cross(spec.learning_rates, &SweepPoint::learning_rate);
  cross(spec.epochs, &SweepPoint::epochs);
  cross(spec.steps, &SweepPoint::steps);
  cross(spec.buckets, &SweepPoint::bucket);
  cross(spec.cumsum, &SweepPoint::cumsum);
  cross(spec.normalizations, &SweepPoint::normalization);
  cross(spec.top_n, &SweepPoint::top_n);
  return out;
}

namespace {

SweepRow run_one(const SweepSpec& spec, const SweepData& data, const SweepPoint& point,
                 std::uint64_t seed) {
  SweepRow row;
  row.point = point;
  const auto start = std::chrono::steady_clock::now();
  try {
    FeatureFrame frame;
    if (data.series) {
      frame = prepare_frame(series_frame(*data.series), point.normalization, spec.train_frac);
    } else {
      FeatureConfig fc;
      fc.bucket = point.bucket;
      fc.top_n = point.top_n;
      fc.mode = spec.feature_mode;
      fc.cumsum = point.cumsum;
      fc.normalization = point.normalization;
      fc.top_window = spec.top_window;
      frame = featurize_records(data.records, fc, spec.train_frac);
    }
    const auto sets = make_datasets(frame, point.steps, spec.train_frac, spec.batch_cap);
    row.batch_size = sets.train.batch_size;

    LstmConfig mc;
    mc.input_dim = frame.cols();
    mc.output_dim = frame.cols();
    mc.hidden_units = spec.hidden_units;
    mc.seed = seed;
    auto model = init_model(mc);
    Hyperparameters hp;
    hp.learning_rate = point.learning_rate;
    hp.epochs = point.epochs;
    hp.loss = spec.loss;
    const auto report = train(model, sets.train, sets.val, hp);
    row.train_loss = report.final_train_loss();
    row.val_loss = report.final_val_loss();
  } catch (const DivergenceError& e) {
    row.status = SweepRow::Status::diverged;
    row.diverged_epoch = e.epoch();
    row.error = e.what();
  } catch (const Error& e) {
    row.status = SweepRow::Status::failed;
    row.error = e.what();
  }
  row.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return row;
}

}  // namespace

SweepReport run_sweep(const SweepSpec& spec, const SweepData& data) {
  const auto points = expand_sweep(spec);
  SweepReport report;
  report.rows.resize(points.size());

  std::size_t workers = spec.workers ? spec.workers : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, points.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < points.size(); i = next++) {
      report.rows[i] = run_one(spec, data, points[i], spec.base_seed + i);
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  return report;
}

std::string format_sweep_report(const SweepReport& report) {
  std::string out = "lr,epochs,steps,bucket_min,cumsum,norm,top_n,batch_size,train_loss,val_loss,status\n";
  for (const auto& r : report.rows) {
    const auto& p = r.point;
    const bool ok = r.status == SweepRow::Status::ok;
    std::string status = "ok";
    if (r.status == SweepRow::Status::diverged) status = fmt::format("diverged@{}", r.diverged_epoch + 1);
    if (r.status == SweepRow::Status::failed) status = "failed: " + r.error;
    out += csv::join({csv::format_double(p.learning_rate), std::to_string(p.epochs),
                      std::to_string(p.steps), csv::format_double(static_cast<double>(p.bucket.count()) / 60.0),
                      p.cumsum ? "yes" : "no", std::string(to_string(p.normalization)),
                      std::to_string(p.top_n), std::to_string(r.batch_size),
                      ok ? csv::format_double(r.train_loss) : "", ok ? csv::format_double(r.val_loss) : "",
                      status});
    out += '\n';
  }
  return out;
}

}  // namespace logad
