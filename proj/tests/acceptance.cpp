// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <string>

#include <fmt/format.h>

#include "feature_oracle.hpp"
#include "logad/anonymizer.hpp"
#include "logad/detector.hpp"
#include "logad/errors.hpp"
#include "logad/pipeline.hpp"
#include "logad/synthetic.hpp"
#include "logad/syslog_ingest.hpp"
#include "nn_oracle.hpp"

using namespace logad;
using namespace std::chrono_literals;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

constexpr std::size_t kHidden = 128;
constexpr std::uint64_t kSeed = 42;

// ---- learning runs, kept for the determinism check ---------------------------

struct Learned {
  TrainReport report;
  std::string model_bytes;
  std::vector<double> val_errors;
  bool diverged = false;
  std::size_t diverged_epoch = 0;
};

Learned fit_series(const std::vector<double>& series, double lr, std::size_t steps, std::size_t epochs) {
  const auto frame = prepare_frame(series_frame(series), Normalization::minmax, 0.8);
  const auto data = make_datasets(frame, steps, 0.8);
  LstmModel model = init_model({1, kHidden, 1, kSeed});
  Hyperparameters hp;
  hp.learning_rate = lr;
  hp.epochs = epochs;
  Learned out;
  try {
    out.report = train(model, data.train, data.val, hp);
  } catch (const DivergenceError& e) {
    out.diverged = true;
    out.diverged_epoch = e.epoch();
    return out;
  }
  out.model_bytes = serialize_model(model);
  out.val_errors = predict_series(model, data.val).mae;
  return out;
}

bool same_run(const Learned& a, const Learned& b) {
  return a.diverged == b.diverged && a.diverged_epoch == b.diverged_epoch && a.report.epochs == b.report.epochs &&
         a.model_bytes == b.model_bytes && a.val_errors == b.val_errors;
}

struct Detection {
  Learned learned;
  double coverage = 0.0;
  double threshold = 0.0;
  std::string report_csv;
  bool burst_in_val = false;
  bool burst_flagged = false;
  double burst_mae = 0.0;
  std::size_t normal = 0;
  std::size_t normal_flagged = 0;
};

// Zipf corpus with one x10 burst of the most frequent pattern in the validation span.
Detection run_detection() {
  CorpusSpec spec;
  spec.zipf_exponent = zipf_exponent_for_coverage(spec.patterns, 10, 0.8);
  spec.seed = 7;
  const Instant burst_at = spec.start + 24h * 6 + 12h;
  spec.bursts.push_back({burst_at, 10min, 0, 10.0});

  Detection d;
  const auto corpus = parse_corpus(gen_synthetic_corpus(spec));
  PatternDictionary dict;
  const auto records = anonymize(corpus.records, dict);
  d.coverage = top_coverage(records, 10);

  FeatureConfig cfg;  // univariate, 10 min, top 10, minmax
  const auto frame = featurize_records(records, cfg, 0.8);
  const auto data = make_datasets(frame, 6, 0.8);
  LstmModel model = init_model({1, kHidden, 1, kSeed});
  Hyperparameters hp;  // lr 0.01, 50 epochs, MAE
  d.learned.report = train(model, data.train, data.val, hp);
  d.learned.model_bytes = serialize_model(model);

  d.threshold = compute_threshold(predict_series(model, data.train).mae);
  const auto report = detect(model, data.val, d.threshold);
  d.report_csv = format_anomaly_report(report);
  for (const auto& p : report.points) {
    d.learned.val_errors.push_back(p.mae);
    if (p.time == burst_at) {
      d.burst_in_val = true;
      d.burst_flagged = p.is_anomaly;
      d.burst_mae = p.mae;
    } else {
      ++d.normal;
      if (p.is_anomaly) ++d.normal_flagged;
    }
  }
  return d;
}

// ---- criteria ----------------------------------------------------------------

Outcome gradient_oracle() {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<std::size_t> hidden(1, 8), steps(1, 5), dim(1, 3), batch(1, 4);
  double worst = 0.0;
  std::size_t params = 0;
  int models = 0;
  for (int i = 0; i < 24; ++i) {
    const LossKind kind = i % 2 ? LossKind::msle : LossKind::mae;
    const auto r = test::gradient_check(1000 + i, hidden(rng), steps(rng), dim(rng), dim(rng), batch(rng), kind);
    worst = std::max(worst, r.max_rel_error);
    params += r.checked;
    ++models;
  }
  return {worst < 1e-4, fmt::format("{} models, {} parameters, max relative error {:.2e}", models, params, worst)};
}

Outcome fibonacci_fitness(const Learned& run) {
  if (run.diverged) return {false, "diverged"};
  std::size_t good = 0;
  for (double e : run.val_errors) good += e < 0.1;
  const double share = double(good) / double(run.val_errors.size());
  const double loss = run.report.final_train_loss();
  return {loss < 0.05 && share >= 0.9,
          fmt::format("final train MAE {:.5f}, {:.1f}% of {} held-out points within 0.1, {:.1f} s", loss,
                      100 * share, run.val_errors.size(), run.report.wall_time.count())};
}

Outcome lr_ordering(const Learned& slow, const Learned& fast) {
  if (slow.diverged) return {false, "lr 0.01 run diverged"};
  const double a = slow.report.final_val_loss();
  if (fast.diverged) return {true, fmt::format("val MAE {:.5f} at lr 0.01; lr 0.1 diverged at epoch {}", a, fast.diverged_epoch + 1)};
  const double b = fast.report.final_val_loss();
  return {a < b && b > 3 * a, fmt::format("val MAE {:.5f} at lr 0.01 vs {:.5f} at lr 0.1 (ratio {:.1f})", a, b, b / a)};
}

Outcome noise_ceiling(const Learned& clean, const Learned& noisy) {
  if (clean.diverged || noisy.diverged) return {false, "a run diverged"};
  const double a = clean.report.final_train_loss();
  const double b = noisy.report.final_train_loss();
  return {b >= 2 * a, fmt::format("train MAE {:.5f} noisy vs {:.5f} clean (ratio {:.1f})", b, a, b / a)};
}

Outcome stateful_equivalence() {
  double worst = 0.0;
  std::size_t compared = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto r = test::stateful_equivalence(seed, 1 + seed % 8, 1 + seed % 3, 1 + seed % 2, 1 + seed % 6, 40);
    worst = std::max(worst, r.max_abs_diff);
    compared += r.compared;
  }
  return {worst <= 1e-12, fmt::format("{} predictions, max abs difference {:.2e}", compared, worst)};
}

Outcome anonymizer_suite() {
  // 1000 lines from 8 shapes; every line carries a unique maskable marker
  const std::vector<std::function<std::string(int)>> shapes = {
      [](int i) { return fmt::format("Accepted publickey for user=mk{}q from 10.0.{}.{}", i, i % 256, i % 7); },
      [](int i) { return fmt::format("session opened for mk{}q by uid {}", i, i * 3); },
      [](int i) { return fmt::format("kernel: out of memory in /tmp/mk{}q", i); },
      [](int i) { return fmt::format("job mk{}q exited with status {}", i, i % 4); },
      [](int i) { return fmt::format("link state changed fe80::{:x}:mk{}q", i + 4096, i); },
      [](int i) { return fmt::format("token 0x{:08x} rejected tag=mk{}q", i * 7919, i); },
      [](int i) { return fmt::format("slurmd[{}]: launched mk{}q", 2000 + i, i); },
      [](int i) { return fmt::format("disk mk{}q temperature {} ok", i, 30 + i % 20); },
  };
  std::string text;
  std::vector<int> klass;
  for (int i = 0; i < 1000; ++i) {
    const int k = (i * 37 + i / 5) % 8;
    klass.push_back(k);
    text += fmt::format("<{}>1 2022-03-01T{:02}:{:02}:{:02}Z hostalpha app - - - {}\n", 8 * (i % 24) + i % 8,
                        i / 3600, (i / 60) % 60, i % 60, shapes[k](i));
  }

  auto run = [&]() {
    PatternDictionary dict;
    const auto recs = anonymize(parse_corpus(text).records, dict);
    return std::make_tuple(recs, dict, format_anon_stream(recs), format_dictionary(dict));
  };
  const auto [recs, dict, stream, dict_text] = run();
  const auto [recs2, dict2, stream2, dict_text2] = run();
  const bool deterministic = stream == stream2 && dict_text == dict_text2;
  const bool conserved = recs.size() == 1000 && dict.total_count() == 1000;

  std::map<int, std::set<PatternHash>> by_class;
  for (std::size_t i = 0; i < recs.size(); ++i) by_class[klass[i]].insert(recs[i].pattern);
  bool sound = by_class.size() == 8 && dict.size() == 8;
  for (const auto& [k, keys] : by_class) sound = sound && keys.size() == 1;

  bool leak_free = stream.find("mk") == std::string::npos;
  for (const char* word : {"Accepted", "session", "memory", "exited", "link", "token", "launched", "temperature"}) {
    leak_free = leak_free && stream.find(word) == std::string::npos && dict_text.find(word) != std::string::npos;
  }
  return {deterministic && conserved && sound && leak_free,
          fmt::format("deterministic {}, conserved {}, one key per class {}, no leakage {}", deterministic, conserved,
                      sound, leak_free)};
}

Outcome feature_oracle() {
  std::size_t cells = 0, mismatches = 0;
  for (unsigned seed = 1; seed <= 5; ++seed) {
    const auto recs = test::small_fixture(200, seed);
    for (int top_n : {1, 3, 10}) {
      for (auto width : {5min, 10min, 30min}) {
        FeatureConfig cfg;
        cfg.mode = FeatureMode::multivariate;
        cfg.top_n = top_n;
        cfg.bucket = width;
        cfg.top_window = 3h;
        const auto f = build_features(bucketize(recs, cfg), cfg);
        const auto oracle = test::oracle_features(recs, width.count() * 60, 3 * 3600, top_n);
        if (f.rows() != oracle.size()) return {false, "row count differs from the recount"};
        for (std::size_t r = 0; r < f.rows(); ++r) {
          const double want[] = {oracle[r].avg_severity, oracle[r].avg_facility, oracle[r].freq_top,
                                 oracle[r].freq_nontop};
          for (std::size_t c = 0; c < 4; ++c) {
            ++cells;
            if (std::abs(f.at(r, c) - want[c]) > 1e-12) ++mismatches;
          }
        }
      }
    }
  }

  // hourly cumsum: brute-force sums within each wall-clock hour
  std::size_t resets = 0;
  bool cumsum_ok = true;
  FeatureConfig cfg;
  cfg.mode = FeatureMode::multivariate;
  const auto raw = build_features(bucketize(test::small_fixture(200, 9), cfg), cfg);
  const auto cum = apply_cumsum(raw);
  for (std::size_t r = 0; r < raw.rows(); ++r) {
    const auto hour = raw.times()[r].time_since_epoch().count() / 3600;
    if (raw.times()[r].time_since_epoch().count() % 3600 == 0) ++resets;
    for (std::size_t c = 0; c < raw.cols(); ++c) {
      double want = raw.at(r, c);
      if (raw.feature_names()[c].starts_with("freq_")) {
        want = 0;
        for (std::size_t s = 0; s <= r; ++s)
          if (raw.times()[s].time_since_epoch().count() / 3600 == hour) want += raw.at(s, c);
      }
      cumsum_ok = cumsum_ok && cum.at(r, c) == want;
    }
  }

  double roundtrip = 0.0;
  const auto norm = normalize(raw, Normalization::minmax, split_rows(raw.rows(), 0.8).first);
  const auto back = denormalize(norm);
  for (std::size_t i = 0; i < raw.values().size(); ++i)
    roundtrip = std::max(roundtrip, std::abs(back.values()[i] - raw.values()[i]));

  return {mismatches == 0 && cumsum_ok && resets >= 5 && roundtrip <= 1e-12,
          fmt::format("{} cells, {} mismatches; cumsum exact over {} hour resets: {}; minmax round trip {:.1e}", cells,
                      mismatches, resets, cumsum_ok, roundtrip)};
}

Outcome batch_selection() {
  std::size_t wrong = 0;
  for (std::size_t n = 1; n <= 10000; ++n) {
    std::size_t best = 1;
    for (std::size_t d = 1; d <= std::min<std::size_t>(n, 256); ++d)
      if (n % d == 0) best = d;
    wrong += select_batch_size(n, 256) != best;
  }
  return {wrong == 0, fmt::format("n = 1..10000, {} disagreements", wrong)};
}

Outcome end_to_end(const Detection& d) {
  const double share = double(d.normal_flagged) / double(d.normal);
  const bool coverage_ok = std::abs(d.coverage - 0.8) <= 0.05;
  return {coverage_ok && d.burst_in_val && d.burst_flagged && share <= 0.05,
          fmt::format("top-10 coverage {:.3f}; burst MAE {:.4f} vs threshold {:.4f} flagged {}; {} of {} normal "
                      "samples flagged ({:.1f}%)",
                      d.coverage, d.burst_mae, d.threshold, d.burst_flagged, d.normal_flagged, d.normal, 100 * share)};
}

}  // namespace

int main() {
  int failures = 0;
  auto report = [&](int id, const char* name, const Outcome& o, double seconds) {
    std::cout << fmt::format("[{}] criterion {:>2} {}: {} ({:.1f} s)", o.pass ? "PASS" : "FAIL", id, name, o.detail,
                             seconds)
              << std::endl;
    failures += !o.pass;
  };
  auto timed = [](auto&& f) {
    const auto t0 = std::chrono::steady_clock::now();
    auto r = f();
    return std::make_pair(r, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  };

  {
    auto [o, s] = timed(gradient_oracle);
    report(1, "gradient oracle", o, s);
  }

  const auto fib = gen_fibonacci(100);
  const auto noisy = gen_fib_noise(100, 0, 30, kSeed);
  auto [clean, t_clean] = timed([&] { return fit_series(fib, 0.01, 10, 100); });
  report(2, "Fibonacci fitness", fibonacci_fitness(clean), t_clean);

  auto [fast, t_fast] = timed([&] { return fit_series(fib, 0.1, 10, 100); });
  report(3, "learning-rate ordering", lr_ordering(clean, fast), t_clean + t_fast);

  auto [noise, t_noise] = timed([&] { return fit_series(noisy, 0.01, 10, 100); });
  report(4, "noise ceiling", noise_ceiling(clean, noise), t_clean + t_noise);

  {
    auto [o, s] = timed(stateful_equivalence);
    report(5, "stateful equivalence", o, s);
  }
  {
    auto [o, s] = timed(anonymizer_suite);
    report(6, "anonymizer suite", o, s);
  }
  {
    auto [o, s] = timed(feature_oracle);
    report(7, "feature oracle", o, s);
  }
  {
    auto [o, s] = timed(batch_selection);
    report(8, "batch selection", o, s);
  }

  auto [det, t_det] = timed(run_detection);
  report(9, "end-to-end detection", end_to_end(det), t_det);

  {
    auto [o, s] = timed([&] {
      const bool c2 = same_run(clean, fit_series(fib, 0.01, 10, 100));
      const bool c3 = same_run(fast, fit_series(fib, 0.1, 10, 100));
      const bool c4 = same_run(noise, fit_series(noisy, 0.01, 10, 100));
      const auto again = run_detection();
      const bool c9 = same_run(det.learned, again.learned) && det.report_csv == again.report_csv;
      return Outcome{c2 && c3 && c4 && c9,
                     fmt::format("bit-identical reruns: fitness {}, lr 0.1 {}, noise {}, detection {}", c2, c3, c4, c9)};
    });
    report(10, "determinism", o, s);
  }

  std::cout << (failures ? fmt::format("{} criteria failed\n", failures) : std::string("all criteria passed\n"));
  return failures ? 1 : 0;
}
