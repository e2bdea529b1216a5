#include "logad/cli.hpp"

#include <filesystem>
#include <map>
#include <ostream>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "logad/anonymizer.hpp"
#include "logad/csv.hpp"
#include "logad/detector.hpp"
#include "logad/errors.hpp"
#include "logad/pipeline.hpp"

namespace logad {

namespace {

namespace fs = std::filesystem;

std::string resolve(const std::string& given, const RunConfig& cfg, std::string_view fallback) {
  if (!given.empty()) return given;
  return (fs::path(cfg.out_dir) / fallback).string();
}

void ensure_parent(const std::string& path) {
  const auto parent = fs::path(path).parent_path();
  if (parent.empty()) return;
  std::error_code ec;
  fs::create_directories(parent, ec);
  if (ec) throw IoError("cannot create directory " + parent.string() + ": " + ec.message());
}

void require_file(const std::string& path, std::string_view what) {
  if (!fs::exists(path)) throw IoError(std::string(what) + " not found: " + path);
}

// ---- stage cores shared by the subcommands and the in-memory pipeline -----

std::vector<AnonRecord> stage_anonymize(const Corpus& corpus, PatternDictionary& dict) {
  return anonymize(corpus.records, dict);
}

FeatureFrame stage_featurize(const std::vector<AnonRecord>& records, const RunConfig& cfg) {
  return featurize_records(records, cfg.features, cfg.train_frac);
}

struct Trained {
  LstmModel model;
  TrainReport report;
  Datasets data;
};

Trained stage_train(const FeatureFrame& raw, const RunConfig& cfg, std::ostream* log) {
  const auto frame = prepare_frame(raw, cfg.features.normalization, cfg.train_frac);
  auto data = make_datasets(frame, cfg.steps, cfg.train_frac, cfg.batch_cap);
  LstmConfig mc;
  mc.input_dim = frame.cols();
  mc.output_dim = frame.cols();
  mc.hidden_units = cfg.hidden_units;
  mc.seed = cfg.seed;
  auto model = init_model(mc);
  const std::size_t every = std::max<std::size_t>(1, cfg.hp.epochs / 10);
  auto report = train(model, data.train, data.val, cfg.hp, [&](std::size_t epoch, const EpochLoss& l) {
    if (log && ((epoch + 1) % every == 0 || epoch + 1 == cfg.hp.epochs)) {
      *log << fmt::format("epoch {:>5}  train {:.6f}  val {:.6f}\n", epoch + 1, l.train_loss, l.val_loss);
    }
  });
  return {std::move(model), std::move(report), std::move(data)};
}

AnomalyReport stage_detect(LstmModel& model, const FeatureFrame& raw, const RunConfig& cfg) {
  const auto frame = prepare_frame(raw, cfg.features.normalization, cfg.train_frac);
  const auto data = make_datasets(frame, cfg.steps, cfg.train_frac, cfg.batch_cap);
  const auto train_errors = predict_series(model, data.train);
  const double threshold = compute_threshold(train_errors.mae);
  return detect(model, data.val, threshold);
}

// ---- flag wiring -----------------------------------------------------------

struct Subcommand {
  std::string name;
  std::string help;
  std::vector<std::string> options;  // keys taking a value
  std::vector<std::string> flags;    // boolean keys
  int (*run)(const RunConfig&, std::ostream&);
};

const std::vector<Subcommand>& subcommands() {
  static const std::vector<Subcommand> list = {
      {"anonymize", "parse a syslog corpus and replace every message by its pattern key",
       {"input", "output", "dict", "out_dir", "hosts", "from", "to", "legacy_year"},
       {"strict"},
       cmd_anonymize},
      {"featurize", "turn an anonymized stream into a bucketed, normalized feature frame",
       {"input", "output", "out_dir", "mode", "bucket", "top_n", "norm", "top_window", "train_frac"},
       {"cumsum"},
       cmd_featurize},
      {"train", "train the stateful LSTM on a feature frame",
       {"input", "model", "out_dir", "lr", "epochs", "steps", "loss", "hidden", "seed", "batch_cap",
        "train_frac", "norm"},
       {},
       cmd_train},
      {"detect", "flag validation samples whose error exceeds the maximum training error",
       {"input", "model", "output", "out_dir", "steps", "train_frac", "batch_cap", "norm"},
       {},
       cmd_detect},
      {"sweep", "train one model per hyperparameter configuration",
       {"input", "output", "out_dir", "lr", "epochs", "steps", "bucket", "top_n", "norm", "mode", "top_window",
        "train_frac", "hidden", "loss", "seed", "batch_cap", "sweep_lr", "sweep_epochs", "sweep_steps",
        "sweep_bucket", "sweep_cumsum", "sweep_norm", "sweep_top_n", "sweep_mode", "workers"},
       {"cumsum"},
       cmd_sweep},
      {"synth", "generate a synthetic series (fib, fib-random, fib-noise) or syslog corpus",
       {"kind", "output", "out_dir", "repeats", "lo", "hi", "seed", "patterns", "zipf", "coverage", "rate",
        "duration", "start", "nodes", "burst_at", "burst_pattern", "burst_multiplier", "burst_duration"},
       {},
       cmd_synth},
  };
  return list;
}

std::string flag_name(const std::string& key) {
  std::string out = "--" + key;
  std::replace(out.begin(), out.end(), '_', '-');
  return out;
}

}  // namespace

int cmd_anonymize(const RunConfig& cfg, std::ostream& log) {
  const auto input = resolve(cfg.input, cfg, "corpus.log");
  const auto output = resolve(cfg.output, cfg, "anonymized.csv");
  const auto dict_path = resolve(cfg.dict, cfg, "dictionary.csv");
  const auto corpus = read_corpus(input, cfg.filter, cfg.parse);
  PatternDictionary dict;
  if (fs::exists(dict_path)) dict = load_dictionary(dict_path);
  const auto records = stage_anonymize(corpus, dict);
  ensure_parent(output);
  ensure_parent(dict_path);
  save_anon_stream(records, output);
  save_dictionary(dict, dict_path);
  log << fmt::format("anonymized {} records ({} malformed lines skipped), {} patterns, top-10 coverage {:.3f}\n",
                     records.size(), corpus.malformed_count, dict.size(), top_coverage(records, 10));
  return 0;
}

int cmd_featurize(const RunConfig& cfg, std::ostream& log) {
  const auto input = resolve(cfg.input, cfg, "anonymized.csv");
  const auto output = resolve(cfg.output, cfg, "features.csv");
  const auto frame = stage_featurize(load_anon_stream(input), cfg);
  ensure_parent(output);
  save_frame(frame, output);
  log << fmt::format("wrote {} buckets x {} features to {}\n", frame.rows(), frame.cols(), output);
  return 0;
}

int cmd_train(const RunConfig& cfg, std::ostream& log) {
  const auto input = resolve(cfg.input, cfg, "features.csv");
  const auto model_path = resolve(cfg.model, cfg, "model.bin");
  const auto loss_path = resolve({}, cfg, "loss.csv");
  const auto trace_path = resolve({}, cfg, "predictions.csv");
  auto trained = stage_train(load_frame(input), cfg, &log);

  ensure_parent(model_path);
  ensure_parent(loss_path);
  save_model(trained.model, model_path);
  csv::write_file(loss_path, format_train_report(trained.report));
  auto trace = format_prediction_trace(trained.data.train, predict_series(trained.model, trained.data.train));
  const auto val_trace = format_prediction_trace(trained.data.val, predict_series(trained.model, trained.data.val));
  trace += val_trace.substr(val_trace.find('\n') + 1);
  csv::write_file(trace_path, trace);
  log << fmt::format("batch size {} / {}, final train loss {:.6f}, val loss {:.6f} ({:.1f} s)\n",
                     trained.data.train.batch_size, trained.data.val.batch_size, trained.report.final_train_loss(),
                     trained.report.final_val_loss(), trained.report.wall_time.count());
  return 0;
}

int cmd_detect(const RunConfig& cfg, std::ostream& log) {
  const auto input = resolve(cfg.input, cfg, "features.csv");
  const auto model_path = resolve(cfg.model, cfg, "model.bin");
  const auto output = resolve(cfg.output, cfg, "anomalies.csv");
  require_file(model_path, "model");
  auto model = load_model(model_path);
  const auto report = stage_detect(model, load_frame(input), cfg);
  ensure_parent(output);
  csv::write_file(output, format_anomaly_report(report));
  log << fmt::format("threshold {:.6f}: {} of {} samples anomalous\n", report.threshold, report.anomaly_count(),
                     report.points.size());
  return 0;
}

int cmd_sweep(const RunConfig& cfg, std::ostream& log) {
  const auto input = resolve(cfg.input, cfg, "anonymized.csv");
  const auto output = resolve(cfg.output, cfg, "sweep.csv");
  const std::string text = csv::read_file(input);
  SweepData data;
  if (text.starts_with("timestamp,")) {
    data.records = parse_anon_stream(text);
  } else {
    const auto frame = denormalize(parse_frame(text, csv::read_file(frame_meta_path(input))));
    if (frame.cols() != 1) throw DatasetError("sweep over a frame needs a univariate series");
    data.series = frame.column(0);
  }
  const auto report = run_sweep(cfg.sweep_spec(), data);
  ensure_parent(output);
  csv::write_file(output, format_sweep_report(report));
  for (const auto& row : report.rows) {
    if (row.status != SweepRow::Status::ok) log << "config failed: " << row.error << "\n";
  }
  log << fmt::format("{} configurations written to {}\n", report.rows.size(), output);
  return 0;
}

int cmd_synth(const RunConfig& cfg, std::ostream& log) {
  if (cfg.synth_kind == "corpus") {
    const auto output = resolve(cfg.output, cfg, "corpus.log");
    const auto spec = cfg.corpus_spec();
    ensure_parent(output);
    csv::write_file(output, gen_synthetic_corpus(spec));
    log << fmt::format("wrote corpus to {} (Zipf exponent {:.4f}, expected top-10 coverage {:.3f})\n", output,
                       spec.zipf_exponent, zipf_coverage(spec.patterns, 10, spec.zipf_exponent));
    return 0;
  }
  std::vector<double> series;
  if (cfg.synth_kind == "fib") {
    series = gen_fibonacci(cfg.repeats);
  } else if (cfg.synth_kind == "fib-random") {
    series = gen_fib_random(cfg.repeats, cfg.lo, cfg.hi, cfg.seed);
  } else if (cfg.synth_kind == "fib-noise") {
    series = gen_fib_noise(cfg.repeats, cfg.lo, cfg.hi, cfg.seed);
  } else {
    throw ConfigError("unknown synth kind '" + cfg.synth_kind + "' (fib, fib-random, fib-noise, corpus)");
  }
  const auto output = resolve(cfg.output, cfg, "features.csv");
  ensure_parent(output);
  save_frame(series_frame(series), output);
  log << fmt::format("wrote {} values to {}\n", series.size(), output);
  return 0;
}

std::string run_pipeline_in_memory(std::string_view corpus_text, const RunConfig& cfg) {
  const auto corpus = parse_corpus(corpus_text, cfg.filter, cfg.parse);
  PatternDictionary dict;
  const auto records = stage_anonymize(corpus, dict);
  const auto frame = stage_featurize(records, cfg);
  auto trained = stage_train(frame, cfg, nullptr);
  return format_anomaly_report(stage_detect(trained.model, frame, cfg));
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"logad: syslog anonymization and LSTM anomaly detection"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config", config_path, "key = value configuration file");

  std::map<std::string, std::string> values;
  std::map<std::string, bool> flags;
  std::vector<std::pair<CLI::App*, const Subcommand*>> subs;
  for (const auto& sc : subcommands()) {
    auto* sub = app.add_subcommand(sc.name, sc.help);
    sub->add_option("--config", config_path, "key = value configuration file");
    for (const auto& key : sc.options) sub->add_option(flag_name(key), values[sc.name + "." + key]);
    for (const auto& key : sc.flags) sub->add_flag(flag_name(key), flags[sc.name + "." + key]);
    subs.emplace_back(sub, &sc);
  }

  std::vector<std::string> argv_store = args;
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  for (const auto& [sub, sc] : subs) {
    if (!sub->parsed()) continue;
    try {
      RunConfig cfg;
      if (!config_path.empty()) cfg = load_config(config_path);
      for (const auto& key : sc->options) {
        if (sub->count(flag_name(key)) > 0) apply_setting(cfg, key, values[sc->name + "." + key]);
      }
      for (const auto& key : sc->flags) {
        if (sub->count(flag_name(key)) > 0) apply_setting(cfg, key, "true");
      }
      cfg.validate();
      return sc->run(cfg, err);
    } catch (const ConfigError& e) {
      err << "logad " << sc->name << ": usage error: " << e.what() << "\n";
      return 2;
    } catch (const std::exception& e) {
      err << "logad " << sc->name << ": error: " << e.what() << "\n";
      return 1;
    }
  }
  return 2;
}

}  // namespace logad
