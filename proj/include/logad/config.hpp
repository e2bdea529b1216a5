#pragma once

// Run configuration shared by every subcommand.
//
// File format: one `key = value` per line, `#` starts a comment, and `[section]`
// headers may group keys (the section name is informational only). Keys are the
// flag names with '-' written as '_' (e.g. `top_n = 5`). Unknown keys are errors.
// Command-line flags override file values; built-in defaults fill the rest.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "logad/featurizer.hpp"
#include "logad/neuralnet.hpp"
#include "logad/sweep.hpp"
#include "logad/synthetic.hpp"
#include "logad/syslog_ingest.hpp"

namespace logad {

struct RunConfig {
  // paths; empty means "<out_dir>/<stage default>"
  std::string input;
  std::string output;
  std::string dict;
  std::string model;
  std::string out_dir = ".";

  CorpusFilter filter;
  ParseOptions parse;

  FeatureConfig features;
  double train_frac = 0.8;

  std::size_t steps = 6;
  std::size_t hidden_units = 128;
  std::size_t batch_cap = 256;
  std::uint64_t seed = 42;
  Hyperparameters hp;

  SweepSpec sweep;  // value lists and mode only; base values come from the fields above

  std::string synth_kind = "corpus";
  std::size_t repeats = 100;
  int lo = 0;
  int hi = 30;
  CorpusSpec corpus;
  std::optional<double> zipf_exponent;  // unset: derive from `coverage`
  double coverage = 0.8;
  std::optional<Instant> burst_at;
  std::size_t burst_pattern = 0;
  double burst_multiplier = 10.0;
  std::chrono::seconds burst_duration{std::chrono::minutes{10}};

  /// Every downstream type's validation; throws ConfigError.
  void validate() const;

  /// Sweep spec with the base point taken from this config.
  SweepSpec sweep_spec() const;
  /// Corpus spec with the exponent and burst resolved.
  CorpusSpec corpus_spec() const;
};

/// Every key accepted by apply_setting().
const std::vector<std::string>& config_keys();

/// Sets one key. Throws ConfigError naming the key when it is unknown or the value is bad.
void apply_setting(RunConfig& cfg, std::string_view key, std::string_view value);

/// Parses file content into (key, value) pairs; throws ConfigError on syntax errors.
std::vector<std::pair<std::string, std::string>> parse_config_text(std::string_view text);

/// Applies a config file on top of `cfg` (defaults when omitted).
RunConfig load_config(const std::string& path, RunConfig cfg = {});
RunConfig load_config_text(std::string_view text, RunConfig cfg = {});

}  // namespace logad
