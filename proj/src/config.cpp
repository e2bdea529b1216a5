#include "logad/config.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <map>

#include "logad/csv.hpp"
#include "logad/errors.hpp"

namespace logad {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, std::string_view expected) {
  throw ConfigError("invalid value '" + std::string(value) + "' for " + std::string(key) + " (expected " +
                    std::string(expected) + ")");
}

double to_double(std::string_view key, std::string_view v) {
  auto d = csv::parse_double(v);
  if (!d) bad_value(key, v, "a number");
  return *d;
}

long long to_int(std::string_view key, std::string_view v, long long min = 0) {
  auto n = csv::parse_int(v);
  if (!n || *n < min) bad_value(key, v, "an integer >= " + std::to_string(min));
  return *n;
}

bool to_bool(std::string_view key, std::string_view v) {
  std::string s(v);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (s == "1" || s == "true" || s == "yes" || s == "on") return true;
  if (s == "0" || s == "false" || s == "no" || s == "off") return false;
  bad_value(key, v, "a boolean");
}

std::chrono::seconds to_duration(std::string_view key, std::string_view v) {
  auto d = parse_duration(v);
  if (!d || d->count() <= 0) bad_value(key, v, "a duration such as 10m, 24h or 90s");
  return *d;
}

Instant to_instant(std::string_view key, std::string_view v) {
  auto t = parse_iso(v);
  if (!t) bad_value(key, v, "an ISO-8601 timestamp");
  return *t;
}

std::vector<std::string_view> split_list(std::string_view v) {
  std::vector<std::string_view> out;
  while (true) {
    const auto comma = v.find(',');
    const auto item = trim(v.substr(0, comma));
    if (!item.empty()) out.push_back(item);
    if (comma == std::string_view::npos) break;
    v.remove_prefix(comma + 1);
  }
  return out;
}

template <typename T, typename F>
std::vector<T> map_list(std::string_view v, F&& f) {
  std::vector<T> out;
  for (auto item : split_list(v)) out.push_back(f(item));
  return out;
}

using Setter = std::function<void(RunConfig&, std::string_view key, std::string_view value)>;

const std::map<std::string, Setter, std::less<>>& setters() {
  static const std::map<std::string, Setter, std::less<>> table = {
      {"input", [](RunConfig& c, auto, auto v) { c.input = v; }},
      {"output", [](RunConfig& c, auto, auto v) { c.output = v; }},
      {"dict", [](RunConfig& c, auto, auto v) { c.dict = v; }},
      {"model", [](RunConfig& c, auto, auto v) { c.model = v; }},
      {"out_dir", [](RunConfig& c, auto, auto v) { c.out_dir = v; }},
      {"hosts",
       [](RunConfig& c, auto, auto v) {
         c.filter.hostnames.clear();
         for (auto h : split_list(v)) c.filter.hostnames.emplace(h);
       }},
      {"from", [](RunConfig& c, auto k, auto v) { c.filter.time_start = to_instant(k, v); }},
      {"to", [](RunConfig& c, auto k, auto v) { c.filter.time_end = to_instant(k, v); }},
      {"strict", [](RunConfig& c, auto k, auto v) { c.parse.strict = to_bool(k, v); }},
      {"legacy_year", [](RunConfig& c, auto k, auto v) { c.parse.legacy_year = static_cast<int>(to_int(k, v, 1)); }},
      {"mode", [](RunConfig& c, auto, auto v) { c.features.mode = parse_feature_mode(v); }},
      {"bucket", [](RunConfig& c, auto k, auto v) { c.features.bucket = to_duration(k, v); }},
      {"top_n", [](RunConfig& c, auto k, auto v) { c.features.top_n = static_cast<int>(to_int(k, v, 1)); }},
      {"cumsum", [](RunConfig& c, auto k, auto v) { c.features.cumsum = to_bool(k, v); }},
      {"norm", [](RunConfig& c, auto, auto v) { c.features.normalization = parse_normalization(v); }},
      {"top_window", [](RunConfig& c, auto k, auto v) { c.features.top_window = to_duration(k, v); }},
      {"train_frac", [](RunConfig& c, auto k, auto v) { c.train_frac = to_double(k, v); }},
      {"lr", [](RunConfig& c, auto k, auto v) { c.hp.learning_rate = to_double(k, v); }},
      {"epochs", [](RunConfig& c, auto k, auto v) { c.hp.epochs = static_cast<std::size_t>(to_int(k, v, 1)); }},
      {"loss", [](RunConfig& c, auto, auto v) { c.hp.loss = parse_loss(v); }},
      {"steps", [](RunConfig& c, auto k, auto v) { c.steps = static_cast<std::size_t>(to_int(k, v, 1)); }},
      {"hidden", [](RunConfig& c, auto k, auto v) { c.hidden_units = static_cast<std::size_t>(to_int(k, v, 1)); }},
      {"batch_cap", [](RunConfig& c, auto k, auto v) { c.batch_cap = static_cast<std::size_t>(to_int(k, v, 1)); }},
      {"seed", [](RunConfig& c, auto k, auto v) { c.seed = static_cast<std::uint64_t>(to_int(k, v)); }},
      {"sweep_lr",
       [](RunConfig& c, auto k, auto v) {
         c.sweep.learning_rates = map_list<double>(v, [&](auto s) { return to_double(k, s); });
       }},
      {"sweep_epochs",
       [](RunConfig& c, auto k, auto v) {
         c.sweep.epochs = map_list<std::size_t>(v, [&](auto s) { return static_cast<std::size_t>(to_int(k, s, 1)); });
       }},
      {"sweep_steps",
       [](RunConfig& c, auto k, auto v) {
         c.sweep.steps = map_list<std::size_t>(v, [&](auto s) { return static_cast<std::size_t>(to_int(k, s, 1)); });
       }},
      {"sweep_bucket",
       [](RunConfig& c, auto k, auto v) {
         c.sweep.buckets = map_list<std::chrono::seconds>(v, [&](auto s) { return to_duration(k, s); });
       }},
      {"sweep_cumsum",
       [](RunConfig& c, auto k, auto v) { c.sweep.cumsum = map_list<bool>(v, [&](auto s) { return to_bool(k, s); }); }},
      {"sweep_norm",
       [](RunConfig& c, auto, auto v) {
         c.sweep.normalizations = map_list<Normalization>(v, [](auto s) { return parse_normalization(s); });
       }},
      {"sweep_top_n",
       [](RunConfig& c, auto k, auto v) {
         c.sweep.top_n = map_list<int>(v, [&](auto s) { return static_cast<int>(to_int(k, s, 1)); });
       }},
      {"sweep_mode", [](RunConfig& c, auto, auto v) { c.sweep.mode = parse_sweep_mode(v); }},
      {"workers", [](RunConfig& c, auto k, auto v) { c.sweep.workers = static_cast<std::size_t>(to_int(k, v)); }},
      {"kind", [](RunConfig& c, auto, auto v) { c.synth_kind = v; }},
      {"repeats", [](RunConfig& c, auto k, auto v) { c.repeats = static_cast<std::size_t>(to_int(k, v, 1)); }},
      {"lo", [](RunConfig& c, auto k, auto v) { c.lo = static_cast<int>(to_int(k, v, -1000000)); }},
      {"hi", [](RunConfig& c, auto k, auto v) { c.hi = static_cast<int>(to_int(k, v, -1000000)); }},
      {"patterns", [](RunConfig& c, auto k, auto v) { c.corpus.patterns = static_cast<std::size_t>(to_int(k, v, 1)); }},
      {"zipf", [](RunConfig& c, auto k, auto v) { c.zipf_exponent = to_double(k, v); }},
      {"coverage", [](RunConfig& c, auto k, auto v) { c.coverage = to_double(k, v); }},
      {"rate", [](RunConfig& c, auto k, auto v) { c.corpus.events_per_hour = to_double(k, v); }},
      {"duration", [](RunConfig& c, auto k, auto v) { c.corpus.duration = to_duration(k, v); }},
      {"start", [](RunConfig& c, auto k, auto v) { c.corpus.start = to_instant(k, v); }},
      {"nodes",
       [](RunConfig& c, auto, auto v) {
         c.corpus.hostnames.clear();
         for (auto h : split_list(v)) c.corpus.hostnames.emplace_back(h);
       }},
      {"burst_at", [](RunConfig& c, auto k, auto v) { c.burst_at = to_instant(k, v); }},
      {"burst_pattern",
       [](RunConfig& c, auto k, auto v) { c.burst_pattern = static_cast<std::size_t>(to_int(k, v)); }},
      {"burst_multiplier", [](RunConfig& c, auto k, auto v) { c.burst_multiplier = to_double(k, v); }},
      {"burst_duration", [](RunConfig& c, auto k, auto v) { c.burst_duration = to_duration(k, v); }},
  };
  return table;
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> out;
    for (const auto& [k, s] : setters()) out.push_back(k);
    return out;
  }();
  return keys;
}

void apply_setting(RunConfig& cfg, std::string_view key, std::string_view value) {
  std::string normalized(key);
  std::replace(normalized.begin(), normalized.end(), '-', '_');
  const auto it = setters().find(normalized);
  if (it == setters().end()) throw ConfigError("unknown configuration key '" + std::string(key) + "'");
  try {
    it->second(cfg, normalized, trim(value));
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    if (msg.find(normalized) != std::string::npos) throw;
    throw ConfigError(normalized + ": " + msg);
  }
}

std::vector<std::pair<std::string, std::string>> parse_config_text(std::string_view text) {
  std::vector<std::pair<std::string, std::string>> out;
  std::size_t line_no = 0;
  for (auto line : csv::lines(text)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("config line " + std::to_string(line_no) + ": bad section header");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    out.emplace_back(std::string(trim(line.substr(0, eq))), std::string(trim(line.substr(eq + 1))));
  }
  return out;
}

RunConfig load_config_text(std::string_view text, RunConfig cfg) {
  for (const auto& [key, value] : parse_config_text(text)) apply_setting(cfg, key, value);
  return cfg;
}

RunConfig load_config(const std::string& path, RunConfig cfg) {
  return load_config_text(csv::read_file(path), std::move(cfg));
}

void RunConfig::validate() const {
  filter.validate();
  features.validate();
  hp.validate();
  if (!(train_frac > 0.0 && train_frac < 1.0)) throw ConfigError("train_frac must lie strictly between 0 and 1");
  if (steps < 1) throw ConfigError("steps must be at least 1");
  if (hidden_units < 1) throw ConfigError("hidden must be at least 1");
  if (batch_cap < 1) throw ConfigError("batch_cap must be at least 1");
  for (double lr : sweep.learning_rates) {
    if (!(lr > 0.0 && lr < 1.0)) throw ConfigError("sweep_lr values must lie in (0, 1)");
  }
  if (lo >= hi) throw ConfigError("lo must be smaller than hi");
  if (!(coverage > 0.0 && coverage < 1.0)) throw ConfigError("coverage must lie strictly between 0 and 1");
  corpus_spec().validate();
}

SweepSpec RunConfig::sweep_spec() const {
  SweepSpec s = sweep;
  s.base.learning_rate = hp.learning_rate;
  s.base.epochs = hp.epochs;
  s.base.steps = steps;
  s.base.bucket = features.bucket;
  s.base.cumsum = features.cumsum;
  s.base.normalization = features.normalization;
  s.base.top_n = features.top_n;
  s.feature_mode = features.mode;
  s.top_window = features.top_window;
  s.train_frac = train_frac;
  s.hidden_units = hidden_units;
  s.loss = hp.loss;
  s.batch_cap = batch_cap;
  s.base_seed = seed;
  return s;
}

CorpusSpec RunConfig::corpus_spec() const {
  CorpusSpec s = corpus;
  s.seed = seed;
  s.zipf_exponent = zipf_exponent ? *zipf_exponent
                                  : zipf_exponent_for_coverage(s.patterns, std::min<std::size_t>(10, s.patterns),
                                                               coverage);
  s.bursts.clear();
  if (burst_at) s.bursts.push_back({*burst_at, burst_duration, burst_pattern, burst_multiplier});
  return s;
}

}  // namespace logad
