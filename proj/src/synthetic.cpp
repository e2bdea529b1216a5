#include "logad/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <random>

#include <fmt/format.h>

#include "logad/errors.hpp"

namespace logad {

namespace {

constexpr std::array<const char*, 26> kWords = {
    "alfa",   "bravo",  "charlie", "delta",   "echo",    "foxtrot", "golf",
    "hotel",  "india",  "juliett", "kilo",    "lima",    "mike",    "november",
    "oscar",  "papa",   "quebec",  "romeo",   "sierra",  "tango",   "uniform",
    "victor", "whiskey", "xray",   "yankee",  "zulu"};

constexpr std::array<int, 8> kFacilities = {0, 1, 3, 4, 10, 16, 17, 18};

std::vector<double> uniform_ints(std::mt19937_64& rng, std::size_t n, int lo, int hi) {
  std::uniform_int_distribution<int> dist(lo, hi);
  std::vector<double> out(n);
  for (auto& v : out) v = static_cast<double>(dist(rng));
  return out;
}

void check_range(int lo, int hi) {
  if (lo >= hi) throw ConfigError("random range needs lo < hi");
}

struct Event {
  long long offset;  // seconds since spec.start
  std::size_t pattern;
  std::size_t host;
  std::uint64_t draw;
};

}  // namespace

const std::vector<double>& fibonacci10() {
  static const std::vector<double> fib = {1, 1, 2, 3, 5, 8, 13, 21, 34, 55};
  return fib;
}

std::vector<double> gen_fibonacci(std::size_t repeats) {
  if (repeats < 1) throw ConfigError("repeats must be at least 1");
  std::vector<double> out;
  out.reserve(repeats * 10);
  for (std::size_t r = 0; r < repeats; ++r) {
    out.insert(out.end(), fibonacci10().begin(), fibonacci10().end());
  }
  return out;
}

std::vector<double> gen_fib_random(std::size_t repeats, int lo, int hi, std::uint64_t seed) {
  if (repeats < 1) throw ConfigError("repeats must be at least 1");
  check_range(lo, hi);
  std::mt19937_64 rng(seed);
  std::vector<double> block = fibonacci10();
  const auto noise = uniform_ints(rng, 10, lo, hi);
  block.insert(block.end(), noise.begin(), noise.end());
  std::vector<double> out;
  out.reserve(repeats * block.size());
  for (std::size_t r = 0; r < repeats; ++r) out.insert(out.end(), block.begin(), block.end());
  return out;
}

std::vector<double> gen_fib_noise(std::size_t repeats, int lo, int hi, std::uint64_t seed) {
  check_range(lo, hi);
  auto out = gen_fibonacci(repeats);
  std::mt19937_64 rng(seed);
  const auto noise = uniform_ints(rng, out.size(), lo, hi);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += noise[i];
  return out;
}

void CorpusSpec::validate() const {
  if (patterns < 1 || patterns > kWords.size() * kWords.size()) {
    throw ConfigError(fmt::format("pattern count must lie in 1..{}", kWords.size() * kWords.size()));
  }
  if (!(events_per_hour > 0.0)) throw ConfigError("event rate must be positive");
  if (duration.count() <= 0) throw ConfigError("corpus duration must be positive");
  if (!(zipf_exponent >= 0.0)) throw ConfigError("Zipf exponent must be non-negative");
  for (const auto& b : bursts) {
    if (b.pattern >= patterns) throw ConfigError("burst pattern rank out of range");
    if (!(b.multiplier >= 1.0)) throw ConfigError("burst multiplier must be at least 1");
    if (b.duration.count() <= 0) throw ConfigError("burst duration must be positive");
  }
}

double zipf_coverage(std::size_t patterns, std::size_t top, double exponent) {
  double head = 0.0, total = 0.0;
  for (std::size_t k = 1; k <= patterns; ++k) {
    const double w = std::pow(static_cast<double>(k), -exponent);
    total += w;
    if (k <= top) head += w;
  }
  return head / total;
}

double zipf_exponent_for_coverage(std::size_t patterns, std::size_t top, double coverage) {
  double lo = 0.0, hi = 10.0;
  if (coverage <= zipf_coverage(patterns, top, lo)) return lo;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (zipf_coverage(patterns, top, mid) < coverage ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

std::string pattern_message(std::size_t rank, std::uint64_t draw) {
  const char* w1 = kWords[(rank / kWords.size()) % kWords.size()];
  const char* w2 = kWords[rank % kWords.size()];
  std::mt19937_64 rng(draw);
  auto num = [&](int hi) { return std::uniform_int_distribution<int>(0, hi)(rng); };
  switch (rank % 4) {
    case 0:
      return fmt::format("{} {} service reported status code {} on port {}", w1, w2, num(599),
                         num(65535));
    case 1:
      return fmt::format("session {} {} opened for user user{} from 10.{}.{}.{}", w1, w2, num(9999),
                         num(255), num(255), num(255));
    case 2:
      return fmt::format("{} {} daemon wrote block 0x{:08x} to /var/lib/{}/chunk{}", w1, w2,
                         num(0x7fffffff), w2, num(999));
    default:
      return fmt::format("job {} {} finished with state={} after {} seconds", w1, w2,
                         num(1) ? "COMPLETED" : "FAILED", num(86400));
  }
}

std::string gen_synthetic_corpus(const CorpusSpec& spec) {
  spec.validate();
  std::vector<std::string> hosts = spec.hostnames;
  if (hosts.empty()) {
    for (int i = 1; i <= 16; ++i) hosts.push_back(fmt::format("taurusi80{:02d}", i));
  }

  std::vector<double> weights(spec.patterns);
  for (std::size_t k = 0; k < spec.patterns; ++k) {
    weights[k] = std::pow(static_cast<double>(k + 1), -spec.zipf_exponent);
  }
  const double weight_sum = std::accumulate(weights.begin(), weights.end(), 0.0);

  const double rate = spec.events_per_hour / 3600.0;
  const long long horizon = spec.duration.count();
  std::vector<Event> events;
  {
    std::mt19937_64 rng(spec.seed);
    std::exponential_distribution<double> gap(rate);
    std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
    std::uniform_int_distribution<std::size_t> host(0, hosts.size() - 1);
    for (double t = gap(rng); t < static_cast<double>(horizon); t += gap(rng)) {
      const auto p = pick(rng);
      const auto h = host(rng);
      events.push_back({static_cast<long long>(t), p, h, rng()});
    }
  }
  // bursts draw from their own streams so the base stream is unchanged by them
  for (std::size_t i = 0; i < spec.bursts.size(); ++i) {
    const auto& b = spec.bursts[i];
    const double extra = (b.multiplier - 1.0) * rate * weights[b.pattern] / weight_sum;
    if (extra <= 0.0) continue;
    std::mt19937_64 rng(spec.seed ^ (0x9e3779b97f4a7c15ULL * (i + 1)));
    std::exponential_distribution<double> gap(extra);
    std::uniform_int_distribution<std::size_t> host(0, hosts.size() - 1);
    const double begin = static_cast<double>((b.start - spec.start).count());
    const double end = std::min(begin + static_cast<double>(b.duration.count()), static_cast<double>(horizon));
    for (double t = begin + gap(rng); t < end; t += gap(rng)) {
      if (t < 0.0) continue;
      const auto h = host(rng);
      events.push_back({static_cast<long long>(t), b.pattern, h, rng()});
    }
  }
  std::stable_sort(events.begin(), events.end(),
                   [](const Event& a, const Event& b) { return a.offset < b.offset; });

  std::string out;
  out.reserve(events.size() * 96);
  for (const auto& e : events) {
    const int severity = 2 + static_cast<int>(e.pattern % 6);
    const int facility = kFacilities[e.pattern % kFacilities.size()];
    const Instant when = spec.start + std::chrono::seconds{e.offset};
    fmt::format_to(std::back_inserter(out), "<{}>1 {} {} {} - - - {}\n", facility * 8 + severity,
                   format_iso(when), hosts[e.host], kWords[e.pattern % kWords.size()],
                   pattern_message(e.pattern, e.draw));
  }
  return out;
}

}  // namespace logad
