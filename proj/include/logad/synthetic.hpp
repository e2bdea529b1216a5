#pragma once

// Synthetic inputs: the Fibonacci fitness series and a Zipf-shaped syslog corpus.

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "logad/timeutil.hpp"

namespace logad {

/// 1, 1, 2, ..., 55
const std::vector<double>& fibonacci10();

/// fibonacci10() tiled `repeats` times.
std::vector<double> gen_fibonacci(std::size_t repeats);

/// Blocks of fibonacci10() followed by 10 integers drawn once from [lo, hi]; the
/// same 20-value block is tiled `repeats` times.
std::vector<double> gen_fib_random(std::size_t repeats, int lo = 0, int hi = 30,
                                   std::uint64_t seed = 0);

/// gen_fibonacci() plus independent integer noise in [lo, hi] on every element.
std::vector<double> gen_fib_noise(std::size_t repeats, int lo = 0, int hi = 30,
                                  std::uint64_t seed = 0);

/// Extra events of one pattern: its rate is multiplied by `multiplier` inside
/// [start, start + duration).
struct BurstSpec {
  Instant start{};
  std::chrono::seconds duration{std::chrono::minutes{10}};
  std::size_t pattern = 0;  // Zipf rank, 0 = most frequent
  double multiplier = 10.0;
};

struct CorpusSpec {
  std::size_t patterns = 100;
  double zipf_exponent = 1.0;
  double events_per_hour = 600.0;
  Instant start{std::chrono::sys_days{std::chrono::year{2022} / 3 / 1}};
  std::chrono::seconds duration{std::chrono::hours{24 * 7}};
  std::vector<std::string> hostnames;  // empty: 16 nodes "taurusi8001".."taurusi8016"
  std::vector<BurstSpec> bursts;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Expected share of events in the `top` most frequent of `patterns` Zipf ranks.
double zipf_coverage(std::size_t patterns, std::size_t top, double exponent);

/// Exponent whose expected top-`top` coverage equals `coverage` (bisection).
double zipf_exponent_for_coverage(std::size_t patterns, std::size_t top, double coverage);

/// Message text for pattern `rank` with its variable fields drawn from `draw`.
std::string pattern_message(std::size_t rank, std::uint64_t draw);

/// RFC 5424 lines, one event per line, ordered by time.
std::string gen_synthetic_corpus(const CorpusSpec& spec);

}  // namespace logad
