#pragma once

#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "logad/timeutil.hpp"

namespace logad {

/// One parsed syslog event.
struct LogRecord {
  Instant timestamp{};
  int facility = 0;  // 0..23
  int severity = 0;  // 0..7
  std::string hostname;
  std::string app_name;  // empty for NILVALUE
  std::string message;

  int priority() const noexcept { return facility * 8 + severity; }
  bool operator==(const LogRecord&) const = default;
};

/// Node set and optional time range. An empty host set accepts every host.
struct CorpusFilter {
  std::set<std::string> hostnames;
  std::optional<Instant> time_start;
  std::optional<Instant> time_end;

  /// Throws ConfigError when time_start > time_end.
  void validate() const;
  bool accepts(const LogRecord& r) const;
};

struct ParseOptions {
  /// Reject anything that is not a well-formed RFC 5424 header.
  bool strict = false;
  /// Year assumed for legacy `Mmm dd hh:mm:ss` timestamps.
  int legacy_year = 1970;
};

struct PriorityParts {
  int facility;
  int severity;
  bool operator==(const PriorityParts&) const = default;
};

/// Splits a PRI value into facility/severity. Throws ParseError outside 0..191.
PriorityParts parse_pri(int pri);

/// Parses a single line. `line_number` only decorates error messages.
LogRecord parse_line(std::string_view line, const ParseOptions& opts = {},
                     std::size_t line_number = 0);

struct Corpus {
  std::vector<LogRecord> records;  // ascending by timestamp, stable for ties
  std::size_t malformed_count = 0;
  std::size_t total_lines = 0;  // non-blank lines seen
};

/// Parses a text corpus held in memory. Blank lines are skipped.
Corpus parse_corpus(std::string_view text, const CorpusFilter& filter = {},
                    const ParseOptions& opts = {});

/// Reads and parses a corpus file. Throws IoError when unreadable and CorpusError
/// when more than half of the lines are malformed.
Corpus read_corpus(const std::string& path, const CorpusFilter& filter = {},
                   const ParseOptions& opts = {});

}  // namespace logad
