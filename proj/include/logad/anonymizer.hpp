#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "logad/syslog_ingest.hpp"
#include "logad/timeutil.hpp"

namespace logad {

/// A template token: either literal text or the variable placeholder.
struct TemplateToken {
  std::string text;  // empty when is_var
  bool is_var = false;

  static TemplateToken var() { return {{}, true}; }
  static TemplateToken literal(std::string s) { return {std::move(s), false}; }
  bool operator==(const TemplateToken&) const = default;
};

using Template = std::vector<TemplateToken>;

/// Human-readable form stored in the dictionary; variables render as "<*>".
std::string render_template(const Template& t);

/// Canonical byte string that is hashed: tokens joined by 0x1F, VAR as 0x00.
std::string serialize_template(const Template& t);

/// 128-bit pattern key (first half of a SHA-256 digest).
class PatternHash {
 public:
  PatternHash() = default;
  explicit PatternHash(const std::array<std::uint8_t, 16>& bytes) : bytes_(bytes) {}

  /// 32 lowercase hex chars.
  std::string hex() const;
  static std::optional<PatternHash> from_hex(std::string_view hex);

  const std::array<std::uint8_t, 16>& bytes() const noexcept { return bytes_; }
  auto operator<=>(const PatternHash&) const = default;

 private:
  std::array<std::uint8_t, 16> bytes_{};
};

/// Whitespace tokenization with variable masking. Total and pure.
Template extract_template(std::string_view message);

PatternHash hash_template(const Template& t);

struct AnonRecord {
  Instant timestamp{};
  int facility = 0;
  int severity = 0;
  std::string hostname;
  PatternHash pattern;
  bool operator==(const AnonRecord&) const = default;
};

struct DictionaryEntry {
  std::string template_text;
  Instant first_seen{};
  std::uint64_t count = 0;
  bool operator==(const DictionaryEntry&) const = default;
};

/// Pattern key -> template. Kept apart from the anonymized stream.
class PatternDictionary {
 public:
  const std::map<PatternHash, DictionaryEntry>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  std::uint64_t total_count() const;

  /// Adds one occurrence of `t` seen at `when`.
  void record(const PatternHash& key, const Template& t, Instant when);

  /// Inserts or replaces a whole entry (used by loading).
  void insert(const PatternHash& key, DictionaryEntry entry);

  /// Sums counts per key; keeps the earliest first_seen.
  void merge(const PatternDictionary& other);

  bool operator==(const PatternDictionary&) const = default;

 private:
  std::map<PatternHash, DictionaryEntry> entries_;
};

/// Anonymizes `records` in order, updating `dict`. Output i derives from input i.
std::vector<AnonRecord> anonymize(const std::vector<LogRecord>& records, PatternDictionary& dict);

/// CSV `pattern,count,first_seen,template`, rows ordered by pattern key.
std::string format_dictionary(const PatternDictionary& dict);
PatternDictionary parse_dictionary(std::string_view text);
void save_dictionary(const PatternDictionary& dict, const std::string& path);
/// Throws IoError when unreadable, FormatError when corrupt or truncated.
PatternDictionary load_dictionary(const std::string& path);

/// CSV `timestamp,facility,severity,hostname,pattern`.
std::string format_anon_stream(const std::vector<AnonRecord>& records);
std::vector<AnonRecord> parse_anon_stream(std::string_view text);
void save_anon_stream(const std::vector<AnonRecord>& records, const std::string& path);
std::vector<AnonRecord> load_anon_stream(const std::string& path);

}  // namespace logad
