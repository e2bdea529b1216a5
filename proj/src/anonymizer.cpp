#include "logad/anonymizer.hpp"

#include <algorithm>
#include <cctype>
#include <limits>

#include <openssl/evp.h>

#include "logad/csv.hpp"
#include "logad/errors.hpp"

namespace logad {

namespace {

constexpr char kSeparator = '\x1f';
constexpr char kVarByte = '\x00';
constexpr std::string_view kVarText = "<*>";

bool is_digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }
bool is_hex(char c) { return std::isxdigit(static_cast<unsigned char>(c)) != 0; }

std::string_view strip_punct(std::string_view s) {
  constexpr std::string_view punct = "[](){}<>,;:'\"!?";
  while (!s.empty() && punct.find(s.front()) != std::string_view::npos) s.remove_prefix(1);
  while (!s.empty() && punct.find(s.back()) != std::string_view::npos) s.remove_suffix(1);
  return s;
}

bool is_ipv6_like(std::string_view s) {
  if (std::count(s.begin(), s.end(), ':') < 2) return false;
  bool any_hex = false;
  for (char c : s) {
    if (is_hex(c)) {
      any_hex = true;
    } else if (c != ':' && c != '.' && c != '%') {
      return false;
    }
  }
  return any_hex;
}

bool is_hex_run(std::string_view s) {
  if (s.size() > 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X')) s.remove_prefix(2);
  return s.size() >= 4 && std::all_of(s.begin(), s.end(), is_hex);
}

// Any digit covers plain numbers, IPv4 literals, pids and hex runs containing digits.
bool is_variable(std::string_view token) {
  if (std::any_of(token.begin(), token.end(), is_digit)) return true;
  if (token.find('/') != std::string_view::npos) return true;
  const auto core = strip_punct(token);
  return is_hex_run(core) || is_ipv6_like(token);
}

}  // namespace

std::string render_template(const Template& t) {
  std::string out;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (i) out += ' ';
    out += t[i].is_var ? std::string(kVarText) : t[i].text;
  }
  return out;
}

std::string serialize_template(const Template& t) {
  std::string out;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (i) out += kSeparator;
    if (t[i].is_var) {
      out += kVarByte;
    } else {
      out += t[i].text;
    }
  }
  return out;
}

std::string PatternHash::hex() const {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out(32, '0');
  for (std::size_t i = 0; i < bytes_.size(); ++i) {
    out[2 * i] = digits[bytes_[i] >> 4];
    out[2 * i + 1] = digits[bytes_[i] & 0xf];
  }
  return out;
}

std::optional<PatternHash> PatternHash::from_hex(std::string_view hex) {
  if (hex.size() != 32) return std::nullopt;
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    return -1;
  };
  std::array<std::uint8_t, 16> bytes{};
  for (std::size_t i = 0; i < 16; ++i) {
    const int hi = nibble(hex[2 * i]);
    const int lo = nibble(hex[2 * i + 1]);
    if (hi < 0 || lo < 0) return std::nullopt;
    bytes[i] = static_cast<std::uint8_t>(hi << 4 | lo);
  }
  return PatternHash(bytes);
}

Template extract_template(std::string_view message) {
  Template out;
  std::size_t pos = 0;
  while (pos < message.size()) {
    while (pos < message.size() && std::isspace(static_cast<unsigned char>(message[pos]))) ++pos;
    if (pos == message.size()) break;
    std::size_t end = pos;
    while (end < message.size() && !std::isspace(static_cast<unsigned char>(message[end]))) ++end;
    const std::string_view token = message.substr(pos, end - pos);
    pos = end;

    const auto eq = token.find('=');
    if (eq != std::string_view::npos && eq > 0 && eq + 1 < token.size()) {
      const auto key = token.substr(0, eq);
      if (is_variable(key)) {
        out.push_back(TemplateToken::var());
      } else {
        out.push_back(TemplateToken::literal(std::string(key) + "="));
        out.push_back(TemplateToken::var());
      }
      continue;
    }
    if (is_variable(token)) {
      out.push_back(TemplateToken::var());
    } else {
      out.push_back(TemplateToken::literal(std::string(token)));
    }
  }
  return out;
}

PatternHash hash_template(const Template& t) {
  const std::string bytes = serialize_template(t);
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1 ||
      len < 16) {
    throw Error("SHA-256 digest failed");
  }
  std::array<std::uint8_t, 16> key{};
  std::copy_n(digest.begin(), 16, key.begin());
  return PatternHash(key);
}

std::uint64_t PatternDictionary::total_count() const {
  std::uint64_t total = 0;
  for (const auto& [key, e] : entries_) total += e.count;
  return total;
}

void PatternDictionary::record(const PatternHash& key, const Template& t, Instant when) {
  auto [it, inserted] = entries_.try_emplace(key);
  if (inserted) {
    it->second.template_text = render_template(t);
    it->second.first_seen = when;
  } else if (when < it->second.first_seen) {
    it->second.first_seen = when;
  }
  ++it->second.count;
}

void PatternDictionary::insert(const PatternHash& key, DictionaryEntry entry) {
  entries_[key] = std::move(entry);
}

void PatternDictionary::merge(const PatternDictionary& other) {
  for (const auto& [key, e] : other.entries_) {
    auto [it, inserted] = entries_.try_emplace(key, e);
    if (!inserted) {
      it->second.count += e.count;
      it->second.first_seen = std::min(it->second.first_seen, e.first_seen);
    }
  }
}

std::vector<AnonRecord> anonymize(const std::vector<LogRecord>& records, PatternDictionary& dict) {
  std::vector<AnonRecord> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    const auto t = extract_template(r.message);
    const auto key = hash_template(t);
    dict.record(key, t, r.timestamp);
    out.push_back(AnonRecord{r.timestamp, r.facility, r.severity, r.hostname, key});
  }
  return out;
}

// ---- persistence ----------------------------------------------------------

namespace {

constexpr std::string_view kDictHeader = "pattern,count,first_seen,template";
constexpr std::string_view kStreamHeader = "timestamp,facility,severity,hostname,pattern";

// Records may span lines when a quoted field holds a newline; re-join until balanced.
std::vector<std::vector<std::string>> parse_rows(std::string_view text, std::string_view header,
                                                 std::size_t width, const char* what) {
  bool complete = true;
  const auto ls = csv::lines(text, &complete);
  if (ls.empty() || ls.front() != header) {
    throw FormatError(std::string(what) + ": missing or unexpected header");
  }
  if (!complete) throw FormatError(std::string(what) + ": truncated final record");
  std::vector<std::vector<std::string>> rows;
  std::string pending;
  std::size_t line_no = 1;
  for (std::size_t i = 1; i < ls.size(); ++i) {
    ++line_no;
    if (!pending.empty()) pending += '\n';
    pending += ls[i];
    auto fields = csv::split(pending);
    if (!fields) continue;
    if (fields->size() != width) {
      throw FormatError(std::string(what) + ": line " + std::to_string(line_no) + " has " +
                        std::to_string(fields->size()) + " fields, expected " +
                        std::to_string(width));
    }
    rows.push_back(std::move(*fields));
    pending.clear();
  }
  if (!pending.empty()) throw FormatError(std::string(what) + ": unterminated quoted field");
  return rows;
}

PatternHash parse_hash_field(const std::string& s, const char* what) {
  auto h = PatternHash::from_hex(s);
  if (!h) throw FormatError(std::string(what) + ": bad pattern key '" + s + "'");
  return *h;
}

Instant parse_time_field(const std::string& s, const char* what) {
  auto t = parse_iso(s);
  if (!t) throw FormatError(std::string(what) + ": bad timestamp '" + s + "'");
  return *t;
}

long long parse_int_field(const std::string& s, long long lo, long long hi, const char* what) {
  auto v = csv::parse_int(s);
  if (!v || *v < lo || *v > hi) throw FormatError(std::string(what) + ": bad integer '" + s + "'");
  return *v;
}

}  // namespace

std::string format_dictionary(const PatternDictionary& dict) {
  std::string out(kDictHeader);
  out += '\n';
  for (const auto& [key, e] : dict.entries()) {
    out += csv::join({key.hex(), std::to_string(e.count), format_iso(e.first_seen),
                      e.template_text});
    out += '\n';
  }
  return out;
}

PatternDictionary parse_dictionary(std::string_view text) {
  constexpr const char* what = "dictionary";
  PatternDictionary dict;
  for (const auto& row : parse_rows(text, kDictHeader, 4, what)) {
    const auto key = parse_hash_field(row[0], what);
    if (dict.entries().contains(key)) throw FormatError("dictionary: duplicate key " + row[0]);
    DictionaryEntry e;
    e.count = static_cast<std::uint64_t>(
        parse_int_field(row[1], 0, std::numeric_limits<long long>::max(), what));
    e.first_seen = parse_time_field(row[2], what);
    e.template_text = row[3];
    dict.insert(key, std::move(e));
  }
  return dict;
}

void save_dictionary(const PatternDictionary& dict, const std::string& path) {
  csv::write_file(path, format_dictionary(dict));
}

PatternDictionary load_dictionary(const std::string& path) {
  return parse_dictionary(csv::read_file(path));
}

std::string format_anon_stream(const std::vector<AnonRecord>& records) {
  std::string out(kStreamHeader);
  out += '\n';
  for (const auto& r : records) {
    out += csv::join({format_iso(r.timestamp), std::to_string(r.facility),
                      std::to_string(r.severity), r.hostname, r.pattern.hex()});
    out += '\n';
  }
  return out;
}

std::vector<AnonRecord> parse_anon_stream(std::string_view text) {
  constexpr const char* what = "anonymized stream";
  std::vector<AnonRecord> out;
  for (const auto& row : parse_rows(text, kStreamHeader, 5, what)) {
    AnonRecord r;
    r.timestamp = parse_time_field(row[0], what);
    r.facility = static_cast<int>(parse_int_field(row[1], 0, 23, what));
    r.severity = static_cast<int>(parse_int_field(row[2], 0, 7, what));
    r.hostname = row[3];
    r.pattern = parse_hash_field(row[4], what);
    out.push_back(std::move(r));
  }
  return out;
}

void save_anon_stream(const std::vector<AnonRecord>& records, const std::string& path) {
  csv::write_file(path, format_anon_stream(records));
}

std::vector<AnonRecord> load_anon_stream(const std::string& path) {
  return parse_anon_stream(csv::read_file(path));
}

}  // namespace logad
