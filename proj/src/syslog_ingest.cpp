#include "logad/syslog_ingest.hpp"

#include <algorithm>
#include <cctype>

#include "logad/csv.hpp"
#include "logad/errors.hpp"

namespace logad {

namespace {

constexpr std::string_view kNil = "-";

bool is_space(char c) { return c == ' ' || c == '\t'; }

/// Pops the next space-delimited token, consuming exactly one trailing separator.
std::optional<std::string_view> next_token(std::string_view& rest) {
  if (rest.empty() || is_space(rest.front())) return std::nullopt;
  std::size_t end = 0;
  while (end < rest.size() && !is_space(rest[end])) ++end;
  auto tok = rest.substr(0, end);
  rest.remove_prefix(end < rest.size() ? end + 1 : end);
  return tok;
}

std::string nil_to_empty(std::string_view s) { return s == kNil ? std::string{} : std::string(s); }

std::string_view strip_bom(std::string_view s) {
  if (s.size() >= 3 && s.substr(0, 3) == "\xEF\xBB\xBF") s.remove_prefix(3);
  return s;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (is_space(s.front()) || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (is_space(s.back()) || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

// <PRI>VERSION SP TIMESTAMP SP HOSTNAME SP APP-NAME SP PROCID SP MSGID SP SD [SP MSG]
std::optional<LogRecord> parse_rfc5424(std::string_view rest, PriorityParts pri) {
  std::size_t v = 0;
  while (v < rest.size() && v < 3 && std::isdigit(static_cast<unsigned char>(rest[v]))) ++v;
  if (v == 0 || v >= rest.size() || rest[v] != ' ' || rest[0] == '0') return std::nullopt;
  rest.remove_prefix(v + 1);

  auto ts = next_token(rest);
  auto host = next_token(rest);
  auto app = next_token(rest);
  auto procid = next_token(rest);
  auto msgid = next_token(rest);
  if (!ts || !host || !app || !procid || !msgid) return std::nullopt;
  auto when = parse_iso(*ts);
  if (!when) return std::nullopt;

  LogRecord r;
  r.timestamp = *when;
  r.facility = pri.facility;
  r.severity = pri.severity;
  r.hostname = nil_to_empty(*host);
  r.app_name = nil_to_empty(*app);
  // Structured data stays in the message as opaque text; only a NILVALUE is dropped.
  if (rest == kNil) {
    rest = {};
  } else if (rest.size() > 1 && rest.substr(0, 2) == "- ") {
    rest.remove_prefix(2);
  }
  r.message = std::string(trim(strip_bom(rest)));
  return r;
}

bool is_tag_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.' ||
         c == '/';
}

// Splits a legacy "tag[pid]: text" prefix off the message.
void split_legacy_tag(LogRecord& r) {
  std::string_view msg = r.message;
  const auto colon = msg.find(": ");
  const auto cut = colon == std::string_view::npos && !msg.empty() && msg.back() == ':'
                       ? msg.size() - 1
                       : colon;
  if (cut == std::string_view::npos || cut == 0) return;
  std::string_view tag = msg.substr(0, cut);
  if (tag.back() == ']') {
    const auto open = tag.find('[');
    if (open == std::string_view::npos || open == 0) return;
    tag = tag.substr(0, open);
  }
  if (!std::all_of(tag.begin(), tag.end(), is_tag_char)) return;
  r.app_name = std::string(tag);
  r.message = std::string(trim(msg.substr(std::min(msg.size(), cut + 1))));
}

std::optional<LogRecord> parse_relaxed(std::string_view rest, PriorityParts pri,
                                       const ParseOptions& opts) {
  rest = trim(rest);
  // tolerate a version digit in front of an otherwise non-conforming line
  if (rest.size() > 2 && rest[0] == '1' && rest[1] == ' ') rest.remove_prefix(2);

  std::optional<Instant> when;
  if (rest.size() >= 15) when = parse_bsd(rest.substr(0, 15), opts.legacy_year);
  if (when) {
    rest.remove_prefix(15);
    rest = trim(rest);
  } else {
    // the ISO date and time may be separated by a space
    std::size_t end = rest.find_first_of(" \t");
    if (end == 10) end = rest.find_first_of(" \t", 11);
    if (end == std::string_view::npos) end = rest.size();
    when = parse_iso(rest.substr(0, end));
    if (!when) {
      end = rest.find_first_of(" \t");
      if (end == std::string_view::npos) end = rest.size();
      when = parse_iso(rest.substr(0, end));
    }
    if (!when) return std::nullopt;
    rest = trim(rest.substr(end));
  }

  auto host = next_token(rest);
  if (!host) return std::nullopt;

  LogRecord r;
  r.timestamp = *when;
  r.facility = pri.facility;
  r.severity = pri.severity;
  r.hostname = nil_to_empty(*host);
  r.message = std::string(trim(strip_bom(rest)));
  split_legacy_tag(r);
  return r;
}

}  // namespace

PriorityParts parse_pri(int pri) {
  if (pri < 0 || pri > 191) {
    throw ParseError("PRI value " + std::to_string(pri) + " outside 0..191");
  }
  return {pri / 8, pri % 8};
}

LogRecord parse_line(std::string_view line, const ParseOptions& opts, std::size_t line_number) {
  line = trim(line);
  if (line.empty()) throw ParseError("empty line", line_number);
  if (line.front() != '<') throw ParseError("missing <PRI> header", line_number);
  const auto close = line.find('>');
  if (close == std::string_view::npos || close == 1 || close > 4) {
    throw ParseError("malformed <PRI> header", line_number);
  }
  const auto pri_text = line.substr(1, close - 1);
  const auto pri_value = csv::parse_int(pri_text);
  if (!pri_value || !std::all_of(pri_text.begin(), pri_text.end(),
                                 [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
    throw ParseError("non-numeric <PRI> header '" + std::string(pri_text) + "'", line_number);
  }
  PriorityParts pri{};
  try {
    pri = parse_pri(static_cast<int>(*pri_value));
  } catch (const ParseError& e) {
    throw ParseError(e.what(), line_number);
  }

  const auto rest = line.substr(close + 1);
  if (auto r = parse_rfc5424(rest, pri)) return std::move(*r);
  if (opts.strict) throw ParseError("line does not follow the RFC 5424 layout", line_number);
  if (auto r = parse_relaxed(rest, pri, opts)) return std::move(*r);
  throw ParseError("unparseable timestamp or missing hostname", line_number);
}

void CorpusFilter::validate() const {
  if (time_start && time_end && *time_start > *time_end) {
    throw ConfigError("time range start " + format_iso(*time_start) + " is after end " +
                      format_iso(*time_end));
  }
}

bool CorpusFilter::accepts(const LogRecord& r) const {
  if (!hostnames.empty() && !hostnames.contains(r.hostname)) return false;
  if (time_start && r.timestamp < *time_start) return false;
  if (time_end && r.timestamp > *time_end) return false;
  return true;
}

Corpus parse_corpus(std::string_view text, const CorpusFilter& filter, const ParseOptions& opts) {
  filter.validate();
  Corpus corpus;
  std::size_t line_number = 0;
  for (auto line : csv::lines(text)) {
    ++line_number;
    if (trim(line).empty()) continue;
    ++corpus.total_lines;
    try {
      auto rec = parse_line(line, opts, line_number);
      if (filter.accepts(rec)) corpus.records.push_back(std::move(rec));
    } catch (const ParseError&) {
      ++corpus.malformed_count;
    }
  }
  std::stable_sort(corpus.records.begin(), corpus.records.end(),
                   [](const LogRecord& a, const LogRecord& b) { return a.timestamp < b.timestamp; });
  return corpus;
}

Corpus read_corpus(const std::string& path, const CorpusFilter& filter, const ParseOptions& opts) {
  const std::string text = csv::read_file(path);
  auto corpus = parse_corpus(text, filter, opts);
  if (corpus.malformed_count * 2 > corpus.total_lines) {
    throw CorpusError(path + ": " + std::to_string(corpus.malformed_count) + " of " +
                      std::to_string(corpus.total_lines) +
                      " lines are malformed; wrong input format?");
  }
  return corpus;
}

}  // namespace logad
