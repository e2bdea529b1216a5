#pragma once

// Minimal RFC 4180 helpers shared by every artifact writer/reader.

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace logad::csv {

/// Quotes the field when it contains a comma, quote, CR or LF.
std::string escape(std::string_view field);

std::string join(const std::vector<std::string>& fields);

/// Splits one logical record. Returns nullopt on an unterminated quote.
std::optional<std::vector<std::string>> split(std::string_view line);

/// Shortest representation that parses back to the identical double.
std::string format_double(double v);

std::optional<double> parse_double(std::string_view s);
std::optional<long long> parse_int(std::string_view s);

/// Reads the whole file; throws IoError when it cannot be opened.
std::string read_file(const std::string& path);

/// Writes `content` atomically enough for our purposes; throws IoError.
void write_file(const std::string& path, std::string_view content);

/// Splits file content into LF-terminated lines. `complete` reports whether the
/// final line carried its terminator.
std::vector<std::string_view> lines(std::string_view content, bool* complete = nullptr);

}  // namespace logad::csv
