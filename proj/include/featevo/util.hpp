// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace featevo
{

/// Whole-file read; throws IoError.
std::string read_file(const std::filesystem::path& path);

/// Writes to a sibling temp file and renames over the target, so readers
/// observe either the old or the new content.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double value);

/// RFC 4180 style reader: comma delimiter, double-quote escaping, CRLF or LF.
/// Each record is returned with its 1-based source line.
struct CsvRecord
{
    std::size_t line = 0;
    std::vector<std::string> fields;
};

std::vector<CsvRecord> parse_csv(std::string_view text);

std::string csv_escape(std::string_view field);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

std::string to_lower(std::string_view text);

/// Replaces every occurrence of `from` in `text`.
std::string replace_all(std::string text, std::string_view from, std::string_view to);

} // namespace featevo
