#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

namespace gpv {

using json = nlohmann::ordered_json;

namespace records {

/// One flat input record with the line number it came from, for error messages.
struct Record {
    std::string source;
    std::size_t line = 0;
    std::vector<std::pair<std::string, std::string>> fields;

    std::optional<std::string> get(std::string_view key) const;
    /// Throws ValidationError naming the source and line when the field is missing.
    const std::string& require(std::string_view key) const;
    [[noreturn]] void fail(const std::string& message) const;
};

/// Reads .csv / .tsv (header row) or .jsonl / .ndjson (one object per line).
/// JSON members that are objects named "metadata" are flattened into fields.
std::vector<Record> read_records(const std::filesystem::path& path);

std::vector<Record> parse_delimited(std::string_view content, char delimiter,
                                    const std::string& source);
std::vector<Record> parse_jsonl(std::string_view content, const std::string& source);

std::string read_file(const std::filesystem::path& path);
/// Writes via a temporary file and rename.
void write_file(const std::filesystem::path& path, std::string_view content);

std::vector<json> read_jsonl(const std::filesystem::path& path);
std::string to_jsonl(std::span<const json> rows);
void write_jsonl(const std::filesystem::path& path, std::span<const json> rows);

/// Quotes a CSV field when it contains the delimiter, quotes, or newlines.
std::string csv_field(std::string_view value, char delimiter = ',');
std::string csv_row(std::span<const std::string> cells, char delimiter = ',');

/// Shortest decimal text that round-trips the double, or empty for nullopt.
std::string format_number(std::optional<double> value);

}  // namespace records
}  // namespace gpv
