#include "gpv/records.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include "gpv/error.hpp"

namespace gpv::records {

std::optional<std::string> Record::get(std::string_view key) const {
    for (const auto& [k, v] : fields) {
        if (k == key) return v;
    }
    return std::nullopt;
}

const std::string& Record::require(std::string_view key) const {
    for (const auto& [k, v] : fields) {
        if (k == key) return v;
    }
    fail("missing required field '" + std::string(key) + "'");
}

void Record::fail(const std::string& message) const {
    throw ValidationError(source + ":" + std::to_string(line) + ": " + message);
}

namespace {

std::string lower_extension(const std::filesystem::path& path) {
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return ext;
}

std::string json_scalar_text(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_null()) return "";
    return v.dump();
}

}  // namespace

std::vector<Record> parse_delimited(std::string_view content, char delimiter,
                                    const std::string& source) {
    // RFC 4180 style: quoted fields may contain delimiters, doubled quotes and newlines.
    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> row_lines;
    std::vector<std::string> row;
    std::string field;
    bool in_quotes = false;
    bool field_started = false;
    std::size_t line = 1;
    std::size_t row_line = 1;

    auto end_field = [&] {
        row.push_back(std::move(field));
        field.clear();
        field_started = false;
    };
    auto end_row = [&] {
        end_field();
        const bool blank = row.size() == 1 && row.front().empty();
        if (!blank) {
            rows.push_back(std::move(row));
            row_lines.push_back(row_line);
        }
        row.clear();
    };

    for (std::size_t i = 0; i < content.size(); ++i) {
        const char c = content[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < content.size() && content[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                if (c == '\n') ++line;
                field.push_back(c);
            }
            continue;
        }
        if (c == '"' && !field_started) {
            in_quotes = true;
            field_started = true;
        } else if (c == delimiter) {
            end_field();
        } else if (c == '\n') {
            if (!field.empty() && field.back() == '\r') field.pop_back();
            end_row();
            ++line;
            row_line = line;
        } else {
            field.push_back(c);
            field_started = true;
        }
    }
    if (in_quotes) {
        throw ValidationError(source + ":" + std::to_string(row_line) + ": unterminated quoted field");
    }
    if (!field.empty() || !row.empty()) {
        if (!field.empty() && field.back() == '\r') field.pop_back();
        end_row();
    }

    std::vector<Record> out;
    if (rows.empty()) return out;
    const auto& header = rows.front();
    for (std::size_t r = 1; r < rows.size(); ++r) {
        Record rec{source, row_lines[r], {}};
        if (rows[r].size() != header.size()) {
            rec.fail("expected " + std::to_string(header.size()) + " fields, found " +
                     std::to_string(rows[r].size()));
        }
        for (std::size_t c = 0; c < header.size(); ++c) {
            rec.fields.emplace_back(header[c], rows[r][c]);
        }
        out.push_back(std::move(rec));
    }
    return out;
}

std::vector<Record> parse_jsonl(std::string_view content, const std::string& source) {
    std::vector<Record> out;
    std::size_t line = 0;
    std::size_t pos = 0;
    while (pos <= content.size()) {
        std::size_t nl = content.find('\n', pos);
        if (nl == std::string_view::npos) nl = content.size();
        std::string_view text = content.substr(pos, nl - pos);
        ++line;
        pos = nl + 1;
        if (std::all_of(text.begin(), text.end(), [](unsigned char c) { return std::isspace(c); })) {
            if (nl == content.size()) break;
            continue;
        }
        Record rec{source, line, {}};
        json obj;
        try {
            obj = json::parse(text);
        } catch (const json::parse_error& e) {
            rec.fail(std::string("invalid JSON: ") + e.what());
        }
        if (!obj.is_object()) rec.fail("expected a JSON object");
        for (const auto& [key, value] : obj.items()) {
            if (key == "metadata" && value.is_object()) {
                for (const auto& [mk, mv] : value.items()) rec.fields.emplace_back(mk, json_scalar_text(mv));
            } else {
                rec.fields.emplace_back(key, json_scalar_text(value));
            }
        }
        out.push_back(std::move(rec));
        if (nl == content.size()) break;
    }
    return out;
}

std::vector<Record> read_records(const std::filesystem::path& path) {
    const std::string content = read_file(path);
    const std::string ext = lower_extension(path);
    const std::string source = path.filename().string();
    if (ext == ".csv") return parse_delimited(content, ',', source);
    if (ext == ".tsv") return parse_delimited(content, '\t', source);
    if (ext == ".jsonl" || ext == ".ndjson" || ext == ".json") return parse_jsonl(content, source);
    throw ValidationError("unsupported record file extension '" + ext + "' for " + path.string() +
                          " (expected .csv, .tsv, or .jsonl)");
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingArtifactError("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    const auto tmp = std::filesystem::path(path.string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ValidationError("cannot write " + path.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw ValidationError("write failed for " + path.string());
    }
    std::filesystem::rename(tmp, path);
}

std::vector<json> read_jsonl(const std::filesystem::path& path) {
    const std::string content = read_file(path);
    std::vector<json> out;
    std::istringstream in(content);
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            out.push_back(json::parse(line));
        } catch (const json::parse_error& e) {
            throw ValidationError(path.filename().string() + ":" + std::to_string(n) +
                                  ": invalid JSON: " + e.what());
        }
    }
    return out;
}

std::string to_jsonl(std::span<const json> rows) {
    std::string out;
    for (const auto& row : rows) {
        out += row.dump();
        out.push_back('\n');
    }
    return out;
}

void write_jsonl(const std::filesystem::path& path, std::span<const json> rows) {
    write_file(path, to_jsonl(rows));
}

std::string csv_field(std::string_view value, char delimiter) {
    const bool needs_quotes = value.find_first_of(std::string{delimiter, '"', '\n', '\r'}) != std::string_view::npos;
    if (!needs_quotes) return std::string(value);
    std::string out = "\"";
    for (char c : value) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

std::string csv_row(std::span<const std::string> cells, char delimiter) {
    std::string out;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out.push_back(delimiter);
        out += csv_field(cells[i], delimiter);
    }
    out.push_back('\n');
    return out;
}

std::string format_number(std::optional<double> value) {
    if (!value) return "";
    char buf[64];
    auto [ptr, ec] = std::to_chars(std::begin(buf), std::end(buf), *value);
    if (ec != std::errc()) return std::to_string(*value);
    return std::string(buf, ptr);
}

}  // namespace gpv::records
