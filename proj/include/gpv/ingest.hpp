#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gpv/core.hpp"

namespace gpv::ingest {

/// Chunk size used for blog parsing.
inline constexpr std::size_t kDefaultChunkTokens = 250;

struct Chunk {
    std::string subject_id;
    std::size_t chunk_index = 0;
    std::string text;
    std::size_t token_count = 0;
    /// Set when a unit could not be split below the limit. With the token
    /// definition below every token counts 1, so this only fires for limits
    /// the chunker cannot honour at all.
    bool oversize = false;

    bool operator==(const Chunk&) const = default;
};

struct FilterRule {
    std::size_t min_word_count = 1000;  // kept when word count is strictly greater
    std::vector<std::string> require_nonempty_fields{"gender"};
    std::vector<std::string> forbidden_substrings{"http", "urlLink", ":)", "*", "=)", "&nbsp", "<U"};
};

/// Whitespace-separated word runs (a lay word count, used by the filter).
std::size_t word_count(std::string_view text);

/// Each maximal run of alphanumeric characters is one token; every other
/// non-whitespace character is its own token. Bytes >= 0x80 count as
/// alphanumeric so multi-byte UTF-8 sequences stay inside words.
std::size_t count_tokens(std::string_view text);
std::vector<std::string_view> tokenize(std::string_view text);

bool passes_filter(const SubjectRecord& record, const FilterRule& rule);

/// Order-preserving filter; forbidden substrings match case-sensitively anywhere in the text.
std::vector<SubjectRecord> filter_corpus(std::span<const SubjectRecord> records, const FilterRule& rule);

/// Recursive chunking: paragraphs (blank lines), then sentences, then
/// whitespace, then single tokens. Adjacent units are packed greedily while
/// the chunk stays within max_tokens. Chunk text is the original substring
/// spanning the packed units, trimmed. Throws ValidationError if max_tokens == 0.
std::vector<Chunk> chunk_text(std::string_view text, std::size_t max_tokens,
                              std::string_view subject_id = {});

/// chunk_text over every record, run in parallel per subject; output is in record order.
std::vector<Chunk> chunk_corpus(std::span<const SubjectRecord> records, std::size_t max_tokens);

namespace reference {
/// chunk_corpus on one thread, kept to check the parallel version.
std::vector<Chunk> chunk_corpus(std::span<const SubjectRecord> records, std::size_t max_tokens);
}  // namespace reference

/// Loads a corpus file: fields subject_id and text, everything else becomes metadata.
std::vector<SubjectRecord> load_corpus(const std::filesystem::path& path);

}  // namespace gpv::ingest
