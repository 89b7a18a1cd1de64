#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gpv/backend.hpp"
#include "gpv/core.hpp"
#include "gpv/error.hpp"
#include "gpv/ingest.hpp"

namespace gpv::perception {

inline constexpr std::string_view kJsonOnlyInstruction = "Respond with valid JSON only.";
inline constexpr std::size_t kQuestionsPerValue = 5;

struct Perception {
    std::string subject_id;
    std::size_t chunk_index = 0;
    std::size_t ordinal = 0;
    std::string text;

    bool operator==(const Perception&) const = default;
};

/// A chunk that produced no usable payload after the retry.
struct SkipRecord {
    std::string subject_id;
    std::size_t chunk_index = 0;
    std::string reason;
    std::string raw_response;

    bool operator==(const SkipRecord&) const = default;
};

struct ParseResult {
    std::vector<Perception> perceptions;
    std::vector<SkipRecord> skipped;
};

struct ElicitationSet {
    std::string value_name;
    std::vector<std::string> questions;

    bool operator==(const ElicitationSet&) const = default;
};

class ElicitationError : public BackendError {
public:
    using BackendError::BackendError;
};

/// First balanced {...} span in `text` that parses as a JSON object. Braces inside
/// string literals do not count toward nesting.
std::optional<json> extract_json_object(std::string_view text);

/// The parsing template followed by `Text: "<chunk>"`.
std::string parse_prompt(std::string_view chunk_text);

/// Non-empty, trimmed strings of payload["perceptions"]; nullopt if the payload is malformed.
std::optional<std::vector<std::string>> perceptions_from_payload(const json& payload);

ParseResult parse_chunk(const ingest::Chunk& chunk, backend::Backend& backend, const std::string& model);

/// Parses chunks concurrently (bounded by the backend limit). Output is sorted by
/// (subject, chunk, ordinal) regardless of completion order.
ParseResult parse_chunks(std::span<const ingest::Chunk> chunks, backend::Backend& backend, const std::string& model);

/// Question-generation template as system prompt, "name: description" as the user turn.
ElicitationSet generate_questions(const ValueDef& value, backend::Backend& backend, const std::string& model);

/// Each question answered by the subject model; the transcript joins the answers
/// as blank-line-separated paragraphs so each answer chunks on its own boundary.
SubjectRecord collect_responses(std::span<const ElicitationSet> sets, backend::Backend& subject,
                                const std::string& model, const std::string& subject_id);

}  // namespace gpv::perception
