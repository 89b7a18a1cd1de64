#include "gpv/perception.hpp"

#include <algorithm>
#include <tuple>

#include <spdlog/spdlog.h>

#include "gpv/parallel.hpp"
#include "gpv/prompts.hpp"

namespace gpv::perception {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

backend::ChatRequest base_request(const std::string& model) {
    backend::ChatRequest r;
    r.model = model;
    r.max_tokens = 1024;
    return r;
}

std::optional<ElicitationSet> questions_from_payload(const json& payload) {
    auto it = payload.find("questions");
    if (it == payload.end() || !it->is_array() || it->size() != kQuestionsPerValue) return std::nullopt;
    ElicitationSet set;
    for (const auto& q : *it) {
        if (!q.is_string()) return std::nullopt;
        auto text = trim(q.get<std::string>());
        if (text.empty()) return std::nullopt;
        set.questions.push_back(std::move(text));
    }
    return set;
}

}  // namespace

std::optional<json> extract_json_object(std::string_view text) {
    for (std::size_t start = text.find('{'); start != std::string_view::npos; start = text.find('{', start + 1)) {
        int depth = 0;
        bool in_string = false;
        bool escaped = false;
        for (std::size_t i = start; i < text.size(); ++i) {
            const char c = text[i];
            if (in_string) {
                if (escaped) escaped = false;
                else if (c == '\\') escaped = true;
                else if (c == '"') in_string = false;
                continue;
            }
            if (c == '"') in_string = true;
            else if (c == '{') ++depth;
            else if (c == '}' && --depth == 0) {
                json j = json::parse(text.substr(start, i - start + 1), nullptr, false);
                if (!j.is_discarded() && j.is_object()) return j;
                break;
            }
        }
    }
    return std::nullopt;
}

std::string parse_prompt(std::string_view chunk_text) {
    std::string p(prompts::parse_perceptions());
    p += "Text: \"";
    p += chunk_text;
    p += '"';
    return p;
}

std::optional<std::vector<std::string>> perceptions_from_payload(const json& payload) {
    auto it = payload.find("perceptions");
    if (it == payload.end() || !it->is_array()) return std::nullopt;
    std::vector<std::string> out;
    for (const auto& p : *it) {
        if (!p.is_string()) return std::nullopt;
        auto text = trim(p.get<std::string>());
        if (!text.empty()) out.push_back(std::move(text));
    }
    return out;
}

ParseResult parse_chunk(const ingest::Chunk& chunk, backend::Backend& backend, const std::string& model) {
    if (trim(chunk.text).empty()) throw ValidationError("cannot parse an empty chunk");
    auto request = base_request(model);
    request.user_prompt = parse_prompt(chunk.text);

    ParseResult result;
    std::string raw;
    for (int attempt = 0; attempt < 2; ++attempt) {
        if (attempt == 1) request.user_prompt += "\n" + std::string(kJsonOnlyInstruction);
        raw = backend.complete(request);
        auto payload = extract_json_object(raw);
        if (!payload) continue;
        auto texts = perceptions_from_payload(*payload);
        if (!texts) continue;
        for (std::size_t i = 0; i < texts->size(); ++i) {
            result.perceptions.push_back({chunk.subject_id, chunk.chunk_index, i, std::move((*texts)[i])});
        }
        return result;
    }
    spdlog::warn("skipping chunk {}#{}: no perceptions payload after retry", chunk.subject_id, chunk.chunk_index);
    result.skipped.push_back({chunk.subject_id, chunk.chunk_index, "malformed perceptions payload", raw});
    return result;
}

ParseResult parse_chunks(std::span<const ingest::Chunk> chunks, backend::Backend& backend, const std::string& model) {
    std::vector<ParseResult> parts(chunks.size());
    parallel_for(chunks.size(), backend.concurrency_limit(),
                 [&](std::size_t i) { parts[i] = parse_chunk(chunks[i], backend, model); });
    ParseResult out;
    for (auto& p : parts) {
        std::move(p.perceptions.begin(), p.perceptions.end(), std::back_inserter(out.perceptions));
        std::move(p.skipped.begin(), p.skipped.end(), std::back_inserter(out.skipped));
    }
    std::stable_sort(out.perceptions.begin(), out.perceptions.end(), [](const Perception& a, const Perception& b) {
        return std::tie(a.subject_id, a.chunk_index, a.ordinal) < std::tie(b.subject_id, b.chunk_index, b.ordinal);
    });
    std::stable_sort(out.skipped.begin(), out.skipped.end(), [](const SkipRecord& a, const SkipRecord& b) {
        return std::tie(a.subject_id, a.chunk_index) < std::tie(b.subject_id, b.chunk_index);
    });
    return out;
}

ElicitationSet generate_questions(const ValueDef& value, backend::Backend& backend, const std::string& model) {
    if (value.name.empty()) throw ValidationError("value name must be non-empty");
    auto request = base_request(model);
    request.system_prompt = std::string(prompts::generate_questions());
    request.user_prompt = value.description.empty() ? value.name : value.name + ": " + value.description;
    std::string raw;
    for (int attempt = 0; attempt < 2; ++attempt) {
        if (attempt == 1) request.user_prompt += "\n" + std::string(kJsonOnlyInstruction);
        raw = backend.complete(request);
        if (auto payload = extract_json_object(raw)) {
            if (auto set = questions_from_payload(*payload)) {
                set->value_name = value.name;
                return *set;
            }
        }
    }
    throw ElicitationError("could not obtain " + std::to_string(kQuestionsPerValue) + " questions for '" +
                           value.name + "'; last response: " + raw);
}

SubjectRecord collect_responses(std::span<const ElicitationSet> sets, backend::Backend& subject,
                                const std::string& model, const std::string& subject_id) {
    std::vector<const std::string*> questions;
    for (const auto& s : sets) {
        for (const auto& q : s.questions) questions.push_back(&q);
    }
    std::vector<std::string> answers(questions.size());
    parallel_for(questions.size(), subject.concurrency_limit(), [&](std::size_t i) {
        auto request = base_request(model);
        request.user_prompt = *questions[i];
        answers[i] = trim(subject.complete(request));
    });
    SubjectRecord record;
    record.subject_id = subject_id;
    for (const auto& a : answers) {
        if (a.empty()) continue;
        if (!record.text.empty()) record.text += "\n\n";
        record.text += a;
    }
    return record;
}

}  // namespace gpv::perception
