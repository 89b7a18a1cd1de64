#include "gpv/ingest.hpp"

#include <algorithm>
#include <set>

#include "gpv/error.hpp"
#include "gpv/records.hpp"

namespace gpv::ingest {

namespace {

bool is_space(unsigned char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_word_char(unsigned char c) {
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 0x80;
}

struct Span {
    std::size_t begin = 0;
    std::size_t end = 0;
    std::size_t tokens = 0;
};

enum class Level { paragraph, sentence, word, token };

Level next_level(Level level) {
    switch (level) {
        case Level::paragraph: return Level::sentence;
        case Level::sentence: return Level::word;
        default: return Level::token;
    }
}

// Adds [b, e) trimmed of surrounding whitespace, if anything is left.
void push_trimmed(std::string_view text, std::size_t b, std::size_t e, std::vector<Span>& out) {
    while (b < e && is_space(static_cast<unsigned char>(text[b]))) ++b;
    while (e > b && is_space(static_cast<unsigned char>(text[e - 1]))) --e;
    if (b < e) out.push_back({b, e, count_tokens(text.substr(b, e - b))});
}

std::vector<Span> split_paragraphs(std::string_view text, std::size_t b, std::size_t e) {
    std::vector<Span> out;
    std::size_t start = b;
    std::size_t i = b;
    while (i < e) {
        if (text[i] == '\n') {
            std::size_t j = i + 1;
            while (j < e && text[j] != '\n' && is_space(static_cast<unsigned char>(text[j]))) ++j;
            if (j < e && text[j] == '\n') {
                push_trimmed(text, start, i, out);
                while (j < e && is_space(static_cast<unsigned char>(text[j]))) ++j;
                start = j;
                i = j;
                continue;
            }
        }
        ++i;
    }
    push_trimmed(text, start, e, out);
    return out;
}

bool is_terminal(char c) { return c == '.' || c == '!' || c == '?'; }
bool is_closer(char c) { return c == '"' || c == '\'' || c == ')' || c == ']'; }

std::vector<Span> split_sentences(std::string_view text, std::size_t b, std::size_t e) {
    std::vector<Span> out;
    std::size_t start = b;
    std::size_t i = b;
    while (i < e) {
        if (is_terminal(text[i])) {
            std::size_t j = i;
            while (j < e && is_terminal(text[j])) ++j;
            while (j < e && is_closer(text[j])) ++j;
            if (j == e || is_space(static_cast<unsigned char>(text[j]))) {
                push_trimmed(text, start, j, out);
                start = j;
            }
            i = j;
            continue;
        }
        ++i;
    }
    push_trimmed(text, start, e, out);
    return out;
}

std::vector<Span> split_words(std::string_view text, std::size_t b, std::size_t e) {
    std::vector<Span> out;
    std::size_t i = b;
    while (i < e) {
        while (i < e && is_space(static_cast<unsigned char>(text[i]))) ++i;
        std::size_t j = i;
        while (j < e && !is_space(static_cast<unsigned char>(text[j]))) ++j;
        if (j > i) out.push_back({i, j, count_tokens(text.substr(i, j - i))});
        i = j;
    }
    return out;
}

std::vector<Span> split_tokens(std::string_view text, std::size_t b, std::size_t e) {
    std::vector<Span> out;
    for (auto tok : tokenize(text.substr(b, e - b))) {
        const auto begin = static_cast<std::size_t>(tok.data() - text.data());
        out.push_back({begin, begin + tok.size(), 1});
    }
    return out;
}

std::vector<Span> split(std::string_view text, const Span& span, Level level) {
    switch (level) {
        case Level::paragraph: return split_paragraphs(text, span.begin, span.end);
        case Level::sentence: return split_sentences(text, span.begin, span.end);
        case Level::word: return split_words(text, span.begin, span.end);
        case Level::token: return split_tokens(text, span.begin, span.end);
    }
    return {};
}

class Packer {
public:
    Packer(std::string_view text, std::size_t max_tokens, std::string_view subject_id)
        : text_(text), max_(max_tokens), subject_(subject_id) {}

    void pack(const std::vector<Span>& units, Level level) {
        std::vector<Span> batch;
        std::size_t tokens = 0;
        auto flush = [&] {
            if (batch.empty()) return;
            emit(batch.front().begin, batch.back().end, tokens, false);
            batch.clear();
            tokens = 0;
        };
        for (const auto& unit : units) {
            if (unit.tokens > max_) {
                flush();
                if (level == Level::token) {
                    emit(unit.begin, unit.end, unit.tokens, true);
                } else {
                    pack(split(text_, unit, next_level(level)), next_level(level));
                }
                continue;
            }
            if (tokens + unit.tokens > max_) flush();
            batch.push_back(unit);
            tokens += unit.tokens;
        }
        flush();
    }

    std::vector<Chunk> take() { return std::move(chunks_); }

private:
    void emit(std::size_t b, std::size_t e, std::size_t tokens, bool oversize) {
        chunks_.push_back({std::string(subject_), chunks_.size(), std::string(text_.substr(b, e - b)), tokens, oversize});
    }

    std::string_view text_;
    std::size_t max_;
    std::string_view subject_;
    std::vector<Chunk> chunks_;
};

}  // namespace

std::size_t word_count(std::string_view text) {
    std::size_t n = 0;
    bool in_word = false;
    for (unsigned char c : text) {
        if (is_space(c)) {
            in_word = false;
        } else if (!in_word) {
            in_word = true;
            ++n;
        }
    }
    return n;
}

std::vector<std::string_view> tokenize(std::string_view text) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < text.size()) {
        const auto c = static_cast<unsigned char>(text[i]);
        if (is_space(c)) {
            ++i;
        } else if (is_word_char(c)) {
            std::size_t j = i + 1;
            while (j < text.size() && is_word_char(static_cast<unsigned char>(text[j]))) ++j;
            out.push_back(text.substr(i, j - i));
            i = j;
        } else {
            out.push_back(text.substr(i, 1));
            ++i;
        }
    }
    return out;
}

std::size_t count_tokens(std::string_view text) {
    std::size_t n = 0;
    bool in_word = false;
    for (unsigned char c : text) {
        if (is_word_char(c)) {
            if (!in_word) ++n;
            in_word = true;
        } else {
            in_word = false;
            if (!is_space(c)) ++n;
        }
    }
    return n;
}

bool passes_filter(const SubjectRecord& record, const FilterRule& rule) {
    for (const auto& key : rule.require_nonempty_fields) {
        auto it = record.metadata.find(key);
        if (it == record.metadata.end()) return false;
        const auto& v = it->second;
        if (std::all_of(v.begin(), v.end(), [](unsigned char c) { return is_space(c); })) return false;
    }
    if (word_count(record.text) <= rule.min_word_count) return false;
    for (const auto& bad : rule.forbidden_substrings) {
        if (!bad.empty() && record.text.find(bad) != std::string::npos) return false;
    }
    return true;
}

std::vector<SubjectRecord> filter_corpus(std::span<const SubjectRecord> records, const FilterRule& rule) {
    std::vector<SubjectRecord> out;
    for (const auto& r : records) {
        if (passes_filter(r, rule)) out.push_back(r);
    }
    return out;
}

std::vector<Chunk> chunk_text(std::string_view text, std::size_t max_tokens, std::string_view subject_id) {
    if (max_tokens == 0) throw ValidationError("chunk size must be at least 1 token");
    Packer packer(text, max_tokens, subject_id);
    packer.pack(split(text, Span{0, text.size(), 0}, Level::paragraph), Level::paragraph);
    return packer.take();
}

std::vector<Chunk> chunk_corpus(std::span<const SubjectRecord> records, std::size_t max_tokens) {
    if (max_tokens == 0) throw ValidationError("chunk size must be at least 1 token");
    std::vector<std::vector<Chunk>> per_subject(records.size());
    const auto n = static_cast<std::ptrdiff_t>(records.size());
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto& r = records[static_cast<std::size_t>(i)];
        per_subject[static_cast<std::size_t>(i)] = chunk_text(r.text, max_tokens, r.subject_id);
    }
    std::vector<Chunk> out;
    for (auto& chunks : per_subject) {
        std::move(chunks.begin(), chunks.end(), std::back_inserter(out));
    }
    return out;
}

std::vector<SubjectRecord> load_corpus(const std::filesystem::path& path) {
    std::vector<SubjectRecord> out;
    std::set<std::string> ids;
    for (const auto& rec : records::read_records(path)) {
        SubjectRecord s;
        s.subject_id = rec.require("subject_id");
        s.text = rec.require("text");
        if (s.subject_id.empty()) rec.fail("empty subject_id");
        if (!ids.insert(s.subject_id).second) rec.fail("duplicate subject_id '" + s.subject_id + "'");
        for (const auto& [k, v] : rec.fields) {
            if (k != "subject_id" && k != "text") s.metadata[k] = v;
        }
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace gpv::ingest
