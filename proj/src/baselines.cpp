#include "gpv/baselines.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <map>

#include "gpv/error.hpp"
#include "gpv/parallel.hpp"
#include "gpv/prompts.hpp"
#include "gpv/records.hpp"

namespace gpv::baselines {

namespace {

bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_alpha(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }

// A number token starting at i: optional '-', digits, optional '.digits'.
struct NumberToken {
    std::size_t begin = 0;
    std::size_t end = 0;
    bool decimal = false;
};

std::vector<NumberToken> number_tokens(std::string_view s) {
    std::vector<NumberToken> out;
    std::size_t i = 0;
    while (i < s.size()) {
        if (!is_digit(s[i])) {
            ++i;
            continue;
        }
        std::size_t b = i;
        if (b > 0 && s[b - 1] == '-') --b;
        std::size_t e = i;
        while (e < s.size() && is_digit(s[e])) ++e;
        bool decimal = false;
        if (e + 1 < s.size() && s[e] == '.' && is_digit(s[e + 1])) {
            decimal = true;
            ++e;
            while (e < s.size() && is_digit(s[e])) ++e;
        }
        const bool glued = (b > 0 && (is_alpha(s[b - 1]) || s[b - 1] == '.')) || (e < s.size() && is_alpha(s[e]));
        if (!glued) out.push_back({b, e, decimal});
        i = e;
    }
    return out;
}

bool parse_bool(const records::Record& rec, std::string_view key) {
    auto v = rec.get(key);
    if (!v || v->empty()) return false;
    std::string s = *v;
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (s == "1" || s == "true" || s == "yes" || s == "r") return true;
    if (s == "0" || s == "false" || s == "no") return false;
    rec.fail("field '" + std::string(key) + "' is not a boolean: '" + *v + "'");
}

int parse_int(const records::Record& rec, std::string_view key, int fallback) {
    auto v = rec.get(key);
    if (!v || v->empty()) return fallback;
    int out = 0;
    auto [p, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
    if (ec != std::errc{} || p != v->data() + v->size()) rec.fail("field '" + std::string(key) + "' is not an integer: '" + *v + "'");
    return out;
}

ValueVector mean_by_value(const ValueSystem& system, const std::string& subject_id, Tool tool,
                          const std::vector<ItemLog>& logs) {
    std::vector<double> sum(system.size(), 0.0);
    std::vector<std::size_t> n(system.size(), 0);
    for (const auto& log : logs) {
        if (!log.score) continue;
        const auto idx = *system.index_of(log.value_name);
        sum[idx] += *log.score;
        ++n[idx];
    }
    auto v = ValueVector::for_system(subject_id, system, tool);
    const auto range = range_for(tool);
    for (std::size_t i = 0; i < system.size(); ++i) {
        if (n[i] > 0) v.set(system.values()[i].name, std::clamp(sum[i] / static_cast<double>(n[i]), range.lo, range.hi));
    }
    return v;
}

void check_items(std::span<const InventoryItem> items, const ValueSystem& system) {
    if (items.empty()) throw ValidationError("inventory has no items");
    for (const auto& item : items) {
        if (!system.find(item.value_name)) {
            throw ValidationError("item '" + item.item_id + "' measures '" + item.value_name + "', which is not in " + system.name());
        }
        if (item.scale_min >= item.scale_max) throw ValidationError("item '" + item.item_id + "' has an empty scale");
    }
}

}  // namespace

std::vector<InventoryItem> load_inventory(const std::filesystem::path& path) {
    std::vector<InventoryItem> out;
    for (const auto& rec : records::read_records(path)) {
        InventoryItem item;
        item.item_id = rec.require("item_id");
        item.text = rec.require("text");
        item.value_name = rec.require("value");
        item.reverse_scored = parse_bool(rec, "reverse");
        item.scale_min = parse_int(rec, "scale_min", 1);
        item.scale_max = parse_int(rec, "scale_max", 5);
        if (item.scale_min >= item.scale_max) rec.fail("scale_min must be below scale_max");
        if (item.text.empty()) rec.fail("empty item text");
        out.push_back(std::move(item));
    }
    return out;
}

std::optional<int> first_integer_in_range(std::string_view reply, int lo, int hi) {
    for (const auto& tok : number_tokens(reply)) {
        if (tok.decimal) continue;
        long long v = 0;
        auto [p, ec] = std::from_chars(reply.data() + tok.begin, reply.data() + tok.end, v);
        if (ec != std::errc{}) return std::nullopt;  // too many digits to be a rating
        if (v < lo || v > hi) return std::nullopt;
        return static_cast<int>(v);
    }
    return std::nullopt;
}

std::optional<double> first_number_in_range(std::string_view reply, double lo, double hi) {
    const auto toks = number_tokens(reply);
    if (toks.empty()) return std::nullopt;
    double v = 0.0;
    auto [p, ec] = std::from_chars(reply.data() + toks.front().begin, reply.data() + toks.front().end, v);
    if (ec != std::errc{} || v < lo || v > hi) return std::nullopt;
    return v;
}

int reverse_likert(int rating, int scale_min, int scale_max) { return scale_min + scale_max - rating; }
double reverse_valuebench(double rating) { return 10.0 - rating; }

std::string self_report_prompt(const InventoryItem& item) {
    const auto lo = std::to_string(item.scale_min);
    const auto hi = std::to_string(item.scale_max);
    return prompts::fill(prompts::self_report_likert(), {{"scale_min", lo}, {"scale_max", hi}, {"item", item.text}});
}

std::string evaluator_prompt(std::string_view question, std::string_view answer) {
    return prompts::fill(prompts::valuebench_evaluator(), {{"question", question}, {"answer", answer}});
}

AdministrationResult run_self_report(std::span<const InventoryItem> items, const ValueSystem& system,
                                     backend::Backend& subject, const AdministerOptions& options) {
    check_items(items, system);
    std::vector<ItemLog> logs(items.size());
    parallel_for(items.size(), subject.concurrency_limit(), [&](std::size_t i) {
        const auto& item = items[i];
        backend::ChatRequest req;
        req.model = options.model;
        req.user_prompt = self_report_prompt(item);
        req.max_tokens = 16;
        auto& log = logs[i];
        log.item_id = item.item_id;
        log.value_name = item.value_name;
        log.reply = subject.complete(req);
        if (auto r = first_integer_in_range(log.reply, item.scale_min, item.scale_max)) {
            log.raw = *r;
            const int effective = item.reverse_scored ? reverse_likert(*r, item.scale_min, item.scale_max) : *r;
            log.score = static_cast<double>(effective - item.scale_min) / static_cast<double>(item.scale_max - item.scale_min);
        }
    });
    return {mean_by_value(system, options.subject_id, Tool::self_report, logs), std::move(logs)};
}

AdministrationResult run_valuebench(std::span<const InventoryItem> items, const ValueSystem& system,
                                    backend::Backend& subject, backend::Backend& evaluator,
                                    const AdministerOptions& options) {
    check_items(items, system);
    std::vector<ItemLog> logs(items.size());
    parallel_for(items.size(), subject.concurrency_limit(), [&](std::size_t i) {
        const auto& item = items[i];
        auto& log = logs[i];
        log.item_id = item.item_id;
        log.value_name = item.value_name;

        backend::ChatRequest ask;
        ask.model = options.model;
        ask.user_prompt = item.text;
        ask.max_tokens = 512;
        log.subject_answer = subject.complete(ask);

        backend::ChatRequest rate;
        rate.model = options.evaluator_model;
        rate.user_prompt = evaluator_prompt(item.text, log.subject_answer);
        rate.max_tokens = 16;
        log.reply = evaluator.complete(rate);
        if (auto r = first_number_in_range(log.reply, 0.0, 10.0)) {
            log.raw = *r;
            log.score = item.reverse_scored ? reverse_valuebench(*r) : *r;
        }
    });
    return {mean_by_value(system, options.subject_id, Tool::valuebench, logs), std::move(logs)};
}

// ---------------------------------------------------------------------------

Lexicon load_lexicon(const std::filesystem::path& path) {
    Lexicon lex;
    std::map<std::string, std::size_t> index;
    for (const auto& rec : records::read_records(path)) {
        const auto& value = rec.require("value");
        auto word = rec.require("word");
        std::transform(word.begin(), word.end(), word.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        if (word.empty() || word == "*") rec.fail("empty lexicon word");
        auto [it, inserted] = index.emplace(value, lex.entries.size());
        if (inserted) lex.entries.push_back({value, {}});
        lex.entries[it->second].second.push_back(word);
    }
    if (lex.entries.empty()) throw ValidationError(path.string() + ": lexicon is empty");
    return lex;
}

std::vector<std::string> lexicon_words(std::string_view text) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : text) {
        if (std::isalnum(static_cast<unsigned char>(c)) || c == '\'') {
            cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

bool pattern_matches(std::string_view pattern, std::string_view word) {
    if (!pattern.empty() && pattern.back() == '*') return word.starts_with(pattern.substr(0, pattern.size() - 1));
    return pattern == word;
}

DictionaryCounts dictionary_counts(std::string_view text, const Lexicon& lexicon) {
    DictionaryCounts c;
    c.matches.assign(lexicon.entries.size(), 0);
    for (const auto& word : lexicon_words(text)) {
        ++c.words;
        for (std::size_t v = 0; v < lexicon.entries.size(); ++v) {
            const auto& patterns = lexicon.entries[v].second;
            if (std::any_of(patterns.begin(), patterns.end(), [&](const std::string& p) { return pattern_matches(p, word); })) {
                ++c.matches[v];
            }
        }
    }
    return c;
}

ValueVector dictionary_score(const SubjectRecord& record, const Lexicon& lexicon, const ValueSystem& system) {
    const auto counts = dictionary_counts(record.text, lexicon);
    auto v = ValueVector::for_system(record.subject_id, system, Tool::dictionary);
    for (std::size_t i = 0; i < lexicon.entries.size(); ++i) {
        const auto& name = lexicon.entries[i].first;
        if (!system.find(name)) continue;
        const double rate = counts.words == 0 ? 0.0
                                              : 1000.0 * static_cast<double>(counts.matches[i]) / static_cast<double>(counts.words);
        v.set(name, rate);
    }
    return v;
}

std::vector<ValueVector> dictionary_score_batch(std::span<const SubjectRecord> records, const Lexicon& lexicon,
                                                const ValueSystem& system) {
    std::vector<ValueVector> out(records.size());
    const auto n = static_cast<std::ptrdiff_t>(records.size());
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        out[static_cast<std::size_t>(i)] = dictionary_score(records[static_cast<std::size_t>(i)], lexicon, system);
    }
    return out;
}

}  // namespace gpv::baselines
