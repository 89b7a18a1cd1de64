#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>

#include "gpv/backend.hpp"
#include "gpv/error.hpp"
#include "gpv/prompts.hpp"

namespace gpv::backend {

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

// Whole-word occurrence of `needle` in `hay`; both lowercase.
bool contains_word(std::string_view hay, std::string_view needle) {
    if (needle.empty()) return false;
    for (auto pos = hay.find(needle); pos != std::string_view::npos; pos = hay.find(needle, pos + 1)) {
        const bool left = pos == 0 || !is_alnum(hay[pos - 1]);
        const auto end = pos + needle.size();
        const bool right = end == hay.size() || !is_alnum(hay[end]);
        if (left && right) return true;
    }
    return false;
}

std::size_t count_word(std::string_view hay, std::string_view needle) {
    std::size_t n = 0;
    for (auto pos = hay.find(needle); pos != std::string_view::npos; pos = hay.find(needle, pos + 1)) {
        const bool left = pos == 0 || !is_alnum(hay[pos - 1]);
        const auto end = pos + needle.size();
        const bool right = end == hay.size() || !is_alnum(hay[end]);
        if (left && right) ++n;
    }
    return n;
}

// Inverts prompts::fill(): matches `text` against `tmpl` and recovers placeholder values.
std::optional<std::map<std::string, std::string>> match_template(std::string_view tmpl, std::string_view text) {
    std::vector<std::string_view> literals;
    std::vector<std::string_view> names;
    std::size_t i = 0;
    std::size_t lit_start = 0;
    while (i < tmpl.size()) {
        if (tmpl[i] == '{') {
            const auto close = tmpl.find('}', i);
            const auto name = tmpl.substr(i + 1, close == std::string_view::npos ? 0 : close - i - 1);
            if (close != std::string_view::npos && !name.empty() &&
                std::all_of(name.begin(), name.end(), [](char c) { return c == '_' || std::islower(static_cast<unsigned char>(c)); })) {
                literals.push_back(tmpl.substr(lit_start, i - lit_start));
                names.push_back(name);
                i = close + 1;
                lit_start = i;
                continue;
            }
        }
        ++i;
    }
    literals.push_back(tmpl.substr(lit_start));

    if (!text.starts_with(literals.front())) return std::nullopt;
    std::map<std::string, std::string> out;
    std::size_t pos = literals.front().size();
    for (std::size_t k = 0; k < names.size(); ++k) {
        const auto& next = literals[k + 1];
        std::size_t end;
        if (k + 1 == names.size()) {
            if (!text.ends_with(next) || text.size() - next.size() < pos) return std::nullopt;
            end = text.size() - next.size();
        } else {
            end = next.empty() ? pos : text.find(next, pos);
            if (end == std::string_view::npos) return std::nullopt;
        }
        out[std::string(names[k])] = std::string(text.substr(pos, end - pos));
        pos = end + next.size();
    }
    if (names.empty() && text != tmpl) return std::nullopt;
    return out;
}

std::vector<std::string> sentences(std::string_view text) {
    std::vector<std::string> out;
    std::string cur;
    auto flush = [&] {
        const auto b = cur.find_first_not_of(" \t\r\n");
        if (b != std::string::npos) {
            const auto e = cur.find_last_not_of(" \t\r\n");
            out.push_back(cur.substr(b, e - b + 1));
        }
        cur.clear();
    };
    for (std::size_t i = 0; i < text.size(); ++i) {
        cur.push_back(text[i]);
        const char c = text[i];
        if ((c == '.' || c == '!' || c == '?') && (i + 1 == text.size() || std::isspace(static_cast<unsigned char>(text[i + 1])))) {
            flush();
        } else if (c == '\n' && i + 1 < text.size() && text[i + 1] == '\n') {
            flush();
        }
    }
    flush();
    return out;
}

ChatResponse labelled(std::vector<std::pair<std::string, double>> probs, bool emit) {
    ChatResponse r;
    r.text = std::max_element(probs.begin(), probs.end(), [](auto& a, auto& b) { return a.second < b.second; })->first;
    if (emit) {
        for (const auto& [label, p] : probs) r.first_token_logprobs.push_back({label, std::log(p)});
    }
    return r;
}

}  // namespace

OracleConfig oracle_config_for(std::span<const std::string> value_names) {
    OracleConfig cfg;
    for (const auto& name : value_names) cfg.keywords.push_back({name, {lower(name)}});
    return cfg;
}

RuleOracleBackend::RuleOracleBackend(OracleConfig config) : Backend(64), config_(std::move(config)) {
    for (auto& [name, words] : config_.keywords) {
        for (auto& w : words) w = lower(w);
    }
    for (auto& w : config_.support_markers) w = lower(w);
    for (auto& w : config_.oppose_markers) w = lower(w);
}

bool RuleOracleBackend::mentions(std::string_view sentence, std::string_view value) const {
    const auto hay = lower(sentence);
    for (const auto& [name, words] : config_.keywords) {
        if (name != value) continue;
        return std::any_of(words.begin(), words.end(), [&](const std::string& w) { return contains_word(hay, w); });
    }
    return contains_word(hay, lower(value));
}

int RuleOracleBackend::marker_balance(std::string_view sentence) const {
    const auto hay = lower(sentence);
    long balance = 0;
    for (const auto& m : config_.support_markers) balance += static_cast<long>(count_word(hay, m));
    for (const auto& m : config_.oppose_markers) balance -= static_cast<long>(count_word(hay, m));
    return balance > 0 ? 1 : (balance < 0 ? -1 : 0);
}

ChatResponse RuleOracleBackend::relevance(std::string_view sentence, std::string_view value) const {
    const double yes = mentions(sentence, value) ? config_.relevant_yes : config_.irrelevant_yes;
    return labelled({{"yes", yes}, {"no", 1.0 - yes}}, config_.emit_logprobs);
}

ChatResponse RuleOracleBackend::valence(std::string_view sentence, std::string_view value) const {
    const double rest = (1.0 - config_.polar_mass) / 2.0;
    const int balance = mentions(sentence, value) ? marker_balance(sentence) : 0;
    if (balance > 0) return labelled({{"support", config_.polar_mass}, {"oppose", rest}, {"either", rest}}, config_.emit_logprobs);
    if (balance < 0) return labelled({{"support", rest}, {"oppose", config_.polar_mass}, {"either", rest}}, config_.emit_logprobs);
    const double side = (1.0 - config_.neutral_either) / 2.0;
    return labelled({{"support", side}, {"oppose", side}, {"either", config_.neutral_either}}, config_.emit_logprobs);
}

ChatResponse RuleOracleBackend::parse(std::string_view chunk) const {
    json payload = {{"perceptions", sentences(chunk)}};
    return {payload.dump(), {}};
}

ChatResponse RuleOracleBackend::questions(std::string_view user_turn) const {
    std::string name(user_turn.substr(0, user_turn.find(": ")));
    json qs = json::array();
    const char* frames[] = {
        "A close friend asks you to choose between {v} and a safer option. What do you do and why?",
        "Your team is split on a plan that puts {v} at stake. How would you advise them?",
        "You can gain a large reward by setting {v} aside for a year. Would you accept? Explain.",
        "Two people you respect disagree about how much {v} matters. Whose side do you take and why?",
        "A rule at work conflicts with {v}. Describe how you would handle the situation.",
    };
    for (const char* f : frames) qs.push_back(prompts::fill(f, {{"v", name}}));
    json payload = {{"value", name}, {"questions", qs}};
    return {payload.dump(2), {}};
}

ChatResponse RuleOracleBackend::answer(std::string_view question) const {
    for (const auto& [value, stance] : config_.subject_stance) {
        if (!mentions(question, value)) continue;
        if (stance > 0) return {"Yes. I cherish " + value + " and I would act to protect it.", {}};
        if (stance < 0) return {"No. I reject " + value + " as a priority here.", {}};
    }
    return {"I would weigh the options carefully before deciding.", {}};
}

ChatResponse RuleOracleBackend::likert(std::string_view prompt) const {
    auto fields = match_template(prompts::self_report_likert(), prompt);
    const int lo = std::stoi(fields->at("scale_min"));
    const int hi = std::stoi(fields->at("scale_max"));
    const auto& item = fields->at("item");
    for (const auto& [value, stance] : config_.subject_stance) {
        if (!mentions(item, value)) continue;
        const int base = stance > 0 ? hi : (stance < 0 ? lo : (lo + hi) / 2);
        // Items phrased against the value (oppose markers) flip the agreement.
        const int rating = marker_balance(item) < 0 ? lo + hi - base : base;
        return {std::to_string(rating), {}};
    }
    return {"I cannot answer that.", {}};
}

ChatResponse RuleOracleBackend::evaluate(std::string_view prompt) const {
    auto fields = match_template(prompts::valuebench_evaluator(), prompt);
    const int balance = marker_balance(fields->at("answer"));
    return {balance > 0 ? "10" : (balance < 0 ? "0" : "5"), {}};
}

ChatResponse RuleOracleBackend::do_generate(const ChatRequest& request) {
    const std::string_view user = request.user_prompt;
    if (request.system_prompt == prompts::generate_questions()) return questions(user);
    if (auto f = match_template(prompts::relevance(), user)) return relevance(f->at("sentence"), f->at("value"));
    if (auto f = match_template(prompts::valence(), user)) return valence(f->at("sentence"), f->at("value"));
    if (user.starts_with(prompts::parse_perceptions())) {
        auto rest = user.substr(prompts::parse_perceptions().size());
        const auto open = rest.find("Text: \"");
        const auto close = rest.rfind('"');
        if (open == std::string_view::npos || close == std::string_view::npos || close < open + 7) {
            return {"I could not find the text.", {}};
        }
        return parse(rest.substr(open + 7, close - open - 7));
    }
    if (match_template(prompts::self_report_likert(), user)) return likert(user);
    if (match_template(prompts::valuebench_evaluator(), user)) return evaluate(user);
    return answer(user);
}

}  // namespace gpv::backend
