#include "gpv/prompts.hpp"

namespace gpv::prompts {

namespace detail {
std::string_view asset_relevance();
std::string_view asset_valence();
std::string_view asset_parse_perceptions();
std::string_view asset_generate_questions();
std::string_view asset_self_report_likert();
std::string_view asset_valuebench_evaluator();
}  // namespace detail

std::string_view relevance() { return detail::asset_relevance(); }
std::string_view valence() { return detail::asset_valence(); }
std::string_view parse_perceptions() { return detail::asset_parse_perceptions(); }
std::string_view generate_questions() { return detail::asset_generate_questions(); }
std::string_view self_report_likert() { return detail::asset_self_report_likert(); }
std::string_view valuebench_evaluator() { return detail::asset_valuebench_evaluator(); }

std::span<const std::pair<std::string_view, std::string_view>> all() {
    static const std::pair<std::string_view, std::string_view> table[] = {
        {"relevance.txt", detail::asset_relevance()},
        {"valence.txt", detail::asset_valence()},
        {"parse_perceptions.txt", detail::asset_parse_perceptions()},
        {"generate_questions.txt", detail::asset_generate_questions()},
        {"self_report_likert.txt", detail::asset_self_report_likert()},
        {"valuebench_evaluator.txt", detail::asset_valuebench_evaluator()},
    };
    return table;
}

std::string fill(std::string_view tmpl,
                 std::initializer_list<std::pair<std::string_view, std::string_view>> values) {
    std::string out;
    out.reserve(tmpl.size());
    std::size_t i = 0;
    while (i < tmpl.size()) {
        if (tmpl[i] == '{') {
            bool replaced = false;
            for (const auto& [key, value] : values) {
                const std::size_t end = i + 1 + key.size();
                if (end < tmpl.size() && tmpl[end] == '}' && tmpl.substr(i + 1, key.size()) == key) {
                    out.append(value);
                    i = end + 1;
                    replaced = true;
                    break;
                }
            }
            if (replaced) continue;
        }
        out.push_back(tmpl[i]);
        ++i;
    }
    return out;
}

}  // namespace gpv::prompts
