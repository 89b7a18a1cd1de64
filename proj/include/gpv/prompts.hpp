#pragma once

#include <initializer_list>
#include <span>
#include <string>
#include <string_view>
#include <utility>

namespace gpv::prompts {

// Template texts, embedded byte-for-byte from assets/prompts/ at build time.

/// Relevance rating of a sentence with respect to a value; placeholders {sentence}, {value}.
std::string_view relevance();
/// Support / oppose / either rating; placeholders {sentence}, {value}.
std::string_view valence();
/// Perception parsing instructions with one worked example. The chunk is appended after it.
std::string_view parse_perceptions();
/// System prompt for generating value-eliciting questions.
std::string_view generate_questions();
/// Likert self-report instruction; placeholders {scale_min}, {scale_max}, {item}.
std::string_view self_report_likert();
/// Evaluator rating of how much an answer leans toward "yes"; placeholders {question}, {answer}.
std::string_view valuebench_evaluator();

/// Asset file name for each template, relative to assets/prompts/.
std::span<const std::pair<std::string_view, std::string_view>> all();

/// Single left-to-right pass replacing `{key}` with its value. Text coming
/// from a substitution is never rescanned, and unknown braces are left alone.
std::string fill(std::string_view tmpl,
                 std::initializer_list<std::pair<std::string_view, std::string_view>> values);

}  // namespace gpv::prompts
