#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gpv/backend.hpp"
#include "gpv/core.hpp"

namespace gpv::baselines {

struct InventoryItem {
    std::string item_id;
    std::string text;
    std::string value_name;
    bool reverse_scored = false;
    int scale_min = 1;
    int scale_max = 5;

    bool operator==(const InventoryItem&) const = default;
};

/// Records {item_id, text, value, reverse, scale_min, scale_max}; reverse and the
/// scale bounds are optional (false, 1, 5). Errors carry file and line.
std::vector<InventoryItem> load_inventory(const std::filesystem::path& path);

/// What happened to one administered item.
struct ItemLog {
    std::string item_id;
    std::string value_name;
    std::string reply;              // self-report reply, or the evaluator reply
    std::string subject_answer;     // ValueBench only
    std::optional<double> raw;      // parsed rating before reversal
    std::optional<double> score;    // after reversal (and normalization for self-report)

    bool operator==(const ItemLog&) const = default;
};

struct AdministrationResult {
    ValueVector vector;
    std::vector<ItemLog> items;
};

/// First integer in `reply` that is not part of a word or a decimal number;
/// nullopt when there is none or it falls outside [lo, hi].
std::optional<int> first_integer_in_range(std::string_view reply, int lo, int hi);
/// First number (integer or decimal) in `reply`; nullopt when absent or outside [lo, hi].
std::optional<double> first_number_in_range(std::string_view reply, double lo, double hi);

int reverse_likert(int rating, int scale_min, int scale_max);
double reverse_valuebench(double rating);

std::string self_report_prompt(const InventoryItem& item);
std::string evaluator_prompt(std::string_view question, std::string_view answer);

struct AdministerOptions {
    std::string subject_id;
    std::string model;            // model under assessment
    std::string evaluator_model;  // ValueBench evaluator
};

/// Likert administration. Each item's effective rating is mapped to [0, 1] on its
/// own scale, then averaged per value.
AdministrationResult run_self_report(std::span<const InventoryItem> items, const ValueSystem& system,
                                     backend::Backend& subject, const AdministerOptions& options);

/// Free-form answers rated 0..10 for leaning toward "yes" by an evaluator; reverse
/// items map r -> 10 - r; per-value mean.
AdministrationResult run_valuebench(std::span<const InventoryItem> items, const ValueSystem& system,
                                    backend::Backend& subject, backend::Backend& evaluator,
                                    const AdministerOptions& options);

// ---------------------------------------------------------------------------
// Dictionary scoring

/// value name -> lowercase whole-word patterns; a trailing '*' matches any suffix.
struct Lexicon {
    std::vector<std::pair<std::string, std::vector<std::string>>> entries;
};

/// Records {value, word}.
Lexicon load_lexicon(const std::filesystem::path& path);

/// Lowercased runs of letters, digits and apostrophes.
std::vector<std::string> lexicon_words(std::string_view text);

bool pattern_matches(std::string_view pattern, std::string_view word);

struct DictionaryCounts {
    std::size_t words = 0;
    std::vector<std::size_t> matches;  // parallel to Lexicon::entries
};

DictionaryCounts dictionary_counts(std::string_view text, const Lexicon& lexicon);

/// Matches per 1000 words for every lexicon value present in `system`; zero-word texts score 0.
ValueVector dictionary_score(const SubjectRecord& record, const Lexicon& lexicon, const ValueSystem& system);

/// dictionary_score over a batch, parallel over records.
std::vector<ValueVector> dictionary_score_batch(std::span<const SubjectRecord> records, const Lexicon& lexicon,
                                                const ValueSystem& system);

namespace reference {
/// dictionary_score_batch on one thread.
std::vector<ValueVector> dictionary_score_batch(std::span<const SubjectRecord> records, const Lexicon& lexicon,
                                                const ValueSystem& system);
}  // namespace reference

}  // namespace gpv::baselines
