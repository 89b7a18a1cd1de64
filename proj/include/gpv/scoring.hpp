#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gpv/backend.hpp"
#include "gpv/core.hpp"
#include "gpv/ingest.hpp"
#include "gpv/perception.hpp"

namespace gpv::scoring {

inline const std::vector<std::string> kRelevanceLabels{"yes", "no"};
inline const std::vector<std::string> kValenceLabels{"support", "oppose", "either"};

/// Relevance gate: a perception counts toward a value only above this probability.
inline constexpr double kRelevanceThreshold = 0.5;

class ScoringError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

/// Measurement of one (value, perception) pair. `w` is present exactly when
/// relevance > 0.5 and valence has a strict argmax of support or oppose.
/// `error` records why a pair was left unmeasured by a backend failure.
struct PerceptionScore {
    std::string subject_id;
    std::string value_name;
    std::size_t chunk_index = 0;
    std::size_t ordinal = 0;
    std::optional<double> relevance;
    std::optional<backend::LabelDistribution> valence;
    std::optional<double> w;
    std::optional<std::string> error;

    bool operator==(const PerceptionScore&) const = default;
};

std::string relevance_prompt(std::string_view sentence, std::string_view value);
std::string valence_prompt(std::string_view sentence, std::string_view value);

/// p(yes) over {yes, no}.
double score_relevance(const ValueDef& value, const perception::Perception& p, backend::Backend& backend,
                       const std::string& model);
/// Distribution over {support, oppose, either}.
backend::LabelDistribution score_valence(const ValueDef& value, const perception::Perception& p,
                                         backend::Backend& backend, const std::string& model);

std::optional<double> compute_w(double relevance, const backend::LabelDistribution& valence);

/// One score per value of `system`, in system order. Label-parsing failures leave
/// that pair unmeasured; transport failures and replay misses propagate.
std::vector<PerceptionScore> score_perception(const ValueSystem& system, const perception::Perception& p,
                                              backend::Backend& backend, const std::string& model);

/// All (value, perception) pairs, scored concurrently under the backend limit.
/// Output order: perceptions in input order, values in system order.
std::vector<PerceptionScore> score_perceptions(const ValueSystem& system,
                                               std::span<const perception::Perception> perceptions,
                                               backend::Backend& backend, const std::string& model);

/// Per value, the mean of measured w. Scores are summed in (chunk, ordinal) order
/// so the result does not depend on input order. Throws ScoringError when scores
/// name more than one subject or differ from a non-empty `subject_id`.
ValueVector aggregate_subject(std::span<const PerceptionScore> scores, const ValueSystem& system,
                              std::string subject_id = {});

/// aggregate_subject for each listed subject (subjects without scores get an all-absent vector).
std::vector<ValueVector> aggregate_batch(std::span<const PerceptionScore> scores, const ValueSystem& system,
                                         std::span<const std::string> subject_ids);

struct MeasureOptions {
    std::string model;
    std::size_t chunk_tokens = ingest::kDefaultChunkTokens;
};

/// Every intermediate of one end-to-end measurement.
struct Measurement {
    std::vector<ingest::Chunk> chunks;
    perception::ParseResult parsed;
    std::vector<PerceptionScore> scores;
    ValueVector vector;
};

/// chunk -> parse -> score -> aggregate for one subject. Throws ValidationError on empty text.
Measurement measure_subject(const SubjectRecord& record, const ValueSystem& system, backend::Backend& backend,
                            const MeasureOptions& options);

}  // namespace gpv::scoring
