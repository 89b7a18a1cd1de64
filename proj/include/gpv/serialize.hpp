#pragma once

#include "gpv/analysis.hpp"
#include "gpv/backend.hpp"
#include "gpv/baselines.hpp"
#include "gpv/core.hpp"
#include "gpv/ingest.hpp"
#include "gpv/perception.hpp"
#include "gpv/probe.hpp"
#include "gpv/records.hpp"
#include "gpv/scoring.hpp"

// JSON forms of every persisted type. Absent scores are null; an unbounded
// range end is null. Loaders throw ValidationError on schema violations.
namespace gpv::serialize {

json to_json(const ValueSystem& s);
ValueSystem value_system_from_json(const json& j);

json to_json(const SubjectRecord& r);
SubjectRecord subject_from_json(const json& j);

json to_json(const ValueVector& v);
ValueVector value_vector_from_json(const json& j);

json to_json(const ingest::Chunk& c);
ingest::Chunk chunk_from_json(const json& j);

json to_json(const perception::Perception& p);
perception::Perception perception_from_json(const json& j);

json to_json(const perception::SkipRecord& s);
perception::SkipRecord skip_from_json(const json& j);

json to_json(const perception::ElicitationSet& e);
perception::ElicitationSet elicitation_from_json(const json& j);

json to_json(const backend::LabelDistribution& d);
backend::LabelDistribution distribution_from_json(const json& j);

json to_json(const scoring::PerceptionScore& s);
scoring::PerceptionScore score_from_json(const json& j);

json to_json(const baselines::ItemLog& l);
baselines::ItemLog item_log_from_json(const json& j);

json to_json(const analysis::Matrix& m);
analysis::Matrix matrix_from_json(const json& j);

json to_json(const analysis::Embedding& e);
analysis::Embedding embedding_from_json(const json& j);

json to_json(const analysis::StabilityTable& t);
analysis::StabilityTable stability_from_json(const json& j);

json to_json(const probe::ExperimentReport& r);

/// One JSON row per element.
template <typename T>
std::vector<json> to_rows(std::span<const T> items) {
    std::vector<json> rows;
    rows.reserve(items.size());
    for (const auto& x : items) rows.push_back(to_json(x));
    return rows;
}

template <typename T, typename Load>
std::vector<T> from_rows(const std::vector<json>& rows, Load load) {
    std::vector<T> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(load(r));
    return out;
}

}  // namespace gpv::serialize
