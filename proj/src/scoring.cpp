#include "gpv/scoring.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <tuple>

#include <spdlog/spdlog.h>

#include "gpv/parallel.hpp"
#include "gpv/prompts.hpp"

namespace gpv::scoring {

namespace {

backend::ChatRequest label_request(const std::string& model, std::string prompt,
                                   const std::vector<std::string>& labels) {
    backend::ChatRequest r;
    r.model = model;
    r.user_prompt = std::move(prompt);
    r.max_tokens = 4;
    r.want_label_probs = labels;
    return r;
}

}  // namespace

std::string relevance_prompt(std::string_view sentence, std::string_view value) {
    return prompts::fill(prompts::relevance(), {{"sentence", sentence}, {"value", value}});
}

std::string valence_prompt(std::string_view sentence, std::string_view value) {
    return prompts::fill(prompts::valence(), {{"sentence", sentence}, {"value", value}});
}

double score_relevance(const ValueDef& value, const perception::Perception& p, backend::Backend& backend,
                       const std::string& model) {
    return backend.label_probs(label_request(model, relevance_prompt(p.text, value.name), kRelevanceLabels)).prob("yes");
}

backend::LabelDistribution score_valence(const ValueDef& value, const perception::Perception& p,
                                         backend::Backend& backend, const std::string& model) {
    return backend.label_probs(label_request(model, valence_prompt(p.text, value.name), kValenceLabels));
}

std::optional<double> compute_w(double relevance, const backend::LabelDistribution& valence) {
    if (!(relevance > kRelevanceThreshold)) return std::nullopt;
    const auto top = valence.strict_argmax();
    if (!top || (*top != "support" && *top != "oppose")) return std::nullopt;
    return valence.prob("support") - valence.prob("oppose");
}

std::vector<PerceptionScore> score_perception(const ValueSystem& system, const perception::Perception& p,
                                              backend::Backend& backend, const std::string& model) {
    std::vector<PerceptionScore> out;
    out.reserve(system.size());
    for (const auto& value : system.values()) {
        PerceptionScore s{p.subject_id, value.name, p.chunk_index, p.ordinal, {}, {}, {}, {}};
        try {
            s.relevance = score_relevance(value, p, backend, model);
            s.valence = score_valence(value, p, backend, model);
            s.w = compute_w(*s.relevance, *s.valence);
        } catch (const UnparseableLabelError& e) {
            s.error = e.what();
        } catch (const BackendError&) {
            throw;
        } catch (const ValidationError& e) {
            s.error = e.what();
        }
        if (s.error) spdlog::warn("{}#{}.{} / {}: {}", p.subject_id, p.chunk_index, p.ordinal, value.name, *s.error);
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<PerceptionScore> score_perceptions(const ValueSystem& system,
                                               std::span<const perception::Perception> perceptions,
                                               backend::Backend& backend, const std::string& model) {
    std::vector<std::vector<PerceptionScore>> parts(perceptions.size());
    parallel_for(perceptions.size(), backend.concurrency_limit(),
                 [&](std::size_t i) { parts[i] = score_perception(system, perceptions[i], backend, model); });
    std::vector<PerceptionScore> out;
    out.reserve(perceptions.size() * system.size());
    for (auto& p : parts) std::move(p.begin(), p.end(), std::back_inserter(out));
    return out;
}

ValueVector aggregate_subject(std::span<const PerceptionScore> scores, const ValueSystem& system,
                              std::string subject_id) {
    for (const auto& s : scores) {
        if (subject_id.empty()) subject_id = s.subject_id;
        if (s.subject_id != subject_id) {
            throw ScoringError("cannot aggregate scores of subjects '" + subject_id + "' and '" + s.subject_id + "' together");
        }
    }
    std::vector<const PerceptionScore*> sorted;
    for (const auto& s : scores) sorted.push_back(&s);
    std::stable_sort(sorted.begin(), sorted.end(), [](const PerceptionScore* a, const PerceptionScore* b) {
        return std::tie(a->chunk_index, a->ordinal) < std::tie(b->chunk_index, b->ordinal);
    });

    std::vector<double> sum(system.size(), 0.0);
    std::vector<std::size_t> count(system.size(), 0);
    for (const auto* s : sorted) {
        if (!s->w) continue;
        auto idx = system.index_of(s->value_name);
        if (!idx) throw ScoringError("score for value '" + s->value_name + "' outside system " + system.name());
        sum[*idx] += *s->w;
        ++count[*idx];
    }
    auto v = ValueVector::for_system(subject_id, system, Tool::gpv);
    for (std::size_t i = 0; i < system.size(); ++i) {
        if (count[i] == 0) continue;
        // Means of values in [-1, 1] can drift past the bound by an ulp.
        v.set(system.values()[i].name, std::clamp(sum[i] / static_cast<double>(count[i]), -1.0, 1.0));
    }
    return v;
}

std::vector<ValueVector> aggregate_batch(std::span<const PerceptionScore> scores, const ValueSystem& system,
                                         std::span<const std::string> subject_ids) {
    std::map<std::string, std::vector<PerceptionScore>> by_subject;
    for (const auto& s : scores) by_subject[s.subject_id].push_back(s);
    std::vector<ValueVector> out;
    for (const auto& id : subject_ids) {
        auto it = by_subject.find(id);
        out.push_back(it == by_subject.end() ? aggregate_subject({}, system, id)
                                             : aggregate_subject(it->second, system, id));
    }
    return out;
}

Measurement measure_subject(const SubjectRecord& record, const ValueSystem& system, backend::Backend& backend,
                            const MeasureOptions& options) {
    if (record.text.find_first_not_of(" \t\r\n") == std::string::npos) {
        throw ValidationError("subject '" + record.subject_id + "' has empty text");
    }
    Measurement m;
    m.chunks = ingest::chunk_text(record.text, options.chunk_tokens, record.subject_id);
    m.parsed = perception::parse_chunks(m.chunks, backend, options.model);
    m.scores = score_perceptions(system, m.parsed.perceptions, backend, options.model);
    m.vector = aggregate_subject(m.scores, system, record.subject_id);
    return m;
}

}  // namespace gpv::scoring
