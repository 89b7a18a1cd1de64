#include "gpv/baselines.hpp"
#include "gpv/error.hpp"
#include "gpv/ingest.hpp"

namespace gpv::ingest::reference {

std::vector<Chunk> chunk_corpus(std::span<const SubjectRecord> records, std::size_t max_tokens) {
    if (max_tokens == 0) throw ValidationError("chunk size must be at least 1 token");
    std::vector<Chunk> out;
    for (const auto& r : records) {
        auto chunks = chunk_text(r.text, max_tokens, r.subject_id);
        std::move(chunks.begin(), chunks.end(), std::back_inserter(out));
    }
    return out;
}

}  // namespace gpv::ingest::reference

namespace gpv::baselines::reference {

std::vector<ValueVector> dictionary_score_batch(std::span<const SubjectRecord> records, const Lexicon& lexicon,
                                                const ValueSystem& system) {
    std::vector<ValueVector> out;
    for (const auto& r : records) out.push_back(dictionary_score(r, lexicon, system));
    return out;
}

}  // namespace gpv::baselines::reference
