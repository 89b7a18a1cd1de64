// Writes replay fixtures for the ValueBench regression cells. Each subject model
// answers the inventory items and an evaluator rating is recorded against the
// exact request digests run_valuebench issues, so the committed fixture replays
// bit-for-bit.
//
//   make_valuebench_fixture <inventory> <out.jsonl> <model> <rating>...

#include <cstdio>
#include <string>
#include <vector>

#include "gpv/backend.hpp"
#include "gpv/baselines.hpp"
#include "gpv/records.hpp"

using namespace gpv;

int main(int argc, char** argv) {
    if (argc < 5) {
        std::fprintf(stderr, "usage: %s <inventory> <out.jsonl> <model> <rating>...\n", argv[0]);
        return 1;
    }
    const auto items = baselines::load_inventory(argv[1]);
    const std::string model = argv[3];
    if (static_cast<std::size_t>(argc - 4) != items.size()) {
        std::fprintf(stderr, "need one rating per item (%zu)\n", items.size());
        return 1;
    }
    std::vector<json> rows;
    auto record = [&](const backend::ChatRequest& req, const std::string& text) {
        backend::CacheEntry e;
        e.request_digest = backend::request_digest(req);
        e.backend_id = "fixture";
        e.key = backend::cache_key(e.backend_id, e.request_digest);
        e.response.text = text;
        e.timestamp = "2024-01-01T00:00:00Z";
        rows.push_back(backend::cache_entry_json(e));
    };
    for (std::size_t i = 0; i < items.size(); ++i) {
        backend::ChatRequest ask;
        ask.model = model;
        ask.user_prompt = items[i].text;
        ask.max_tokens = 512;
        const std::string answer = "Answer from " + model + " to item " + items[i].item_id + ".";
        record(ask, answer);

        backend::ChatRequest rate;
        rate.model = "evaluator";
        rate.user_prompt = baselines::evaluator_prompt(items[i].text, answer);
        rate.max_tokens = 16;
        record(rate, argv[4 + i]);
    }
    records::write_jsonl(argv[2], rows);
    return 0;
}
