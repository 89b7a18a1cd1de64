#include <doctest.h>

#include <algorithm>
#include <mutex>

#include "gpv/backend.hpp"
#include "gpv/ingest.hpp"
#include "gpv/perception.hpp"
#include "gpv/prompts.hpp"
#include "oracles.hpp"

using namespace gpv;
using namespace gpv::perception;
using backend::ChatRequest;

namespace {

ingest::Chunk chunk(std::string subject, std::size_t index, std::string text) {
    ingest::Chunk c;
    c.subject_id = std::move(subject);
    c.chunk_index = index;
    c.token_count = ingest::count_tokens(text);
    c.text = std::move(text);
    return c;
}

bool has_retry_suffix(const ChatRequest& r) {
    return r.user_prompt.size() >= kJsonOnlyInstruction.size() &&
           r.user_prompt.compare(r.user_prompt.size() - kJsonOnlyInstruction.size(), kJsonOnlyInstruction.size(),
                                 kJsonOnlyInstruction) == 0;
}

}  // namespace

TEST_CASE("json objects are extracted from chatty replies") {
    CHECK(extract_json_object("Sure! {\"perceptions\": [\"a\"]} done")->at("perceptions")[0] == "a");
    CHECK(extract_json_object("{\"t\": \"brace } inside\", \"n\": {\"x\": 1}}")->at("n")["x"] == 1);
    CHECK(extract_json_object("{not json} then {\"ok\": true}")->at("ok") == true);
    CHECK(extract_json_object("{\"s\": \"escaped \\\" quote }\"}")->at("s") == "escaped \" quote }");
    CHECK_FALSE(extract_json_object("no braces").has_value());
    CHECK_FALSE(extract_json_object("{\"open\": ").has_value());
}

TEST_CASE("payloads yield trimmed non-empty perceptions") {
    auto p = perceptions_from_payload(json::parse(R"({"perceptions": ["  one ", "", "two", "   "]})"));
    REQUIRE(p);
    CHECK(*p == std::vector<std::string>{"one", "two"});
    CHECK(perceptions_from_payload(json::parse(R"({"perceptions": []})"))->empty());
    CHECK_FALSE(perceptions_from_payload(json::parse(R"({"perceptions": "one"})")));
    CHECK_FALSE(perceptions_from_payload(json::parse(R"({"perceptions": ["a", 3]})")));
    CHECK_FALSE(perceptions_from_payload(json::parse(R"({"items": ["a"]})")));
}

TEST_CASE("parse prompt appends the chunk after the template") {
    const auto p = parse_prompt("I love my dog.");
    CHECK(p.rfind(std::string(prompts::parse_perceptions()), 0) == 0);
    CHECK(p.find("Text: \"I love my dog.\"") != std::string::npos);
}

TEST_CASE("a malformed reply is retried once with a JSON-only instruction") {
    std::size_t calls = 0;
    oracle::ScriptedBackend b([&](const ChatRequest& r) {
        ++calls;
        if (!has_retry_suffix(r)) return oracle::text("I think the perceptions are: family matters.");
        return oracle::text(R"({"perceptions": ["Family matters to the author."]})");
    });
    const auto res = parse_chunk(chunk("s", 0, "Family matters."), b, "m");
    CHECK(calls == 2);
    REQUIRE(res.perceptions.size() == 1);
    CHECK(res.perceptions[0].text == "Family matters to the author.");
    CHECK(res.skipped.empty());
}

TEST_CASE("a chunk that stays malformed is skipped with its raw reply") {
    oracle::ScriptedBackend b([](const ChatRequest&) { return oracle::text("nope"); });
    const auto res = parse_chunk(chunk("s", 3, "Something."), b, "m");
    CHECK(res.perceptions.empty());
    REQUIRE(res.skipped.size() == 1);
    CHECK(res.skipped[0].chunk_index == 3);
    CHECK(res.skipped[0].raw_response == "nope");
    CHECK(b.calls() == 2);
    CHECK_THROWS_AS(parse_chunk(chunk("s", 0, "   "), b, "m"), ValidationError);
}

TEST_CASE("parallel parsing output is ordered regardless of completion order") {
    std::vector<ingest::Chunk> chunks;
    for (int s = 3; s >= 0; --s)
        for (std::size_t k = 0; k < 5; ++k) chunks.push_back(chunk("subj" + std::to_string(s), k, "Text " + std::to_string(k) + "."));
    oracle::ScriptedBackend b(
        [](const ChatRequest& r) {
            // Reply carries two perceptions derived from the chunk, so ordinals are checkable.
            const auto at = r.user_prompt.rfind("Text: \"");
            const auto body = r.user_prompt.substr(at + 7, r.user_prompt.rfind('"') - at - 7);
            return oracle::text(json{{"perceptions", {body + " first", body + " second"}}}.dump());
        },
        8);
    const auto res = parse_chunks(chunks, b, "m");
    REQUIRE(res.perceptions.size() == chunks.size() * 2);
    CHECK(std::is_sorted(res.perceptions.begin(), res.perceptions.end(), [](const Perception& a, const Perception& c) {
        return std::tie(a.subject_id, a.chunk_index, a.ordinal) < std::tie(c.subject_id, c.chunk_index, c.ordinal);
    }));
    CHECK(res.perceptions[0].subject_id == "subj0");
    CHECK(res.perceptions[1].ordinal == 1);
    CHECK(res.perceptions[1].text == "Text 0. second");
}

TEST_CASE("rule oracle parses each sentence into a perception") {
    const std::vector<std::string> names{"Benevolence"};
    backend::RuleOracleBackend o(backend::oracle_config_for(names));
    const auto res = parse_chunk(chunk("s", 0, "I cherish Benevolence. I reject cruelty! Is this a question?"), o, "m");
    REQUIRE(res.perceptions.size() == 3);
    CHECK(res.perceptions[0].text == "I cherish Benevolence.");
    CHECK(res.perceptions[2].ordinal == 2);
}

TEST_CASE("question generation needs exactly five questions") {
    const ValueDef v{"Benevolence", "Caring for close others."};
    oracle::ScriptedBackend good([&](const ChatRequest& r) {
        CHECK(r.system_prompt == std::string(prompts::generate_questions()));
        CHECK(r.user_prompt == "Benevolence: Caring for close others.");
        return oracle::text(R"({"value": "Benevolence", "questions": ["q1", "q2", "q3", "q4", " q5 "]})");
    });
    const auto set = generate_questions(v, good, "m");
    CHECK(set.value_name == "Benevolence");
    CHECK(set.questions.back() == "q5");

    oracle::ScriptedBackend short_([](const ChatRequest&) { return oracle::text(R"({"questions": ["q1", "q2"]})"); });
    CHECK_THROWS_AS(generate_questions(v, short_, "m"), ElicitationError);
    CHECK(short_.calls() == 2);

    const std::vector<std::string> names{"Benevolence"};
    backend::RuleOracleBackend o(backend::oracle_config_for(names));
    CHECK(generate_questions(v, o, "m").questions.size() == kQuestionsPerValue);
}

TEST_CASE("responses are collected as blank-line-separated paragraphs") {
    std::vector<ElicitationSet> sets{{"A", {"qa1", "qa2"}}, {"B", {"qb1"}}};
    oracle::ScriptedBackend b([](const ChatRequest& r) {
        if (r.user_prompt == "qa2") return oracle::text("   ");
        return oracle::text(" answer to " + r.user_prompt + " ");
    });
    const auto rec = collect_responses(sets, b, "m", "model-x");
    CHECK(rec.subject_id == "model-x");
    CHECK(rec.text == "answer to qa1\n\nanswer to qb1");
    const auto chunks = ingest::chunk_text(rec.text, 4);
    REQUIRE(chunks.size() == 2);  // each answer lands in its own chunk
    CHECK(chunks[1].text == "answer to qb1");
}
