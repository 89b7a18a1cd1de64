#include <doctest.h>

#include <filesystem>
#include <cmath>

#include "gpv/backend.hpp"
#include "gpv/baselines.hpp"
#include "gpv/error.hpp"
#include "gpv/records.hpp"
#include "gpv/rng.hpp"
#include "oracles.hpp"

using namespace gpv;
using namespace gpv::baselines;
using backend::ChatRequest;
namespace fs = std::filesystem;

namespace {

const fs::path kFixtures = GPV_FIXTURES;

fs::path scratch(const std::string& name) {
    auto p = fs::temp_directory_path() / ("gpv_baselines_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

ValueSystem toy() { return ValueSystem("toy", {{"A", ""}, {"B", ""}}); }

}  // namespace

TEST_CASE("rating extraction takes the first standalone integer") {
    CHECK(first_integer_in_range("4", 1, 5) == 4);
    CHECK(first_integer_in_range("I'd say 3 out of 5", 1, 5) == 3);
    CHECK(first_integer_in_range("Rating: 2.", 1, 5) == 2);
    CHECK_FALSE(first_integer_in_range("2.5", 1, 5).has_value());
    CHECK(first_integer_in_range("2.5 or maybe 4", 1, 5) == 4);
    CHECK_FALSE(first_integer_in_range("7", 1, 5).has_value());
    CHECK_FALSE(first_integer_in_range("mp3 player", 1, 5).has_value());
    CHECK_FALSE(first_integer_in_range("no number", 1, 5).has_value());
    CHECK_FALSE(first_integer_in_range("99999999999999999999999", 1, 5).has_value());
    CHECK(first_number_in_range("I rate it 7.5/10", 0, 10) == 7.5);
    CHECK(first_number_in_range("10", 0, 10) == 10.0);
    CHECK_FALSE(first_number_in_range("11", 0, 10).has_value());
}

TEST_CASE("reversal maps the scale onto itself") {
    for (int lo = 0; lo < 3; ++lo)
        for (int hi = lo + 1; hi < 9; ++hi)
            for (int r = lo; r <= hi; ++r) {
                CHECK(reverse_likert(r, lo, hi) == lo + hi - r);
                CHECK(reverse_likert(reverse_likert(r, lo, hi), lo, hi) == r);
            }
    CHECK(reverse_valuebench(2.0) == 8.0);
}

TEST_CASE("inventory loading validates fields with line numbers") {
    const auto dir = scratch("inv");
    records::write_file(dir / "ok.csv", "item_id,text,value,reverse\ni1,Q one,A,false\ni2,Q two,B,true\n");
    const auto items = load_inventory(dir / "ok.csv");
    REQUIRE(items.size() == 2);
    CHECK(items[1].reverse_scored);
    CHECK(items[0].scale_max == 5);

    records::write_file(dir / "bad.csv", "item_id,text,value,reverse\ni1,Q one,A,false\ni2,Q two,B,perhaps\n");
    try {
        load_inventory(dir / "bad.csv");
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find(":3") != std::string::npos);
    }
    records::write_file(dir / "scale.csv", "item_id,text,value,scale_min,scale_max\ni1,Q,A,5,1\n");
    CHECK_THROWS_AS(load_inventory(dir / "scale.csv"), ValidationError);
    records::write_file(dir / "missing.csv", "item_id,value\ni1,A\n");
    CHECK_THROWS_AS(load_inventory(dir / "missing.csv"), ValidationError);
}

TEST_CASE("self-report normalizes each item on its own scale") {
    std::vector<InventoryItem> items{
        {"a1", "I like A.", "A", false, 1, 5},
        {"a2", "I dislike A.", "A", true, 1, 5},
        {"b1", "B matters.", "B", false, 0, 10},
        {"b2", "B again.", "B", false, 1, 5},
    };
    oracle::ScriptedBackend b([](const ChatRequest& r) {
        if (r.user_prompt.find("I like A.") != std::string::npos) return oracle::text("5");
        if (r.user_prompt.find("I dislike A.") != std::string::npos) return oracle::text("2 - disagree");
        if (r.user_prompt.find("B matters.") != std::string::npos) return oracle::text("I pick 5");
        return oracle::text("I cannot answer that.");
    });
    const auto res = run_self_report(items, toy(), b, {"subj", "m", "e"});
    // a1: (5-1)/4 = 1; a2: reverse 2 -> 4 -> 0.75; mean 0.875.
    CHECK(res.vector.get("A").value() == doctest::Approx(0.875));
    // b1: 5/10 = 0.5; b2 unparseable and excluded.
    CHECK(res.vector.get("B").value() == doctest::Approx(0.5));
    CHECK(res.vector.tool() == Tool::self_report);
    CHECK_FALSE(res.items[3].score.has_value());
    CHECK(res.items[1].raw == 2.0);

    std::vector<InventoryItem> stray{{"x", "Q", "Z", false, 1, 5}};
    CHECK_THROWS_AS(run_self_report(stray, toy(), b, {"subj", "m", "e"}), ValidationError);
}

TEST_CASE("self-report prompt carries the scale and the item") {
    const auto p = self_report_prompt({"i", "I enjoy novelty.", "A", false, 1, 7});
    CHECK(p.find("I enjoy novelty.") != std::string::npos);
    CHECK(p.find('7') != std::string::npos);
}

TEST_CASE("ValueBench regression cells replay from recorded fixtures") {
    const auto lvi = builtin_system("lvi");
    const auto items = load_inventory(kFixtures / "valuebench_lvi_achievement.csv");
    struct Cell {
        const char* fixture;
        const char* model;
        double expected;  // reported to two decimals
    };
    for (const Cell c : {Cell{"valuebench_qw4b.jsonl", "Qwen1.5-4B-Chat", 9.0}, Cell{"valuebench_inte2.jsonl", "internlm2-chat-7b", 9.67}}) {
        const std::vector<fs::path> files{kFixtures / c.fixture};
        backend::ReplayBackend replay(files);
        const auto res = run_valuebench(items, lvi, replay, replay, {c.model, c.model, "evaluator"});
        const double got = res.vector.get("Achievement").value();
        CHECK(std::round(got * 100) / 100 == doctest::Approx(c.expected).epsilon(1e-12));
        CHECK(res.vector.measured_count() == 1);
        CHECK(res.items[2].raw.has_value());
        CHECK(res.items[2].score == 10.0 - *res.items[2].raw);
    }
}

TEST_CASE("ValueBench rates the subject's free-form answer") {
    const std::vector<InventoryItem> items{{"q", "Should I help?", "A", false, 1, 5}, {"r", "Should I not help?", "A", true, 1, 5}};
    oracle::ScriptedBackend subject([](const ChatRequest& r) { return oracle::text("My answer to: " + r.user_prompt); });
    oracle::ScriptedBackend evaluator([](const ChatRequest& r) {
        CHECK(r.model == "judge");
        CHECK(r.user_prompt.find("My answer to:") != std::string::npos);
        return oracle::text(r.user_prompt.find("not help") != std::string::npos ? "3" : "Rating: 8");
    });
    const auto res = run_valuebench(items, toy(), subject, evaluator, {"s", "m", "judge"});
    CHECK(res.vector.get("A").value() == doctest::Approx((8.0 + 7.0) / 2));
    CHECK(res.items[0].subject_answer == "My answer to: Should I help?");
}

TEST_CASE("lexicon patterns match whole words with optional wildcard") {
    CHECK(pattern_matches("help*", "helping"));
    CHECK(pattern_matches("help*", "help"));
    CHECK_FALSE(pattern_matches("help", "helping"));
    CHECK_FALSE(pattern_matches("help*", "unhelpful"));
    CHECK(lexicon_words("Don't STOP, believing!") == std::vector<std::string>{"don't", "stop", "believing"});
}

TEST_CASE("dictionary scores are match rates per thousand words") {
    Lexicon lex;
    lex.entries = {{"A", {"kind*", "care"}}, {"B", {"win"}}, {"Unknown", {"x"}}};
    const SubjectRecord r{"s", "Kindness and care. Kind people care; we win.", {}};
    const auto counts = dictionary_counts(r.text, lex);
    CHECK(counts.words == 8);
    CHECK(counts.matches == std::vector<std::size_t>{4, 1, 0});
    const auto v = dictionary_score(r, lex, toy());
    CHECK(v.get("A").value() == doctest::Approx(4000.0 / 8));
    CHECK(v.get("B").value() == doctest::Approx(1000.0 / 8));
    CHECK(v.entries().size() == 2);  // values outside the system are ignored
    CHECK(dictionary_score({"e", "", {}}, lex, toy()).get("A") == 0.0);

    const auto dir = scratch("lex");
    records::write_file(dir / "lex.csv", "value,word\nA,Kind*\nA,care\nB,win\n");
    const auto loaded = load_lexicon(dir / "lex.csv");
    REQUIRE(loaded.entries.size() == 2);
    CHECK(loaded.entries[0].second == std::vector<std::string>{"kind*", "care"});
    records::write_file(dir / "empty.csv", "value,word\n");
    CHECK_THROWS_AS(load_lexicon(dir / "empty.csv"), ValidationError);
}

TEST_CASE("parallel dictionary scoring equals the serial reference") {
    Rng rng(8);
    const std::vector<std::string> vocab{"kind", "kindly", "care", "win", "winner", "the", "a", "and"};
    std::vector<SubjectRecord> corpus;
    for (int i = 0; i < 50; ++i) {
        std::string t;
        for (int w = 0; w < 300; ++w) t += vocab[rng.uniform_index(vocab.size())] + " ";
        corpus.push_back({"s" + std::to_string(i), t, {}});
    }
    Lexicon lex;
    lex.entries = {{"A", {"kind*", "care"}}, {"B", {"win"}}};
    CHECK(dictionary_score_batch(corpus, lex, toy()) == reference::dictionary_score_batch(corpus, lex, toy()));
}
