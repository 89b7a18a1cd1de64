#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "gpv/backend.hpp"
#include "gpv/rng.hpp"
#include "gpv/scoring.hpp"
#include "oracles.hpp"

using namespace gpv;
using namespace gpv::scoring;
using backend::ChatRequest;
using backend::LabelDistribution;

namespace {

LabelDistribution val(double s, double o, double e) { return LabelDistribution({{"support", s}, {"oppose", o}, {"either", e}}); }

PerceptionScore ps(std::string subject, std::string value, std::size_t chunk, std::size_t ord, std::optional<double> w) {
    PerceptionScore s;
    s.subject_id = std::move(subject);
    s.value_name = std::move(value);
    s.chunk_index = chunk;
    s.ordinal = ord;
    s.w = w;
    return s;
}

ValueSystem toy() { return ValueSystem("toy", {{"A", "first"}, {"B", "second"}}); }

}  // namespace

TEST_CASE("w follows the gate and argmax rule on a dense grid") {
    Rng rng(21);
    int measured = 0;
    for (int i = 0; i < 2000; ++i) {
        const double r = rng.uniform();
        double s = rng.uniform(), o = rng.uniform(), e = rng.uniform();
        // Exact ties appear often on a coarse lattice.
        if (i % 4 == 0) {
            s = std::round(s * 4) / 4;
            o = std::round(o * 4) / 4;
            e = std::round(e * 4) / 4;
        }
        const double sum = s + o + e;
        if (sum == 0) continue;
        s /= sum;
        o /= sum;
        e = 1.0 - s - o;
        if (e < 0) continue;
        const auto d = val(s, o, e);
        const auto got = compute_w(r, d);
        const auto want = oracle::brute_w(r, d.prob("support"), d.prob("oppose"), d.prob("either"));
        REQUIRE(got.has_value() == want.measured);
        if (got) {
            CHECK(*got == want.value);
            ++measured;
        }
    }
    CHECK(measured > 100);
    CHECK_FALSE(compute_w(0.5, val(1, 0, 0)).has_value());  // gate is strict
    CHECK(compute_w(0.51, val(1, 0, 0)) == 1.0);
    CHECK_FALSE(compute_w(0.9, val(0.45, 0.1, 0.45)).has_value());  // tie with either
    CHECK_FALSE(compute_w(0.9, val(0.2, 0.2, 0.6)).has_value());    // either wins
}

TEST_CASE("aggregation averages measured w per value in a fixed order") {
    const auto sys = toy();
    std::vector<PerceptionScore> scores{
        ps("s", "A", 1, 0, 0.5), ps("s", "A", 0, 0, -0.25), ps("s", "A", 0, 1, std::nullopt),
        ps("s", "B", 0, 0, std::nullopt),
    };
    const auto v = aggregate_subject(scores, sys);
    CHECK(v.subject_id() == "s");
    CHECK(v.get("A").value() == doctest::Approx(0.125));
    CHECK_FALSE(v.get("B").has_value());

    auto shuffled = scores;
    std::reverse(shuffled.begin(), shuffled.end());
    CHECK(aggregate_subject(shuffled, sys) == v);

    scores.push_back(ps("other", "A", 0, 0, 1.0));
    CHECK_THROWS_AS(aggregate_subject(scores, sys), ScoringError);
    CHECK_THROWS_AS(aggregate_subject(std::span(scores).first(1), sys, "nobody"), ScoringError);
}

TEST_CASE("aggregated means stay within [-1, 1] for any measured scores") {
    const auto sys = toy();
    Rng rng(4);
    for (int t = 0; t < 200; ++t) {
        std::vector<PerceptionScore> scores;
        const auto n = 1 + rng.uniform_index(40);
        for (std::size_t i = 0; i < n; ++i) scores.push_back(ps("s", "A", i / 3, i % 3, rng.uniform() < 0.5 ? 1.0 : rng.uniform(-1, 1)));
        const auto v = aggregate_subject(scores, sys);
        CHECK(v.get("A").value() >= -1.0);
        CHECK(v.get("A").value() <= 1.0);
    }
}

TEST_CASE("batch aggregation covers every listed subject") {
    const auto sys = toy();
    std::vector<PerceptionScore> scores{ps("a", "A", 0, 0, 0.8), ps("b", "B", 0, 0, -0.4)};
    const std::vector<std::string> ids{"a", "b", "silent"};
    const auto batch = aggregate_batch(scores, sys, ids);
    REQUIRE(batch.size() == 3);
    CHECK(batch[0].get("A") == 0.8);
    CHECK(batch[1].get("B") == -0.4);
    CHECK(batch[2].measured_count() == 0);
}

TEST_CASE("label failures degrade a pair while transport failures propagate") {
    const auto sys = toy();
    const perception::Perception p{"s", 0, 0, "A sentence."};
    oracle::ScriptedBackend garbled([](const ChatRequest&) { return oracle::text("Hmm, hard to say."); });
    const auto scores = score_perception(sys, p, garbled, "m");
    REQUIRE(scores.size() == 2);
    for (const auto& s : scores) {
        CHECK_FALSE(s.w.has_value());
        CHECK(s.error.has_value());
    }

    oracle::ScriptedBackend down([](const ChatRequest&) -> backend::ChatResponse { throw TransportError("down", 3); });
    CHECK_THROWS_AS(score_perception(sys, p, down, "m"), TransportError);
}

TEST_CASE("prompts carry the sentence and value, requests ask for labels") {
    const auto sys = toy();
    const perception::Perception p{"s", 0, 0, "I value A deeply."};
    std::vector<ChatRequest> seen;
    std::mutex m;
    oracle::ScriptedBackend b([&](const ChatRequest& r) {
        std::lock_guard lock(m);
        seen.push_back(r);
        const bool rel = r.want_label_probs && r.want_label_probs->size() == 2;
        return oracle::text(rel ? "yes" : "support");
    });
    const auto scores = score_perception(sys, p, b, "m");
    CHECK(scores[0].w == 1.0);
    CHECK(scores[0].relevance == 1.0);
    for (const auto& r : seen) {
        CHECK(r.user_prompt.find("I value A deeply.") != std::string::npos);
        CHECK(r.max_tokens == 4);
        CHECK(r.temperature == 0.0);
        REQUIRE(r.want_label_probs.has_value());
    }
    CHECK(relevance_prompt("x", "A").find("{sentence}") == std::string::npos);
    CHECK(valence_prompt("x", "A").find("{value}") == std::string::npos);
}

TEST_CASE("end to end measurement with the rule oracle recovers planted signs") {
    const auto sys = builtin_system("schwartz10");
    const auto names = sys.value_names();
    backend::RuleOracleBackend o(backend::oracle_config_for(names));
    SubjectRecord r{"s", "I cherish Security. I embrace Security. I reject Power. The weather was mild.", {}};
    const auto m = measure_subject(r, sys, o, {"m", 250});
    CHECK(m.chunks.size() == 1);
    CHECK(m.parsed.perceptions.size() == 4);
    CHECK(m.scores.size() == 40);
    CHECK(m.vector.get("Security").value() == doctest::Approx(0.85));
    CHECK(m.vector.get("Power").value() == doctest::Approx(-0.85));
    CHECK_FALSE(m.vector.get("Hedonism").has_value());
    CHECK_THROWS_AS(measure_subject({"e", "  ", {}}, sys, o, {"m", 250}), ValidationError);
}
