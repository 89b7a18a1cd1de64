#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <numbers>
#include <set>

#include "gpv/probe.hpp"
#include "gpv/records.hpp"
#include "planted.hpp"

using namespace gpv;
using namespace gpv::probe;
namespace fs = std::filesystem;

namespace {

FeatureMatrix random_features(Rng& rng, std::size_t n, std::size_t dims) {
    FeatureMatrix f;
    for (std::size_t k = 0; k < dims; ++k) f.feature_names.push_back("v" + std::to_string(k));
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> row(dims);
        for (auto& x : row) x = rng.uniform(-1, 1);
        f.rows.push_back(row);
        f.subject_ids.push_back("s" + std::to_string(i));
    }
    return f;
}

std::vector<Pair> random_pairs(Rng& rng, std::size_t n, std::size_t count) {
    std::vector<Pair> out;
    while (out.size() < count) {
        const auto a = rng.uniform_index(n), b = rng.uniform_index(n);
        if (a != b) out.push_back({a, b, static_cast<int>(rng.uniform_index(2))});
    }
    return out;
}

std::vector<double> safety_vector(const planted::ProbeData& d) { return aligned_safety(d.features, d.safety); }

}  // namespace

TEST_CASE("analytic gradient matches central differences") {
    Rng rng(31);
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
        const std::size_t dims = 1 + rng.uniform_index(10);
        const auto f = random_features(rng, 8, dims);
        const auto pairs = random_pairs(rng, 8, 1 + rng.uniform_index(20));
        LinearProbe p{std::vector<double>(dims), rng.uniform(-1, 1)};
        for (auto& w : p.weights) w = rng.uniform(-2, 2);
        const auto g = loss_and_gradient(p, f, pairs);
        CHECK(g.grad_bias == 0.0);
        for (std::size_t k = 0; k < dims; ++k) {
            const double h = 1e-5;
            auto up = p, down = p;
            up.weights[k] += h;
            down.weights[k] -= h;
            const double fd = (loss_and_gradient(up, f, pairs).loss - loss_and_gradient(down, f, pairs).loss) / (2 * h);
            const double rel = std::abs(fd - g.grad_weights[k]) / std::max(1e-8, std::max(std::abs(fd), std::abs(g.grad_weights[k])));
            worst = std::max(worst, rel);
        }
    }
    CHECK(worst < 1e-4);
}

TEST_CASE("zero weights give ln 2 per pair and antisymmetric scoring") {
    Rng rng(2);
    const auto f = random_features(rng, 6, 3);
    const auto pairs = random_pairs(rng, 6, 11);
    const LinearProbe zero{{0, 0, 0}, 0};
    CHECK(loss_and_gradient(zero, f, pairs).loss == doctest::Approx(11 * std::numbers::ln2).epsilon(1e-14));

    ProbeConfig cfg;
    cfg.epochs = 1;
    CHECK(train_probe(f, pairs, {}, cfg).final_loss == doctest::Approx(11 * std::numbers::ln2).epsilon(1e-14));

    const LinearProbe p{{0.3, -1.2, 2.0}, 0.7};
    for (const auto& pr : pairs) {
        const Pair swapped{pr.b, pr.a, 1 - pr.label};
        CHECK(logit_difference(p, f, swapped) == -logit_difference(p, f, pr));
        CHECK(prob_a_safer(p, f, pr) + prob_a_safer(p, f, swapped) == doctest::Approx(1.0).epsilon(1e-15));
    }
}

TEST_CASE("quantile bins are contiguous runs of the sorted scores") {
    std::vector<double> s;
    Rng rng(5);
    for (int i = 0; i < 17; ++i) s.push_back(rng.uniform());
    const auto bins = quantile_bins(s, 4);
    REQUIRE(bins.size() == 4);
    CHECK(bins[0].size() == 4);
    CHECK(bins[3].size() == 5);
    for (std::size_t b = 0; b + 1 < bins.size(); ++b) {
        double hi = -1, lo = 2;
        for (auto i : bins[b]) hi = std::max(hi, s[i]);
        for (auto i : bins[b + 1]) lo = std::min(lo, s[i]);
        CHECK(hi < lo);
    }
    CHECK(quantile_bins(s, 1)[0].size() == 17);
    CHECK_THROWS_AS(quantile_bins(s, 0), ValidationError);
}

TEST_CASE("stratified split is disjoint, exhaustive and proportional") {
    std::vector<double> s;
    for (int i = 0; i < 17; ++i) s.push_back(std::sin(i * 1.3) * 10);
    const auto bins = quantile_bins(s, 4);
    const ProbeConfig cfg;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        Rng rng(seed);
        const auto sp = stratified_split(s, cfg, rng);
        CHECK(sp.train.size() == 9);
        CHECK(sp.val.size() == 4);
        CHECK(sp.test.size() == 4);
        std::set<std::size_t> all(sp.train.begin(), sp.train.end());
        all.insert(sp.val.begin(), sp.val.end());
        all.insert(sp.test.begin(), sp.test.end());
        CHECK(all.size() == 17);
        for (const auto* part : {&sp.train, &sp.val, &sp.test}) {
            for (const auto& bin : bins) {
                const auto in = std::count_if(part->begin(), part->end(), [&](std::size_t i) {
                    return std::find(bin.begin(), bin.end(), i) != bin.end();
                });
                const double share = static_cast<double>(part->size()) * bin.size() / 17.0;
                CHECK(std::abs(static_cast<double>(in) - share) < 1.0 + 1e-12);
            }
        }
    }

    // Four subjects in four bins: every split takes whole bins.
    const std::vector<double> four{3, 1, 4, 2};
    ProbeConfig small;
    small.train_size = 2;
    small.val_size = 1;
    small.test_size = 1;
    std::set<std::vector<std::size_t>> tests_seen;
    for (std::uint64_t seed = 0; seed < 64; ++seed) {
        Rng rng(seed);
        const auto sp = stratified_split(four, small, rng);
        CHECK(sp.train.size() + sp.val.size() + sp.test.size() == 4);
        tests_seen.insert(sp.test);
    }
    CHECK(tests_seen.size() == 4);  // the tie-break reaches every bin

    Rng rng(0);
    CHECK_THROWS_AS(stratified_split(four, cfg, rng), ValidationError);
}

TEST_CASE("surplus subjects are subsampled before splitting") {
    std::vector<double> s;
    for (int i = 0; i < 25; ++i) s.push_back(i);
    Rng rng(9);
    const auto sp = stratified_split(s, ProbeConfig{}, rng);
    std::set<std::size_t> all(sp.train.begin(), sp.train.end());
    all.insert(sp.val.begin(), sp.val.end());
    all.insert(sp.test.begin(), sp.test.end());
    CHECK(all.size() == 17);
    CHECK(*all.rbegin() < 25);
}

TEST_CASE("pairs carry the safer side and drop ties") {
    const std::vector<double> safety{0.5, 0.9, 0.5, 0.1};
    const std::vector<std::size_t> members{0, 1, 2, 3};
    const auto pairs = make_pairs(members, safety);
    CHECK(pairs.size() == 5);
    CHECK(pairs[0] == Pair{0, 1, 1});
    CHECK(pairs[1] == Pair{0, 3, 0});
    CHECK(std::none_of(pairs.begin(), pairs.end(), [](const Pair& p) { return p.a == 0 && p.b == 2; }));

    FeatureMatrix f;
    f.feature_names = {"x"};
    f.rows = {{0}, {1}, {0}, {-1}};
    f.subject_ids = {"a", "b", "c", "d"};
    CHECK(pair_accuracy(LinearProbe{{0.0}, 0}, f, pairs) == 0.0);  // zero difference is never right
    CHECK(pair_accuracy(LinearProbe{{1.0}, 0}, f, pairs) == 1.0);
    CHECK(pair_accuracy(LinearProbe{{-1.0}, 0}, f, pairs) == 0.0);
    CHECK(pair_accuracy(LinearProbe{{1.0}, 0}, f, {}) == 0.0);
}

TEST_CASE("training keeps the earliest best validation snapshot") {
    const auto d = planted::probe_data(3, 17, 3, 0.0);
    const auto s = safety_vector(d);
    std::vector<std::size_t> tr, va;
    for (std::size_t i = 0; i < 17; ++i) (i % 2 ? va : tr).push_back(i);
    const auto train = make_pairs(tr, s), val = make_pairs(va, s);
    ProbeConfig cfg;
    cfg.epochs = 300;
    const auto res = train_probe(d.features, train, val, cfg);
    REQUIRE(res.best_epoch >= 1);
    CHECK(res.best_val_accuracy == pair_accuracy(res.probe, d.features, val));

    ProbeConfig shorter = cfg;
    shorter.epochs = res.best_epoch;
    const auto replay = train_probe(d.features, train, {}, shorter);
    CHECK(replay.probe == res.probe);
    CHECK(replay.best_epoch == res.best_epoch);

    // No later epoch beats the snapshot, and no earlier epoch equals it.
    for (int e = 1; e <= cfg.epochs; ++e) {
        ProbeConfig c = cfg;
        c.epochs = e;
        const double acc = pair_accuracy(train_probe(d.features, train, {}, c).probe, d.features, val);
        if (e < res.best_epoch) CHECK(acc < res.best_val_accuracy);
        else CHECK(acc <= res.best_val_accuracy);
    }
}

TEST_CASE("training failures name the epoch") {
    FeatureMatrix f;
    f.feature_names = {"x"};
    f.rows = {{std::numeric_limits<double>::quiet_NaN()}, {0.0}};
    f.subject_ids = {"a", "b"};
    const std::vector<Pair> pairs{{0, 1, 0}};
    try {
        train_probe(f, pairs, {}, ProbeConfig{});
        FAIL("expected TrainingError");
    } catch (const TrainingError& e) {
        CHECK(e.epoch() == 1);
    }
    CHECK_THROWS_AS(train_probe(f, {}, {}, ProbeConfig{}), ValidationError);
}

TEST_CASE("parallel experiment equals the serial reference and is seed-determined") {
    const auto d = planted::probe_data(11, 17, 6, 0.05);
    ProbeConfig cfg;
    cfg.epochs = 200;
    cfg.repeats = 12;
    cfg.seed = 77;
    const auto par = run_experiment(d.features, d.safety, cfg);
    CHECK(par == reference::run_experiment(d.features, d.safety, cfg));
    CHECK(par == run_experiment(d.features, d.safety, cfg));
    REQUIRE(par.repeats.size() == 12);
    CHECK(par.repeats[4] == run_repeat(d.features, safety_vector(d), cfg, 4));
    double mean = 0;
    for (const auto& r : par.repeats) mean += r.test_accuracy;
    CHECK(par.mean_accuracy == doctest::Approx(mean / 12).epsilon(1e-14));

    cfg.seed = 78;
    CHECK_FALSE(run_experiment(d.features, d.safety, cfg) == par);

    auto missing = d.safety;
    missing.erase("llm3");
    CHECK_THROWS_AS(run_experiment(d.features, missing, cfg), ValidationError);
}

TEST_CASE("planted signal is learned far better than noise") {
    ProbeConfig cfg;
    cfg.repeats = 10;
    double signal = 0, noise = 0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        signal += run_experiment(planted::probe_data(seed, 17, 3, 0.05).features, planted::probe_data(seed, 17, 3, 0.05).safety, cfg).mean_accuracy;
        const auto n = planted::probe_data(seed, 17, 3, 0.05, false);
        noise += run_experiment(n.features, n.safety, cfg).mean_accuracy;
    }
    CHECK(signal / 5 > noise / 5 + 0.2);
}

TEST_CASE("features are normalized onto [-1, 1] per declared range") {
    ValueVector a("a", "sys", Tool::self_report), b("b", "sys", Tool::self_report);
    a.set("X", 0.5);
    a.set("Y", 1.0);
    b.set("X", 0.0);
    b.set("Y", std::nullopt);
    const std::vector<ValueVector> batch{a, b};
    const auto f = normalize_features(batch);
    CHECK(f.feature_names == std::vector<std::string>{"X", "Y"});
    CHECK(f.rows[0] == std::vector<double>{0.0, 1.0});
    CHECK(f.rows[1] == std::vector<double>{-1.0, 0.0});
    CHECK(f.row_of("b") == 1);
    CHECK_THROWS_AS(f.row_of("z"), ValidationError);

    ValueVector g("g", "sys", Tool::gpv);
    g.set("X", 0.2);
    CHECK_THROWS_AS(normalize_features(std::vector<ValueVector>{a, g}), ValidationError);
    ValueVector other("o", "other", Tool::self_report);
    CHECK_THROWS_AS(normalize_features(std::vector<ValueVector>{a, other}), ValidationError);
    ValueVector dict("d", "sys", Tool::dictionary);
    dict.set("X", 12.0);
    CHECK_THROWS_AS(normalize_features(std::vector<ValueVector>{dict}), ValidationError);
}

TEST_CASE("safety tables are validated with line numbers") {
    const auto dir = fs::temp_directory_path() / "gpv_probe_safety";
    fs::remove_all(dir);
    fs::create_directories(dir);
    records::write_file(dir / "ok.csv", "subject_id,safety_score\nm1,0.5\nm2,-3e-1\n");
    const auto t = load_safety(dir / "ok.csv");
    CHECK(t.at("m2") == -0.3);
    records::write_file(dir / "bad.csv", "subject_id,safety_score\nm1,0.5\nm2,0.5x\n");
    try {
        load_safety(dir / "bad.csv");
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find(":3") != std::string::npos);
    }
    records::write_file(dir / "dup.csv", "subject_id,safety_score\nm1,0.5\nm1,0.6\n");
    CHECK_THROWS_AS(load_safety(dir / "dup.csv"), ValidationError);
    records::write_file(dir / "inf.csv", "subject_id,safety_score\nm1,inf\n");
    CHECK_THROWS_AS(load_safety(dir / "inf.csv"), ValidationError);
}

TEST_CASE("report tables list accuracy and mean weights") {
    ExperimentReport r;
    r.mean_accuracy = 0.75;
    r.std_accuracy = 0.125;
    r.feature_names = {"A", "B"};
    r.mean_weights = {0.5, -0.25};
    CHECK(report_summary_csv(r, "gpv", "toy") == "tool,system,mean_acc,std_acc\ngpv,toy,0.75,0.125\n");
    CHECK(report_weights_csv(r) == "value,mean_weight\nA,0.5\nB,-0.25\n");
}

TEST_CASE("training follows an independently written Adam loop") {
    const auto d = planted::probe_data(8, 17, 4, 0.05);
    const auto s = safety_vector(d);
    std::vector<std::size_t> members(17);
    for (std::size_t i = 0; i < 17; ++i) members[i] = i;
    const auto pairs = make_pairs(members, s);
    ProbeConfig cfg;
    cfg.epochs = 250;
    cfg.learning_rate = 0.01;

    // Adam written from the textbook update with the pairwise logistic gradient.
    std::vector<double> w(4, 0.0), m(4, 0.0), v(4, 0.0);
    for (int t = 1; t <= cfg.epochs; ++t) {
        std::vector<double> g(4, 0.0);
        for (const auto& p : pairs) {
            double diff = 0;
            for (int k = 0; k < 4; ++k) diff += w[k] * (d.features.rows[p.a][k] - d.features.rows[p.b][k]);
            const double y = p.label == 0 ? 1.0 : 0.0;
            const double pa = 1.0 / (1.0 + std::exp(-diff));
            for (int k = 0; k < 4; ++k) g[k] += (pa - y) * (d.features.rows[p.a][k] - d.features.rows[p.b][k]);
        }
        for (int k = 0; k < 4; ++k) {
            m[k] = 0.9 * m[k] + 0.1 * g[k];
            v[k] = 0.999 * v[k] + 0.001 * g[k] * g[k];
            const double mh = m[k] / (1 - std::pow(0.9, t)), vh = v[k] / (1 - std::pow(0.999, t));
            w[k] -= 0.01 * mh / (std::sqrt(vh) + 1e-8);
        }
    }
    const auto got = train_probe(d.features, pairs, {}, cfg).probe;
    for (int k = 0; k < 4; ++k) CHECK(got.weights[k] == doctest::Approx(w[k]).epsilon(1e-9));
    CHECK(got.bias == 0.0);
}
