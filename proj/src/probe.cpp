#include "gpv/probe.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <tuple>

#include <spdlog/spdlog.h>

#include "gpv/records.hpp"

namespace gpv::probe {

namespace {

// log(1 + exp(-x)) without overflow.
double softplus_neg(double x) { return x > 0 ? std::log1p(std::exp(-x)) : -x + std::log1p(std::exp(x)); }

double sigmoid(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

void check_config(const ProbeConfig& cfg) {
    if (cfg.bins < 1) throw ValidationError("probe bins must be >= 1");
    if (cfg.epochs < 1) throw ValidationError("probe epochs must be >= 1");
    if (cfg.repeats < 1) throw ValidationError("probe repeats must be >= 1");
    if (cfg.train_size == 0) throw ValidationError("probe train split must be non-empty");
}

}  // namespace

std::size_t FeatureMatrix::row_of(const std::string& subject_id) const {
    auto it = std::find(subject_ids.begin(), subject_ids.end(), subject_id);
    if (it == subject_ids.end()) throw ValidationError("no features for subject '" + subject_id + "'");
    return static_cast<std::size_t>(it - subject_ids.begin());
}

FeatureMatrix normalize_features(std::span<const ValueVector> batch) {
    FeatureMatrix f;
    if (batch.empty()) return f;
    const auto& first = batch.front();
    for (const auto& e : first.entries()) f.feature_names.push_back(e.value);
    for (const auto& v : batch) {
        if (v.tool() != first.tool()) throw ValidationError("cannot mix tools " + std::string(to_string(first.tool())) + " and " + std::string(to_string(v.tool())));
        if (v.system_name() != first.system_name()) throw ValidationError("cannot mix systems " + first.system_name() + " and " + v.system_name());
        const auto r = v.range();
        if (!r.bounded() || !(r.hi > r.lo)) throw ValidationError("feature range of " + v.subject_id() + " is not a bounded interval");
        std::vector<double> row;
        for (const auto& name : f.feature_names) {
            const auto s = v.get(name);
            row.push_back(s ? 2.0 * (*s - r.lo) / (r.hi - r.lo) - 1.0 : 0.0);
        }
        f.subject_ids.push_back(v.subject_id());
        f.rows.push_back(std::move(row));
    }
    return f;
}

SafetyTable load_safety(const std::filesystem::path& path) {
    SafetyTable t;
    for (const auto& rec : records::read_records(path)) {
        const auto& id = rec.require("subject_id");
        const auto& raw = rec.require("safety_score");
        double v = 0.0;
        try {
            std::size_t used = 0;
            v = std::stod(raw, &used);
            if (used != raw.size()) throw std::invalid_argument(raw);
        } catch (const std::exception&) {
            rec.fail("safety_score is not a number: '" + raw + "'");
        }
        if (!std::isfinite(v)) rec.fail("safety_score must be finite");
        if (!t.emplace(id, v).second) rec.fail("duplicate subject_id '" + id + "'");
    }
    return t;
}

std::vector<std::vector<std::size_t>> quantile_bins(std::span<const double> scores, std::size_t bins) {
    if (bins < 1) throw ValidationError("bins must be >= 1");
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    const std::size_t n = order.size();
    std::vector<std::vector<std::size_t>> out(bins);
    for (std::size_t b = 0; b < bins; ++b) {
        for (std::size_t k = b * n / bins; k < (b + 1) * n / bins; ++k) out[b].push_back(order[k]);
    }
    return out;
}

Split stratified_split(std::span<const double> scores, const ProbeConfig& cfg, Rng& rng) {
    check_config(cfg);
    const std::size_t total = cfg.subjects();
    if (scores.size() < total) {
        throw ValidationError("stratified split needs " + std::to_string(total) + " subjects, got " + std::to_string(scores.size()));
    }
    std::vector<std::size_t> pool(scores.size());
    std::iota(pool.begin(), pool.end(), 0);
    if (pool.size() > total) {
        rng.shuffle(std::span(pool));
        pool.resize(total);
        std::sort(pool.begin(), pool.end());
    }
    std::vector<double> pool_scores;
    for (auto i : pool) pool_scores.push_back(scores[i]);

    auto bins = quantile_bins(pool_scores, cfg.bins);
    for (auto& bin : bins) {
        for (auto& k : bin) k = pool[k];
        rng.shuffle(std::span(bin));
    }
    std::vector<std::size_t> taken(bins.size(), 0);
    std::size_t remaining = total;

    Split split;
    const std::array<std::pair<std::vector<std::size_t>*, std::size_t>, 3> targets{
        {{&split.train, cfg.train_size}, {&split.val, cfg.val_size}, {&split.test, cfg.test_size}}};
    for (auto [dest, k] : targets) {
        // Integer shares k * left_b / remaining: floor plus remainder numerator.
        std::vector<std::size_t> quota(bins.size());
        std::vector<std::size_t> rem(bins.size());
        std::size_t assigned = 0;
        for (std::size_t b = 0; b < bins.size(); ++b) {
            const std::size_t left = bins[b].size() - taken[b];
            quota[b] = remaining ? k * left / remaining : 0;
            rem[b] = remaining ? k * left % remaining : 0;
            assigned += quota[b];
        }
        std::vector<std::size_t> order(bins.size());
        std::iota(order.begin(), order.end(), 0);
        std::vector<std::uint64_t> tiebreak(bins.size());
        for (auto& t : tiebreak) t = rng.next();
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return std::tie(rem[b], tiebreak[b]) < std::tie(rem[a], tiebreak[a]);
        });
        for (std::size_t i = 0; assigned < k && i < order.size(); ++i) {
            if (rem[order[i]] == 0) break;
            ++quota[order[i]];
            ++assigned;
        }
        for (std::size_t b = 0; b < bins.size(); ++b) {
            for (std::size_t q = 0; q < quota[b]; ++q) dest->push_back(bins[b][taken[b]++]);
        }
        remaining -= k;
        std::sort(dest->begin(), dest->end());
    }
    return split;
}

std::vector<Pair> make_pairs(std::span<const std::size_t> members, std::span<const double> safety) {
    std::vector<Pair> out;
    for (std::size_t i = 0; i < members.size(); ++i) {
        for (std::size_t j = i + 1; j < members.size(); ++j) {
            const double sa = safety[members[i]];
            const double sb = safety[members[j]];
            if (sa == sb) {
                spdlog::warn("dropping pair ({}, {}): equal safety scores", members[i], members[j]);
                continue;
            }
            out.push_back({members[i], members[j], sa > sb ? 0 : 1});
        }
    }
    return out;
}

double LinearProbe::score(std::span<const double> x) const {
    double s = bias;
    for (std::size_t k = 0; k < weights.size(); ++k) s += weights[k] * x[k];
    return s;
}

double logit_difference(const LinearProbe& probe, const FeatureMatrix& f, const Pair& p) {
    const auto& xa = f.rows[p.a];
    const auto& xb = f.rows[p.b];
    double d = 0.0;
    for (std::size_t k = 0; k < probe.weights.size(); ++k) d += probe.weights[k] * (xa[k] - xb[k]);
    return d;
}

double prob_a_safer(const LinearProbe& probe, const FeatureMatrix& f, const Pair& p) {
    return sigmoid(probe.score(f.rows[p.a]) - probe.score(f.rows[p.b]));
}

LossGrad loss_and_gradient(const LinearProbe& probe, const FeatureMatrix& f, std::span<const Pair> pairs) {
    LossGrad g;
    g.grad_weights.assign(probe.weights.size(), 0.0);
    for (const auto& p : pairs) {
        // Signed so the target class is always "positive": loss = softplus(-z).
        const double sign = p.label == 0 ? 1.0 : -1.0;
        const double z = sign * logit_difference(probe, f, p);
        g.loss += softplus_neg(z);
        const double dz = -sigmoid(-z) * sign;  // d loss / d (s_a - s_b)
        const auto& xa = f.rows[p.a];
        const auto& xb = f.rows[p.b];
        for (std::size_t k = 0; k < probe.weights.size(); ++k) g.grad_weights[k] += dz * (xa[k] - xb[k]);
    }
    return g;
}

double pair_accuracy(const LinearProbe& probe, const FeatureMatrix& f, std::span<const Pair> pairs) {
    if (pairs.empty()) return 0.0;
    std::size_t correct = 0;
    for (const auto& p : pairs) {
        const double d = logit_difference(probe, f, p);
        if ((p.label == 0 && d > 0.0) || (p.label == 1 && d < 0.0)) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(pairs.size());
}

TrainResult train_probe(const FeatureMatrix& f, std::span<const Pair> train, std::span<const Pair> val,
                        const ProbeConfig& cfg) {
    if (train.empty()) throw ValidationError("cannot train a probe without training pairs");
    const std::size_t dim = f.feature_names.size();
    LinearProbe probe{std::vector<double>(dim, 0.0), 0.0};
    std::vector<double> m(dim, 0.0), v(dim, 0.0);
    double mb = 0.0, vb = 0.0;
    double b1t = 1.0, b2t = 1.0;

    TrainResult best;
    best.best_val_accuracy = -1.0;
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const auto g = loss_and_gradient(probe, f, train);
        if (!std::isfinite(g.loss)) throw TrainingError("non-finite loss at epoch " + std::to_string(epoch), epoch);
        b1t *= cfg.beta1;
        b2t *= cfg.beta2;
        for (std::size_t k = 0; k < dim; ++k) {
            m[k] = cfg.beta1 * m[k] + (1 - cfg.beta1) * g.grad_weights[k];
            v[k] = cfg.beta2 * v[k] + (1 - cfg.beta2) * g.grad_weights[k] * g.grad_weights[k];
            probe.weights[k] -= cfg.learning_rate * (m[k] / (1 - b1t)) / (std::sqrt(v[k] / (1 - b2t)) + cfg.eps);
        }
        mb = cfg.beta1 * mb + (1 - cfg.beta1) * g.grad_bias;
        vb = cfg.beta2 * vb + (1 - cfg.beta2) * g.grad_bias * g.grad_bias;
        probe.bias -= cfg.learning_rate * (mb / (1 - b1t)) / (std::sqrt(vb / (1 - b2t)) + cfg.eps);

        best.final_loss = g.loss;
        if (val.empty()) {
            best.probe = probe;
            best.best_epoch = epoch;
            continue;
        }
        const double acc = pair_accuracy(probe, f, val);
        if (acc > best.best_val_accuracy) {
            best.best_val_accuracy = acc;
            best.best_epoch = epoch;
            best.probe = probe;
        }
    }
    if (val.empty()) best.best_val_accuracy = 0.0;
    return best;
}

std::vector<double> aligned_safety(const FeatureMatrix& f, const SafetyTable& safety) {
    std::vector<double> out;
    for (const auto& id : f.subject_ids) {
        auto it = safety.find(id);
        if (it == safety.end()) throw ValidationError("no safety score for subject '" + id + "'");
        out.push_back(it->second);
    }
    return out;
}

RepeatResult run_repeat(const FeatureMatrix& f, std::span<const double> safety, const ProbeConfig& cfg, int repeat) {
    Rng rng(cfg.seed + static_cast<std::uint64_t>(repeat));
    RepeatResult r;
    r.split = stratified_split(safety, cfg, rng);
    const auto train = make_pairs(r.split.train, safety);
    const auto val = make_pairs(r.split.val, safety);
    const auto test = make_pairs(r.split.test, safety);
    r.train_pairs = train.size();
    r.training = train_probe(f, train, val, cfg);
    r.test_accuracy = pair_accuracy(r.training.probe, f, test);
    return r;
}

ExperimentReport summarize(const FeatureMatrix& f, std::vector<RepeatResult> repeats) {
    ExperimentReport rep;
    rep.feature_names = f.feature_names;
    rep.mean_weights.assign(f.feature_names.size(), 0.0);
    const double n = static_cast<double>(repeats.size());
    for (const auto& r : repeats) {
        rep.mean_accuracy += r.test_accuracy;
        for (std::size_t k = 0; k < rep.mean_weights.size(); ++k) rep.mean_weights[k] += r.training.probe.weights[k];
    }
    if (!repeats.empty()) {
        rep.mean_accuracy /= n;
        for (auto& w : rep.mean_weights) w /= n;
        double ss = 0.0;
        for (const auto& r : repeats) ss += (r.test_accuracy - rep.mean_accuracy) * (r.test_accuracy - rep.mean_accuracy);
        rep.std_accuracy = std::sqrt(ss / n);
    }
    rep.repeats = std::move(repeats);
    return rep;
}

ExperimentReport run_experiment(const FeatureMatrix& f, const SafetyTable& safety, const ProbeConfig& cfg) {
    check_config(cfg);
    const auto s = aligned_safety(f, safety);
    std::vector<RepeatResult> repeats(static_cast<std::size_t>(cfg.repeats));
#pragma omp parallel for schedule(dynamic)
    for (int r = 0; r < cfg.repeats; ++r) repeats[static_cast<std::size_t>(r)] = run_repeat(f, s, cfg, r);
    return summarize(f, std::move(repeats));
}

std::string report_summary_csv(const ExperimentReport& r, std::string_view tool, std::string_view system) {
    std::string out = "tool,system,mean_acc,std_acc\n";
    out += records::csv_row(std::vector<std::string>{std::string(tool), std::string(system),
                                                     records::format_number(r.mean_accuracy),
                                                     records::format_number(r.std_accuracy)});
    return out;
}

std::string report_weights_csv(const ExperimentReport& r) {
    std::string out = "value,mean_weight\n";
    for (std::size_t k = 0; k < r.feature_names.size(); ++k) {
        out += records::csv_row(std::vector<std::string>{r.feature_names[k], records::format_number(r.mean_weights[k])});
    }
    return out;
}

}  // namespace gpv::probe
