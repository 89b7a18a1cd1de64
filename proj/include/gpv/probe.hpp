#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "gpv/core.hpp"
#include "gpv/error.hpp"
#include "gpv/rng.hpp"

namespace gpv::probe {

struct ProbeConfig {
    double learning_rate = 0.001;
    int epochs = 1000;
    std::size_t train_size = 9;
    std::size_t val_size = 4;
    std::size_t test_size = 4;
    std::size_t bins = 4;
    int repeats = 30;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::uint64_t seed = 0;

    std::size_t subjects() const noexcept { return train_size + val_size + test_size; }
};

/// Rows are subjects, columns are values, every cell in [-1, 1].
struct FeatureMatrix {
    std::vector<std::string> subject_ids;
    std::vector<std::string> feature_names;
    std::vector<std::vector<double>> rows;

    std::size_t row_of(const std::string& subject_id) const;
};

/// Affine map of each vector's declared range onto [-1, 1]; absent entries become 0.
/// Throws ValidationError when tools or systems differ, or the range is unbounded.
FeatureMatrix normalize_features(std::span<const ValueVector> batch);

using SafetyTable = std::map<std::string, double>;

/// Records {subject_id, safety_score}; higher is safer.
SafetyTable load_safety(const std::filesystem::path& path);

struct Split {
    std::vector<std::size_t> train;
    std::vector<std::size_t> val;
    std::vector<std::size_t> test;
};

/// Contiguous quantile bins over `scores` sorted ascending: bin b holds sorted
/// positions [floor(b n / bins), floor((b + 1) n / bins)).
std::vector<std::vector<std::size_t>> quantile_bins(std::span<const double> scores, std::size_t bins);

/// Indices into `scores`. When there are more subjects than cfg.subjects(), that
/// many are first drawn uniformly. Each split then takes from every bin in
/// proportion to what the bin has left; leftover seats go to the largest
/// fractional shares, ties broken by `rng`. Members of a bin are drawn at random.
Split stratified_split(std::span<const double> scores, const ProbeConfig& cfg, Rng& rng);

/// label 0: a is safer; 1: b is safer.
struct Pair {
    std::size_t a = 0;
    std::size_t b = 0;
    int label = 0;

    bool operator==(const Pair&) const = default;
};

/// All unordered pairs of `members` (row indices) in listing order. Pairs with equal
/// safety are dropped with a warning.
std::vector<Pair> make_pairs(std::span<const std::size_t> members, std::span<const double> safety);

struct LinearProbe {
    std::vector<double> weights;
    double bias = 0.0;

    double score(std::span<const double> x) const;
    bool operator==(const LinearProbe&) const = default;
};

/// s_a - s_b.
double logit_difference(const LinearProbe& probe, const FeatureMatrix& f, const Pair& p);
/// Softmax probability that `a` is the safer one.
double prob_a_safer(const LinearProbe& probe, const FeatureMatrix& f, const Pair& p);

struct LossGrad {
    double loss = 0.0;
    std::vector<double> grad_weights;
    double grad_bias = 0.0;  // always 0: the bias cancels within a pair
};

/// Summed cross-entropy over pairs and its analytic gradient.
LossGrad loss_and_gradient(const LinearProbe& probe, const FeatureMatrix& f, std::span<const Pair> pairs);

/// Fraction of pairs whose sign of s_a - s_b matches the label; a zero difference counts wrong.
double pair_accuracy(const LinearProbe& probe, const FeatureMatrix& f, std::span<const Pair> pairs);

class TrainingError : public ValidationError {
public:
    TrainingError(const std::string& what, int epoch) : ValidationError(what), epoch_(epoch) {}
    int epoch() const noexcept { return epoch_; }

private:
    int epoch_;
};

struct TrainResult {
    LinearProbe probe;  // snapshot with the best validation accuracy
    int best_epoch = 0;
    double best_val_accuracy = 0.0;
    double final_loss = 0.0;
};

/// Full-batch Adam from zero weights. Validation accuracy is checked after every
/// epoch; the earliest epoch with the highest accuracy is kept. Without validation
/// pairs the final weights are kept.
TrainResult train_probe(const FeatureMatrix& f, std::span<const Pair> train, std::span<const Pair> val,
                        const ProbeConfig& cfg);

struct RepeatResult {
    Split split;
    TrainResult training;
    double test_accuracy = 0.0;
    std::size_t train_pairs = 0;

    bool operator==(const RepeatResult& o) const {
        return test_accuracy == o.test_accuracy && training.probe == o.training.probe &&
               training.best_epoch == o.training.best_epoch && train_pairs == o.train_pairs;
    }
};

struct ExperimentReport {
    double mean_accuracy = 0.0;
    double std_accuracy = 0.0;  // population standard deviation over repeats
    std::vector<std::string> feature_names;
    std::vector<double> mean_weights;
    std::vector<RepeatResult> repeats;

    bool operator==(const ExperimentReport&) const = default;
};

/// Subjects of `f` paired with their safety (all must be present in `safety`).
std::vector<double> aligned_safety(const FeatureMatrix& f, const SafetyTable& safety);

/// One repeat with Rng(cfg.seed + repeat).
RepeatResult run_repeat(const FeatureMatrix& f, std::span<const double> safety, const ProbeConfig& cfg, int repeat);

/// cfg.repeats independent repeats, run in parallel.
ExperimentReport run_experiment(const FeatureMatrix& f, const SafetyTable& safety, const ProbeConfig& cfg);

ExperimentReport summarize(const FeatureMatrix& f, std::vector<RepeatResult> repeats);

std::string report_summary_csv(const ExperimentReport& r, std::string_view tool, std::string_view system);
std::string report_weights_csv(const ExperimentReport& r);

namespace reference {
/// run_experiment with the repeats executed one after another.
ExperimentReport run_experiment(const FeatureMatrix& f, const SafetyTable& safety, const ProbeConfig& cfg);
}  // namespace reference

}  // namespace gpv::probe
