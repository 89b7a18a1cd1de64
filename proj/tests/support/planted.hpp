#pragma once

// Synthetic inputs with a known answer, shared by unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "gpv/core.hpp"
#include "gpv/probe.hpp"
#include "gpv/records.hpp"
#include "gpv/rng.hpp"

namespace planted {

struct ProbeData {
    gpv::probe::FeatureMatrix features;
    gpv::probe::SafetyTable safety;
    std::vector<double> w_star;
};

// Features uniform in [-1, 1]. With `linked`, safety = w*.x + N(0, sigma) where sigma
// is `noise_frac` of the noiseless score range; otherwise safety is independent noise.
inline ProbeData probe_data(std::uint64_t seed, std::size_t subjects, std::size_t dims, double noise_frac,
                            bool linked = true) {
    gpv::Rng rng(seed);
    ProbeData d;
    d.w_star.resize(dims);
    for (auto& w : d.w_star) w = rng.uniform(-1.0, 1.0);
    for (std::size_t k = 0; k < dims; ++k) d.features.feature_names.push_back("v" + std::to_string(k));
    std::vector<double> clean;
    for (std::size_t i = 0; i < subjects; ++i) {
        std::vector<double> x(dims);
        double s = 0.0;
        for (std::size_t k = 0; k < dims; ++k) {
            x[k] = rng.uniform(-1.0, 1.0);
            s += d.w_star[k] * x[k];
        }
        d.features.rows.push_back(std::move(x));
        d.features.subject_ids.push_back("llm" + std::to_string(i));
        clean.push_back(s);
    }
    const auto [lo, hi] = std::minmax_element(clean.begin(), clean.end());
    const double sigma = noise_frac * (*hi - *lo);
    for (std::size_t i = 0; i < subjects; ++i) {
        const double base = linked ? clean[i] : 0.0;
        d.safety[d.features.subject_ids[i]] = base + sigma * rng.normal() + (linked ? 0.0 : rng.normal());
    }
    return d;
}

// Subject s states support for value v in `strength[s][v]` of `mentions` sentences
// and rejects it in the rest, so its measured mean is monotone in the strength.
struct Corpus {
    std::vector<std::string> subject_ids;
    std::vector<std::vector<int>> strength;
    std::string jsonl;
};

inline Corpus value_corpus(std::uint64_t seed, std::size_t subjects, const std::vector<std::string>& values) {
    gpv::Rng rng(seed);
    Corpus c;
    const int mentions = static_cast<int>(values.size()) + 1;
    for (std::size_t s = 0; s < subjects; ++s) {
        std::vector<int> k(values.size());
        for (std::size_t v = 0; v < values.size(); ++v) k[v] = static_cast<int>(v) + 1;
        rng.shuffle(std::span(k));
        std::vector<std::string> sentences;
        for (std::size_t v = 0; v < values.size(); ++v) {
            for (int m = 0; m < mentions; ++m) sentences.push_back((m < k[v] ? "I cherish " : "I reject ") + values[v] + ".");
        }
        rng.shuffle(std::span(sentences));
        std::string text;
        for (const auto& x : sentences) text += (text.empty() ? "" : " ") + x;
        const std::string id = "blog" + std::to_string(s);
        c.subject_ids.push_back(id);
        c.strength.push_back(k);
        gpv::json row{{"subject_id", id}, {"text", text}, {"gender", s % 2 ? "female" : "male"}};
        c.jsonl += row.dump() + "\n";
    }
    return c;
}

// Spearman rank correlation; average ranks for ties.
inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
    auto ranks = [](const std::vector<double>& v) {
        std::vector<std::size_t> idx(v.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
        std::vector<double> r(v.size());
        for (std::size_t i = 0; i < idx.size();) {
            std::size_t j = i;
            while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
            for (std::size_t k = i; k <= j; ++k) r[idx[k]] = (static_cast<double>(i + j) / 2.0) + 1.0;
            i = j + 1;
        }
        return r;
    };
    const auto rx = ranks(x), ry = ranks(y);
    const double n = static_cast<double>(x.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += rx[i] / n;
        my += ry[i] / n;
    }
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    return sxy / std::sqrt(sxx * syy);
}

}  // namespace planted
