#include "gpv/backend.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <ctime>
#include <set>

#include <spdlog/spdlog.h>

#include "gpv/digest.hpp"
#include "gpv/error.hpp"

namespace gpv::backend {

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

bool trim_char(unsigned char c) {
    return std::isspace(c) || c == '"' || c == '\'' || c == '`' || c == '.' || c == ',' || c == ':' ||
           c == ';' || c == '!' || c == '*' || c == '(' || c == ')' || c == '[' || c == ']';
}

std::string normalize_token(std::string_view token) {
    std::size_t b = 0;
    std::size_t e = token.size();
    while (b < e && trim_char(static_cast<unsigned char>(token[b]))) ++b;
    while (e > b && trim_char(static_cast<unsigned char>(token[e - 1]))) --e;
    return lower(token.substr(b, e - b));
}

// Index of the label `token` names: exact match, else the unique label it
// abbreviates, else the unique label it starts with.
std::optional<std::size_t> match_label(const std::string& token, const std::vector<std::string>& lowered) {
    if (token.empty()) return std::nullopt;
    for (std::size_t i = 0; i < lowered.size(); ++i) {
        if (lowered[i] == token) return i;
    }
    auto unique = [&](auto pred) -> std::optional<std::size_t> {
        std::optional<std::size_t> hit;
        for (std::size_t i = 0; i < lowered.size(); ++i) {
            if (pred(lowered[i])) {
                if (hit) return std::nullopt;
                hit = i;
            }
        }
        return hit;
    };
    if (auto i = unique([&](const std::string& l) { return l.starts_with(token); })) return i;
    return unique([&](const std::string& l) { return token.starts_with(l); });
}

std::string first_word(std::string_view text) {
    std::size_t b = 0;
    while (b < text.size() && trim_char(static_cast<unsigned char>(text[b]))) ++b;
    std::size_t e = b;
    while (e < text.size() && !std::isspace(static_cast<unsigned char>(text[e]))) ++e;
    return normalize_token(text.substr(b, e - b));
}

std::string utc_timestamp() {
    std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

json response_json(const ChatResponse& r) {
    json lp = json::array();
    for (const auto& t : r.first_token_logprobs) lp.push_back({{"token", t.token}, {"logprob", t.logprob}});
    return {{"text", r.text}, {"logprobs", lp}};
}

ChatResponse response_from_json(const json& j) {
    ChatResponse r;
    r.text = j.at("text").get<std::string>();
    if (auto it = j.find("logprobs"); it != j.end() && it->is_array()) {
        for (const auto& t : *it) r.first_token_logprobs.push_back({t.at("token").get<std::string>(), t.at("logprob").get<double>()});
    }
    return r;
}

}  // namespace

// ---------------------------------------------------------------------------

LabelDistribution::LabelDistribution(std::vector<std::pair<std::string, double>> probs) : probs_(std::move(probs)) {
    std::set<std::string> seen;
    double total = 0.0;
    for (const auto& [label, p] : probs_) {
        if (!seen.insert(label).second) throw ValidationError("duplicate label '" + label + "' in distribution");
        if (!(p >= 0.0) || !std::isfinite(p)) throw ValidationError("label '" + label + "' has invalid probability");
        total += p;
    }
    if (!probs_.empty() && std::abs(total - 1.0) > 1e-9) {
        throw ValidationError("label probabilities sum to " + std::to_string(total));
    }
}

LabelDistribution LabelDistribution::degenerate(std::span<const std::string> labels, std::string_view chosen) {
    std::vector<std::pair<std::string, double>> probs;
    bool found = false;
    for (const auto& l : labels) {
        probs.emplace_back(l, l == chosen ? 1.0 : 0.0);
        found = found || l == chosen;
    }
    if (!found) throw UnparseableLabelError(std::string(chosen));
    return LabelDistribution(std::move(probs));
}

double LabelDistribution::prob(std::string_view label) const {
    for (const auto& [l, p] : probs_) {
        if (l == label) return p;
    }
    throw ValidationError("label '" + std::string(label) + "' not in distribution");
}

std::vector<std::string> LabelDistribution::labels() const {
    std::vector<std::string> out;
    for (const auto& [l, p] : probs_) out.push_back(l);
    return out;
}

std::optional<std::string> LabelDistribution::strict_argmax() const {
    if (probs_.empty()) return std::nullopt;
    std::size_t best = 0;
    bool tie = false;
    for (std::size_t i = 1; i < probs_.size(); ++i) {
        if (probs_[i].second > probs_[best].second) {
            best = i;
            tie = false;
        } else if (probs_[i].second == probs_[best].second) {
            tie = true;
        }
    }
    if (tie) return std::nullopt;
    return probs_[best].first;
}

json request_json(const ChatRequest& r) {
    json j = {
        {"model", r.model},
        {"system_prompt", r.system_prompt},
        {"user_prompt", r.user_prompt},
        {"temperature", r.temperature},
        {"max_tokens", r.max_tokens},
    };
    if (r.want_label_probs) j["labels"] = *r.want_label_probs;
    return j;
}

std::string request_digest(const ChatRequest& request) { return sha256_hex(request_json(request).dump()); }

LabelDistribution distribution_from_response(const ChatResponse& response, std::span<const std::string> labels) {
    std::vector<std::string> lowered;
    for (const auto& l : labels) lowered.push_back(lower(l));
    std::vector<double> mass(labels.size(), 0.0);
    double matched = 0.0;
    for (const auto& alt : response.first_token_logprobs) {
        if (auto i = match_label(normalize_token(alt.token), lowered)) {
            const double p = std::exp(alt.logprob);
            mass[*i] += p;
            matched += p;
        }
    }
    if (matched > 0.0) {
        std::vector<std::pair<std::string, double>> probs;
        for (std::size_t i = 0; i < labels.size(); ++i) probs.emplace_back(labels[i], mass[i] / matched);
        // Renormalised sums can land a few ulps off 1; pin the total exactly.
        double total = 0.0;
        for (const auto& [l, p] : probs) total += p;
        if (total != 1.0) {
            auto big = std::max_element(probs.begin(), probs.end(), [](auto& a, auto& b) { return a.second < b.second; });
            big->second += 1.0 - total;
        }
        return LabelDistribution(std::move(probs));
    }
    if (auto i = match_label(first_word(response.text), lowered)) {
        return LabelDistribution::degenerate(labels, labels[*i]);
    }
    throw UnparseableLabelError(response.text);
}

// ---------------------------------------------------------------------------

Backend::Backend(std::size_t concurrency_limit) : limit_(std::max<std::size_t>(1, concurrency_limit)) {}

void Backend::set_concurrency_limit(std::size_t limit) {
    std::lock_guard lock(slots_mutex_);
    limit_ = std::max<std::size_t>(1, limit);
    slots_cv_.notify_all();
}

std::size_t Backend::concurrency_limit() const {
    std::lock_guard lock(slots_mutex_);
    return limit_;
}

ChatResponse Backend::generate(const ChatRequest& request) {
    if (request.temperature < 0.0) throw ValidationError("temperature must be >= 0");
    {
        std::unique_lock lock(slots_mutex_);
        slots_cv_.wait(lock, [&] { return in_flight_ < limit_; });
        ++in_flight_;
    }
    struct Release {
        Backend* self;
        ~Release() {
            std::lock_guard lock(self->slots_mutex_);
            --self->in_flight_;
            self->slots_cv_.notify_one();
        }
    } release{this};
    return do_generate(request);
}

std::string Backend::complete(const ChatRequest& request) { return generate(request).text; }

LabelDistribution Backend::label_probs(const ChatRequest& request) {
    if (!request.want_label_probs || request.want_label_probs->empty()) {
        throw ValidationError("label_probs requires a non-empty label set");
    }
    return distribution_from_response(generate(request), *request.want_label_probs);
}

// ---------------------------------------------------------------------------

std::string cache_key(std::string_view backend_id, std::string_view request_digest) {
    std::string material(backend_id);
    material += '\n';
    material += request_digest;
    return sha256_hex(material);
}

json cache_entry_json(const CacheEntry& e) {
    return {
        {"key", e.key},
        {"request_digest", e.request_digest},
        {"backend", e.backend_id},
        {"response", response_json(e.response)},
        {"timestamp", e.timestamp},
    };
}

CacheEntry cache_entry_from_json(const json& j) {
    CacheEntry e;
    e.request_digest = j.at("request_digest").get<std::string>();
    e.backend_id = j.value("backend", std::string{});
    e.key = j.value("key", cache_key(e.backend_id, e.request_digest));
    e.response = response_from_json(j.at("response"));
    e.timestamp = j.value("timestamp", std::string{});
    return e;
}

ResponseCache::ResponseCache(std::filesystem::path path) : path_(std::move(path)) {
    if (!std::filesystem::exists(path_)) return;
    for (const auto& row : records::read_jsonl(path_)) {
        auto e = cache_entry_from_json(row);
        key_by_digest_.emplace(e.request_digest, e.key);
        by_key_.emplace(e.key, std::move(e.response));
    }
}

std::optional<ChatResponse> ResponseCache::lookup(const std::string& key) const {
    std::shared_lock lock(mutex_);
    if (auto it = by_key_.find(key); it != by_key_.end()) return it->second;
    return std::nullopt;
}

std::optional<ChatResponse> ResponseCache::lookup_digest(const std::string& digest) const {
    std::shared_lock lock(mutex_);
    auto k = key_by_digest_.find(digest);
    if (k == key_by_digest_.end()) return std::nullopt;
    return by_key_.at(k->second);
}

void ResponseCache::insert(CacheEntry entry) {
    std::lock_guard append(append_mutex_);
    {
        std::unique_lock lock(mutex_);
        if (by_key_.count(entry.key)) return;
        by_key_.emplace(entry.key, entry.response);
        key_by_digest_.emplace(entry.request_digest, entry.key);
    }
    if (path_.empty()) return;
    if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
    std::FILE* f = std::fopen(path_.c_str(), "ab");
    if (!f) throw MissingArtifactError("cannot append to cache file " + path_.string());
    const std::string line = cache_entry_json(entry).dump() + "\n";
    std::fwrite(line.data(), 1, line.size(), f);
    std::fclose(f);
}

std::size_t ResponseCache::size() const {
    std::shared_lock lock(mutex_);
    return by_key_.size();
}

CachedBackend::CachedBackend(std::shared_ptr<Backend> inner, std::shared_ptr<ResponseCache> cache)
    : Backend(inner->concurrency_limit()), inner_(std::move(inner)), cache_(std::move(cache)) {}

ChatResponse CachedBackend::do_generate(const ChatRequest& request) {
    const auto digest = request_digest(request);
    const auto key = cache_key(inner_->id(), digest);
    if (auto hit = cache_->lookup(key)) {
        ++hits_;
        return *hit;
    }
    ++misses_;
    auto response = inner_->generate(request);
    cache_->insert({key, digest, inner_->id(), response, utc_timestamp()});
    return response;
}

ReplayBackend::ReplayBackend(std::span<const std::filesystem::path> fixture_files) {
    for (const auto& file : fixture_files) {
        for (const auto& row : records::read_jsonl(file)) {
            auto e = cache_entry_from_json(row);
            responses_.emplace(e.request_digest, std::move(e.response));
        }
    }
}

ReplayBackend::ReplayBackend(std::vector<CacheEntry> entries) {
    for (auto& e : entries) responses_.emplace(e.request_digest, std::move(e.response));
}

ChatResponse ReplayBackend::do_generate(const ChatRequest& request) {
    const auto digest = request_digest(request);
    auto it = responses_.find(digest);
    if (it == responses_.end()) throw FixtureMissError(digest);
    spdlog::debug("replay hit {}", digest);
    return it->second;
}

}  // namespace gpv::backend
