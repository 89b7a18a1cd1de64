#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "gpv/records.hpp"

namespace gpv::backend {

inline constexpr std::string_view kDefaultSystemPrompt = "You are a helpful assistant.";

struct ChatRequest {
    std::string model;
    std::string system_prompt{kDefaultSystemPrompt};
    std::string user_prompt;
    double temperature = 0.0;  // greedy
    int max_tokens = 512;
    std::optional<std::vector<std::string>> want_label_probs;
};

struct TokenLogprob {
    std::string token;
    double logprob = 0.0;

    bool operator==(const TokenLogprob&) const = default;
};

struct ChatResponse {
    std::string text;
    /// Top-k alternatives for the first generated content token, when the transport exposes them.
    std::vector<TokenLogprob> first_token_logprobs;

    bool operator==(const ChatResponse&) const = default;
};

/// Probability distribution over an explicit label set.
class LabelDistribution {
public:
    LabelDistribution() = default;
    /// Validates non-negative probabilities summing to 1 within 1e-9 and unique labels.
    explicit LabelDistribution(std::vector<std::pair<std::string, double>> probs);

    /// Probability 1 on `chosen`, 0 elsewhere.
    static LabelDistribution degenerate(std::span<const std::string> labels, std::string_view chosen);

    double prob(std::string_view label) const;
    const std::vector<std::pair<std::string, double>>& probs() const noexcept { return probs_; }
    std::vector<std::string> labels() const;
    bool empty() const noexcept { return probs_.empty(); }

    /// Label with strictly greatest probability, nullopt on a tie for the maximum.
    std::optional<std::string> strict_argmax() const;

    bool operator==(const LabelDistribution&) const = default;

private:
    std::vector<std::pair<std::string, double>> probs_;
};

/// Canonical JSON of every field that influences the response.
json request_json(const ChatRequest& request);
/// SHA-256 of request_json(); identical for identical requests.
std::string request_digest(const ChatRequest& request);

/// Turns a response into a distribution over `labels`.
///
/// With first-token logprobs: each alternative token is lowercased, trimmed of
/// whitespace and quotes, and credited to the label it equals or, failing that,
/// the single label it is a prefix of; exp(logprob) mass is summed per label and
/// renormalised. Without usable logprobs the generated text's first word must
/// name a label, giving a degenerate distribution. Throws UnparseableLabelError.
LabelDistribution distribution_from_response(const ChatResponse& response, std::span<const std::string> labels);

/// Chat-model access. Subclasses implement do_generate(); the base class
/// bounds the number of in-flight requests.
class Backend {
public:
    explicit Backend(std::size_t concurrency_limit = 4);
    virtual ~Backend() = default;
    Backend(const Backend&) = delete;
    Backend& operator=(const Backend&) = delete;

    /// Identifier that distinguishes response sources in cache keys.
    virtual std::string id() const = 0;

    ChatResponse generate(const ChatRequest& request);
    std::string complete(const ChatRequest& request);
    /// Requires a non-empty request.want_label_probs.
    LabelDistribution label_probs(const ChatRequest& request);

    void set_concurrency_limit(std::size_t limit);
    std::size_t concurrency_limit() const;

protected:
    virtual ChatResponse do_generate(const ChatRequest& request) = 0;

private:
    mutable std::mutex slots_mutex_;
    std::condition_variable slots_cv_;
    std::size_t limit_;
    std::size_t in_flight_ = 0;
};

// ---------------------------------------------------------------------------
// Response cache

struct CacheEntry {
    std::string key;             // sha256(backend id, request digest)
    std::string request_digest;  // sha256(request_json)
    std::string backend_id;
    ChatResponse response;
    std::string timestamp;
};

std::string cache_key(std::string_view backend_id, std::string_view request_digest);

json cache_entry_json(const CacheEntry& entry);
CacheEntry cache_entry_from_json(const json& j);

/// Line-delimited cache file. Concurrent lookups share a lock; appends are serialized.
class ResponseCache {
public:
    ResponseCache() = default;
    /// Loads existing entries (if the file exists) and appends new ones to it.
    explicit ResponseCache(std::filesystem::path path);

    std::optional<ChatResponse> lookup(const std::string& key) const;
    /// Finds any entry recorded for the request, regardless of backend.
    std::optional<ChatResponse> lookup_digest(const std::string& request_digest) const;
    void insert(CacheEntry entry);
    std::size_t size() const;

private:
    std::filesystem::path path_;
    mutable std::shared_mutex mutex_;
    std::mutex append_mutex_;
    std::unordered_map<std::string, ChatResponse> by_key_;
    std::unordered_map<std::string, std::string> key_by_digest_;
};

/// Serves repeated requests from a ResponseCache; misses go to the inner backend.
class CachedBackend : public Backend {
public:
    CachedBackend(std::shared_ptr<Backend> inner, std::shared_ptr<ResponseCache> cache);
    std::string id() const override { return inner_->id(); }
    std::size_t hits() const { return hits_.load(); }
    std::size_t misses() const { return misses_.load(); }

protected:
    ChatResponse do_generate(const ChatRequest& request) override;

private:
    std::shared_ptr<Backend> inner_;
    std::shared_ptr<ResponseCache> cache_;
    std::atomic<std::size_t> hits_{0};
    std::atomic<std::size_t> misses_{0};
};

/// Answers only from recorded fixtures (cache files), matched on request digest.
class ReplayBackend : public Backend {
public:
    explicit ReplayBackend(std::span<const std::filesystem::path> fixture_files);
    explicit ReplayBackend(std::vector<CacheEntry> entries);
    std::string id() const override { return "replay"; }
    std::size_t fixture_count() const { return responses_.size(); }

protected:
    ChatResponse do_generate(const ChatRequest& request) override;

private:
    std::unordered_map<std::string, ChatResponse> responses_;
};

// ---------------------------------------------------------------------------
// HTTP (chat-completions wire protocol)

struct HttpResult {
    int status = 0;  // 0 = connection failure
    std::string body;
    std::string error;
};

using HttpHeaders = std::vector<std::pair<std::string, std::string>>;

class HttpTransport {
public:
    virtual ~HttpTransport() = default;
    virtual HttpResult post(const std::string& path, const std::string& body, const HttpHeaders& headers) = 0;
};

/// cpp-httplib client for http:// and https:// base URLs.
std::unique_ptr<HttpTransport> make_httplib_transport(const std::string& base_url,
                                                      std::chrono::seconds timeout = std::chrono::seconds(120));

struct RetryPolicy {
    int attempts = 3;
    std::chrono::milliseconds initial_backoff{1000};  // doubles after every failed attempt
};

struct HttpBackendConfig {
    std::string base_url = "http://localhost:8000";
    std::string api_key;
    std::string path = "/v1/chat/completions";
    bool request_logprobs = true;  // false = read labels off the greedy text only
    int top_logprobs = 20;
    RetryPolicy retry;
    std::function<void(std::chrono::milliseconds)> sleep;  // defaults to std::this_thread::sleep_for
};

/// Environment overrides: GPV_API_BASE for the base URL and the variable named by
/// `api_key_env` (default GPV_API_KEY) for the key.
HttpBackendConfig http_config_from_env(HttpBackendConfig base, const std::string& api_key_env = "GPV_API_KEY");

json chat_completion_body(const ChatRequest& request, const HttpBackendConfig& config);
/// Parses choices[0].message.content and the first content token's top_logprobs.
ChatResponse parse_chat_completion(std::string_view body);

class HttpBackend : public Backend {
public:
    HttpBackend(HttpBackendConfig config, std::unique_ptr<HttpTransport> transport);
    std::string id() const override { return "http"; }
    /// Number of transport calls made; replay tests assert it stays at zero.
    std::size_t transport_calls() const { return calls_.load(); }

protected:
    ChatResponse do_generate(const ChatRequest& request) override;

private:
    HttpBackendConfig config_;
    std::unique_ptr<HttpTransport> transport_;
    std::atomic<std::size_t> calls_{0};
};

// ---------------------------------------------------------------------------
// Deterministic rule-based stand-in for a real model.

struct OracleConfig {
    /// value name -> lowercase keywords; a sentence mentioning one is relevant to that value.
    std::vector<std::pair<std::string, std::vector<std::string>>> keywords;
    std::vector<std::string> support_markers{"value", "values", "love", "cherish", "embrace", "admire", "support", "enjoy", "prioritize"};
    std::vector<std::string> oppose_markers{"reject", "rejects", "dislike", "oppose", "avoid", "resent", "despise", "distrust"};
    double relevant_yes = 0.95;
    double irrelevant_yes = 0.05;
    double polar_mass = 0.9;    // mass on support (or oppose) for a polar sentence
    double neutral_either = 0.8;
    bool emit_logprobs = true;
    /// Stance the oracle takes as an answering subject: value name -> +1 / -1.
    std::vector<std::pair<std::string, int>> subject_stance;
};

/// Keywords derived from value names: each lowercase word of each name.
OracleConfig oracle_config_for(std::span<const std::string> value_names);

class RuleOracleBackend : public Backend {
public:
    explicit RuleOracleBackend(OracleConfig config);
    std::string id() const override { return "oracle"; }

protected:
    ChatResponse do_generate(const ChatRequest& request) override;

private:
    ChatResponse relevance(std::string_view sentence, std::string_view value) const;
    ChatResponse valence(std::string_view sentence, std::string_view value) const;
    ChatResponse parse(std::string_view chunk) const;
    ChatResponse questions(std::string_view user_turn) const;
    ChatResponse likert(std::string_view prompt) const;
    ChatResponse evaluate(std::string_view prompt) const;
    ChatResponse answer(std::string_view question) const;

    int marker_balance(std::string_view sentence) const;
    bool mentions(std::string_view sentence, std::string_view value) const;

    OracleConfig config_;
};

}  // namespace gpv::backend
