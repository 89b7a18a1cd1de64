#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "gpv/backend.hpp"
#include "gpv/error.hpp"

namespace gpv::backend {

namespace {

class HttplibTransport : public HttpTransport {
public:
    HttplibTransport(const std::string& base_url, std::chrono::seconds timeout) : client_(base_url) {
        client_.set_connection_timeout(timeout);
        client_.set_read_timeout(timeout);
        client_.set_write_timeout(timeout);
    }

    HttpResult post(const std::string& path, const std::string& body, const HttpHeaders& headers) override {
        httplib::Headers h;
        for (const auto& [k, v] : headers) h.emplace(k, v);
        std::lock_guard lock(mutex_);
        auto res = client_.Post(path, h, body, "application/json");
        if (!res) return {0, {}, httplib::to_string(res.error())};
        return {res->status, res->body, {}};
    }

private:
    std::mutex mutex_;  // httplib::Client is not safe for concurrent requests
    httplib::Client client_;
};

// Base URLs may carry a path prefix ("https://host/api"); httplib wants scheme://host[:port].
std::pair<std::string, std::string> split_base(const std::string& base_url) {
    const auto scheme = base_url.find("://");
    const auto host_start = scheme == std::string::npos ? 0 : scheme + 3;
    const auto slash = base_url.find('/', host_start);
    if (slash == std::string::npos) return {base_url, ""};
    std::string prefix = base_url.substr(slash);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    return {base_url.substr(0, slash), prefix};
}

}  // namespace

std::unique_ptr<HttpTransport> make_httplib_transport(const std::string& base_url, std::chrono::seconds timeout) {
    return std::make_unique<HttplibTransport>(split_base(base_url).first, timeout);
}

HttpBackendConfig http_config_from_env(HttpBackendConfig base, const std::string& api_key_env) {
    if (const char* url = std::getenv("GPV_API_BASE"); url && *url) base.base_url = url;
    if (const char* key = std::getenv(api_key_env.c_str()); key && *key) base.api_key = key;
    return base;
}

json chat_completion_body(const ChatRequest& request, const HttpBackendConfig& config) {
    json body = {
        {"model", request.model},
        {"messages",
         json::array({{{"role", "system"}, {"content", request.system_prompt}},
                      {{"role", "user"}, {"content", request.user_prompt}}})},
        {"temperature", request.temperature},
        {"max_tokens", request.max_tokens},
    };
    const bool logprobs = config.request_logprobs && request.want_label_probs.has_value();
    body["logprobs"] = logprobs;
    if (logprobs) body["top_logprobs"] = config.top_logprobs;
    return body;
}

ChatResponse parse_chat_completion(std::string_view body) {
    json j = json::parse(body, nullptr, false);
    if (j.is_discarded()) throw BackendError("chat completion response is not JSON");
    try {
        const auto& choice = j.at("choices").at(0);
        ChatResponse r;
        const auto& content = choice.at("message").at("content");
        r.text = content.is_null() ? std::string{} : content.get<std::string>();
        auto lp = choice.find("logprobs");
        if (lp != choice.end() && lp->is_object()) {
            auto tokens = lp->find("content");
            if (tokens != lp->end() && tokens->is_array()) {
                // First token carrying visible text; leading whitespace-only tokens are skipped.
                for (const auto& tok : *tokens) {
                    const auto text = tok.value("token", std::string{});
                    if (text.find_first_not_of(" \t\r\n") == std::string::npos) continue;
                    if (auto top = tok.find("top_logprobs"); top != tok.end() && top->is_array() && !top->empty()) {
                        for (const auto& alt : *top) {
                            r.first_token_logprobs.push_back({alt.at("token").get<std::string>(), alt.at("logprob").get<double>()});
                        }
                    } else {
                        r.first_token_logprobs.push_back({text, tok.at("logprob").get<double>()});
                    }
                    break;
                }
            }
        }
        return r;
    } catch (const json::exception& e) {
        throw BackendError(std::string("malformed chat completion response: ") + e.what());
    }
}

HttpBackend::HttpBackend(HttpBackendConfig config, std::unique_ptr<HttpTransport> transport)
    : config_(std::move(config)), transport_(std::move(transport)) {
    if (!transport_) transport_ = make_httplib_transport(config_.base_url);
    if (!config_.sleep) config_.sleep = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
    if (config_.retry.attempts < 1) throw ValidationError("retry attempts must be >= 1");
}

ChatResponse HttpBackend::do_generate(const ChatRequest& request) {
    const std::string body = chat_completion_body(request, config_).dump();
    HttpHeaders headers;
    if (!config_.api_key.empty()) headers.emplace_back("Authorization", "Bearer " + config_.api_key);
    const std::string path = split_base(config_.base_url).second + config_.path;
    spdlog::debug("POST {} (authorization {}) {}", path, config_.api_key.empty() ? "none" : "redacted", body);

    auto backoff = config_.retry.initial_backoff;
    std::string last_error;
    for (int attempt = 1; attempt <= config_.retry.attempts; ++attempt) {
        ++calls_;
        const auto res = transport_->post(path, body, headers);
        if (res.status >= 200 && res.status < 300) {
            spdlog::debug("response {}", res.body);
            return parse_chat_completion(res.body);
        }
        last_error = res.status == 0 ? res.error : "HTTP " + std::to_string(res.status);
        // Client errors other than rate limiting will not improve on retry.
        if (res.status >= 400 && res.status < 500 && res.status != 408 && res.status != 429) {
            throw TransportError("request rejected: " + last_error + ": " + res.body, attempt);
        }
        spdlog::warn("attempt {}/{} failed: {}", attempt, config_.retry.attempts, last_error);
        if (attempt < config_.retry.attempts) {
            config_.sleep(backoff);
            backoff *= 2;
        }
    }
    throw TransportError("giving up after " + std::to_string(config_.retry.attempts) + " attempts: " + last_error,
                         config_.retry.attempts);
}

}  // namespace gpv::backend
