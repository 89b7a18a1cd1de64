#include <charconv>
#include <cstdlib>

#include "gpv/error.hpp"
#include "gpv/records.hpp"
#include "gpv_cli.hpp"

namespace gpv::cli {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T parse_unsigned(const std::string& key, const std::string& value) {
    T out{};
    auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc{} || p != value.data() + value.size()) {
        throw ValidationError("config key '" + key + "' expects a non-negative integer, got '" + value + "'");
    }
    return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1" || value == "yes") return true;
    if (value == "false" || value == "0" || value == "no") return false;
    throw ValidationError("config key '" + key + "' expects true or false, got '" + value + "'");
}

std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= value.size()) {
        const auto comma = value.find(',', start);
        auto item = trim(std::string_view(value).substr(start, comma == std::string::npos ? std::string::npos : comma - start));
        if (!item.empty()) out.push_back(std::move(item));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

}  // namespace

BackendKind backend_kind_from_string(std::string_view s) {
    if (s == "http") return BackendKind::http;
    if (s == "replay") return BackendKind::replay;
    if (s == "oracle") return BackendKind::oracle;
    throw ValidationError("unknown backend '" + std::string(s) + "' (expected http, replay, or oracle)");
}

std::string_view to_string(BackendKind k) noexcept {
    switch (k) {
        case BackendKind::http: return "http";
        case BackendKind::replay: return "replay";
        case BackendKind::oracle: return "oracle";
    }
    return "?";
}

void apply_config_value(RunConfig& cfg, const std::string& key, const std::string& value) {
    if (key == "backend") cfg.backend = backend_kind_from_string(value);
    else if (key == "model") cfg.model = value;
    else if (key == "evaluator_model") cfg.evaluator_model = value;
    else if (key == "question_model") cfg.question_model = value;
    else if (key == "system") cfg.system = value;
    else if (key == "chunk_size") {
        cfg.chunk_size = parse_unsigned<std::size_t>(key, value);
        if (cfg.chunk_size < 1) throw ValidationError("chunk_size must be at least 1");
    } else if (key == "concurrency") {
        cfg.concurrency = parse_unsigned<std::size_t>(key, value);
        if (cfg.concurrency < 1) throw ValidationError("concurrency must be at least 1");
    } else if (key == "cache_path") cfg.cache_path = value;
    else if (key == "fixtures") cfg.fixtures = split_list(value);
    else if (key == "seed") cfg.seed = parse_unsigned<std::uint64_t>(key, value);
    else if (key == "output_dir") cfg.output_dir = value;
    else if (key == "run_id") cfg.run_id = value;
    else if (key == "api_base") cfg.api_base = value;
    else if (key == "api_key_env") cfg.api_key_env = value;
    else if (key == "request_logprobs") cfg.request_logprobs = parse_bool(key, value);
    else throw ValidationError("unknown config key '" + key + "'");
}

void apply_config_text(RunConfig& cfg, std::string_view text, const std::string& source) {
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start < text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        ++line_no;
        auto line = text.substr(start, end - start);
        start = end + 1;
        if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        const auto body = trim(line);
        if (body.empty()) continue;
        const auto eq = body.find('=');
        const std::string where = source + ":" + std::to_string(line_no) + ": ";
        if (eq == std::string::npos) throw ValidationError(where + "expected 'key = value'");
        try {
            apply_config_value(cfg, trim(std::string_view(body).substr(0, eq)), trim(std::string_view(body).substr(eq + 1)));
        } catch (const ValidationError& e) {
            throw ValidationError(where + e.what());
        }
    }
}

void apply_config_file(RunConfig& cfg, const std::filesystem::path& path) {
    apply_config_text(cfg, records::read_file(path), path.string());
}

json config_json(const RunConfig& cfg) {
    return {
        {"backend", std::string(to_string(cfg.backend))},
        {"model", cfg.model},
        {"evaluator_model", cfg.evaluator_model},
        {"question_model", cfg.question_model},
        {"system", cfg.system},
        {"chunk_size", cfg.chunk_size},
        {"concurrency", cfg.concurrency},
        {"cache_path", cfg.cache_path},
        {"fixtures", cfg.fixtures},
        {"seed", cfg.seed},
        {"output_dir", cfg.output_dir},
        {"run_id", cfg.run_id},
        {"api_base", cfg.api_base},
        {"api_key_env", cfg.api_key_env},
        {"request_logprobs", cfg.request_logprobs},
    };
}

std::shared_ptr<backend::Backend> make_backend(const RunConfig& cfg, std::span<const std::string> value_names) {
    std::shared_ptr<backend::Backend> b;
    switch (cfg.backend) {
        case BackendKind::http: {
            backend::HttpBackendConfig http;
            http.base_url = cfg.api_base;
            http.request_logprobs = cfg.request_logprobs;
            http = backend::http_config_from_env(http, cfg.api_key_env);
            b = std::make_shared<backend::HttpBackend>(http, nullptr);
            break;
        }
        case BackendKind::replay: {
            std::vector<std::filesystem::path> files(cfg.fixtures.begin(), cfg.fixtures.end());
            if (files.empty() && !cfg.cache_path.empty()) files.emplace_back(cfg.cache_path);
            if (files.empty()) throw ValidationError("replay backend needs --fixtures (or a cache_path to replay)");
            for (const auto& f : files) {
                if (!std::filesystem::exists(f)) throw MissingArtifactError("replay fixture " + f.string() + " not found");
            }
            // Replay never writes; it reads the cache file as fixtures instead.
            b = std::make_shared<backend::ReplayBackend>(files);
            b->set_concurrency_limit(cfg.concurrency);
            return b;
        }
        case BackendKind::oracle:
            b = std::make_shared<backend::RuleOracleBackend>(backend::oracle_config_for(value_names));
            break;
    }
    b->set_concurrency_limit(cfg.concurrency);
    if (cfg.cache_path.empty()) return b;
    auto cached = std::make_shared<backend::CachedBackend>(b, std::make_shared<backend::ResponseCache>(cfg.cache_path));
    cached->set_concurrency_limit(cfg.concurrency);
    return cached;
}

}  // namespace gpv::cli
