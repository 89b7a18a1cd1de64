#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gpv/backend.hpp"
#include "gpv/core.hpp"
#include "gpv/records.hpp"

namespace gpv::cli {

enum class BackendKind { http, replay, oracle };

BackendKind backend_kind_from_string(std::string_view s);
std::string_view to_string(BackendKind k) noexcept;

/// Everything a run needs. Field names double as config-file keys.
struct RunConfig {
    BackendKind backend = BackendKind::oracle;
    std::string model = "rater";
    std::string evaluator_model = "evaluator";
    std::string question_model = "question-writer";
    std::string system = "schwartz10";
    std::size_t chunk_size = 250;
    std::size_t concurrency = 4;
    std::string cache_path;  // empty: no response cache
    std::vector<std::string> fixtures;
    std::uint64_t seed = 0;
    std::string output_dir = "runs";
    std::string run_id = "default";
    std::string api_base = "http://localhost:8000";
    std::string api_key_env = "GPV_API_KEY";  // credentials are read from this variable, never stored
    bool request_logprobs = true;

    std::filesystem::path run_dir() const { return std::filesystem::path(output_dir) / run_id; }
};

/// Flat `key = value` lines; '#' starts a comment. Unknown keys and bad values are
/// reported with their line number.
void apply_config_text(RunConfig& cfg, std::string_view text, const std::string& source);
void apply_config_file(RunConfig& cfg, const std::filesystem::path& path);
void apply_config_value(RunConfig& cfg, const std::string& key, const std::string& value);

/// Snapshot for the manifest (credentials excluded).
json config_json(const RunConfig& cfg);

/// Run directory with a manifest recording which stages have completed, on which
/// input digest, and what they wrote.
class RunStore {
public:
    explicit RunStore(std::filesystem::path root);

    const std::filesystem::path& root() const noexcept { return root_; }
    std::filesystem::path path(const std::string& rel) const { return root_ / rel; }
    bool exists(const std::string& rel) const;

    /// Throws MissingArtifactError naming the file and the command that produces it.
    std::vector<json> read_rows(const std::string& rel, std::string_view produced_by) const;
    std::string digest(const std::string& rel, std::string_view produced_by) const;

    void write_text(const std::string& rel, std::string_view content);
    void write_rows(const std::string& rel, std::span<const json> rows);

    /// True when `stage` completed on `input_digest` and its outputs still exist.
    bool stage_current(const std::string& stage, const std::string& input_digest) const;
    void mark_stage(const std::string& stage, const std::string& input_digest, std::vector<std::string> outputs);

    void set_config(const json& config);
    const json& manifest() const noexcept { return manifest_; }

private:
    void save();

    std::filesystem::path root_;
    json manifest_;
};

/// Backend stack for the config: the selected backend, cached when cache_path is
/// set. `value_names` seeds the rule oracle's keyword table.
std::shared_ptr<backend::Backend> make_backend(const RunConfig& cfg, std::span<const std::string> value_names);

/// Parses and runs one command line (argv[0] excluded). Returns the process exit code:
/// 0 success, 1 validation error, 2 backend failure, 3 missing artifact.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gpv::cli
