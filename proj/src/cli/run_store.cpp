#include <ctime>

#include "gpv/digest.hpp"
#include "gpv/error.hpp"
#include "gpv_cli.hpp"

namespace gpv::cli {

namespace {

constexpr const char* kManifest = "manifest.json";

std::string now_utc() {
    std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace

RunStore::RunStore(std::filesystem::path root) : root_(std::move(root)) {
    std::filesystem::create_directories(root_);
    const auto mpath = root_ / kManifest;
    if (std::filesystem::exists(mpath)) {
        manifest_ = json::parse(records::read_file(mpath), nullptr, false);
        if (manifest_.is_discarded() || !manifest_.is_object()) {
            throw ValidationError(mpath.string() + " is not a valid manifest");
        }
    } else {
        manifest_ = {{"created_at", now_utc()}, {"config", json::object()}, {"stages", json::object()}};
    }
}

bool RunStore::exists(const std::string& rel) const { return std::filesystem::exists(path(rel)); }

std::vector<json> RunStore::read_rows(const std::string& rel, std::string_view produced_by) const {
    if (!exists(rel)) {
        throw MissingArtifactError(path(rel).string() + " not found; run `gpv " + std::string(produced_by) + "` first");
    }
    return records::read_jsonl(path(rel));
}

std::string RunStore::digest(const std::string& rel, std::string_view produced_by) const {
    if (!exists(rel)) {
        throw MissingArtifactError(path(rel).string() + " not found; run `gpv " + std::string(produced_by) + "` first");
    }
    return file_sha256(path(rel));
}

void RunStore::write_text(const std::string& rel, std::string_view content) { records::write_file(path(rel), content); }

void RunStore::write_rows(const std::string& rel, std::span<const json> rows) { records::write_jsonl(path(rel), rows); }

bool RunStore::stage_current(const std::string& stage, const std::string& input_digest) const {
    const auto& stages = manifest_.at("stages");
    auto it = stages.find(stage);
    if (it == stages.end() || !it->value("completed", false) || it->value("input_digest", std::string{}) != input_digest) {
        return false;
    }
    for (const auto& out : it->at("outputs")) {
        if (!exists(out.get<std::string>())) return false;
    }
    return true;
}

void RunStore::mark_stage(const std::string& stage, const std::string& input_digest, std::vector<std::string> outputs) {
    json outs = json::object();
    for (const auto& o : outputs) outs[o] = exists(o) ? file_sha256(path(o)) : std::string{};
    manifest_["stages"][stage] = {
        {"completed", true},
        {"input_digest", input_digest},
        {"outputs", outputs},
        {"output_digests", outs},
        {"completed_at", now_utc()},
    };
    save();
}

void RunStore::set_config(const json& config) {
    manifest_["config"] = config;
    save();
}

void RunStore::save() { records::write_file(root_ / kManifest, manifest_.dump(2) + "\n"); }

}  // namespace gpv::cli
