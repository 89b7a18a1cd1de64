#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace gpv {

/// Lowercase hex SHA-256 of the given bytes.
std::string sha256_hex(std::string_view bytes);

/// SHA-256 of a file's contents; throws MissingArtifactError if unreadable.
std::string file_sha256(const std::filesystem::path& path);

}  // namespace gpv
