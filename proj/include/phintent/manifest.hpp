#pragma once

// Run manifests: every command records its fully resolved configuration,
// seeds and input digests as JSON, and accepts the same file back through
// --config to reproduce the run byte-for-byte.

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace phintent {

inline constexpr const char* kToolName = "phintent";
inline constexpr const char* kToolVersion = "0.1.0";

// FNV-1a 64 over the file bytes, rendered as "fnv1a64:<16 hex digits>".
std::string file_digest(const std::string& path);

nlohmann::json load_json_file(const std::string& path);
void write_json_atomic(const nlohmann::json& j, const std::string& path);

nlohmann::json make_manifest(const std::string& command,
                             nlohmann::json options,
                             const std::vector<std::string>& input_paths,
                             const std::vector<std::uint64_t>& seeds);

}  // namespace phintent
