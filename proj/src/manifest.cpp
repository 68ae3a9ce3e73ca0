#include "phintent/manifest.hpp"

#include <cstdio>

#include "phintent/corpus.hpp"

namespace phintent {

std::string file_digest(const std::string& path) {
  std::string bytes = read_file(path);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[32];
  std::snprintf(buf, sizeof(buf), "fnv1a64:%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

nlohmann::json load_json_file(const std::string& path) {
  return nlohmann::json::parse(read_file(path));
}

void write_json_atomic(const nlohmann::json& j, const std::string& path) {
  write_file_atomic(path, j.dump(2) + "\n");
}

nlohmann::json make_manifest(const std::string& command,
                             nlohmann::json options,
                             const std::vector<std::string>& input_paths,
                             const std::vector<std::uint64_t>& seeds) {
  nlohmann::json inputs = nlohmann::json::object();
  for (const auto& p : input_paths) inputs[p] = file_digest(p);
  return nlohmann::json{{"tool", kToolName},
                        {"version", kToolVersion},
                        {"command", command},
                        {"options", std::move(options)},
                        {"inputs", std::move(inputs)},
                        {"seeds", seeds}};
}

}  // namespace phintent
