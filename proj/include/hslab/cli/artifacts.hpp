#pragma once

#include <filesystem>
#include <json.hpp>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace hslab::cli {

inline constexpr const char* kToolName = "hslab";
const char* tool_version();

std::string sha256_hex(std::string_view bytes);

// Writes to a sibling temp file and renames it over `path`.
void atomic_write(const std::filesystem::path& path, const std::string& bytes);

// Artifacts are staged in memory and only written by commit(), so a run that
// throws leaves nothing behind.
class ArtifactSet {
 public:
  explicit ArtifactSet(std::string digest) : digest_(std::move(digest)) {}

  const std::string& digest() const { return digest_; }
  // "# tool=hslab version=... config_digest=..."
  std::string stamp() const;

  void add_csv(const std::string& name, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);
  // Adds tool, version and config_digest ahead of the body keys.
  void add_json(const std::string& name, const nlohmann::ordered_json& body);
  void add_text(const std::string& name, std::string content);

  const std::vector<std::pair<std::string, std::string>>& files() const { return files_; }
  const std::string& content(const std::string& name) const;

  std::vector<std::filesystem::path> commit(const std::filesystem::path& dir) const;

 private:
  std::string digest_;
  std::vector<std::pair<std::string, std::string>> files_;
};

}  // namespace hslab::cli
