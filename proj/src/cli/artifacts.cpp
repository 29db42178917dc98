#include "hslab/cli/artifacts.hpp"

#include <openssl/evp.h>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "hslab/csv.hpp"
#include "hslab/errors.hpp"

#ifndef HSLAB_VERSION
#define HSLAB_VERSION "0.0.0"
#endif

namespace hslab::cli {

const char* tool_version() { return HSLAB_VERSION; }

std::string sha256_hex(std::string_view bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("sha256 digest failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 15]);
  }
  return out;
}

void atomic_write(const std::filesystem::path& path, const std::string& bytes) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + tmp.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
      out.close();
      std::error_code ec;
      fs::remove(tmp, ec);
      throw Error("write failed for " + tmp.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw Error("cannot rename onto " + path.string());
  }
}

std::string ArtifactSet::stamp() const {
  return std::string("# tool=") + kToolName + " version=" + tool_version() + " config_digest=" + digest_;
}

void ArtifactSet::add_csv(const std::string& name, const std::vector<std::string>& header,
                          const std::vector<std::vector<double>>& rows) {
  std::ostringstream out;
  out << stamp() << '\n';
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << '\n';
  for (const auto& r : rows) {
    if (r.size() != header.size()) throw Error("row width does not match the header of " + name);
    write_csv_row(out, r);
  }
  add_text(name, out.str());
}

void ArtifactSet::add_json(const std::string& name, const nlohmann::ordered_json& body) {
  nlohmann::ordered_json doc;
  doc["tool"] = kToolName;
  doc["version"] = tool_version();
  doc["config_digest"] = digest_;
  for (const auto& [k, v] : body.items()) doc[k] = v;
  add_text(name, doc.dump(2) + "\n");
}

void ArtifactSet::add_text(const std::string& name, std::string content) {
  for (auto& f : files_) {
    if (f.first == name) {
      f.second = std::move(content);
      return;
    }
  }
  files_.emplace_back(name, std::move(content));
}

const std::string& ArtifactSet::content(const std::string& name) const {
  for (const auto& f : files_) {
    if (f.first == name) return f.second;
  }
  throw Error("no artifact named " + name);
}

std::vector<std::filesystem::path> ArtifactSet::commit(const std::filesystem::path& dir) const {
  std::vector<std::filesystem::path> out;
  for (const auto& [name, bytes] : files_) {
    out.push_back(dir / name);
    atomic_write(out.back(), bytes);
  }
  return out;
}

}  // namespace hslab::cli
