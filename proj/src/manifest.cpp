#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <fmt/format.h>
#include <openssl/evp.h>

#include "resilience/experiments.hpp"

namespace resilience {

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256 failed");
  }
  std::string out;
  for (unsigned int i = 0; i < len; ++i) out += fmt::format("{:02x}", digest[i]);
  return out;
}

nlohmann::json RunManifest::to_json() const {
  nlohmann::json files = nlohmann::json::array();
  for (const OutputRecord& r : outputs) {
    files.push_back({{"file", r.file}, {"sha256", r.sha256}, {"bytes", r.bytes}});
  }
  return {{"scenario", scenario},
          {"config_hash", config_hash},
          {"code_version", code_version},
          {"rng", rng_identity},
          {"wall_clock_seconds", wall_clock_seconds},
          {"output_dir", output_dir},
          {"outputs", files},
          {"violations", violation_count}};
}

OutputSink::OutputSink(std::string dir, bool enabled) : dir_(std::move(dir)), enabled_(enabled) {
  if (enabled_) std::filesystem::create_directories(dir_);
}

void OutputSink::write(const std::string& name, const std::string& content) {
  if (contents_.count(name)) throw std::logic_error("output written twice: " + name);
  if (enabled_) {
    const std::filesystem::path p = std::filesystem::path(dir_) / name;
    std::ofstream out(p, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    out << content;
  }
  records_.push_back({name, sha256_hex(content), content.size()});
  contents_[name] = content;
}

void OutputSink::write_json(const std::string& name, const nlohmann::json& j) {
  write(name, j.dump(2) + "\n");
}

const std::string& OutputSink::content(const std::string& name) const {
  auto it = contents_.find(name);
  if (it == contents_.end()) throw std::out_of_range("no output named " + name);
  return it->second;
}

}  // namespace resilience
