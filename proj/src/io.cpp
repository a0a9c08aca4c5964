#include "churn/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace churn {

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string fingerprint_hex(std::string_view bytes) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(bytes)));
  return std::string(buf);
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return std::string(buf);
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& p, std::string_view bytes) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + p.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

static std::filesystem::path sidecar_path(const std::filesystem::path& artifact) {
  std::filesystem::path p = artifact;
  p += ".meta.json";
  return p;
}

void write_sidecar(const std::filesystem::path& artifact,
                   const std::string& upstream_name, const std::string& upstream_hash) {
  nlohmann::json j;
  j["upstream"] = upstream_name;
  j["upstream_fingerprint"] = upstream_hash;
  write_file(sidecar_path(artifact), j.dump(2) + "\n");
}

void verify_sidecar(const std::filesystem::path& artifact,
                    const std::string& upstream_name, const std::string& upstream_hash) {
  const auto p = sidecar_path(artifact);
  if (!std::filesystem::exists(p)) {
    throw std::runtime_error("missing sidecar metadata: " + p.string());
  }
  const auto j = nlohmann::json::parse(read_file(p));
  const std::string recorded = j.value("upstream_fingerprint", "");
  if (recorded != upstream_hash) {
    throw std::runtime_error("fingerprint mismatch for " + artifact.string() + ": " +
                             upstream_name + " changed since this artifact was built (" +
                             recorded + " != " + upstream_hash + ")");
  }
}

}  // namespace churn
