#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace churn {

// FNV-1a, used as the dataset/artifact fingerprint.
std::uint64_t fnv1a64(std::string_view bytes);
std::string fingerprint_hex(std::string_view bytes);

// Shortest-exact decimal for a double (17 significant digits); reloads
// bit-identically via strtod.
std::string format_double(double v);

std::string read_file(const std::filesystem::path& p);
void write_file(const std::filesystem::path& p, std::string_view bytes);

// Sidecar metadata (<artifact>.meta.json) carrying the fingerprints of the
// inputs an artifact was derived from. Downstream commands refuse to run on
// mismatching chains.
void write_sidecar(const std::filesystem::path& artifact,
                   const std::string& upstream_name, const std::string& upstream_hash);
// Throws if the sidecar is missing or the recorded hash differs.
void verify_sidecar(const std::filesystem::path& artifact,
                    const std::string& upstream_name, const std::string& upstream_hash);

}  // namespace churn
