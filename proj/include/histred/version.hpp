#ifndef HISTRED_VERSION_HPP
#define HISTRED_VERSION_HPP

#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace histred {

inline constexpr std::string_view kToolVersion = "histred 0.1.0";

inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex_hash(std::string_view bytes) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(bytes)));
  return buf;
}

/// 16 hex digits over the canonical (sorted-key, compact) JSON dump.
inline std::string config_hash(const nlohmann::json& config) { return hex_hash(config.dump()); }

}  // namespace histred

#endif  // HISTRED_VERSION_HPP
