#pragma once

#include <cstdint>
#include <string_view>

// Set by the build from `git describe`; plain version otherwise.
#ifndef CONICBAYES_VERSION
#define CONICBAYES_VERSION "0.1.0"
#endif

namespace conic {

inline constexpr std::string_view kVersion = CONICBAYES_VERSION;

/// 64-bit FNV-1a; used for config and manifest hashes.
inline std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace conic
