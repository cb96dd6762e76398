#pragma once

#include <cstdint>
#include <string_view>

namespace sslstm {

/// 64-bit FNV-1a; identifies lexicon and embedding contents in checkpoints.
constexpr std::uint64_t fnv1a64(std::string_view bytes,
                                std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace sslstm
