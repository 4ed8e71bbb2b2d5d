#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace trendlab {

// Incremental 64-bit FNV-1a content hash. Used for series identities and
// config digests; not a cryptographic hash.
class Digest {
 public:
  Digest& update(std::string_view bytes);
  Digest& update(std::int64_t value);

  std::uint64_t value() const noexcept { return state_; }
  std::string hex() const;

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

std::string hex_digest(std::string_view bytes);

}  // namespace trendlab
