#include "trendlab/digest.hpp"

#include <cstdio>

namespace trendlab {

Digest& Digest::update(std::string_view bytes) {
  for (char c : bytes) {
    state_ ^= static_cast<unsigned char>(c);
    state_ *= 0x100000001b3ULL;
  }
  return *this;
}

Digest& Digest::update(std::int64_t value) {
  auto v = static_cast<std::uint64_t>(value);
  for (int i = 0; i < 8; ++i) {
    state_ ^= (v >> (8 * i)) & 0xffU;
    state_ *= 0x100000001b3ULL;
  }
  return *this;
}

std::string Digest::hex() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(state_));
  return buf;
}

std::string hex_digest(std::string_view bytes) { return Digest{}.update(bytes).hex(); }

}  // namespace trendlab
