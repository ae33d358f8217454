#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace smelt {

/// Incremental SHA-256 with length-prefixed field framing, so structurally
/// different inputs can never collide on concatenation.
class Digest {
 public:
  Digest();
  ~Digest();
  Digest(const Digest&) = delete;
  Digest& operator=(const Digest&) = delete;

  void update(std::string_view bytes);
  /// Appends an 8-byte little-endian length header before the payload.
  void field(std::string_view bytes);
  void field_u64(std::uint64_t v);

  /// Lowercase hex of the final digest; the object must not be reused.
  std::string hex();

 private:
  void* ctx_;
};

std::string sha256_hex(std::string_view bytes);

}  // namespace smelt
