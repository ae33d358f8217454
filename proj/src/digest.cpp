#include "smelt/digest.hpp"

#include <openssl/evp.h>

#include <array>
#include <cstring>

#include "smelt/error.hpp"
#include "smelt/util.hpp"

namespace smelt {

Digest::Digest() : ctx_(EVP_MD_CTX_new()) {
  if (ctx_ == nullptr ||
      EVP_DigestInit_ex(static_cast<EVP_MD_CTX*>(ctx_), EVP_sha256(),
                        nullptr) != 1) {
    raise(Errc::internal, "sha256 init failed");
  }
}

Digest::~Digest() { EVP_MD_CTX_free(static_cast<EVP_MD_CTX*>(ctx_)); }

void Digest::update(std::string_view bytes) {
  if (EVP_DigestUpdate(static_cast<EVP_MD_CTX*>(ctx_), bytes.data(),
                       bytes.size()) != 1) {
    raise(Errc::internal, "sha256 update failed");
  }
}

void Digest::field_u64(std::uint64_t v) {
  unsigned char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
  update(std::string_view(reinterpret_cast<const char*>(buf), 8));
}

void Digest::field(std::string_view bytes) {
  field_u64(bytes.size());
  update(bytes);
}

std::string Digest::hex() {
  std::array<unsigned char, EVP_MAX_MD_SIZE> out{};
  unsigned int len = 0;
  if (EVP_DigestFinal_ex(static_cast<EVP_MD_CTX*>(ctx_), out.data(), &len) !=
      1) {
    raise(Errc::internal, "sha256 final failed");
  }
  return to_hex(out.data(), len);
}

std::string sha256_hex(std::string_view bytes) {
  Digest d;
  d.update(bytes);
  return d.hex();
}

}  // namespace smelt
