#include "chansel/hash.hpp"

#include "chansel/error.hpp"

#include <openssl/evp.h>

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <vector>

namespace chansel {

namespace {
EVP_MD_CTX *as_ctx(void *p) { return static_cast<EVP_MD_CTX *>(p); }
} // namespace

Hasher::Hasher() : ctx_(EVP_MD_CTX_new()) {
  if (ctx_ == nullptr || EVP_DigestInit_ex(as_ctx(ctx_), EVP_sha256(), nullptr) != 1)
    throw IoError("sha256 init failed");
}

Hasher::~Hasher() { EVP_MD_CTX_free(as_ctx(ctx_)); }

Hasher &Hasher::update(std::string_view text) {
  EVP_DigestUpdate(as_ctx(ctx_), text.data(), text.size());
  return *this;
}

Hasher &Hasher::update(std::span<const std::byte> bytes) {
  EVP_DigestUpdate(as_ctx(ctx_), bytes.data(), bytes.size());
  return *this;
}

Hasher &Hasher::update(std::span<const double> values) {
  if constexpr (std::endian::native == std::endian::little) {
    return update(std::as_bytes(values));
  } else {
    std::vector<std::uint64_t> swapped(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
      std::uint64_t v;
      std::memcpy(&v, &values[i], sizeof v);
      swapped[i] = __builtin_bswap64(v);
    }
    return update(std::as_bytes(std::span<const std::uint64_t>(swapped)));
  }
}

std::string Hasher::hex_digest() {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  EVP_DigestFinal_ex(as_ctx(ctx_), digest.data(), &len);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < 8 && i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xF]);
  }
  return out;
}

std::string hash_text(std::string_view text) {
  Hasher h;
  h.update(text);
  return h.hex_digest();
}

} // namespace chansel
