#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>

namespace chansel {

// Incremental SHA-256; digests are reported as the first 16 hex characters.
class Hasher {
public:
  Hasher();
  ~Hasher();
  Hasher(const Hasher &) = delete;
  Hasher &operator=(const Hasher &) = delete;

  Hasher &update(std::string_view text);
  Hasher &update(std::span<const std::byte> bytes);
  Hasher &update(std::span<const double> values);
  std::string hex_digest();

private:
  void *ctx_;
};

std::string hash_text(std::string_view text);

} // namespace chansel
