#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace cosum {

// Incremental SHA-256 used for corpus content hashes, matrix cache keys and
// run identifiers. Output is lowercase hex.
class ContentHasher {
 public:
  ContentHasher();
  ~ContentHasher();
  ContentHasher(const ContentHasher&) = delete;
  ContentHasher& operator=(const ContentHasher&) = delete;

  ContentHasher& update(std::string_view bytes);
  // Length-prefixed so that ("ab","c") and ("a","bc") hash differently.
  ContentHasher& field(std::string_view bytes);
  ContentHasher& field(std::uint64_t value);
  std::string hex_digest();

 private:
  void* ctx_;
};

std::string sha256_hex(std::string_view bytes);

}  // namespace cosum
