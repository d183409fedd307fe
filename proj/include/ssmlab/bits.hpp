#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace ssmlab {

// Append-only bit string, MSB-first within each appended field.
// Used for message payloads and canonical map serialization, where
// payload sizes are counted in bits, not bytes.
class BitString {
 public:
  BitString() = default;

  // Appends the low `width` bits of `value`, most significant bit first.
  void append_field(uint64_t value, int width);
  void append_bit(bool bit);
  void append(const BitString& other);

  // Reads the `width`-bit field starting at bit offset `pos` (MSB first).
  uint64_t read_field(size_t pos, int width) const;
  bool read_bit(size_t pos) const;

  size_t size() const { return nbits_; }
  bool empty() const { return nbits_ == 0; }

  // Hex dump of the packed bits; the final nibble is zero-padded.
  std::string to_hex() const;

  friend bool operator==(const BitString& a, const BitString& b) {
    return a.nbits_ == b.nbits_ && a.bytes_ == b.bytes_;
  }
  friend bool operator!=(const BitString& a, const BitString& b) { return !(a == b); }

 private:
  std::vector<uint8_t> bytes_;
  size_t nbits_ = 0;
};

}  // namespace ssmlab
