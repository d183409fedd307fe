#include "ssmlab/bits.hpp"

#include "ssmlab/errors.hpp"

namespace ssmlab {

void BitString::append_bit(bool bit) {
  const size_t byte = nbits_ / 8;
  if (byte == bytes_.size()) bytes_.push_back(0);
  if (bit) bytes_[byte] |= uint8_t(0x80u >> (nbits_ % 8));
  ++nbits_;
}

void BitString::append_field(uint64_t value, int width) {
  if (width < 0 || width > 64) throw MismatchError("BitString: field width out of range");
  for (int i = width - 1; i >= 0; --i) append_bit((value >> i) & 1u);
}

void BitString::append(const BitString& other) {
  for (size_t i = 0; i < other.nbits_; ++i) append_bit(other.read_bit(i));
}

bool BitString::read_bit(size_t pos) const {
  if (pos >= nbits_) throw MismatchError("BitString: read past end");
  return (bytes_[pos / 8] >> (7 - pos % 8)) & 1u;
}

uint64_t BitString::read_field(size_t pos, int width) const {
  if (width < 0 || width > 64) throw MismatchError("BitString: field width out of range");
  uint64_t v = 0;
  for (int i = 0; i < width; ++i) v = (v << 1) | uint64_t(read_bit(pos + size_t(i)));
  return v;
}

std::string BitString::to_hex() const {
  static const char* digits = "0123456789abcdef";
  std::string out;
  const size_t nbytes = (nbits_ + 7) / 8;
  out.reserve(nbytes * 2);
  for (size_t i = 0; i < nbytes; ++i) {
    out.push_back(digits[bytes_[i] >> 4]);
    out.push_back(digits[bytes_[i] & 0xf]);
  }
  return out;
}

}  // namespace ssmlab
