#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ssmlab/ring.hpp"

namespace ssmlab {

// Read markers and thought tokens are distinct kinds, not magic payload
// values, so rules and policies can branch on them directly. Padding is
// reserved for filler symbols that no rule should act on.
enum class TokenKind { Data, ReadMarker, Thought, Padding };

std::string to_string(TokenKind kind);

// Unembedded stream symbol. A machine's embed function lifts these to
// ring-valued Tokens; most streams carry one integer per token.
struct RawToken {
  TokenKind kind = TokenKind::Data;
  std::vector<uint64_t> values;

  RawToken() = default;
  explicit RawToken(uint64_t value) : values{value} {}
  RawToken(TokenKind k, std::vector<uint64_t> v) : kind(k), values(std::move(v)) {}

  static RawToken read_marker() { return RawToken(TokenKind::ReadMarker, {}); }
  static RawToken thought(std::vector<uint64_t> v) {
    return RawToken(TokenKind::Thought, std::move(v));
  }

  friend bool operator==(const RawToken& a, const RawToken& b) {
    return a.kind == b.kind && a.values == b.values;
  }
  friend bool operator!=(const RawToken& a, const RawToken& b) { return !(a == b); }
};

// Embedded token: fixed-width ring vector plus kind.
struct Token {
  TokenKind kind = TokenKind::Data;
  RingVector payload;

  Token(TokenKind k, RingVector p) : kind(k), payload(std::move(p)) {}
  static Token zero(TokenKind k, int width, Precision p) {
    return Token(k, RingVector::zero(width, p));
  }

  friend bool operator==(const Token& a, const Token& b) {
    return a.kind == b.kind && a.payload == b.payload;
  }
  friend bool operator!=(const Token& a, const Token& b) { return !(a == b); }
};

}  // namespace ssmlab
