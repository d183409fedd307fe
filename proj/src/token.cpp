#include "ssmlab/token.hpp"

namespace ssmlab {

std::string to_string(TokenKind kind) {
  switch (kind) {
    case TokenKind::Data: return "data";
    case TokenKind::ReadMarker: return "read";
    case TokenKind::Thought: return "thought";
    case TokenKind::Padding: return "padding";
  }
  return "?";
}

}  // namespace ssmlab
