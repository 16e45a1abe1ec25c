#pragma once

// Fixed token vocabulary shared by the script language, the output wrapper tags and the
// toy policy's action space.
//
//   id 0          end of sequence
//   ids 1..4      <think> </think> <code> </code>
//   ids 5..17     script keywords and plane ids
//   ids 18..22    ( ) , ; and a unary minus
//   ids 23..27    reasoning words used by narration bodies
//   ids 28..284   numeric literals k * 0.25 for k = 0..256, i.e. the grid [0, 64]
//
// Negative literals are a minus token followed by a magnitude.

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "cadforge/cadlang.hpp"

namespace cadforge {

using TokenId = std::uint16_t;
using TokenSeq = std::vector<TokenId>;

namespace vocab {

inline constexpr TokenId kEos = 0;
inline constexpr TokenId kThinkOpen = 1;
inline constexpr TokenId kThinkClose = 2;
inline constexpr TokenId kCodeOpen = 3;
inline constexpr TokenId kCodeClose = 4;
inline constexpr TokenId kFirstWord = 5;
inline constexpr std::array<std::string_view, 23> kWords = {
    "workplane", "XY",      "YZ", "XZ", "rect", "circle", "polygon", "polyline",
    "extrude",   "hole",    "through", "chamfer", "cut", "(", ")", ",", ";", "-",
    "step",      "plan",    "check",   "view",    "dim"};
inline constexpr TokenId kLParen = kFirstWord + 13;
inline constexpr TokenId kRParen = kFirstWord + 14;
inline constexpr TokenId kComma = kFirstWord + 15;
inline constexpr TokenId kSemi = kFirstWord + 16;
inline constexpr TokenId kMinus = kFirstWord + 17;
inline constexpr TokenId kFirstNumber = kFirstWord + static_cast<TokenId>(kWords.size());
inline constexpr double kGrid = 0.25;
inline constexpr int kGridSteps = 256;
inline constexpr double kMaxMagnitude = kGrid * kGridSteps;
inline constexpr std::size_t kSize = kFirstNumber + kGridSteps + 1;

inline constexpr TokenId word(std::string_view w) {
  for (std::size_t i = 0; i < kWords.size(); ++i)
    if (kWords[i] == w) return static_cast<TokenId>(kFirstWord + i);
  return kEos;
}

inline constexpr bool is_number(TokenId t) { return t >= kFirstNumber && t < kSize; }
inline double number_value(TokenId t) { return (t - kFirstNumber) * kGrid; }

}  // namespace vocab

class TokenizeError : public std::runtime_error {
 public:
  enum class Kind { OutOfVocabulary, Syntax };
  TokenizeError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

/// Nearest grid token for a magnitude; throws OutOfVocabulary beyond 64.
inline TokenId quantize(double magnitude) {
  const double steps = std::round(magnitude / vocab::kGrid);
  if (!(steps >= 0.0) || steps > vocab::kGridSteps) {
    throw TokenizeError(TokenizeError::Kind::OutOfVocabulary,
                        "numeric literal " + format_number(magnitude) + " outside quantization range");
  }
  return static_cast<TokenId>(vocab::kFirstNumber + static_cast<int>(steps));
}

/// Tokenize script text, optionally containing wrapper tags and reasoning words.
inline TokenSeq tokenize(std::string_view text) {
  TokenSeq out;
  std::size_t i = 0;
  const auto starts_with = [&](std::string_view s) { return text.substr(i, s.size()) == s; };
  while (i < text.size()) {
    const char c = text[i];
    if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
      ++i;
      continue;
    }
    if (c == '<') {
      static constexpr std::array<std::pair<std::string_view, TokenId>, 4> tags = {{
          {"<think>", vocab::kThinkOpen},
          {"</think>", vocab::kThinkClose},
          {"<code>", vocab::kCodeOpen},
          {"</code>", vocab::kCodeClose},
      }};
      bool matched = false;
      for (const auto& [tag, id] : tags) {
        if (starts_with(tag)) {
          out.push_back(id);
          i += tag.size();
          matched = true;
          break;
        }
      }
      if (!matched) throw TokenizeError(TokenizeError::Kind::Syntax, "unknown tag");
      continue;
    }
    if (c == '(' || c == ')' || c == ',' || c == ';') {
      out.push_back(vocab::word(std::string_view(&text[i], 1)));
      ++i;
      continue;
    }
    if ((c >= '0' && c <= '9') || c == '.' || c == '-' || c == '+') {
      std::size_t end = i;
      bool negative = false;
      if (text[end] == '-' || text[end] == '+') {
        negative = text[end] == '-';
        ++end;
      }
      const std::size_t digits_begin = end;
      while (end < text.size() && ((text[end] >= '0' && text[end] <= '9') || text[end] == '.')) ++end;
      if (end < text.size() && (text[end] == 'e' || text[end] == 'E')) {
        std::size_t exp = end + 1;
        if (exp < text.size() && (text[exp] == '-' || text[exp] == '+')) ++exp;
        if (exp < text.size() && text[exp] >= '0' && text[exp] <= '9') {
          end = exp;
          while (end < text.size() && text[end] >= '0' && text[end] <= '9') ++end;
        }
      }
      double v = 0.0;
      const char* first = text.data() + digits_begin;
      const char* last = text.data() + end;
      const auto res = std::from_chars(first, last, v);
      if (digits_begin == end || res.ec != std::errc() || res.ptr != last) {
        throw TokenizeError(TokenizeError::Kind::Syntax,
                            "malformed number '" + std::string(text.substr(i, end - i)) + "'");
      }
      const TokenId num = quantize(v);
      if (negative && num != vocab::kFirstNumber) out.push_back(vocab::kMinus);
      out.push_back(num);
      i = end;
      continue;
    }
    if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z')) {
      std::size_t end = i;
      while (end < text.size() && ((text[end] >= 'a' && text[end] <= 'z') ||
                                   (text[end] >= 'A' && text[end] <= 'Z') ||
                                   (text[end] >= '0' && text[end] <= '9') || text[end] == '_'))
        ++end;
      const std::string_view w = text.substr(i, end - i);
      const TokenId id = vocab::word(w);
      if (id == vocab::kEos || id == vocab::kMinus)
        throw TokenizeError(TokenizeError::Kind::OutOfVocabulary, "unknown word '" + std::string(w) + "'");
      out.push_back(id);
      i = end;
      continue;
    }
    throw TokenizeError(TokenizeError::Kind::Syntax, std::string("unexpected character '") + c + "'");
  }
  return out;
}

/// Text for a token sequence; stops at the first end-of-sequence token.
inline std::string detokenize(std::span<const TokenId> tokens) {
  std::string out;
  bool glue = true;  // suppress the separator before the next token
  for (const TokenId t : tokens) {
    if (t == vocab::kEos) break;
    if (t >= vocab::kSize)
      throw TokenizeError(TokenizeError::Kind::OutOfVocabulary, "token id " + std::to_string(t) + " out of range");
    std::string piece;
    bool attach_left = false;
    bool attach_right = false;
    switch (t) {
      case vocab::kThinkOpen: piece = "<think>"; attach_right = true; break;
      case vocab::kThinkClose: piece = "</think>"; attach_left = true; break;
      case vocab::kCodeOpen: piece = "<code>"; attach_right = true; break;
      case vocab::kCodeClose: piece = "</code>"; attach_left = true; break;
      case vocab::kLParen: piece = "("; attach_right = true; break;
      case vocab::kRParen: piece = ")"; attach_left = true; break;
      case vocab::kComma: piece = ","; attach_left = true; attach_right = true; break;
      case vocab::kSemi: piece = ";"; attach_left = true; break;
      case vocab::kMinus: piece = "-"; attach_right = true; break;
      default:
        if (vocab::is_number(t)) {
          piece = format_number(vocab::number_value(t));
        } else {
          piece = std::string(vocab::kWords[t - vocab::kFirstWord]);
        }
    }
    if (!glue && !attach_left) out += ' ';
    out += piece;
    glue = attach_right;
  }
  return out;
}

inline std::string token_name(TokenId t) {
  switch (t) {
    case vocab::kEos: return "EOS";
    case vocab::kThinkOpen: return "THINK_OPEN";
    case vocab::kThinkClose: return "THINK_CLOSE";
    case vocab::kCodeOpen: return "CODE_OPEN";
    case vocab::kCodeClose: return "CODE_CLOSE";
    default: break;
  }
  if (vocab::is_number(t)) return "NUM(" + format_number(vocab::number_value(t)) + ")";
  if (t < vocab::kFirstNumber) return std::string(vocab::kWords[t - vocab::kFirstWord]);
  return "INVALID";
}

}  // namespace cadforge
