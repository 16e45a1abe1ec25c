#include <gtest/gtest.h>

#include <set>

#include "cadforge/datagen.hpp"
#include "cadforge/tokens.hpp"

using namespace cadforge;

TEST(Vocabulary, LayoutIsStable) {
  EXPECT_EQ(vocab::kSize, 285u);
  EXPECT_EQ(vocab::kEos, 0);
  EXPECT_EQ(vocab::kFirstNumber, 28);
  EXPECT_EQ(vocab::word("extrude"), 13);
  std::set<std::string> names;
  for (std::size_t t = 0; t < vocab::kSize; ++t) names.insert(token_name(static_cast<TokenId>(t)));
  EXPECT_EQ(names.size(), vocab::kSize);
}

TEST(Tokenize, ExtrudeStatement) {
  const TokenSeq t = tokenize("extrude 4;");
  ASSERT_EQ(t.size(), 3u);
  EXPECT_EQ(t[0], vocab::word("extrude"));
  EXPECT_TRUE(vocab::is_number(t[1]));
  EXPECT_EQ(vocab::number_value(t[1]), 4.0);
  EXPECT_EQ(t[2], vocab::kSemi);
}

TEST(Tokenize, QuantizesToNearestGridValue) {
  EXPECT_EQ(vocab::number_value(quantize(3.14159)), 3.25);
  EXPECT_EQ(vocab::number_value(quantize(0.1)), 0.0);
  EXPECT_EQ(vocab::number_value(quantize(0.2)), 0.25);
  EXPECT_EQ(vocab::number_value(quantize(64)), 64.0);
  const TokenSeq t = tokenize("circle 3.14159;");
  EXPECT_EQ(vocab::number_value(t[1]), 3.25);
}

TEST(Tokenize, OutOfRangeLiteral) {
  try {
    (void)tokenize("rect 64.5 1;");
    FAIL();
  } catch (const TokenizeError& e) {
    EXPECT_EQ(e.kind(), TokenizeError::Kind::OutOfVocabulary);
  }
}

TEST(Tokenize, BadCharacterIsSyntaxError) {
  try {
    (void)tokenize("rect 1 $;");
    FAIL();
  } catch (const TokenizeError& e) {
    EXPECT_EQ(e.kind(), TokenizeError::Kind::Syntax);
  }
}

TEST(Tokenize, NegativeLiteralUsesMinusToken) {
  const TokenSeq t = tokenize("(-1.5,2)");
  ASSERT_EQ(t.size(), 6u);
  EXPECT_EQ(t[1], vocab::kMinus);
  EXPECT_EQ(vocab::number_value(t[2]), 1.5);
  EXPECT_EQ(detokenize(t), "(-1.5,2)");
}

TEST(Tokenize, WrapperTagsAndReasoningWords) {
  const TokenSeq t = tokenize("<think>step rect</think>\n<code>\nrect 1 1;</code>");
  EXPECT_EQ(t.front(), vocab::kThinkOpen);
  EXPECT_EQ(t[1], vocab::word("step"));
  EXPECT_EQ(t[3], vocab::kThinkClose);
  EXPECT_EQ(t[4], vocab::kCodeOpen);
  EXPECT_EQ(t.back(), vocab::kCodeClose);
}

TEST(Detokenize, StopsAtEos) {
  TokenSeq t = tokenize("extrude 4;");
  t.push_back(vocab::kEos);
  t.push_back(vocab::word("rect"));
  EXPECT_EQ(detokenize(t), "extrude 4;");
}

TEST(Detokenize, RejectsOutOfRangeIds) {
  const TokenSeq t{static_cast<TokenId>(vocab::kSize)};
  EXPECT_THROW((void)detokenize(t), TokenizeError);
}

TEST(Detokenize, GeneratorProgramsRoundTrip) {
  GenConfig cfg;
  for (std::uint64_t s = 0; s < 300; ++s) {
    const CadProgram p = gen_program(cfg, s);
    const std::string text = emit(p);
    const TokenSeq t = tokenize(text);
    for (TokenId id : t) ASSERT_LT(id, vocab::kSize);
    EXPECT_EQ(parse(detokenize(t)), p) << text;
  }
}
