#include <gtest/gtest.h>

#include "gusnet/error.hpp"
#include "gusnet/labels.hpp"
#include "gusnet/rng.hpp"
#include "gusnet/text.hpp"

using namespace gusnet;

TEST(Text, SplitWordsDetachesPunctuation) {
  EXPECT_EQ(split_words("  All immigrants are lazy, really?"),
            (std::vector<std::string>{"All", "immigrants", "are", "lazy", ",", "really", "?"}));
  EXPECT_EQ(split_words("don't"), (std::vector<std::string>{"don", "'", "t"}));
  EXPECT_TRUE(split_words(" \t\n").empty());
}

TEST(Text, QuestionDetectionTrims) {
  EXPECT_TRUE(ends_with_question_mark("Why?  "));
  EXPECT_FALSE(ends_with_question_mark("Why? No."));
  EXPECT_FALSE(ends_with_question_mark(""));
}

TEST(Text, Fnv1aKnownVectors) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(fnv1a64("foobar"), 0x85944171f73967e8ULL);
  EXPECT_EQ(hex64(0xabcULL), "0000000000000abc");
}

TEST(Labels, OrderingIsFixed) {
  ASSERT_EQ(kNumLabels, 7u);
  const std::vector<std::string> expected = {"O",        "B-GEN",    "I-GEN",   "B-UNFAIR",
                                             "I-UNFAIR", "B-STEREO", "I-STEREO"};
  for (std::size_t i = 0; i < kNumLabels; ++i) {
    EXPECT_EQ(label_name(static_cast<Label>(i)), expected[i]);
    EXPECT_EQ(parse_label(expected[i]), static_cast<Label>(i));
  }
  EXPECT_FALSE(parse_label("B-FOO").has_value());
}

TEST(Labels, EncodeLabelSetExamples) {
  EXPECT_EQ(encode_label_set(LabelSet::outside()), (LabelRow{1, 0, 0, 0, 0, 0, 0}));
  EXPECT_EQ(encode_label_set({Label::kBGen, Label::kBStereo}), (LabelRow{0, 1, 0, 0, 0, 1, 0}));
  EXPECT_THROW(encode_label_set({Label::kO, Label::kBGen}), ValidationError);
  EXPECT_THROW(encode_label_set(LabelSet{}), ValidationError);
}

TEST(Labels, DecodeInvertsEncodeForEveryWellFormedSet) {
  for (unsigned bits = 1; bits < 128; ++bits) {
    const LabelSet s(static_cast<std::uint8_t>(bits));
    if (!s.well_formed()) {
      EXPECT_THROW(encode_label_set(s), ValidationError) << bits;
      continue;
    }
    EXPECT_EQ(decode_label_row(encode_label_set(s)), s);
  }
  EXPECT_TRUE(is_ignore_row(kIgnoreRow));
}

TEST(Labels, EntityHelpers) {
  EXPECT_EQ(begin_label(EntityClass::kUnfair), Label::kBUnfair);
  EXPECT_EQ(inside_label(EntityClass::kStereo), Label::kIStereo);
  EXPECT_EQ(tag_name(Tag::kB, EntityClass::kGen), "B-GEN");
  EXPECT_EQ(tag_name(Tag::kO, EntityClass::kGen), "O");
  EXPECT_EQ(parse_entity_class("STEREO"), EntityClass::kStereo);
  EXPECT_EQ(label_set_from_names({"I-GEN", "B-UNFAIR"}),
            LabelSet({Label::kIGen, Label::kBUnfair}));
}

TEST(Rng, DeterministicAndInRange) {
  Rng a(5), b(5);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next(), b.next());
  Rng r(9);
  for (int i = 0; i < 1000; ++i) {
    EXPECT_LT(r.below(7), 7u);
    const double u = r.uniform();
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
  }
}
