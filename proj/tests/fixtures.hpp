#pragma once

#include <sstream>
#include <string>
#include <vector>

#include "gusnet/annotator.hpp"
#include "gusnet/dataset.hpp"
#include "gusnet/text.hpp"
#include "gusnet/wordpiece.hpp"

namespace gusnet::testing {

inline std::vector<Tag> tags_from(const std::string& spec) {
  std::vector<Tag> out;
  std::istringstream in(spec);
  std::string t;
  while (in >> t) out.push_back(t == "B" ? Tag::kB : t == "I" ? Tag::kI : Tag::kO);
  return out;
}

// Sentence from its text and three space-separated O/B/I streams.
inline AnnotatedSentence make_sentence(const std::string& id, const std::string& text,
                                       const std::string& gen, const std::string& unfair,
                                       const std::string& stereo) {
  const auto words = split_words(text);
  std::vector<EntityTagSequence> streams = {{EntityClass::kGen, words, tags_from(gen)},
                                            {EntityClass::kUnfair, words, tags_from(unfair)},
                                            {EntityClass::kStereo, words, tags_from(stereo)}};
  AnnotatedSentence s = merge_annotations(streams);
  s.id = id;
  s.text = text;
  s.bias_type = "fixture";
  s.is_question = ends_with_question_mark(text);
  return s;
}

// Eight short sentences covering every label, including multi-label words.
inline std::vector<AnnotatedSentence> overfit_fixture() {
  return {
      make_sentence("fx-1", "All immigrants are lazy .", "B I O O O", "O O O B O", "B I I I O"),
      make_sentence("fx-2", "The cat sat on the mat .", "O O O O O O O", "O O O O O O O",
                    "O O O O O O O"),
      make_sentence("fx-3", "Women always cry at work .", "B B O O O O", "O O O O O O",
                    "B I I I I O"),
      make_sentence("fx-4", "Those idiots ruin every city .", "B I O O O O", "O B B I I O",
                    "O O O O O O"),
      make_sentence("fx-5", "My neighbor grows tomatoes .", "O O O O O", "O O O O O", "O O O O O"),
      make_sentence("fx-6", "Rich people never care .", "B I B O O", "O O B I O", "B I I I O"),
      make_sentence("fx-7", "Engineers enjoy hiking on weekends .", "O O O O O O", "O O O O O O",
                    "O O O O O O"),
      make_sentence("fx-8", "Every teenager is a reckless thief .", "B I O O O O O",
                    "O O O O B I O", "B I I I I I O"),
  };
}

inline WordPieceTokenizer fixture_tokenizer(const std::vector<AnnotatedSentence>& sentences) {
  std::vector<std::vector<std::string>> corpus;
  for (const auto& s : sentences) corpus.push_back(s.words);
  return WordPieceTokenizer::build(corpus, 8000, 1);
}

inline std::vector<EncodedExample> encode_all(const std::vector<AnnotatedSentence>& sentences,
                                              const WordPieceTokenizer& tok,
                                              std::size_t max_len = kDefaultMaxLen) {
  std::vector<EncodedExample> out;
  for (const auto& s : sentences) out.push_back(tokenize_and_align(s, tok, max_len));
  return out;
}

}  // namespace gusnet::testing
