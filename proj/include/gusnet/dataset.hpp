#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gusnet/annotator.hpp"
#include "gusnet/labels.hpp"
#include "gusnet/wordpiece.hpp"
#include "json.hpp"

namespace gusnet {

inline constexpr std::size_t kDefaultMaxLen = 128;

// Encoder-ready sentence: [CLS] subwords [SEP] [PAD]..., every subword row
// carrying its word's label vector and every special/padding row IGNORE.
struct EncodedExample {
  std::string id;
  std::vector<int> input_ids;
  std::vector<int> attention_mask;
  std::vector<LabelRow> labels;
  // Subword range [first, last) of each encoded word.
  std::vector<std::pair<int, int>> word_spans;
  std::size_t truncated_words = 0;

  std::size_t max_len() const { return input_ids.size(); }
  // Number of non-padding positions.
  std::size_t length() const;
};

// Encodes `words`; `labels` may be empty (inference), in which case every
// row is IGNORE. Words that do not fit in max_len - 2 subwords are dropped.
EncodedExample encode_words(std::string id, const std::vector<std::string>& words,
                            std::span<const LabelSet> labels, const WordPieceTokenizer& tokenizer,
                            std::size_t max_len = kDefaultMaxLen);
// Throws EncodingError on an empty sentence.
EncodedExample tokenize_and_align(const AnnotatedSentence& sentence,
                                  const WordPieceTokenizer& tokenizer,
                                  std::size_t max_len = kDefaultMaxLen);
// Word label-sets read back from each word's subword rows. Throws
// EncodingError when the subwords of one word disagree.
std::vector<LabelSet> decode_word_labels(const EncodedExample& example);

nlohmann::json encoded_to_json(const EncodedExample& e);
EncodedExample encoded_from_json(const nlohmann::json& doc);

struct SplitRatios {
  double train = 0.70;
  double validation = 0.15;
  double test = 0.15;
};

// Largest-remainder apportionment of n; ties go to the earlier split.
std::array<std::size_t, 3> split_sizes(std::size_t n, const SplitRatios& ratios);

struct DatasetSplit {
  std::vector<std::string> train;
  std::vector<std::string> validation;
  std::vector<std::string> test;
  std::uint64_t seed = 0;
  SplitRatios ratios;
  bool stratified = true;
  std::string warning;
};

// Bit c set iff the sentence has any label of entity class c.
std::uint8_t presence_signature(const AnnotatedSentence& sentence);

// Stratified on the 8 presence signatures; falls back to a plain shuffle
// (stratified = false, warning set) when some occupied cell has fewer than
// three members. Throws ConfigError for fewer than 10 items.
DatasetSplit split_by_signature(const std::vector<std::string>& ids,
                                const std::vector<std::uint8_t>& signatures,
                                const SplitRatios& ratios, std::uint64_t seed);
DatasetSplit split_dataset(const std::vector<AnnotatedSentence>& sentences,
                           const SplitRatios& ratios, std::uint64_t seed);

nlohmann::json split_to_json(const DatasetSplit& split);
DatasetSplit split_from_json(const nlohmann::json& doc);

struct CorpusStats {
  std::size_t sentences = 0;
  std::size_t total_tokens = 0;
  std::array<std::size_t, kNumLabels> label_counts{};
  std::array<double, kNumLabels> label_percentages{};  // of total_tokens, in percent
  std::map<std::string, std::size_t> bias_type_counts;
  std::size_t statements = 0;
  std::size_t questions = 0;
  double statement_ratio = 0.0;  // statements / sentences
};

CorpusStats corpus_stats(const std::vector<AnnotatedSentence>& sentences);
nlohmann::json stats_to_json(const CorpusStats& stats);

std::vector<AnnotatedSentence> load_annotated(const std::filesystem::path& path);
void save_annotated(const std::filesystem::path& path,
                    const std::vector<AnnotatedSentence>& sentences);

}  // namespace gusnet
