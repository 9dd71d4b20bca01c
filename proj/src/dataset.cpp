#include "gusnet/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <spdlog/spdlog.h>

#include "gusnet/error.hpp"
#include "gusnet/jsonl.hpp"
#include "gusnet/rng.hpp"

namespace gusnet {

using nlohmann::json;

std::size_t EncodedExample::length() const {
  return static_cast<std::size_t>(std::count(attention_mask.begin(), attention_mask.end(), 1));
}

EncodedExample encode_words(std::string id, const std::vector<std::string>& words,
                            std::span<const LabelSet> labels, const WordPieceTokenizer& tokenizer,
                            std::size_t max_len) {
  if (words.empty()) throw EncodingError("sentence " + id + " is empty");
  if (max_len < 3) throw EncodingError("max_len must leave room for special tokens");
  if (!labels.empty() && labels.size() != words.size()) {
    throw EncodingError("sentence " + id + ": labels misaligned with words");
  }
  EncodedExample e;
  e.id = std::move(id);
  e.input_ids.assign(max_len, tokenizer.pad_id());
  e.attention_mask.assign(max_len, 0);
  e.labels.assign(max_len, kIgnoreRow);
  std::size_t pos = 0;
  e.input_ids[pos] = tokenizer.cls_id();
  e.attention_mask[pos++] = 1;
  for (std::size_t w = 0; w < words.size(); ++w) {
    const auto ids = tokenizer.encode_word(words[w]);
    if (pos + ids.size() > max_len - 1) {
      e.truncated_words = words.size() - w;
      break;
    }
    const LabelRow row = labels.empty() ? kIgnoreRow : encode_label_set(labels[w]);
    const int first = static_cast<int>(pos);
    for (int id : ids) {
      e.input_ids[pos] = id;
      e.attention_mask[pos] = 1;
      e.labels[pos] = row;
      ++pos;
    }
    e.word_spans.emplace_back(first, static_cast<int>(pos));
  }
  e.input_ids[pos] = tokenizer.sep_id();
  e.attention_mask[pos] = 1;
  if (e.truncated_words) {
    spdlog::warn("sentence {}: truncated {} trailing word(s) to fit {} tokens", e.id,
                 e.truncated_words, max_len);
  }
  return e;
}

EncodedExample tokenize_and_align(const AnnotatedSentence& sentence,
                                  const WordPieceTokenizer& tokenizer, std::size_t max_len) {
  if (sentence.words.empty()) throw EncodingError("sentence " + sentence.id + " is empty");
  if (sentence.merged.size() != sentence.words.size()) {
    throw EncodingError("sentence " + sentence.id + " has no merged labels");
  }
  return encode_words(sentence.id, sentence.words, sentence.merged, tokenizer, max_len);
}

std::vector<LabelSet> decode_word_labels(const EncodedExample& example) {
  std::vector<LabelSet> out;
  for (const auto& [first, last] : example.word_spans) {
    const LabelRow& row = example.labels.at(static_cast<std::size_t>(first));
    for (int k = first + 1; k < last; ++k) {
      if (example.labels[static_cast<std::size_t>(k)] != row) {
        throw EncodingError("sentence " + example.id + ": subwords of one word disagree");
      }
    }
    out.push_back(decode_label_row(row));
  }
  return out;
}

json encoded_to_json(const EncodedExample& e) {
  json labels = json::array();
  for (const auto& row : e.labels) labels.push_back(std::vector<int>(row.begin(), row.end()));
  json spans = json::array();
  for (const auto& [a, b] : e.word_spans) spans.push_back({a, b});
  return json{{"id", e.id},
              {"input_ids", e.input_ids},
              {"attention_mask", e.attention_mask},
              {"labels", labels},
              {"word_spans", spans},
              {"truncated_words", e.truncated_words}};
}

EncodedExample encoded_from_json(const json& doc) {
  EncodedExample e;
  e.id = doc.at("id").get<std::string>();
  e.input_ids = doc.at("input_ids").get<std::vector<int>>();
  e.attention_mask = doc.at("attention_mask").get<std::vector<int>>();
  for (const auto& row : doc.at("labels")) {
    const auto v = row.get<std::vector<int>>();
    if (v.size() != kNumLabels) throw EncodingError("label row must have 7 entries");
    LabelRow r{};
    for (std::size_t k = 0; k < kNumLabels; ++k) r[k] = static_cast<std::int8_t>(v[k]);
    e.labels.push_back(r);
  }
  for (const auto& span : doc.at("word_spans")) {
    e.word_spans.emplace_back(span.at(0).get<int>(), span.at(1).get<int>());
  }
  e.truncated_words = doc.value("truncated_words", std::size_t{0});
  return e;
}

std::array<std::size_t, 3> split_sizes(std::size_t n, const SplitRatios& ratios) {
  const std::array<double, 3> r = {ratios.train, ratios.validation, ratios.test};
  const double total = r[0] + r[1] + r[2];
  if (!(total > 0) || r[0] < 0 || r[1] < 0 || r[2] < 0) {
    throw ConfigError("split ratios must be non-negative with a positive sum");
  }
  std::array<std::size_t, 3> sizes{};
  std::array<double, 3> remainder{};
  std::size_t assigned = 0;
  for (int k = 0; k < 3; ++k) {
    const double exact = static_cast<double>(n) * r[k] / total;
    // Guard against 0.7 * n landing a hair below an integer.
    const double fl = std::floor(exact + 1e-9);
    sizes[k] = static_cast<std::size_t>(fl);
    remainder[k] = exact - fl;
    assigned += sizes[k];
  }
  std::array<int, 3> order = {0, 1, 2};
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return remainder[a] > remainder[b] + 1e-12; });
  for (std::size_t i = 0; assigned < n; ++i, ++assigned) ++sizes[order[i % 3]];
  return sizes;
}

std::uint8_t presence_signature(const AnnotatedSentence& sentence) {
  std::uint8_t sig = 0;
  for (LabelSet set : sentence.merged) {
    for (EntityClass cls : kEntityClasses) {
      if (set.has(cls)) sig |= static_cast<std::uint8_t>(1u << static_cast<unsigned>(cls));
    }
  }
  return sig;
}

DatasetSplit split_by_signature(const std::vector<std::string>& ids,
                                const std::vector<std::uint8_t>& signatures,
                                const SplitRatios& ratios, std::uint64_t seed) {
  if (ids.size() != signatures.size()) throw ConfigError("ids and signatures differ in length");
  if (ids.size() < 10) {
    throw ConfigError("splitting needs at least 10 sentences, got " + std::to_string(ids.size()));
  }
  const auto sizes = split_sizes(ids.size(), ratios);
  DatasetSplit split;
  split.seed = seed;
  split.ratios = ratios;
  Rng rng(seed);

  std::array<std::vector<std::size_t>, 8> cells;
  for (std::size_t i = 0; i < ids.size(); ++i) cells[signatures[i] & 7u].push_back(i);
  std::vector<std::size_t> order;
  order.reserve(ids.size());
  for (const auto& cell : cells) {
    if (!cell.empty() && cell.size() < 3) split.stratified = false;
  }
  if (split.stratified) {
    for (auto& cell : cells) {
      rng.shuffle(std::span<std::size_t>(cell));
      order.insert(order.end(), cell.begin(), cell.end());
    }
  } else {
    split.warning = "a presence-signature cell has fewer than 3 sentences; using a plain shuffle";
    spdlog::warn("{}", split.warning);
    order.resize(ids.size());
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(std::span<std::size_t>(order));
  }

  // Smooth weighted round-robin hands out exactly sizes[k] slots to split k,
  // spread evenly along `order`, so every signature block is cut in ratio.
  std::array<std::vector<std::string>*, 3> dest = {&split.train, &split.validation, &split.test};
  std::array<long long, 3> current{};
  const auto n = static_cast<long long>(ids.size());
  for (std::size_t idx : order) {
    int pick = 0;
    for (int k = 0; k < 3; ++k) {
      current[k] += static_cast<long long>(sizes[k]);
      if (current[k] > current[pick]) pick = k;
    }
    current[pick] -= n;
    dest[pick]->push_back(ids[idx]);
  }
  return split;
}

DatasetSplit split_dataset(const std::vector<AnnotatedSentence>& sentences,
                           const SplitRatios& ratios, std::uint64_t seed) {
  std::vector<std::string> ids;
  std::vector<std::uint8_t> sigs;
  for (const auto& s : sentences) {
    ids.push_back(s.id);
    sigs.push_back(presence_signature(s));
  }
  return split_by_signature(ids, sigs, ratios, seed);
}

json split_to_json(const DatasetSplit& split) {
  return json{{"seed", split.seed},
              {"ratios", {split.ratios.train, split.ratios.validation, split.ratios.test}},
              {"train_ids", split.train},
              {"val_ids", split.validation},
              {"test_ids", split.test},
              {"stratified", split.stratified}};
}

DatasetSplit split_from_json(const json& doc) {
  DatasetSplit split;
  split.seed = doc.at("seed").get<std::uint64_t>();
  const auto r = doc.at("ratios").get<std::vector<double>>();
  if (r.size() != 3) throw ConfigError("split manifest ratios must have 3 entries");
  split.ratios = {r[0], r[1], r[2]};
  split.train = doc.at("train_ids").get<std::vector<std::string>>();
  split.validation = doc.at("val_ids").get<std::vector<std::string>>();
  split.test = doc.at("test_ids").get<std::vector<std::string>>();
  split.stratified = doc.value("stratified", true);
  return split;
}

CorpusStats corpus_stats(const std::vector<AnnotatedSentence>& sentences) {
  CorpusStats stats;
  stats.sentences = sentences.size();
  for (const auto& s : sentences) {
    stats.total_tokens += s.merged.size();
    for (LabelSet set : s.merged) {
      for (Label l : set.labels()) ++stats.label_counts[static_cast<std::size_t>(l)];
    }
    if (!s.bias_type.empty()) ++stats.bias_type_counts[s.bias_type];
    (s.is_question ? stats.questions : stats.statements) += 1;
  }
  for (std::size_t k = 0; k < kNumLabels; ++k) {
    stats.label_percentages[k] =
        stats.total_tokens == 0 ? 0.0
                                : 100.0 * static_cast<double>(stats.label_counts[k]) /
                                      static_cast<double>(stats.total_tokens);
  }
  stats.statement_ratio = stats.sentences == 0 ? 0.0
                                               : static_cast<double>(stats.statements) /
                                                     static_cast<double>(stats.sentences);
  return stats;
}

json stats_to_json(const CorpusStats& stats) {
  json labels = json::object();
  json pct = json::object();
  for (std::size_t k = 0; k < kNumLabels; ++k) {
    labels[std::string(kLabelNames[k])] = stats.label_counts[k];
    pct[std::string(kLabelNames[k])] = stats.label_percentages[k];
  }
  return json{{"sentences", stats.sentences},
              {"total_tokens", stats.total_tokens},
              {"label_counts", labels},
              {"label_percentages", pct},
              {"bias_type_counts", stats.bias_type_counts},
              {"statements", stats.statements},
              {"questions", stats.questions},
              {"statement_ratio", stats.statement_ratio}};
}

std::vector<AnnotatedSentence> load_annotated(const std::filesystem::path& path) {
  std::vector<AnnotatedSentence> out;
  for (const auto& row : read_jsonl(path)) out.push_back(annotated_from_json(row));
  return out;
}

void save_annotated(const std::filesystem::path& path,
                    const std::vector<AnnotatedSentence>& sentences) {
  std::vector<json> rows;
  for (const auto& s : sentences) rows.push_back(annotated_to_json(s));
  write_jsonl(path, rows);
}

}  // namespace gusnet
