#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "gusnet/encoder.hpp"
#include "gusnet/focal_loss.hpp"
#include "gusnet/trainer.hpp"
#include "gusnet/wordpiece.hpp"
#include "json.hpp"

namespace gusnet {

// Checkpoint directory layout: manifest.json, weights.bin, vocab.txt.
void save_checkpoint(const std::filesystem::path& dir, const TokenClassifier& model,
                     const WordPieceTokenizer& tokenizer, const FocalLossConfig& loss_cfg,
                     const nlohmann::json& training = nlohmann::json::object());

struct LoadedModel {
  TokenClassifier model;
  WordPieceTokenizer tokenizer;
  FocalLossConfig loss;
  nlohmann::json manifest;
};

// Throws ConfigError on a missing file, a label-space version mismatch or a
// weights hash that does not match the manifest.
LoadedModel load_checkpoint(const std::filesystem::path& dir);

struct WordPrediction {
  std::string word;
  std::array<double, kNumLabels> probs{};
  LabelSet labels;
};

struct TokenPredictions {
  std::string id;
  std::vector<WordPrediction> words;
};

// Word-level predictions read from each word's first subword. Throws
// EncodingError on empty text.
std::vector<TokenPredictions> predict(const std::vector<std::string>& texts,
                                      const TokenClassifier& model,
                                      const WordPieceTokenizer& tokenizer, double threshold);

nlohmann::json predictions_to_json(const TokenPredictions& p);

}  // namespace gusnet
