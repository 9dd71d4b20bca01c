#include "gusnet/classifier.hpp"

#include "gusnet/error.hpp"
#include "gusnet/jsonl.hpp"
#include "gusnet/text.hpp"

namespace gusnet {

using nlohmann::json;
namespace fs = std::filesystem;

void save_checkpoint(const fs::path& dir, const TokenClassifier& model,
                     const WordPieceTokenizer& tokenizer, const FocalLossConfig& loss_cfg,
                     const json& training) {
  fs::create_directories(dir);
  model.save_weights(dir / "weights.bin");
  tokenizer.save(dir / "vocab.txt");
  json manifest{{"label_space_version", kLabelSpaceVersion},
                {"labels", std::vector<std::string>(kLabelNames.begin(), kLabelNames.end())},
                {"model", encoder_config_to_json(model.config())},
                {"focal_loss", focal_to_json(loss_cfg)},
                {"lowercase", tokenizer.lowercase()},
                {"weights_hash", hex64(model.weights_hash())},
                {"training", training}};
  write_json(dir / "manifest.json", manifest);
}

LoadedModel load_checkpoint(const fs::path& dir) {
  const json manifest = read_json(dir / "manifest.json");
  if (manifest.value("label_space_version", std::string()) != kLabelSpaceVersion) {
    throw ConfigError("checkpoint " + dir.string() + " uses label space '" +
                      manifest.value("label_space_version", std::string("?")) + "', expected " +
                      std::string(kLabelSpaceVersion));
  }
  WordPieceTokenizer tokenizer = WordPieceTokenizer::load(dir / "vocab.txt");
  if (!manifest.value("lowercase", true)) {
    tokenizer = WordPieceTokenizer(tokenizer.vocab(), false);
  }
  EncoderConfig cfg = encoder_config_from_json(manifest.at("model"));
  if (cfg.vocab_size != tokenizer.size()) {
    throw ConfigError("checkpoint vocab.txt does not match the model vocab size");
  }
  TokenClassifier model(cfg, 0);
  model.load_weights(dir / "weights.bin");
  const std::string expected = manifest.value("weights_hash", std::string());
  if (!expected.empty() && expected != hex64(model.weights_hash())) {
    throw ConfigError("weights hash mismatch in " + dir.string());
  }
  FocalLossConfig loss = focal_from_json(manifest.at("focal_loss"));
  return LoadedModel{std::move(model), std::move(tokenizer), loss, manifest};
}

std::vector<TokenPredictions> predict(const std::vector<std::string>& texts,
                                      const TokenClassifier& model,
                                      const WordPieceTokenizer& tokenizer, double threshold) {
  std::vector<TokenPredictions> out;
  out.reserve(texts.size());
  for (std::size_t i = 0; i < texts.size(); ++i) {
    const std::vector<std::string> words = split_words(texts[i]);
    if (words.empty()) throw EncodingError("text " + std::to_string(i) + " is empty");
    const std::string id = "text-" + std::to_string(i);
    const EncodedExample e = encode_words(id, words, {}, tokenizer, model.config().max_len);
    const Eigen::MatrixXd probs = example_probabilities(model, e);
    TokenPredictions tp;
    tp.id = id;
    for (std::size_t w = 0; w < e.word_spans.size(); ++w) {
      const Eigen::RowVectorXd row = probs.row(e.word_spans[w].first);
      WordPrediction wp;
      wp.word = words[w];
      for (std::size_t l = 0; l < kNumLabels; ++l) wp.probs[l] = row(static_cast<Eigen::Index>(l));
      wp.labels = threshold_label_set(row, threshold);
      tp.words.push_back(std::move(wp));
    }
    out.push_back(std::move(tp));
  }
  return out;
}

json predictions_to_json(const TokenPredictions& p) {
  json words = json::array();
  for (const auto& w : p.words) {
    json probs = json::object();
    for (std::size_t l = 0; l < kNumLabels; ++l) probs[std::string(kLabelNames[l])] = w.probs[l];
    words.push_back({{"word", w.word}, {"labels", w.labels.names()}, {"probs", probs}});
  }
  return json{{"id", p.id}, {"words", words}};
}

}  // namespace gusnet
