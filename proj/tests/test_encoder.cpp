#include <gtest/gtest.h>

#include <cmath>

#include "fixtures.hpp"
#include "gusnet/encoder.hpp"
#include "gusnet/error.hpp"
#include "gusnet/focal_loss.hpp"
#include "gusnet/rng.hpp"

using namespace gusnet;
using Eigen::MatrixXd;

namespace {

EncoderConfig small_config(std::size_t vocab) {
  EncoderConfig cfg = EncoderConfig::preset("tiny", vocab);
  cfg.hidden = 8;
  cfg.heads = 2;
  cfg.ffn = 12;
  cfg.layers = 2;
  cfg.max_len = 16;
  cfg.init_std = 0.5;  // larger weights so every path carries gradient
  return cfg;
}

// Scalar objective: focal loss sum of the logits for a fixed target.
double objective(const TokenClassifier& m, const std::vector<int>& ids, const std::vector<int>& mask,
                 const std::vector<LabelRow>& target, const FocalLossConfig& f) {
  return focal_loss_from_logits(m.logits(ids, mask), target, f).sum;
}

}  // namespace

TEST(Encoder, BackwardMatchesFiniteDifferences) {
  TokenClassifier model(small_config(20), 7);
  const std::vector<int> ids = {2, 5, 9, 5, 13, 3};
  const std::vector<int> mask = {1, 1, 1, 1, 1, 0};
  Rng rng(3);
  std::vector<LabelRow> target;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    LabelRow r{};
    for (auto& v : r) v = static_cast<int8_t>(rng.below(2));
    target.push_back(i == 0 ? kIgnoreRow : r);
  }
  FocalLossConfig f = FocalLossConfig::uniform(0.65, 2.0);

  auto cache = make_forward_cache();
  const MatrixXd z = model.logits(ids, mask, cache.get());
  model.zero_grad();
  model.backward(*cache, focal_loss_from_logits(z, target, f).grad);

  const double h = 1e-5;
  std::size_t checked = 0;
  for (auto& p : model.parameters()) {
    // A handful of entries from every parameter tensor.
    for (int k = 0; k < 3; ++k) {
      const Eigen::Index idx = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(p.value.size())));
      Eigen::Index r = idx % p.value.rows(), c = idx / p.value.rows();
      if (p.name == "embeddings.word") r = ids[static_cast<std::size_t>(k + 1)];
      const double saved = p.value(r, c);
      p.value(r, c) = saved + h;
      const double up = objective(model, ids, mask, target, f);
      p.value(r, c) = saved - h;
      const double down = objective(model, ids, mask, target, f);
      p.value(r, c) = saved;
      const double numeric = (up - down) / (2 * h);
      const double analytic = p.grad(r, c);
      const double scale = std::max({1e-3, std::abs(numeric), std::abs(analytic)});
      EXPECT_LT(std::abs(numeric - analytic) / scale, 1e-4)
          << p.name << "(" << r << "," << c << ") numeric=" << numeric << " analytic=" << analytic;
      ++checked;
    }
  }
  EXPECT_GT(checked, 30u);
}

TEST(Encoder, MaskedKeysDoNotInfluenceUnmaskedRows) {
  TokenClassifier model(small_config(20), 1);
  const std::vector<int> a = {2, 5, 9, 3, 0, 0};
  const std::vector<int> b = {2, 5, 9, 3, 17, 11};
  const std::vector<int> mask = {1, 1, 1, 1, 0, 0};
  const MatrixXd za = model.logits(a, mask);
  const MatrixXd zb = model.logits(b, mask);
  const std::vector<int> short_ids = {2, 5, 9, 3};
  const std::vector<int> short_mask = {1, 1, 1, 1};
  const MatrixXd zs = model.logits(short_ids, short_mask);
  EXPECT_LT((za.topRows(4) - zb.topRows(4)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((za.topRows(4) - zs).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Encoder, ForwardShapeRangeAndDeterminism) {
  using namespace gusnet::testing;
  const auto sentences = overfit_fixture();
  const auto tok = fixture_tokenizer(sentences);
  auto examples = encode_all(sentences, tok);
  examples.push_back(examples.front());
  TokenClassifier model(EncoderConfig::preset("tiny", tok.size()), 42);
  const auto probs = model.forward(examples);
  ASSERT_EQ(probs.size(), examples.size());
  for (const auto& p : probs) {
    EXPECT_EQ(p.rows(), 128);
    EXPECT_EQ(p.cols(), 7);
    EXPECT_GE(p.minCoeff(), 0.0);
    EXPECT_LE(p.maxCoeff(), 1.0);
  }
  EXPECT_EQ(probs.front(), probs.back());
}

TEST(Encoder, ForwardRejectsWrongLength) {
  using namespace gusnet::testing;
  const auto sentences = overfit_fixture();
  const auto tok = fixture_tokenizer(sentences);
  auto examples = encode_all(sentences, tok, 64);
  TokenClassifier model(EncoderConfig::preset("tiny", tok.size()), 42);
  EXPECT_THROW(model.forward(examples), ShapeError);
}

TEST(Encoder, RandomHeadMeanProbabilityNearHalf) {
  using namespace gusnet::testing;
  const auto sentences = overfit_fixture();
  const auto tok = fixture_tokenizer(sentences);
  const auto examples = encode_all(sentences, tok);
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    TokenClassifier model(EncoderConfig::preset("tiny", tok.size()), seed);
    const auto probs = model.forward(examples);
    Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(7);
    double rows = 0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
      const auto n = static_cast<Eigen::Index>(examples[i].length());
      mean += probs[i].topRows(n).colwise().sum();
      rows += static_cast<double>(n);
    }
    mean /= rows;
    for (Eigen::Index l = 0; l < 7; ++l) {
      EXPECT_GE(mean(l), 0.3) << "seed " << seed;
      EXPECT_LE(mean(l), 0.7) << "seed " << seed;
    }
  }
}

TEST(Encoder, SaveLoadRoundTrip) {
  TokenClassifier model(small_config(20), 5);
  const auto path = std::filesystem::temp_directory_path() / "gusnet_weights_test.bin";
  model.save_weights(path);
  TokenClassifier other(small_config(20), 99);
  EXPECT_NE(model.weights_hash(), other.weights_hash());
  other.load_weights(path);
  EXPECT_EQ(model.weights_hash(), other.weights_hash());
  std::filesystem::remove(path);
}

TEST(Encoder, PresetsAndValidation) {
  const auto base = EncoderConfig::preset("bert-base-uncased", 30522);
  EXPECT_EQ(base.hidden, 768u);
  EXPECT_EQ(base.layers, 12u);
  EXPECT_EQ(base.heads, 12u);
  EXPECT_THROW(EncoderConfig::preset("gpt", 10), ConfigError);
  EncoderConfig bad = EncoderConfig::preset("tiny", 100);
  bad.heads = 3;
  EXPECT_THROW(bad.validate(), ConfigError);
}
