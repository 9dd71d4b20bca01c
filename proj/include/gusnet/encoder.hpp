#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gusnet/dataset.hpp"
#include "json.hpp"

namespace gusnet {

// Shape of the bidirectional encoder (BERT layout: learned positions,
// post-LayerNorm blocks, GELU feed-forward) plus the 7-way token head.
struct EncoderConfig {
  std::string encoder_id = "tiny";
  std::size_t vocab_size = 0;
  std::size_t hidden = 64;
  std::size_t layers = 2;
  std::size_t heads = 4;
  std::size_t ffn = 128;
  std::size_t max_len = kDefaultMaxLen;
  std::size_t num_labels = kNumLabels;
  double init_std = 0.02;
  double layer_norm_eps = 1e-12;

  // "tiny" (2 layers, hidden 64) or "bert-base-uncased" (12 layers, hidden 768).
  static EncoderConfig preset(const std::string& encoder_id, std::size_t vocab_size);
  void validate() const;
};

nlohmann::json encoder_config_to_json(const EncoderConfig& cfg);
EncoderConfig encoder_config_from_json(const nlohmann::json& doc);

struct Parameter {
  std::string name;
  Eigen::MatrixXd value;
  Eigen::MatrixXd grad;
  bool decay = true;  // weight decay applies (matrices, not biases/norms)
};

struct LayerNormCache {
  Eigen::MatrixXd xhat;
  Eigen::VectorXd inv_std;
};

struct LayerCache {
  Eigen::MatrixXd input;
  Eigen::MatrixXd q, k, v;
  std::vector<Eigen::MatrixXd> probs;  // attention weights per head, n x n
  Eigen::MatrixXd context;             // concatenated heads
  LayerNormCache ln1;
  Eigen::MatrixXd h1;
  Eigen::MatrixXd f1;  // pre-activation
  Eigen::MatrixXd g;   // gelu(f1)
  LayerNormCache ln2;
};

// Activations kept from a training forward pass.
struct ForwardCache {
  std::vector<int> ids;
  std::vector<int> key_mask;
  LayerNormCache emb_ln;
  std::vector<LayerCache> layers;
  Eigen::MatrixXd final_hidden;
};

class TokenClassifier {
 public:
  TokenClassifier(EncoderConfig config, std::uint64_t seed);
  ~TokenClassifier();
  TokenClassifier(TokenClassifier&&) noexcept;
  TokenClassifier& operator=(TokenClassifier&&) noexcept;
  TokenClassifier(const TokenClassifier&);
  TokenClassifier& operator=(const TokenClassifier&);

  const EncoderConfig& config() const { return config_; }
  std::vector<Parameter>& parameters() { return params_; }
  const std::vector<Parameter>& parameters() const { return params_; }
  std::size_t parameter_count() const;

  // Logits (n x 7) for the tokens `ids`; keys with key_mask 0 are not attended
  // to. With a cache the pass can be followed by backward().
  Eigen::MatrixXd logits(std::span<const int> ids, std::span<const int> key_mask,
                         ForwardCache* cache = nullptr) const;
  // Accumulates parameter gradients for d(loss)/d(logits) of the cached pass.
  void backward(const ForwardCache& cache, const Eigen::MatrixXd& grad_logits);
  void zero_grad();

  // Sigmoid probabilities (max_len x 7) for each example. Throws ShapeError
  // when an example's length differs from max_len.
  std::vector<Eigen::MatrixXd> forward(std::span<const EncodedExample> batch) const;

  std::uint64_t weights_hash() const;
  void save_weights(const std::filesystem::path& path) const;
  void load_weights(const std::filesystem::path& path);

 private:
  EncoderConfig config_;
  std::vector<Parameter> params_;
};

std::unique_ptr<ForwardCache> make_forward_cache();

}  // namespace gusnet
