#include "gusnet/encoder.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>

#include "gusnet/error.hpp"
#include "gusnet/rng.hpp"
#include "gusnet/text.hpp"

namespace gusnet {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using nlohmann::json;

EncoderConfig EncoderConfig::preset(const std::string& encoder_id, std::size_t vocab_size) {
  EncoderConfig cfg;
  cfg.encoder_id = encoder_id;
  cfg.vocab_size = vocab_size;
  if (encoder_id == "tiny") return cfg;
  if (encoder_id == "bert-base-uncased") {
    cfg.hidden = 768;
    cfg.layers = 12;
    cfg.heads = 12;
    cfg.ffn = 3072;
    return cfg;
  }
  throw ConfigError("unknown encoder_id '" + encoder_id + "'");
}

void EncoderConfig::validate() const {
  if (vocab_size < 5) throw ConfigError("encoder vocab_size too small");
  if (hidden == 0 || layers == 0 || heads == 0 || ffn == 0 || max_len < 3) {
    throw ConfigError("encoder dimensions must be positive");
  }
  if (hidden % heads != 0) throw ConfigError("hidden size must be divisible by heads");
  if (num_labels != kNumLabels) throw ConfigError("num_labels must be 7");
}

json encoder_config_to_json(const EncoderConfig& cfg) {
  return json{{"encoder_id", cfg.encoder_id}, {"vocab_size", cfg.vocab_size},
              {"hidden", cfg.hidden},         {"layers", cfg.layers},
              {"heads", cfg.heads},           {"ffn", cfg.ffn},
              {"max_len", cfg.max_len},       {"num_labels", cfg.num_labels},
              {"init_std", cfg.init_std},     {"layer_norm_eps", cfg.layer_norm_eps}};
}

EncoderConfig encoder_config_from_json(const json& doc) {
  EncoderConfig cfg = EncoderConfig::preset(doc.value("encoder_id", std::string("tiny")),
                                            doc.value("vocab_size", std::size_t{0}));
  cfg.hidden = doc.value("hidden", cfg.hidden);
  cfg.layers = doc.value("layers", cfg.layers);
  cfg.heads = doc.value("heads", cfg.heads);
  cfg.ffn = doc.value("ffn", cfg.ffn);
  cfg.max_len = doc.value("max_len", cfg.max_len);
  cfg.num_labels = doc.value("num_labels", cfg.num_labels);
  cfg.init_std = doc.value("init_std", cfg.init_std);
  cfg.layer_norm_eps = doc.value("layer_norm_eps", cfg.layer_norm_eps);
  return cfg;
}

namespace {

MatrixXd layer_norm(const MatrixXd& x, const MatrixXd& gain, const MatrixXd& bias, double eps,
                    LayerNormCache* cache) {
  const VectorXd mean = x.rowwise().mean();
  MatrixXd centered = x.colwise() - mean;
  const VectorXd var = centered.array().square().rowwise().mean();
  const VectorXd inv = (var.array() + eps).rsqrt();
  MatrixXd xhat = centered.array().colwise() * inv.array();
  MatrixXd y = (xhat.array().rowwise() * gain.row(0).array()).rowwise() + bias.row(0).array();
  if (cache) {
    cache->xhat = std::move(xhat);
    cache->inv_std = inv;
  }
  return y;
}

MatrixXd layer_norm_backward(const MatrixXd& dy, const LayerNormCache& c, const MatrixXd& gain,
                             MatrixXd& dgain, MatrixXd& dbias) {
  dgain.row(0) += (dy.array() * c.xhat.array()).colwise().sum().matrix();
  dbias.row(0) += dy.colwise().sum();
  const MatrixXd dxhat = dy.array().rowwise() * gain.row(0).array();
  const VectorXd mean_d = dxhat.rowwise().mean();
  const VectorXd mean_dx = (dxhat.array() * c.xhat.array()).rowwise().mean();
  MatrixXd dx = dxhat.colwise() - mean_d;
  dx -= (c.xhat.array().colwise() * mean_dx.array()).matrix();
  return dx.array().colwise() * c.inv_std.array();
}

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x * std::numbers::sqrt2 / 2.0)); }

double gelu_grad(double x) {
  const double cdf = 0.5 * (1.0 + std::erf(x * std::numbers::sqrt2 / 2.0));
  const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
  return cdf + x * pdf;
}

MatrixXd affine(const MatrixXd& x, const MatrixXd& w, const MatrixXd& b) {
  return (x * w).rowwise() + b.row(0);
}

// Parameter slots of one encoder block, as offsets from the block base.
enum BlockSlot {
  kQw, kQb, kKw, kKb, kVw, kVb, kOw, kOb, kLn1g, kLn1b,
  kF1w, kF1b, kF2w, kF2b, kLn2g, kLn2b, kBlockSlots
};
// Global slots.
enum GlobalSlot { kWordEmb = 0, kPosEmb = 1, kEmbLnG = 2, kEmbLnB = 3, kFirstBlock = 4 };

}  // namespace

std::unique_ptr<ForwardCache> make_forward_cache() { return std::make_unique<ForwardCache>(); }

TokenClassifier::TokenClassifier(EncoderConfig config, std::uint64_t seed)
    : config_(std::move(config)) {
  config_.validate();
  Rng rng(seed);
  const auto H = static_cast<Eigen::Index>(config_.hidden);
  const auto F = static_cast<Eigen::Index>(config_.ffn);
  auto add = [&](std::string name, Eigen::Index rows, Eigen::Index cols, int kind) {
    // kind: 0 normal init, 1 zeros, 2 ones
    Parameter p;
    p.name = std::move(name);
    p.value = MatrixXd::Zero(rows, cols);
    if (kind == 0) {
      for (Eigen::Index c = 0; c < cols; ++c) {
        for (Eigen::Index r = 0; r < rows; ++r) p.value(r, c) = rng.normal(0.0, config_.init_std);
      }
    } else if (kind == 2) {
      p.value.setOnes();
    }
    p.grad = MatrixXd::Zero(rows, cols);
    p.decay = kind == 0;
    params_.push_back(std::move(p));
  };
  add("embeddings.word", static_cast<Eigen::Index>(config_.vocab_size), H, 0);
  add("embeddings.position", static_cast<Eigen::Index>(config_.max_len), H, 0);
  add("embeddings.norm.gain", 1, H, 2);
  add("embeddings.norm.bias", 1, H, 1);
  for (std::size_t l = 0; l < config_.layers; ++l) {
    const std::string p = "layer" + std::to_string(l) + ".";
    add(p + "query.weight", H, H, 0);
    add(p + "query.bias", 1, H, 1);
    add(p + "key.weight", H, H, 0);
    add(p + "key.bias", 1, H, 1);
    add(p + "value.weight", H, H, 0);
    add(p + "value.bias", 1, H, 1);
    add(p + "attn_out.weight", H, H, 0);
    add(p + "attn_out.bias", 1, H, 1);
    add(p + "attn_norm.gain", 1, H, 2);
    add(p + "attn_norm.bias", 1, H, 1);
    add(p + "ffn_in.weight", H, F, 0);
    add(p + "ffn_in.bias", 1, F, 1);
    add(p + "ffn_out.weight", F, H, 0);
    add(p + "ffn_out.bias", 1, H, 1);
    add(p + "ffn_norm.gain", 1, H, 2);
    add(p + "ffn_norm.bias", 1, H, 1);
  }
  add("head.weight", H, static_cast<Eigen::Index>(config_.num_labels), 0);
  add("head.bias", 1, static_cast<Eigen::Index>(config_.num_labels), 1);
}

TokenClassifier::~TokenClassifier() = default;
TokenClassifier::TokenClassifier(TokenClassifier&&) noexcept = default;
TokenClassifier& TokenClassifier::operator=(TokenClassifier&&) noexcept = default;
TokenClassifier::TokenClassifier(const TokenClassifier&) = default;
TokenClassifier& TokenClassifier::operator=(const TokenClassifier&) = default;

std::size_t TokenClassifier::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += static_cast<std::size_t>(p.value.size());
  return n;
}

MatrixXd TokenClassifier::logits(std::span<const int> ids, std::span<const int> key_mask,
                                 ForwardCache* cache) const {
  const std::size_t n = ids.size();
  if (n == 0) throw ShapeError("empty token sequence");
  if (n > config_.max_len) throw ShapeError("sequence longer than max_len");
  if (key_mask.size() != n) throw ShapeError("mask length differs from sequence length");
  const auto H = static_cast<Eigen::Index>(config_.hidden);
  const auto heads = static_cast<Eigen::Index>(config_.heads);
  const Eigen::Index d = H / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  const double eps = config_.layer_norm_eps;

  MatrixXd x(static_cast<Eigen::Index>(n), H);
  const MatrixXd& word = params_[kWordEmb].value;
  const MatrixXd& pos = params_[kPosEmb].value;
  for (std::size_t t = 0; t < n; ++t) {
    const int id = ids[t];
    if (id < 0 || static_cast<std::size_t>(id) >= config_.vocab_size) {
      throw ShapeError("token id " + std::to_string(id) + " outside the vocabulary");
    }
    x.row(static_cast<Eigen::Index>(t)) =
        word.row(id) + pos.row(static_cast<Eigen::Index>(t));
  }
  if (cache) {
    cache->ids.assign(ids.begin(), ids.end());
    cache->key_mask.assign(key_mask.begin(), key_mask.end());
    cache->layers.assign(config_.layers, LayerCache{});
  }
  x = layer_norm(x, params_[kEmbLnG].value, params_[kEmbLnB].value, eps,
                 cache ? &cache->emb_ln : nullptr);

  Eigen::RowVectorXd mask_bias(static_cast<Eigen::Index>(n));
  for (std::size_t t = 0; t < n; ++t) {
    mask_bias(static_cast<Eigen::Index>(t)) = key_mask[t] ? 0.0 : -1e9;
  }

  for (std::size_t l = 0; l < config_.layers; ++l) {
    const std::size_t b = kFirstBlock + l * kBlockSlots;
    auto P = [&](int slot) -> const MatrixXd& { return params_[b + slot].value; };
    LayerCache* lc = cache ? &cache->layers[l] : nullptr;
    const MatrixXd q = affine(x, P(kQw), P(kQb));
    const MatrixXd k = affine(x, P(kKw), P(kKb));
    const MatrixXd v = affine(x, P(kVw), P(kVb));
    MatrixXd context(static_cast<Eigen::Index>(n), H);
    if (lc) lc->probs.resize(static_cast<std::size_t>(heads));
    for (Eigen::Index h = 0; h < heads; ++h) {
      MatrixXd s = (q.middleCols(h * d, d) * k.middleCols(h * d, d).transpose()) * scale;
      s.rowwise() += mask_bias;
      const VectorXd row_max = s.rowwise().maxCoeff();
      MatrixXd e = (s.colwise() - row_max).array().exp();
      const VectorXd denom = e.rowwise().sum();
      e = e.array().colwise() / denom.array();
      context.middleCols(h * d, d) = e * v.middleCols(h * d, d);
      if (lc) lc->probs[static_cast<std::size_t>(h)] = std::move(e);
    }
    const MatrixXd attn = affine(context, P(kOw), P(kOb));
    MatrixXd h1 = layer_norm(x + attn, P(kLn1g), P(kLn1b), eps, lc ? &lc->ln1 : nullptr);
    MatrixXd f1 = affine(h1, P(kF1w), P(kF1b));
    MatrixXd g = f1.unaryExpr([](double z) { return gelu(z); });
    const MatrixXd f2 = affine(g, P(kF2w), P(kF2b));
    MatrixXd out = layer_norm(h1 + f2, P(kLn2g), P(kLn2b), eps, lc ? &lc->ln2 : nullptr);
    if (lc) {
      lc->input = std::move(x);
      lc->q = q;
      lc->k = k;
      lc->v = v;
      lc->context = std::move(context);
      lc->h1 = std::move(h1);
      lc->f1 = std::move(f1);
      lc->g = std::move(g);
    }
    x = std::move(out);
  }
  const std::size_t head = kFirstBlock + config_.layers * kBlockSlots;
  MatrixXd z = affine(x, params_[head].value, params_[head + 1].value);
  if (cache) cache->final_hidden = std::move(x);
  return z;
}

void TokenClassifier::backward(const ForwardCache& cache, const MatrixXd& grad_logits) {
  const auto H = static_cast<Eigen::Index>(config_.hidden);
  const auto heads = static_cast<Eigen::Index>(config_.heads);
  const Eigen::Index d = H / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  const std::size_t head = kFirstBlock + config_.layers * kBlockSlots;

  params_[head].grad += cache.final_hidden.transpose() * grad_logits;
  params_[head + 1].grad.row(0) += grad_logits.colwise().sum();
  MatrixXd dx = grad_logits * params_[head].value.transpose();

  for (std::size_t li = config_.layers; li-- > 0;) {
    const LayerCache& lc = cache.layers[li];
    const std::size_t b = kFirstBlock + li * kBlockSlots;
    auto W = [&](int slot) -> const MatrixXd& { return params_[b + slot].value; };
    auto G = [&](int slot) -> MatrixXd& { return params_[b + slot].grad; };

    // out = LN2(h1 + ffn(h1))
    const MatrixXd dz2 = layer_norm_backward(dx, lc.ln2, W(kLn2g), G(kLn2g), G(kLn2b));
    G(kF2w) += lc.g.transpose() * dz2;
    G(kF2b).row(0) += dz2.colwise().sum();
    const MatrixXd dg = dz2 * W(kF2w).transpose();
    const MatrixXd df1 = dg.array() * lc.f1.unaryExpr([](double z) { return gelu_grad(z); }).array();
    G(kF1w) += lc.h1.transpose() * df1;
    G(kF1b).row(0) += df1.colwise().sum();
    const MatrixXd dh1 = dz2 + df1 * W(kF1w).transpose();

    // h1 = LN1(x + attn(x))
    const MatrixXd dz1 = layer_norm_backward(dh1, lc.ln1, W(kLn1g), G(kLn1g), G(kLn1b));
    G(kOw) += lc.context.transpose() * dz1;
    G(kOb).row(0) += dz1.colwise().sum();
    const MatrixXd dcontext = dz1 * W(kOw).transpose();
    MatrixXd dq(lc.q.rows(), H), dk(lc.k.rows(), H), dv(lc.v.rows(), H);
    for (Eigen::Index h = 0; h < heads; ++h) {
      const MatrixXd& p = lc.probs[static_cast<std::size_t>(h)];
      const MatrixXd dctx = dcontext.middleCols(h * d, d);
      const MatrixXd dp = dctx * lc.v.middleCols(h * d, d).transpose();
      dv.middleCols(h * d, d) = p.transpose() * dctx;
      const VectorXd row_dot = (dp.array() * p.array()).rowwise().sum();
      const MatrixXd ds = (p.array() * (dp.colwise() - row_dot).array()).matrix() * scale;
      dq.middleCols(h * d, d) = ds * lc.k.middleCols(h * d, d);
      dk.middleCols(h * d, d) = ds.transpose() * lc.q.middleCols(h * d, d);
    }
    G(kQw) += lc.input.transpose() * dq;
    G(kQb).row(0) += dq.colwise().sum();
    G(kKw) += lc.input.transpose() * dk;
    G(kKb).row(0) += dk.colwise().sum();
    G(kVw) += lc.input.transpose() * dv;
    G(kVb).row(0) += dv.colwise().sum();
    dx = dz1 + dq * W(kQw).transpose() + dk * W(kKw).transpose() + dv * W(kVw).transpose();
  }

  const MatrixXd demb = layer_norm_backward(dx, cache.emb_ln, params_[kEmbLnG].value,
                                            params_[kEmbLnG].grad, params_[kEmbLnB].grad);
  for (std::size_t t = 0; t < cache.ids.size(); ++t) {
    params_[kWordEmb].grad.row(cache.ids[t]) += demb.row(static_cast<Eigen::Index>(t));
    params_[kPosEmb].grad.row(static_cast<Eigen::Index>(t)) +=
        demb.row(static_cast<Eigen::Index>(t));
  }
}

void TokenClassifier::zero_grad() {
  for (auto& p : params_) p.grad.setZero();
}

std::vector<MatrixXd> TokenClassifier::forward(std::span<const EncodedExample> batch) const {
  std::vector<MatrixXd> out;
  out.reserve(batch.size());
  for (const auto& e : batch) {
    if (e.input_ids.size() != config_.max_len || e.attention_mask.size() != config_.max_len) {
      throw ShapeError("example " + e.id + " has length " + std::to_string(e.input_ids.size()) +
                       ", expected " + std::to_string(config_.max_len));
    }
    const MatrixXd z = logits(e.input_ids, e.attention_mask);
    out.push_back(z.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); }));
  }
  return out;
}

std::uint64_t TokenClassifier::weights_hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& p : params_) {
    h = fnv1a64(p.name, h);
    h = fnv1a64(std::string_view(reinterpret_cast<const char*>(p.value.data()),
                                 static_cast<std::size_t>(p.value.size()) * sizeof(double)),
                h);
  }
  return h;
}

namespace {
constexpr char kWeightsMagic[8] = {'G', 'U', 'S', 'W', 'v', '1', '\n', '\0'};
}

void TokenClassifier::save_weights(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out.write(kWeightsMagic, sizeof(kWeightsMagic));
  const std::uint64_t count = params_.size();
  out.write(reinterpret_cast<const char*>(&count), sizeof(count));
  for (const auto& p : params_) {
    const std::uint64_t name_len = p.name.size();
    const std::uint64_t rows = static_cast<std::uint64_t>(p.value.rows());
    const std::uint64_t cols = static_cast<std::uint64_t>(p.value.cols());
    out.write(reinterpret_cast<const char*>(&name_len), sizeof(name_len));
    out.write(p.name.data(), static_cast<std::streamsize>(name_len));
    out.write(reinterpret_cast<const char*>(&rows), sizeof(rows));
    out.write(reinterpret_cast<const char*>(&cols), sizeof(cols));
    out.write(reinterpret_cast<const char*>(p.value.data()),
              static_cast<std::streamsize>(rows * cols * sizeof(double)));
  }
  if (!out) throw ConfigError("failed writing " + path.string());
}

void TokenClassifier::load_weights(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kWeightsMagic, sizeof(magic)) != 0) {
    throw ConfigError(path.string() + " is not a weights file");
  }
  std::uint64_t count = 0;
  in.read(reinterpret_cast<char*>(&count), sizeof(count));
  if (count != params_.size()) throw ConfigError("weights file has the wrong parameter count");
  for (auto& p : params_) {
    std::uint64_t name_len = 0, rows = 0, cols = 0;
    in.read(reinterpret_cast<char*>(&name_len), sizeof(name_len));
    if (!in || name_len > 4096) throw ConfigError("corrupt weights file " + path.string());
    std::string name(name_len, '\0');
    in.read(name.data(), static_cast<std::streamsize>(name_len));
    in.read(reinterpret_cast<char*>(&rows), sizeof(rows));
    in.read(reinterpret_cast<char*>(&cols), sizeof(cols));
    if (name != p.name || rows != static_cast<std::uint64_t>(p.value.rows()) ||
        cols != static_cast<std::uint64_t>(p.value.cols())) {
      throw ConfigError("weights file does not match the model at " + p.name);
    }
    in.read(reinterpret_cast<char*>(p.value.data()),
            static_cast<std::streamsize>(rows * cols * sizeof(double)));
    if (!in) throw ConfigError("truncated weights file " + path.string());
  }
}

}  // namespace gusnet
