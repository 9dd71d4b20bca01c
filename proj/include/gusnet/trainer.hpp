#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gusnet/dataset.hpp"
#include "gusnet/encoder.hpp"
#include "gusnet/focal_loss.hpp"
#include "gusnet/metrics.hpp"
#include "json.hpp"

namespace gusnet {

struct TrainingConfig {
  std::size_t epochs = 17;
  std::size_t batch_size = 16;
  double learning_rate = 5e-5;
  double weight_decay = 0.01;
  double warmup_ratio = 0.1;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 42;
  std::string checkpoint_dir;

  void validate() const;  // throws ConfigError
};

nlohmann::json training_config_to_json(const TrainingConfig& cfg);
TrainingConfig training_config_from_json(const nlohmann::json& doc);

// Linear warm-up from 0 to 1 over floor(ratio * total) steps, then linear
// decay to 0 at `total`.
class LinearWarmupSchedule {
 public:
  LinearWarmupSchedule(std::size_t total_steps, double warmup_ratio);
  double factor(std::size_t step) const;
  std::size_t warmup_steps() const { return warmup_; }
  std::size_t total_steps() const { return total_; }

 private:
  std::size_t total_;
  std::size_t warmup_;
};

// Adam with decoupled weight decay. Decay applies only to parameters flagged
// `decay`.
class AdamW {
 public:
  AdamW(const std::vector<Parameter>& params, double beta1, double beta2, double eps,
        double weight_decay);
  void step(std::vector<Parameter>& params, double lr);
  std::size_t steps() const { return t_; }

 private:
  double beta1_, beta2_, eps_, weight_decay_;
  std::size_t t_ = 0;
  std::vector<Eigen::MatrixXd> m_, v_;
};

struct EpochLog {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_macro_f1 = 0.0;
};

struct TrainingSummary {
  std::vector<EpochLog> log;
  std::size_t best_epoch = 0;
  double best_val_macro_f1 = 0.0;
  std::size_t total_steps = 0;
  std::size_t warmup_steps = 0;
};

nlohmann::json summary_to_json(const TrainingSummary& summary);

// Called after every epoch; `improved` is true when this epoch is the new best.
using EpochCallback =
    std::function<void(const EpochLog& row, const TokenClassifier& model, bool improved)>;

// Mini-batch training under focal loss. On return the model holds the weights
// of the best epoch by validation macro-F1. A non-finite loss throws
// DivergenceError carrying the optimizer step.
TrainingSummary train(TokenClassifier& model, std::span<const EncodedExample> train_set,
                      std::span<const EncodedExample> val_set, const TrainingConfig& cfg,
                      const FocalLossConfig& loss_cfg, const EpochCallback& on_epoch = {});

// Entity labels at or above threshold; {O} when none.
LabelSet threshold_label_set(const Eigen::Ref<const Eigen::RowVectorXd>& probs, double threshold);
std::vector<LabelRow> threshold_rows(const Eigen::MatrixXd& probs, double threshold);

// Sigmoid probabilities over the example's non-padding positions.
Eigen::MatrixXd example_probabilities(const TokenClassifier& model, const EncodedExample& e);

struct ModelEvaluation {
  EvalReport report;
  double loss = 0.0;
  std::vector<SentencePrediction> sentences;
};

ModelEvaluation evaluate_model(const TokenClassifier& model, std::span<const EncodedExample> data,
                               const FocalLossConfig& loss_cfg,
                               HammingMode mode = HammingMode::kBit);

}  // namespace gusnet
