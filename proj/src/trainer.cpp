#include "gusnet/trainer.hpp"

#include <cmath>
#include <numeric>

#include <spdlog/spdlog.h>

#include "gusnet/error.hpp"
#include "gusnet/rng.hpp"

namespace gusnet {

using Eigen::MatrixXd;
using nlohmann::json;

void TrainingConfig::validate() const {
  if (epochs == 0) throw ConfigError("epochs must be positive");
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning_rate must be a finite non-negative number");
  }
  if (weight_decay < 0.0) throw ConfigError("weight_decay must be non-negative");
  if (warmup_ratio < 0.0 || warmup_ratio >= 1.0) throw ConfigError("warmup_ratio must be in [0,1)");
  if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0) {
    throw ConfigError("Adam betas must be in [0,1)");
  }
  if (adam_eps <= 0.0) throw ConfigError("adam_eps must be positive");
}

json training_config_to_json(const TrainingConfig& cfg) {
  return json{{"epochs", cfg.epochs},
              {"batch_size", cfg.batch_size},
              {"learning_rate", cfg.learning_rate},
              {"weight_decay", cfg.weight_decay},
              {"warmup_ratio", cfg.warmup_ratio},
              {"beta1", cfg.beta1},
              {"beta2", cfg.beta2},
              {"adam_eps", cfg.adam_eps},
              {"seed", cfg.seed},
              {"checkpoint_dir", cfg.checkpoint_dir}};
}

TrainingConfig training_config_from_json(const json& doc) {
  TrainingConfig cfg;
  cfg.epochs = doc.value("epochs", cfg.epochs);
  cfg.batch_size = doc.value("batch_size", cfg.batch_size);
  cfg.learning_rate = doc.value("learning_rate", cfg.learning_rate);
  cfg.weight_decay = doc.value("weight_decay", cfg.weight_decay);
  cfg.warmup_ratio = doc.value("warmup_ratio", cfg.warmup_ratio);
  cfg.beta1 = doc.value("beta1", cfg.beta1);
  cfg.beta2 = doc.value("beta2", cfg.beta2);
  cfg.adam_eps = doc.value("adam_eps", cfg.adam_eps);
  cfg.seed = doc.value("seed", cfg.seed);
  cfg.checkpoint_dir = doc.value("checkpoint_dir", cfg.checkpoint_dir);
  cfg.validate();
  return cfg;
}

LinearWarmupSchedule::LinearWarmupSchedule(std::size_t total_steps, double warmup_ratio)
    : total_(total_steps),
      warmup_(static_cast<std::size_t>(std::floor(warmup_ratio * static_cast<double>(total_steps)))) {}

double LinearWarmupSchedule::factor(std::size_t step) const {
  if (step < warmup_) return static_cast<double>(step) / static_cast<double>(std::max<std::size_t>(1, warmup_));
  if (step >= total_) return 0.0;
  return static_cast<double>(total_ - step) /
         static_cast<double>(std::max<std::size_t>(1, total_ - warmup_));
}

AdamW::AdamW(const std::vector<Parameter>& params, double beta1, double beta2, double eps,
             double weight_decay)
    : beta1_(beta1), beta2_(beta2), eps_(eps), weight_decay_(weight_decay) {
  for (const auto& p : params) {
    m_.push_back(MatrixXd::Zero(p.value.rows(), p.value.cols()));
    v_.push_back(MatrixXd::Zero(p.value.rows(), p.value.cols()));
  }
}

void AdamW::step(std::vector<Parameter>& params, double lr) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter& p = params[i];
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * p.grad;
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * p.grad.cwiseProduct(p.grad);
    if (lr == 0.0) continue;
    if (p.decay && weight_decay_ > 0.0) p.value *= 1.0 - lr * weight_decay_;
    p.value.array() -=
        lr * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + eps_);
  }
}

json summary_to_json(const TrainingSummary& summary) {
  json rows = json::array();
  for (const auto& r : summary.log) {
    rows.push_back({{"epoch", r.epoch},
                    {"train_loss", r.train_loss},
                    {"val_loss", r.val_loss},
                    {"val_macro_f1", r.val_macro_f1}});
  }
  return json{{"epochs", rows},
              {"best_epoch", summary.best_epoch},
              {"best_val_macro_f1", summary.best_val_macro_f1},
              {"total_steps", summary.total_steps},
              {"warmup_steps", summary.warmup_steps}};
}

LabelSet threshold_label_set(const Eigen::Ref<const Eigen::RowVectorXd>& probs, double threshold) {
  if (probs.size() != static_cast<Eigen::Index>(kNumLabels)) {
    throw ShapeError("probability row must have 7 entries");
  }
  LabelSet out;
  for (std::size_t l = 1; l < kNumLabels; ++l) {
    if (probs(static_cast<Eigen::Index>(l)) >= threshold) out.insert(static_cast<Label>(l));
  }
  if (out.empty()) out = LabelSet::outside();
  return out;
}

std::vector<LabelRow> threshold_rows(const MatrixXd& probs, double threshold) {
  std::vector<LabelRow> rows;
  rows.reserve(static_cast<std::size_t>(probs.rows()));
  for (Eigen::Index r = 0; r < probs.rows(); ++r) {
    rows.push_back(encode_label_set(threshold_label_set(probs.row(r), threshold)));
  }
  return rows;
}

namespace {

std::vector<int> ones(std::size_t n) { return std::vector<int>(n, 1); }

std::span<const int> head(const std::vector<int>& v, std::size_t n) { return {v.data(), n}; }

std::vector<LabelRow> head_rows(const EncodedExample& e, std::size_t n) {
  return {e.labels.begin(), e.labels.begin() + static_cast<std::ptrdiff_t>(n)};
}

std::size_t supervised_elements(const EncodedExample& e) {
  std::size_t n = 0;
  for (const auto& row : e.labels) {
    if (!is_ignore_row(row)) n += kNumLabels;
  }
  return n;
}

}  // namespace

MatrixXd example_probabilities(const TokenClassifier& model, const EncodedExample& e) {
  const std::size_t n = e.length();
  const MatrixXd z = model.logits(head(e.input_ids, n), ones(n));
  return z.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
}

ModelEvaluation evaluate_model(const TokenClassifier& model, std::span<const EncodedExample> data,
                               const FocalLossConfig& loss_cfg, HammingMode mode) {
  ModelEvaluation out;
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& e : data) {
    const std::size_t n = e.length();
    const MatrixXd z = model.logits(head(e.input_ids, n), ones(n));
    std::vector<LabelRow> gold = head_rows(e, n);
    const FocalLossSum fl = focal_loss_from_logits(z, gold, loss_cfg);
    sum += fl.sum;
    count += fl.count;
    const MatrixXd p = z.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
    out.sentences.push_back({e.id, threshold_rows(p, loss_cfg.threshold), std::move(gold)});
  }
  out.loss = count ? sum / static_cast<double>(count) : 0.0;
  out.report = evaluate(out.sentences, mode);
  return out;
}

TrainingSummary train(TokenClassifier& model, std::span<const EncodedExample> train_set,
                      std::span<const EncodedExample> val_set, const TrainingConfig& cfg,
                      const FocalLossConfig& loss_cfg, const EpochCallback& on_epoch) {
  cfg.validate();
  loss_cfg.validate();
  if (train_set.empty()) throw ConfigError("training set is empty");
  if (val_set.empty()) throw ConfigError("validation set is empty");
  for (const auto& e : train_set) {
    if (e.max_len() != model.config().max_len) {
      throw ShapeError("example " + e.id + " was encoded with a different max_len");
    }
  }

  const std::size_t batches = (train_set.size() + cfg.batch_size - 1) / cfg.batch_size;
  TrainingSummary summary;
  summary.total_steps = batches * cfg.epochs;
  LinearWarmupSchedule schedule(summary.total_steps, cfg.warmup_ratio);
  summary.warmup_steps = schedule.warmup_steps();
  AdamW optimizer(model.parameters(), cfg.beta1, cfg.beta2, cfg.adam_eps, cfg.weight_decay);

  Rng rng(cfg.seed);
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto cache = make_forward_cache();
  std::vector<Parameter> best_params;
  double best_f1 = -1.0;
  std::size_t step = 0;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    double epoch_sum = 0.0;
    std::size_t epoch_count = 0;
    for (std::size_t b = 0; b < batches; ++b) {
      const std::size_t lo = b * cfg.batch_size;
      const std::size_t hi = std::min(train_set.size(), lo + cfg.batch_size);
      std::size_t batch_count = 0;
      for (std::size_t i = lo; i < hi; ++i) batch_count += supervised_elements(train_set[order[i]]);
      model.zero_grad();
      double batch_sum = 0.0;
      if (batch_count > 0) {
        for (std::size_t i = lo; i < hi; ++i) {
          const EncodedExample& e = train_set[order[i]];
          const std::size_t n = e.length();
          const MatrixXd z = model.logits(head(e.input_ids, n), ones(n), cache.get());
          const FocalLossSum fl = focal_loss_from_logits(z, head_rows(e, n), loss_cfg);
          batch_sum += fl.sum;
          if (fl.count > 0) model.backward(*cache, fl.grad / static_cast<double>(batch_count));
        }
      }
      const double batch_loss = batch_count ? batch_sum / static_cast<double>(batch_count) : 0.0;
      if (!std::isfinite(batch_loss)) {
        throw DivergenceError("training loss became non-finite at step " + std::to_string(step) +
                                  " (epoch " + std::to_string(epoch) + ")",
                              static_cast<long>(step));
      }
      optimizer.step(model.parameters(), cfg.learning_rate * schedule.factor(step));
      ++step;
      epoch_sum += batch_sum;
      epoch_count += batch_count;
    }

    const ModelEvaluation val = evaluate_model(model, val_set, loss_cfg);
    EpochLog row{epoch, epoch_count ? epoch_sum / static_cast<double>(epoch_count) : 0.0, val.loss,
                 val.report.macro_f1};
    summary.log.push_back(row);
    const bool improved = row.val_macro_f1 > best_f1;
    if (improved) {
      best_f1 = row.val_macro_f1;
      summary.best_epoch = epoch;
      summary.best_val_macro_f1 = best_f1;
      best_params = model.parameters();
    }
    spdlog::info("epoch {}/{} train_loss={:.6f} val_loss={:.6f} val_macro_f1={:.4f}", epoch,
                 cfg.epochs, row.train_loss, row.val_loss, row.val_macro_f1);
    if (on_epoch) on_epoch(row, model, improved);
  }
  if (!best_params.empty()) model.parameters() = std::move(best_params);
  return summary;
}

}  // namespace gusnet
