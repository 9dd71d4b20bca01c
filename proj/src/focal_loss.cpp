#include "gusnet/focal_loss.hpp"

#include <algorithm>
#include <cmath>

#include "gusnet/error.hpp"

namespace gusnet {

using nlohmann::json;

FocalLossConfig FocalLossConfig::uniform(double alpha, double gamma, double threshold) {
  FocalLossConfig cfg;
  cfg.alpha.fill(alpha);
  cfg.gamma = gamma;
  cfg.threshold = threshold;
  return cfg;
}

void FocalLossConfig::validate() const {
  for (double a : alpha) {
    if (!(a > 0.0 && a <= 1.0)) throw ConfigError("focal alpha must lie in (0, 1]");
  }
  if (!(gamma >= 0.0)) throw ConfigError("focal gamma must be >= 0");
  if (!(threshold > 0.0 && threshold < 1.0)) throw ConfigError("threshold must lie in (0, 1)");
}

json focal_to_json(const FocalLossConfig& cfg) {
  return json{{"alpha", cfg.alpha}, {"gamma", cfg.gamma}, {"threshold", cfg.threshold}};
}

FocalLossConfig focal_from_json(const json& doc) {
  FocalLossConfig cfg;
  if (doc.contains("alpha")) {
    const json& a = doc.at("alpha");
    if (a.is_number()) {
      cfg.alpha.fill(a.get<double>());
    } else {
      const auto v = a.get<std::vector<double>>();
      if (v.size() != kNumLabels) throw ConfigError("alpha must be a number or 7 numbers");
      std::copy(v.begin(), v.end(), cfg.alpha.begin());
    }
  }
  // Per-label override, e.g. {"I-GEN": 0.65}.
  if (doc.contains("alpha_overrides")) {
    for (const auto& [name, value] : doc.at("alpha_overrides").items()) {
      auto label = parse_label(name);
      if (!label) throw ConfigError("unknown label in alpha_overrides: " + name);
      cfg.alpha[static_cast<std::size_t>(*label)] = value.get<double>();
    }
  }
  cfg.gamma = doc.value("gamma", cfg.gamma);
  cfg.threshold = doc.value("threshold", cfg.threshold);
  cfg.validate();
  return cfg;
}

namespace {

void check_shapes(const Eigen::MatrixXd& m, const std::vector<LabelRow>& targets) {
  if (m.cols() != static_cast<Eigen::Index>(kNumLabels) ||
      m.rows() != static_cast<Eigen::Index>(targets.size())) {
    throw ShapeError("focal loss expects N x 7 inputs matching the targets");
  }
}

}  // namespace

double focal_loss(const Eigen::MatrixXd& probabilities, const std::vector<LabelRow>& targets,
                  const FocalLossConfig& cfg) {
  check_shapes(probabilities, targets);
  double sum = 0.0;
  std::size_t count = 0;
  for (Eigen::Index i = 0; i < probabilities.rows(); ++i) {
    for (std::size_t k = 0; k < kNumLabels; ++k) {
      const auto t = targets[static_cast<std::size_t>(i)][k];
      if (t == kIgnore) continue;
      const double p = std::clamp(probabilities(i, static_cast<Eigen::Index>(k)),
                                  kProbabilityEpsilon, 1.0 - kProbabilityEpsilon);
      const double pt = t == 1 ? p : 1.0 - p;
      sum += -cfg.alpha[k] * std::pow(1.0 - pt, cfg.gamma) * std::log(pt);
      ++count;
    }
  }
  if (count == 0) throw MetricError("focal loss is undefined: every element is IGNORE");
  return sum / static_cast<double>(count);
}

Eigen::MatrixXd focal_loss_gradient(const Eigen::MatrixXd& probabilities,
                                    const std::vector<LabelRow>& targets,
                                    const FocalLossConfig& cfg) {
  check_shapes(probabilities, targets);
  Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(probabilities.rows(), probabilities.cols());
  std::size_t count = 0;
  for (Eigen::Index i = 0; i < probabilities.rows(); ++i) {
    for (std::size_t k = 0; k < kNumLabels; ++k) {
      const auto t = targets[static_cast<std::size_t>(i)][k];
      if (t == kIgnore) continue;
      ++count;
      const double raw = probabilities(i, static_cast<Eigen::Index>(k));
      if (raw < kProbabilityEpsilon || raw > 1.0 - kProbabilityEpsilon) continue;
      const double pt = t == 1 ? raw : 1.0 - raw;
      const double q = 1.0 - pt;
      // d/dp_t of -a q^g log(p_t)
      double d = -cfg.alpha[k] * std::pow(q, cfg.gamma) / pt;
      if (cfg.gamma != 0.0) d += cfg.alpha[k] * cfg.gamma * std::pow(q, cfg.gamma - 1.0) * std::log(pt);
      grad(i, static_cast<Eigen::Index>(k)) = t == 1 ? d : -d;
    }
  }
  if (count == 0) throw MetricError("focal loss is undefined: every element is IGNORE");
  return grad / static_cast<double>(count);
}

FocalLossSum focal_loss_from_logits(const Eigen::MatrixXd& logits,
                                    const std::vector<LabelRow>& targets,
                                    const FocalLossConfig& cfg) {
  check_shapes(logits, targets);
  FocalLossSum out;
  out.grad = Eigen::MatrixXd::Zero(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    for (std::size_t k = 0; k < kNumLabels; ++k) {
      const auto t = targets[static_cast<std::size_t>(i)][k];
      if (t == kIgnore) continue;
      const double s = t == 1 ? 1.0 : -1.0;
      const double x = s * logits(i, static_cast<Eigen::Index>(k));
      // log p_t = log sigmoid(x), 1 - p_t = sigmoid(-x), both computed stably.
      const double log_pt = x >= 0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
      const double q = x >= 0 ? std::exp(-x) / (1.0 + std::exp(-x)) : 1.0 / (1.0 + std::exp(x));
      const double pt = 1.0 - q;
      const double a = cfg.alpha[k];
      const double qg = std::pow(q, cfg.gamma);
      out.sum += -a * qg * log_pt;
      out.grad(i, static_cast<Eigen::Index>(k)) =
          -a * s * (qg * q - cfg.gamma * pt * qg * log_pt);
      ++out.count;
    }
  }
  return out;
}

}  // namespace gusnet
