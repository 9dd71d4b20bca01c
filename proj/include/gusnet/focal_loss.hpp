#pragma once

#include <array>
#include <vector>

#include <Eigen/Dense>

#include "gusnet/labels.hpp"
#include "json.hpp"

namespace gusnet {

inline constexpr double kProbabilityEpsilon = 1e-7;

struct FocalLossConfig {
  // Per-label weight, label order as in LabelSpace.
  std::array<double, kNumLabels> alpha = {0.65, 0.65, 0.65, 0.65, 0.65, 0.65, 0.65};
  double gamma = 2.0;
  double threshold = 0.5;

  static FocalLossConfig uniform(double alpha, double gamma, double threshold = 0.5);
  void validate() const;  // throws ConfigError
};

nlohmann::json focal_to_json(const FocalLossConfig& cfg);
FocalLossConfig focal_from_json(const nlohmann::json& doc);

// Mean over non-IGNORE elements of -alpha_label (1 - p_t)^gamma log(p_t),
// with p clamped to [eps, 1 - eps] and p_t = p for target 1, 1 - p for 0.
// `probabilities` is N x 7. Throws MetricError when every element is IGNORE
// and ShapeError on mismatched shapes.
double focal_loss(const Eigen::MatrixXd& probabilities, const std::vector<LabelRow>& targets,
                  const FocalLossConfig& cfg);

// Gradient of focal_loss with respect to the probabilities (zero on IGNORE
// elements and where the clamp is active).
Eigen::MatrixXd focal_loss_gradient(const Eigen::MatrixXd& probabilities,
                                    const std::vector<LabelRow>& targets,
                                    const FocalLossConfig& cfg);

// Same loss evaluated from logits without clamping. Returns the *sum* over
// non-IGNORE elements, its gradient with respect to the logits, and the
// element count, so callers can average over a whole batch.
struct FocalLossSum {
  double sum = 0.0;
  Eigen::MatrixXd grad;
  std::size_t count = 0;
};
FocalLossSum focal_loss_from_logits(const Eigen::MatrixXd& logits,
                                    const std::vector<LabelRow>& targets,
                                    const FocalLossConfig& cfg);

}  // namespace gusnet
