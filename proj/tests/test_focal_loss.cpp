#include <gtest/gtest.h>

#include <cmath>

#include "gusnet/error.hpp"
#include "gusnet/focal_loss.hpp"
#include "gusnet/rng.hpp"
#include "oracles.hpp"

using namespace gusnet;

namespace {

struct Instance {
  Eigen::MatrixXd p;
  std::vector<LabelRow> t;
};

// Probabilities kept away from the clamp so finite differences are clean.
Instance random_instance(Rng& rng, std::size_t rows, bool with_ignore = true) {
  Instance in{Eigen::MatrixXd(rows, 7), {}};
  for (std::size_t i = 0; i < rows; ++i) {
    LabelRow r{};
    const bool ignore = with_ignore && rng.below(5) == 0;
    for (std::size_t j = 0; j < 7; ++j) {
      in.p(i, j) = 0.02 + 0.96 * rng.uniform();
      r[j] = ignore ? kIgnore : static_cast<std::int8_t>(rng.below(2));
    }
    in.t.push_back(r);
  }
  if (is_ignore_row(in.t[0])) in.t[0] = {0, 1, 0, 0, 0, 0, 0};
  return in;
}

}  // namespace

TEST(FocalLoss, SingleElementValue) {
  // 0.65 * 0.25 * ln 2 at 40 digits.
  constexpr double kExpected = 0.1126364168409911127803002197369536923123;
  Eigen::MatrixXd p = Eigen::MatrixXd::Constant(1, 7, 0.5);
  std::vector<LabelRow> t = {{kIgnore, 1, kIgnore, kIgnore, kIgnore, kIgnore, kIgnore}};
  EXPECT_NEAR(focal_loss(p, t, FocalLossConfig::uniform(0.65, 2.0)), kExpected, 1e-12);
}

TEST(FocalLoss, PerfectPredictionsNearZero) {
  Rng rng(3);
  auto in = random_instance(rng, 20, false);
  for (std::size_t i = 0; i < in.t.size(); ++i) {
    for (std::size_t j = 0; j < 7; ++j) in.p(i, j) = in.t[i][j] == 1 ? 1.0 : 0.0;
  }
  EXPECT_LT(focal_loss(in.p, in.t, FocalLossConfig{}), 1e-5);
}

TEST(FocalLoss, GammaZeroAlphaOneIsBinaryCrossEntropy) {
  Rng rng(11);
  const auto cfg = FocalLossConfig::uniform(1.0, 0.0);
  for (int trial = 0; trial < 100; ++trial) {
    const auto in = random_instance(rng, 1 + rng.below(30));
    std::vector<std::vector<double>> p(in.t.size(), std::vector<double>(7));
    std::vector<std::vector<int>> t(in.t.size(), std::vector<int>(7));
    for (std::size_t i = 0; i < in.t.size(); ++i) {
      for (std::size_t j = 0; j < 7; ++j) {
        p[i][j] = in.p(i, j);
        t[i][j] = in.t[i][j];
      }
    }
    ASSERT_NEAR(focal_loss(in.p, in.t, cfg), oracle::bce(p, t), 1e-6) << trial;
  }
}

TEST(FocalLoss, GradientMatchesCentralDifferences) {
  Rng rng(17);
  const double h = 1e-4;
  for (double gamma : {0.0, 1.0, 2.0}) {
    FocalLossConfig cfg = FocalLossConfig::uniform(0.65, gamma);
    cfg.alpha[2] = 0.9;
    for (int trial = 0; trial < 20; ++trial) {
      const auto in = random_instance(rng, 1 + rng.below(6));
      const auto grad = focal_loss_gradient(in.p, in.t, cfg);
      for (Eigen::Index i = 0; i < in.p.rows(); ++i) {
        for (Eigen::Index j = 0; j < 7; ++j) {
          auto plus = in.p, minus = in.p;
          plus(i, j) += h;
          minus(i, j) -= h;
          const double fd =
              (focal_loss(plus, in.t, cfg) - focal_loss(minus, in.t, cfg)) / (2 * h);
          const double scale = std::max({std::abs(fd), std::abs(grad(i, j)), 1e-8});
          ASSERT_LE(std::abs(fd - grad(i, j)) / scale, 1e-3)
              << "gamma " << gamma << " trial " << trial << " at " << i << "," << j;
        }
      }
    }
  }
}

TEST(FocalLoss, LogitFormAgreesWithProbabilityForm) {
  Rng rng(23);
  const FocalLossConfig cfg;
  for (int trial = 0; trial < 50; ++trial) {
    const auto in = random_instance(rng, 1 + rng.below(10));
    const Eigen::MatrixXd logits = (in.p.array() / (1.0 - in.p.array())).log().matrix();
    const auto sum = focal_loss_from_logits(logits, in.t, cfg);
    const double mean = sum.sum / static_cast<double>(sum.count);
    EXPECT_NEAR(mean, focal_loss(in.p, in.t, cfg), 1e-10);
    // Chain rule through the sigmoid: dL/dz = dL/dp * p (1 - p), times count for the sum.
    const auto gp = focal_loss_gradient(in.p, in.t, cfg);
    const Eigen::MatrixXd expect =
        (gp.array() * in.p.array() * (1.0 - in.p.array())).matrix() *
        static_cast<double>(sum.count);
    EXPECT_LT((sum.grad - expect).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(FocalLoss, MonotoneInPositiveProbability) {
  Rng rng(29);
  const FocalLossConfig cfg;
  for (int trial = 0; trial < 200; ++trial) {
    auto in = random_instance(rng, 3, false);
    const auto i = static_cast<Eigen::Index>(rng.below(3));
    const auto j = static_cast<Eigen::Index>(rng.below(7));
    in.t[i][j] = 1;
    double prev = focal_loss(in.p, in.t, cfg);
    for (double v = 0.01; v <= 1.0; v += 0.01) {
      if (v < in.p(i, j)) continue;
      in.p(i, j) = v;
      const double cur = focal_loss(in.p, in.t, cfg);
      ASSERT_LE(cur, prev) << trial;
      prev = cur;
    }
  }
}

TEST(FocalLoss, IgnoreElementsAreInert) {
  Rng rng(31);
  const FocalLossConfig cfg;
  for (int trial = 0; trial < 100; ++trial) {
    auto in = random_instance(rng, 8);
    const double base = focal_loss(in.p, in.t, cfg);
    for (std::size_t i = 0; i < in.t.size(); ++i) {
      if (!is_ignore_row(in.t[i])) continue;
      for (Eigen::Index j = 0; j < 7; ++j) in.p(static_cast<Eigen::Index>(i), j) = rng.uniform();
    }
    ASSERT_EQ(focal_loss(in.p, in.t, cfg), base);
    const auto g = focal_loss_gradient(in.p, in.t, cfg);
    for (std::size_t i = 0; i < in.t.size(); ++i) {
      if (is_ignore_row(in.t[i])) EXPECT_EQ(g.row(static_cast<Eigen::Index>(i)).norm(), 0.0);
    }
  }
}

TEST(FocalLoss, WellClassifiedElementsNonIncreasingInGamma) {
  Rng rng(37);
  for (int trial = 0; trial < 100; ++trial) {
    auto in = random_instance(rng, 4, false);
    // Force p_t > 0.5 on every element.
    for (Eigen::Index i = 0; i < in.p.rows(); ++i) {
      for (Eigen::Index j = 0; j < 7; ++j) {
        const double pt = 0.5 + 1e-6 + 0.499 * rng.uniform();
        in.p(i, j) = in.t[i][j] == 1 ? pt : 1.0 - pt;
      }
    }
    double prev = focal_loss(in.p, in.t, FocalLossConfig::uniform(0.65, 0.0));
    for (double gamma = 0.25; gamma <= 5.0; gamma += 0.25) {
      const double cur = focal_loss(in.p, in.t, FocalLossConfig::uniform(0.65, gamma));
      ASSERT_LE(cur, prev);
      prev = cur;
    }
  }
}

TEST(FocalLoss, Errors) {
  Eigen::MatrixXd p = Eigen::MatrixXd::Constant(1, 7, 0.5);
  EXPECT_THROW(focal_loss(p, {kIgnoreRow}, FocalLossConfig{}), MetricError);
  EXPECT_THROW(focal_loss(p, {}, FocalLossConfig{}), ShapeError);
  EXPECT_THROW(focal_loss(Eigen::MatrixXd::Constant(1, 6, 0.5), {LabelRow{}}, FocalLossConfig{}),
               ShapeError);
}

TEST(FocalLossConfig, ValidationAndJson) {
  FocalLossConfig cfg;
  cfg.alpha[2] = 0.8;
  cfg.gamma = 1.5;
  cfg.threshold = 0.4;
  const auto back = focal_from_json(focal_to_json(cfg));
  EXPECT_EQ(back.alpha, cfg.alpha);
  EXPECT_EQ(back.gamma, 1.5);
  EXPECT_EQ(back.threshold, 0.4);
  EXPECT_THROW(FocalLossConfig::uniform(-0.1, 2.0).validate(), ConfigError);
  EXPECT_THROW(FocalLossConfig::uniform(0.5, -1.0).validate(), ConfigError);
  EXPECT_THROW(FocalLossConfig::uniform(0.5, 2.0, 1.5).validate(), ConfigError);
  EXPECT_NO_THROW(FocalLossConfig{}.validate());
}
