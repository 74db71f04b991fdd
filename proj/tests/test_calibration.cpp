#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <memory>

#include "clignet/calibration.hpp"
#include "clignet/errors.hpp"
#include "clignet/metrics.hpp"
#include "clignet/rng.hpp"
#include "oracles.hpp"

using namespace clignet;

namespace {

// Contiguous bool storage; std::vector<bool> cannot back a span.
class Flags {
 public:
  Flags() = default;
  Flags(std::initializer_list<bool> list) : values_(list) {}
  void push_back(bool b) { values_.push_back(b); }
  std::size_t size() const { return values_.size(); }
  bool operator[](std::size_t i) const { return values_[i]; }
  operator std::span<const bool>() const {
    buffer_.reset(new bool[values_.size()]);
    std::copy(values_.begin(), values_.end(), buffer_.get());
    return {buffer_.get(), values_.size()};
  }

 private:
  std::vector<bool> values_;
  mutable std::unique_ptr<bool[]> buffer_;
};

struct Bernoulli {
  std::vector<double> logits;  // true log-odds
  Flags labels;
};

Bernoulli bernoulli_set(Rng& rng, std::size_t n, double bias) {
  Bernoulli b;
  for (std::size_t i = 0; i < n; ++i) {
    const double f = 2.0 * rng.normal() + bias;
    b.logits.push_back(f);
    b.labels.push_back(rng.uniform() < 1.0 / (1.0 + std::exp(-f)));
  }
  return b;
}

}  // namespace

TEST(Platt, TrueLogOddsGiveIdentity) {
  Rng rng(1);
  const auto b = bernoulli_set(rng, 10000, 0.3);
  const auto p = fit_platt(b.logits, b.labels);
  EXPECT_FALSE(p.fallback);
  EXPECT_NEAR(p.a, -1.0, 0.05);
  EXPECT_NEAR(p.b, 0.0, 0.05);
}

TEST(Platt, DegenerateLabelsFallBack) {
  const std::vector<double> f{0.1, 2.0, -1.0};
  const auto all_pos = fit_platt(f, Flags{true, true, true});
  EXPECT_TRUE(all_pos.fallback);
  EXPECT_EQ(all_pos.a, -1.0);
  EXPECT_EQ(all_pos.b, 0.0);
  EXPECT_TRUE(fit_platt(f, Flags{false, false, false}).fallback);
}

TEST(Platt, NonFiniteLogitFails) {
  const std::vector<double> f{0.1, std::nan("")};
  EXPECT_THROW(fit_platt(f, Flags{true, false}), NumericError);
}

TEST(Platt, ScaledLogitsHalveA) {
  Rng rng(2);
  const auto b = bernoulli_set(rng, 10000, -0.5);
  std::vector<double> doubled;
  for (double f : b.logits) doubled.push_back(2.0 * f);
  const auto p1 = fit_platt(b.logits, b.labels);
  const auto p2 = fit_platt(doubled, b.labels);
  EXPECT_NEAR(p2.a, p1.a / 2.0, 1e-6);
  double mad = 0.0;
  for (std::size_t i = 0; i < b.logits.size(); ++i) {
    mad += std::abs(apply_platt(b.logits[i], p1.a, p1.b) - apply_platt(doubled[i], p2.a, p2.b));
  }
  EXPECT_LE(mad / static_cast<double>(b.logits.size()), 1e-3);
}

TEST(Platt, NllNeverWorseThanIdentity) {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 5 + rng.below(200);
    const double scale = rng.uniform(0.1, 5.0);
    const auto b = bernoulli_set(rng, n, rng.uniform(-2, 2));
    std::vector<double> f;
    for (double x : b.logits) f.push_back(scale * x + rng.normal());
    const auto p = fit_platt(f, b.labels);
    EXPECT_LE(platt_nll(f, b.labels, p.a, p.b), platt_nll(f, b.labels, -1.0, 0.0) + 1e-9) << trial;
  }
}

TEST(Platt, ApplyExamplesAndMonotone) {
  EXPECT_DOUBLE_EQ(apply_platt(0.0, -1.0, 0.0), 0.5);
  EXPECT_DOUBLE_EQ(apply_platt(1e6, -1.0, 0.0), 1.0 - 1e-12);
  EXPECT_DOUBLE_EQ(apply_platt(-1e6, -1.0, 0.0), 1e-12);
  EXPECT_DOUBLE_EQ(apply_platt(0.5, -2.0, 1.0), 0.5);
  double prev = 0.0;
  for (double f = -20; f <= 20; f += 0.25) {
    const double p = apply_platt(f, -0.7, 0.3);
    EXPECT_GT(p, prev);
    prev = p;
  }
}

TEST(Thresholds, Examples) {
  Eigen::MatrixXd p(4, 2);
  p << 0.2, 0.95, 0.4, 0.05, 0.6, 0.92, 0.8, 0.1;
  // column 0: positives at 0.6 and 0.8; column 1: label 1 absent
  const std::vector<int> labels{2, 2, 0, 0};
  Eigen::MatrixXd q(4, 3);
  q << p, Eigen::Vector4d(0.9, 0.95, 0.1, 0.05);
  const auto tau = optimize_thresholds(q, labels);
  EXPECT_DOUBLE_EQ(tau[0], 0.50);
  EXPECT_DOUBLE_EQ(tau[1], 0.50);  // no positives at all
  EXPECT_DOUBLE_EQ(tau[2], 0.50);  // separated at 0.1 / 0.9
}

TEST(Thresholds, BruteForceOptimalOnRandomFixtures) {
  Rng rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Index n = 5 + static_cast<Eigen::Index>(rng.below(40));
    const Eigen::Index k = 1 + static_cast<Eigen::Index>(rng.below(5));
    Eigen::MatrixXd p(n, k);
    std::vector<int> labels;
    for (Eigen::Index i = 0; i < n; ++i) {
      labels.push_back(static_cast<int>(rng.below(static_cast<std::uint64_t>(k))));
      // Coarse values so grid points tie often.
      for (Eigen::Index j = 0; j < k; ++j) p(i, j) = std::round(rng.uniform() * 20.0) / 20.0;
    }
    const auto tau = optimize_thresholds(p, labels);
    for (Eigen::Index j = 0; j < k; ++j) {
      std::vector<bool> pos;
      for (int y : labels) pos.push_back(y == j);
      const Eigen::VectorXd col = p.col(j);
      const auto [best_tau, best] = clignet::testing::best_grid_threshold(col, pos);
      ASSERT_DOUBLE_EQ(tau[j], best_tau) << "trial " << trial << " label " << j;
      ASSERT_GE(clignet::testing::f1_at(col, pos, tau[j]) + 1e-12, best);
    }
  }
}

TEST(Calibration, ReducesEceOnOverconfidentLogits) {
  Rng rng(5);
  const std::size_t n = 10000;
  const Eigen::Index k = 5;
  // Independent Bernoulli columns with known log-odds; the model reports 3x.
  Eigen::MatrixXd truth(static_cast<Eigen::Index>(n), k);
  Eigen::MatrixXd onehot_like(static_cast<Eigen::Index>(n), k);
  for (Eigen::Index i = 0; i < truth.rows(); ++i) {
    for (Eigen::Index j = 0; j < k; ++j) {
      truth(i, j) = 1.5 * rng.normal() - 0.5;
      onehot_like(i, j) = rng.uniform() < 1.0 / (1.0 + std::exp(-truth(i, j))) ? 1.0 : 0.0;
    }
  }
  const Eigen::MatrixXd logits = 3.0 * truth;
  // ECE over pooled pairs, written out against the 0/1 matrix directly.
  const auto pooled_ece = [&](const Eigen::MatrixXd& prob) {
    std::array<double, 10> cnt{}, conf{}, acc{};
    for (Eigen::Index i = 0; i < prob.size(); ++i) {
      const double q = prob.data()[i];
      const auto b = std::min<std::size_t>(9, static_cast<std::size_t>(q * 10.0));
      cnt[b] += 1;
      conf[b] += q;
      acc[b] += onehot_like.data()[i];
    }
    double e = 0.0;
    for (int b = 0; b < 10; ++b) {
      if (cnt[b] > 0) e += cnt[b] / prob.size() * std::abs(acc[b] / cnt[b] - conf[b] / cnt[b]);
    }
    return e;
  };
  Calibration cal = Calibration::identity(k);
  for (Eigen::Index j = 0; j < k; ++j) {
    std::vector<double> f(logits.col(j).data(), logits.col(j).data() + n);
    Flags y;
    for (std::size_t i = 0; i < n; ++i) y.push_back(onehot_like(static_cast<Eigen::Index>(i), j) > 0.5);
    const auto p = fit_platt(f, y);
    cal.a[j] = p.a;
    cal.b[j] = p.b;
  }
  const double before = pooled_ece(sigmoid_matrix(logits));
  const double after = pooled_ece(apply_calibration(logits, cal));
  EXPECT_LE(after, 0.5 * before);
  EXPECT_LE(after, 0.02);
}

TEST(CalibrationFile, RoundTripAndMissing) {
  const auto path = std::filesystem::temp_directory_path() / "clignet_cal.csv";
  Calibration cal = Calibration::identity(3);
  cal.a << -0.123456789012345678, -2.0, -1.0;
  cal.b << 0.5, 1e-17, 0.0;
  cal.tau << 0.07, 0.5, 0.93;
  write_calibration(cal, path);
  const auto back = read_calibration(path);
  EXPECT_EQ(back.a, cal.a);
  EXPECT_EQ(back.b, cal.b);
  EXPECT_EQ(back.tau, cal.tau);
  std::filesystem::remove(path);
  EXPECT_THROW(read_calibration(path), MissingArtifactError);
}
