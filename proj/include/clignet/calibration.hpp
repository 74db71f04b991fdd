#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <span>

namespace clignet {

struct PlattParams {
  double a = -1.0;
  double b = 0.0;
  std::size_t iterations = 0;
  bool fallback = false;  // degenerate label, identity mapping kept
};

/// Fits P(y=1|f) = 1 / (1 + exp(A f + B)) with smoothed targets by damped
/// Newton steps from the identity mapping. Stops when the gradient norm drops
/// below 1e-8 or after 100 iterations. Throws NumericError on non-finite logits.
PlattParams fit_platt(std::span<const double> logits, std::span<const bool> labels);

/// Mean negative log-likelihood of (A, B) against Platt's smoothed targets.
double platt_nll(std::span<const double> logits, std::span<const bool> labels, double a, double b);

/// 1 / (1 + exp(A f + B)), clamped to [1e-12, 1 - 1e-12].
double apply_platt(double logit, double a, double b);

/// Grid search over tau = 0.01 .. 0.99 maximizing per-label F1 of prob >= tau.
/// Ties go to the tau closest to 0.5, then the smaller tau.
Eigen::VectorXd optimize_thresholds(const Eigen::MatrixXd& probabilities, std::span<const int> labels);

/// Per-label Platt parameters and decision thresholds.
struct Calibration {
  Eigen::VectorXd a;
  Eigen::VectorXd b;
  Eigen::VectorXd tau;

  std::size_t size() const noexcept { return static_cast<std::size_t>(tau.size()); }
  static Calibration identity(std::size_t num_labels, double tau = 0.5);
};

/// Fits Platt parameters on every column of `logits`.
Calibration fit_calibration(const Eigen::MatrixXd& logits, std::span<const int> labels);

Eigen::MatrixXd apply_calibration(const Eigen::MatrixXd& logits, const Calibration& cal);

/// Elementwise logistic sigmoid.
Eigen::MatrixXd sigmoid_matrix(const Eigen::MatrixXd& logits);

/// Text lines `label_id,A,B,tau` behind a header row.
void write_calibration(const Calibration& cal, const std::filesystem::path& path);
Calibration read_calibration(const std::filesystem::path& path);

}  // namespace clignet
