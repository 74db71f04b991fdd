#pragma once

#include <Eigen/Dense>

#include <vector>

namespace clignet {

struct ClassWeights {
  Eigen::VectorXd weight;  // one positive weight per label

  static ClassWeights uniform(std::size_t num_labels);
  /// N_train / (K n_k), clipped to [lo, hi]. A label with n_k = 0 gets `hi`.
  static ClassWeights inverse_frequency(const std::vector<std::size_t>& train_counts, double lo = 0.1,
                                        double hi = 10.0);
};

struct FocalConfig {
  double gamma = 2.0;
  ClassWeights weights;
};

/// Mean over the K labels of w_k (1 - p_t)^gamma (-log p_t), with the target
/// one-hot encoded. Evaluated from logits with softplus identities.
double focal_bce(const Eigen::VectorXd& logits, int target, const FocalConfig& config);

/// d focal_bce / d logits.
Eigen::VectorXd focal_bce_grad(const Eigen::VectorXd& logits, int target, const FocalConfig& config);

/// Mean binary cross-entropy over K labels, for reference.
double mean_bce(const Eigen::VectorXd& logits, int target);

}  // namespace clignet
