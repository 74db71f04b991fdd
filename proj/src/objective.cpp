#include "clignet/objective.hpp"

#include <algorithm>
#include <cmath>

#include "clignet/errors.hpp"
#include "clignet/network.hpp"

namespace clignet {

namespace {

void check(const Eigen::VectorXd& logits, int target, const FocalConfig& config) {
  if (target < 0 || target >= logits.size()) throw InputError("target label id out of range");
  if (config.weights.weight.size() != logits.size()) throw InputError("class weight count differs from K");
}

// Signed margin u: p_t = sigmoid(u).
double margin(double logit, bool positive) { return positive ? logit : -logit; }

}  // namespace

ClassWeights ClassWeights::uniform(std::size_t num_labels) {
  return ClassWeights{Eigen::VectorXd::Ones(static_cast<Eigen::Index>(num_labels))};
}

ClassWeights ClassWeights::inverse_frequency(const std::vector<std::size_t>& train_counts, double lo, double hi) {
  std::size_t total = 0;
  for (const auto c : train_counts) total += c;
  const double k = static_cast<double>(train_counts.size());
  ClassWeights w{Eigen::VectorXd(static_cast<Eigen::Index>(train_counts.size()))};
  for (std::size_t i = 0; i < train_counts.size(); ++i) {
    const double raw = train_counts[i] == 0 ? hi : static_cast<double>(total) / (k * static_cast<double>(train_counts[i]));
    w.weight[static_cast<Eigen::Index>(i)] = std::clamp(raw, lo, hi);
  }
  return w;
}

double focal_bce(const Eigen::VectorXd& logits, int target, const FocalConfig& config) {
  check(logits, target, config);
  double total = 0.0;
  for (Eigen::Index k = 0; k < logits.size(); ++k) {
    const double u = margin(logits[k], k == target);
    const double nll = softplus(-u);  // -log p_t
    // (1 - p_t)^gamma = sigmoid(-u)^gamma = exp(-gamma softplus(u))
    const double mod = config.gamma == 0.0 ? 1.0 : std::exp(-config.gamma * softplus(u));
    total += config.weights.weight[k] * mod * nll;
  }
  return total / static_cast<double>(logits.size());
}

Eigen::VectorXd focal_bce_grad(const Eigen::VectorXd& logits, int target, const FocalConfig& config) {
  check(logits, target, config);
  const double inv_k = 1.0 / static_cast<double>(logits.size());
  Eigen::VectorXd g(logits.size());
  for (Eigen::Index k = 0; k < logits.size(); ++k) {
    const bool positive = k == target;
    const double u = margin(logits[k], positive);
    const double q = sigmoid(-u);  // 1 - p_t
    const double nll = softplus(-u);
    const double mod = config.gamma == 0.0 ? 1.0 : std::exp(-config.gamma * softplus(u));
    // d/du [q^g softplus(-u)] with dq/du = -q(1-q)
    const double d_du = -mod * (config.gamma * (1.0 - q) * nll + q);
    g[k] = config.weights.weight[k] * inv_k * (positive ? d_du : -d_du);
  }
  return g;
}

double mean_bce(const Eigen::VectorXd& logits, int target) {
  double total = 0.0;
  for (Eigen::Index k = 0; k < logits.size(); ++k) total += softplus(-margin(logits[k], k == target));
  return total / static_cast<double>(logits.size());
}

}  // namespace clignet
