#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "clignet/checkpoint.hpp"

namespace clignet {

using SparseRows = Eigen::SparseMatrix<double, Eigen::RowMajor>;

struct TfidfModel {
  std::vector<std::string> terms;  // feature index -> n-gram
  std::unordered_map<std::string, std::size_t> index;
  Eigen::VectorXd idf;

  std::size_t size() const noexcept { return terms.size(); }
};

/// Unigrams and "a b" bigrams of an already tokenized document.
std::vector<std::string> word_ngrams(const std::vector<std::string>& tokens);

/// Keeps the `max_features` n-grams with the highest total count over the
/// training documents (ties in lexicographic order); smoothed idf.
TfidfModel fit_tfidf(const std::vector<std::vector<std::string>>& train_docs, std::size_t max_features = 50000);

/// tf * idf rows scaled to unit L2 norm; empty documents stay zero.
SparseRows transform_tfidf(const TfidfModel& model, const std::vector<std::vector<std::string>>& docs);

struct LogRegOptions {
  double l2 = 1e-4;
  std::size_t max_iter = 500;
  double tol = 1e-6;
};

struct BinaryLogReg {
  Eigen::VectorXd w;
  double b = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  double loss = 0.0;
};

/// Weighted mean logistic loss plus (l2 / 2)|w|^2, bias unregularized.
double logreg_objective(const SparseRows& x, std::span<const double> y, std::span<const double> sample_weight,
                        const Eigen::VectorXd& w, double b, double l2);

/// Gradient descent with a Barzilai-Borwein step guess and Armijo backtracking.
/// Returns the best iterate when the iteration limit is reached.
BinaryLogReg fit_binary_logreg(const SparseRows& x, std::span<const double> y, std::span<const double> sample_weight,
                               const LogRegOptions& options);

struct OvrModel {
  TfidfModel tfidf;
  Eigen::MatrixXd weights;  // features x K
  Eigen::VectorXd bias;     // K
  std::vector<bool> converged;
};

/// One binary problem per label with balanced weights N / (2 n_class).
OvrModel fit_ovr_logreg(const TfidfModel& tfidf, const SparseRows& x, std::span<const int> labels,
                        std::size_t num_labels, const LogRegOptions& options);

/// Logits (N x K) and sigmoid probabilities.
Eigen::MatrixXd baseline_logits(const OvrModel& model, const SparseRows& x);
Eigen::MatrixXd predict_baseline(const OvrModel& model, const SparseRows& x);

Checkpoint baseline_checkpoint(const OvrModel& model, const std::string& config_text,
                               const std::vector<std::string>& labels);
OvrModel baseline_from_checkpoint(const Checkpoint& ckpt);

}  // namespace clignet
