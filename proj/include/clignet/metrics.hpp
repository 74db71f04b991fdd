#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace clignet {

/// N x K matrix of 0/1 decisions.
using Decisions = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;

/// prob >= tau_k, per column.
Decisions binarize(const Eigen::MatrixXd& probabilities, const Eigen::VectorXd& thresholds);

struct BinaryCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  double f1() const;  // 2TP / (2TP + FP + FN), 0 when the denominator is 0
};

/// One-vs-rest counts per label column.
std::vector<BinaryCounts> label_counts(const Decisions& decisions, std::span<const int> labels);
Eigen::VectorXd per_label_f1(const Decisions& decisions, std::span<const int> labels);
double macro_f1(const Decisions& decisions, std::span<const int> labels);

/// Labels that never occur in `labels`.
std::size_t absent_labels(std::span<const int> labels, std::size_t num_labels);

/// Row-wise argmax, ties to the smallest label id.
std::vector<int> argmax_labels(const Eigen::MatrixXd& scores);

struct MicroAccuracy {
  double micro_f1 = 0.0;
  double accuracy = 0.0;
};
MicroAccuracy micro_accuracy(const Eigen::MatrixXd& probabilities, std::span<const int> labels);

double hamming_loss(const Decisions& decisions, std::span<const int> labels);

/// Pools every (document, label) pair into `bins` equal-width bins;
/// correctness of a pair is its one-hot target.
double ece(const Eigen::MatrixXd& probabilities, std::span<const int> labels, std::size_t bins = 10);

/// n01: only the baseline is right; n10: only the candidate is right.
struct ContingencyTable {
  std::size_t n00 = 0;
  std::size_t n01 = 0;
  std::size_t n10 = 0;
  std::size_t n11 = 0;
};
ContingencyTable contingency(std::span<const int> baseline, std::span<const int> candidate,
                             std::span<const int> labels);

struct McNemarResult {
  double chi2 = 0.0;
  double p = 1.0;
};
/// Continuity-corrected statistic with one degree of freedom.
McNemarResult mcnemar(const ContingencyTable& table);
McNemarResult mcnemar(long long n01, long long n10);

double bonferroni_threshold(double family_alpha, std::size_t comparisons);
std::vector<bool> bonferroni(std::span<const double> p_values, double family_alpha);

/// "<0.001" below 0.001, otherwise three decimals.
std::string format_p_value(double p);

struct ConfusionPair {
  int true_label = 0;
  int predicted = 0;
  std::size_t count = 0;
  double pct = 0.0;  // share of the true class, in percent
};
std::vector<ConfusionPair> confusion_pairs(std::span<const int> predictions, std::span<const int> labels,
                                           const std::vector<std::string>& names);

struct BinSummary {
  double lower = 0.0;
  double upper = std::numeric_limits<double>::infinity();
  std::size_t count = 0;
  double mean = 0.0;
};
/// Mean of `values` grouped by `keys` into [edge_i, edge_i+1).
std::vector<BinSummary> stratified_bins(std::span<const double> values, std::span<const double> keys,
                                        std::span<const double> edges);

const std::vector<double>& class_size_edges();  // 0, 20, 50, 100, 500, inf
const std::vector<double>& word_count_edges();  // 0, 200, 400, 600, 1000, inf

struct EvalReport {
  double macro_f1 = 0.0;
  double micro_f1 = 0.0;
  double accuracy = 0.0;
  double hamming = 0.0;
  double ece = 0.0;
  Eigen::VectorXd per_label_f1;
  std::vector<BinaryCounts> per_label_counts;
  std::size_t absent_labels = 0;
  std::vector<int> predictions;
  std::vector<ConfusionPair> confusion_pairs;
  std::vector<BinSummary> class_size_bins;
  std::vector<BinSummary> length_bins;
};

struct EvalInputs {
  const Eigen::MatrixXd& probabilities;
  const Eigen::VectorXd& thresholds;
  std::span<const int> labels;
  const std::vector<std::string>& names;
  std::span<const std::size_t> train_counts;  // per label
  std::span<const std::size_t> word_counts;   // per document
  std::size_t ece_bins = 10;
};

EvalReport evaluate(const EvalInputs& in);

}  // namespace clignet
