#include "clignet/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <stdexcept>
#include <tuple>

#include "clignet/errors.hpp"

namespace clignet {

namespace {

void check_rows(Eigen::Index rows, std::span<const int> labels) {
  if (rows != static_cast<Eigen::Index>(labels.size())) throw InputError("row count differs from label count");
}

}  // namespace

Decisions binarize(const Eigen::MatrixXd& probabilities, const Eigen::VectorXd& thresholds) {
  if (thresholds.size() != probabilities.cols()) throw InputError("threshold count differs from K");
  Decisions d(probabilities.rows(), probabilities.cols());
  for (Eigen::Index k = 0; k < probabilities.cols(); ++k) {
    for (Eigen::Index n = 0; n < probabilities.rows(); ++n) d(n, k) = probabilities(n, k) >= thresholds[k] ? 1 : 0;
  }
  return d;
}

double BinaryCounts::f1() const {
  const std::size_t denom = 2 * tp + fp + fn;
  return denom == 0 ? 0.0 : static_cast<double>(2 * tp) / static_cast<double>(denom);
}

std::vector<BinaryCounts> label_counts(const Decisions& decisions, std::span<const int> labels) {
  check_rows(decisions.rows(), labels);
  std::vector<BinaryCounts> out(static_cast<std::size_t>(decisions.cols()));
  for (Eigen::Index n = 0; n < decisions.rows(); ++n) {
    for (Eigen::Index k = 0; k < decisions.cols(); ++k) {
      const bool truth = labels[static_cast<std::size_t>(n)] == k;
      const bool pred = decisions(n, k) != 0;
      auto& c = out[static_cast<std::size_t>(k)];
      if (pred && truth) ++c.tp;
      else if (pred) ++c.fp;
      else if (truth) ++c.fn;
    }
  }
  return out;
}

Eigen::VectorXd per_label_f1(const Decisions& decisions, std::span<const int> labels) {
  const auto counts = label_counts(decisions, labels);
  Eigen::VectorXd f1(static_cast<Eigen::Index>(counts.size()));
  for (std::size_t k = 0; k < counts.size(); ++k) f1[static_cast<Eigen::Index>(k)] = counts[k].f1();
  return f1;
}

double macro_f1(const Decisions& decisions, std::span<const int> labels) {
  if (decisions.cols() == 0) return 0.0;
  // Sequential sum in label order, so the value does not depend on vectorization.
  double sum = 0.0;
  for (const auto& c : label_counts(decisions, labels)) sum += c.f1();
  return sum / static_cast<double>(decisions.cols());
}

std::size_t absent_labels(std::span<const int> labels, std::size_t num_labels) {
  std::vector<bool> seen(num_labels, false);
  for (const int y : labels) {
    if (y >= 0 && static_cast<std::size_t>(y) < num_labels) seen[static_cast<std::size_t>(y)] = true;
  }
  return static_cast<std::size_t>(std::count(seen.begin(), seen.end(), false));
}

std::vector<int> argmax_labels(const Eigen::MatrixXd& scores) {
  std::vector<int> out(static_cast<std::size_t>(scores.rows()), 0);
  for (Eigen::Index n = 0; n < scores.rows(); ++n) {
    Eigen::Index best = 0;
    for (Eigen::Index k = 1; k < scores.cols(); ++k) {
      if (scores(n, k) > scores(n, best)) best = k;
    }
    out[static_cast<std::size_t>(n)] = static_cast<int>(best);
  }
  return out;
}

MicroAccuracy micro_accuracy(const Eigen::MatrixXd& probabilities, std::span<const int> labels) {
  check_rows(probabilities.rows(), labels);
  if (labels.empty()) return {};
  const auto pred = argmax_labels(probabilities);
  std::size_t correct = 0;
  for (std::size_t n = 0; n < labels.size(); ++n) correct += pred[n] == labels[n];
  // Each document contributes exactly one predicted positive and one true
  // positive, so FP = FN = number of wrong documents.
  const BinaryCounts pooled{correct, labels.size() - correct, labels.size() - correct};
  return {pooled.f1(), static_cast<double>(correct) / static_cast<double>(labels.size())};
}

double hamming_loss(const Decisions& decisions, std::span<const int> labels) {
  check_rows(decisions.rows(), labels);
  if (decisions.size() == 0) return 0.0;
  std::size_t wrong = 0;
  for (Eigen::Index n = 0; n < decisions.rows(); ++n) {
    for (Eigen::Index k = 0; k < decisions.cols(); ++k) {
      wrong += (decisions(n, k) != 0) != (labels[static_cast<std::size_t>(n)] == k);
    }
  }
  return static_cast<double>(wrong) / static_cast<double>(decisions.size());
}

double ece(const Eigen::MatrixXd& probabilities, std::span<const int> labels, std::size_t bins) {
  check_rows(probabilities.rows(), labels);
  if (bins < 2) throw InputError("ECE needs at least 2 bins");
  if (probabilities.size() == 0) return 0.0;
  std::vector<double> conf(bins, 0.0);
  std::vector<double> hits(bins, 0.0);
  std::vector<std::size_t> count(bins, 0);
  const double b = static_cast<double>(bins);
  for (Eigen::Index n = 0; n < probabilities.rows(); ++n) {
    for (Eigen::Index k = 0; k < probabilities.cols(); ++k) {
      const double p = probabilities(n, k);
      const auto idx = std::min(static_cast<std::size_t>(std::max(0.0, std::floor(p * b))), bins - 1);
      conf[idx] += p;
      hits[idx] += labels[static_cast<std::size_t>(n)] == k ? 1.0 : 0.0;
      ++count[idx];
    }
  }
  const double total = static_cast<double>(probabilities.size());
  double out = 0.0;
  for (std::size_t i = 0; i < bins; ++i) {
    if (count[i] == 0) continue;
    const double c = static_cast<double>(count[i]);
    out += (c / total) * std::abs(hits[i] / c - conf[i] / c);
  }
  return out;
}

ContingencyTable contingency(std::span<const int> baseline, std::span<const int> candidate,
                             std::span<const int> labels) {
  if (baseline.size() != labels.size() || candidate.size() != labels.size()) {
    throw InputError("prediction lists differ in length from labels");
  }
  ContingencyTable t;
  for (std::size_t n = 0; n < labels.size(); ++n) {
    const bool b = baseline[n] == labels[n];
    const bool c = candidate[n] == labels[n];
    if (b && c) ++t.n11;
    else if (b) ++t.n01;
    else if (c) ++t.n10;
    else ++t.n00;
  }
  return t;
}

McNemarResult mcnemar(long long n01, long long n10) {
  if (n01 < 0 || n10 < 0) throw InputError("McNemar counts must be non-negative");
  const long long discordant = n01 + n10;
  if (discordant == 0) return {0.0, 1.0};
  const double diff = std::max(0.0, static_cast<double>(std::llabs(n01 - n10)) - 1.0);
  const double chi2 = diff * diff / static_cast<double>(discordant);
  return {chi2, std::erfc(std::sqrt(chi2 / 2.0))};
}

McNemarResult mcnemar(const ContingencyTable& table) {
  return mcnemar(static_cast<long long>(table.n01), static_cast<long long>(table.n10));
}

double bonferroni_threshold(double family_alpha, std::size_t comparisons) {
  if (!(family_alpha > 0.0 && family_alpha < 1.0)) throw InputError("family alpha must lie in (0, 1)");
  if (comparisons == 0) throw InputError("Bonferroni correction needs at least one comparison");
  return family_alpha / static_cast<double>(comparisons);
}

std::vector<bool> bonferroni(std::span<const double> p_values, double family_alpha) {
  const double threshold = bonferroni_threshold(family_alpha, p_values.size());
  std::vector<bool> out;
  out.reserve(p_values.size());
  for (const double p : p_values) out.push_back(p < threshold);
  return out;
}

std::string format_p_value(double p) {
  if (p < 0.001) return "<0.001";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", p);
  return buf;
}

std::vector<ConfusionPair> confusion_pairs(std::span<const int> predictions, std::span<const int> labels,
                                           const std::vector<std::string>& names) {
  if (predictions.size() != labels.size()) throw InputError("prediction count differs from label count");
  std::map<std::pair<int, int>, std::size_t> counts;
  std::map<int, std::size_t> class_total;
  for (std::size_t n = 0; n < labels.size(); ++n) {
    ++class_total[labels[n]];
    if (predictions[n] != labels[n]) ++counts[{labels[n], predictions[n]}];
  }
  std::vector<ConfusionPair> out;
  for (const auto& [pair, c] : counts) {
    out.push_back({pair.first, pair.second, c,
                   100.0 * static_cast<double>(c) / static_cast<double>(class_total[pair.first])});
  }
  const auto name = [&](int id) -> const std::string& { return names.at(static_cast<std::size_t>(id)); };
  std::sort(out.begin(), out.end(), [&](const ConfusionPair& a, const ConfusionPair& b) {
    if (a.count != b.count) return a.count > b.count;
    return std::tie(name(a.true_label), name(a.predicted)) < std::tie(name(b.true_label), name(b.predicted));
  });
  return out;
}

std::vector<BinSummary> stratified_bins(std::span<const double> values, std::span<const double> keys,
                                        std::span<const double> edges) {
  if (values.size() != keys.size()) throw InputError("bin values and keys differ in length");
  if (edges.size() < 2) throw InputError("need at least two bin edges");
  std::vector<BinSummary> out(edges.size() - 1);
  std::vector<double> sum(out.size(), 0.0);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i].lower = edges[i];
    out[i].upper = edges[i + 1];
  }
  for (std::size_t n = 0; n < values.size(); ++n) {
    for (std::size_t i = 0; i < out.size(); ++i) {
      if (keys[n] >= out[i].lower && keys[n] < out[i].upper) {
        ++out[i].count;
        sum[i] += values[n];
        break;
      }
    }
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i].mean = out[i].count == 0 ? 0.0 : sum[i] / static_cast<double>(out[i].count);
  }
  return out;
}

const std::vector<double>& class_size_edges() {
  static const std::vector<double> edges{0, 20, 50, 100, 500, std::numeric_limits<double>::infinity()};
  return edges;
}

const std::vector<double>& word_count_edges() {
  static const std::vector<double> edges{0, 200, 400, 600, 1000, std::numeric_limits<double>::infinity()};
  return edges;
}

EvalReport evaluate(const EvalInputs& in) {
  const auto k = static_cast<std::size_t>(in.probabilities.cols());
  if (in.names.size() != k || in.train_counts.size() != k) throw InputError("label metadata differs from K");
  if (in.word_counts.size() != in.labels.size()) throw InputError("word counts differ from document count");

  EvalReport r;
  const Decisions dec = binarize(in.probabilities, in.thresholds);
  r.per_label_counts = label_counts(dec, in.labels);
  r.per_label_f1 = per_label_f1(dec, in.labels);
  r.macro_f1 = k == 0 ? 0.0 : r.per_label_f1.mean();
  const auto ma = micro_accuracy(in.probabilities, in.labels);
  r.micro_f1 = ma.micro_f1;
  r.accuracy = ma.accuracy;
  r.hamming = hamming_loss(dec, in.labels);
  r.ece = ece(in.probabilities, in.labels, in.ece_bins);
  r.absent_labels = absent_labels(in.labels, k);
  r.predictions = argmax_labels(in.probabilities);
  r.confusion_pairs = confusion_pairs(r.predictions, in.labels, in.names);

  std::vector<double> f1(r.per_label_f1.data(), r.per_label_f1.data() + r.per_label_f1.size());
  std::vector<double> sizes(in.train_counts.begin(), in.train_counts.end());
  r.class_size_bins = stratified_bins(f1, sizes, class_size_edges());

  std::vector<double> correct;
  std::vector<double> words(in.word_counts.begin(), in.word_counts.end());
  for (std::size_t n = 0; n < in.labels.size(); ++n) correct.push_back(r.predictions[n] == in.labels[n] ? 1.0 : 0.0);
  r.length_bins = stratified_bins(correct, words, word_count_edges());
  return r;
}

}  // namespace clignet
