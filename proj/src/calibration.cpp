#include "clignet/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>
#include <vector>

#include "clignet/csv.hpp"
#include "clignet/errors.hpp"
#include "clignet/network.hpp"

namespace clignet {

namespace {

constexpr int kGridSteps = 100;  // tau = j / 100 for j in 1..99

struct Targets {
  double pos = 1.0;
  double neg = 0.0;
};

Targets smoothed_targets(std::span<const bool> labels) {
  double n_pos = 0.0;
  for (const bool y : labels) n_pos += y ? 1.0 : 0.0;
  const double n_neg = static_cast<double>(labels.size()) - n_pos;
  return {(n_pos + 1.0) / (n_pos + 2.0), 1.0 / (n_neg + 2.0)};
}

double nll_sum(std::span<const double> f, std::span<const bool> y, const Targets& t, double a, double b) {
  double total = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double z = a * f[i] + b;
    const double target = y[i] ? t.pos : t.neg;
    // -[t log P + (1-t) log(1-P)] with P = sigmoid(-z)
    total += target * softplus(z) + (1.0 - target) * softplus(-z);
  }
  return total;
}

}  // namespace

double platt_nll(std::span<const double> logits, std::span<const bool> labels, double a, double b) {
  if (logits.empty()) return 0.0;
  return nll_sum(logits, labels, smoothed_targets(labels), a, b) / static_cast<double>(logits.size());
}

PlattParams fit_platt(std::span<const double> logits, std::span<const bool> labels) {
  if (logits.size() != labels.size()) throw InputError("Platt scaling: logits and labels differ in length");
  for (const double f : logits) {
    if (!std::isfinite(f)) throw NumericError("Platt scaling: non-finite logit");
  }
  PlattParams p;
  std::size_t n_pos = 0;
  for (const bool y : labels) n_pos += y;
  if (n_pos == 0 || n_pos == labels.size()) {
    p.fallback = true;
    return p;
  }

  const Targets t = smoothed_targets(labels);
  constexpr double kRidge = 1e-12;
  double value = nll_sum(logits, labels, t, p.a, p.b);
  for (; p.iterations < 100; ++p.iterations) {
    double ga = 0.0, gb = 0.0, haa = kRidge, hab = 0.0, hbb = kRidge;
    for (std::size_t i = 0; i < logits.size(); ++i) {
      const double f = logits[i];
      const double prob = sigmoid(-(p.a * f + p.b));
      const double r = (labels[i] ? t.pos : t.neg) - prob;
      const double w = prob * (1.0 - prob);
      ga += r * f;
      gb += r;
      haa += w * f * f;
      hab += w * f;
      hbb += w;
    }
    if (std::hypot(ga, gb) < 1e-8) break;

    const double det = haa * hbb - hab * hab;
    double da = -(hbb * ga - hab * gb) / det;
    double db = -(-hab * ga + haa * gb) / det;
    double slope = ga * da + gb * db;
    if (!(det > 0.0) || !(slope < 0.0)) {  // fall back to steepest descent
      da = -ga;
      db = -gb;
      slope = -(ga * ga + gb * gb);
    }
    double step = 1.0;
    bool moved = false;
    while (step >= 1e-10) {
      const double na = p.a + step * da;
      const double nb = p.b + step * db;
      const double nv = nll_sum(logits, labels, t, na, nb);
      if (nv <= value + 1e-4 * step * slope) {
        p.a = na;
        p.b = nb;
        value = nv;
        moved = true;
        break;
      }
      step *= 0.5;
    }
    if (!moved) break;
  }
  return p;
}

double apply_platt(double logit, double a, double b) {
  const double prob = sigmoid(-(a * logit + b));
  return std::clamp(prob, 1e-12, 1.0 - 1e-12);
}

Eigen::VectorXd optimize_thresholds(const Eigen::MatrixXd& probabilities, std::span<const int> labels) {
  if (probabilities.rows() != static_cast<Eigen::Index>(labels.size())) {
    throw InputError("threshold search: row count differs from label count");
  }
  Eigen::VectorXd tau(probabilities.cols());
  for (Eigen::Index k = 0; k < probabilities.cols(); ++k) {
    // F1 = num / den compared by cross-multiplication to keep ties exact.
    long long best_num = -1, best_den = 1;
    int best_j = 50;
    for (int j = 1; j < kGridSteps; ++j) {
      const double t = static_cast<double>(j) / kGridSteps;
      long long tp = 0, fp = 0, fn = 0;
      for (Eigen::Index n = 0; n < probabilities.rows(); ++n) {
        const bool pred = probabilities(n, k) >= t;
        const bool truth = labels[static_cast<std::size_t>(n)] == k;
        tp += pred && truth;
        fp += pred && !truth;
        fn += !pred && truth;
      }
      const long long num = 2 * tp;
      const long long den = std::max(2 * tp + fp + fn, 1LL);
      const long long lhs = num * best_den;
      const long long rhs = best_num * den;
      const bool better = lhs > rhs;
      const bool tie = lhs == rhs && std::abs(j - 50) < std::abs(best_j - 50);
      if (best_num < 0 || better || tie) {
        best_num = num;
        best_den = den;
        best_j = j;
      }
    }
    tau[k] = static_cast<double>(best_j) / kGridSteps;
  }
  return tau;
}

Calibration Calibration::identity(std::size_t num_labels, double tau) {
  const auto k = static_cast<Eigen::Index>(num_labels);
  return {Eigen::VectorXd::Constant(k, -1.0), Eigen::VectorXd::Zero(k), Eigen::VectorXd::Constant(k, tau)};
}

Calibration fit_calibration(const Eigen::MatrixXd& logits, std::span<const int> labels) {
  Calibration cal = Calibration::identity(static_cast<std::size_t>(logits.cols()));
  std::vector<double> column(static_cast<std::size_t>(logits.rows()));
  std::unique_ptr<bool[]> positive(new bool[column.size()]);
  for (Eigen::Index k = 0; k < logits.cols(); ++k) {
    for (std::size_t n = 0; n < column.size(); ++n) {
      column[n] = logits(static_cast<Eigen::Index>(n), k);
      positive[n] = labels[n] == k;
    }
    const PlattParams p = fit_platt(column, std::span<const bool>(positive.get(), column.size()));
    cal.a[k] = p.a;
    cal.b[k] = p.b;
  }
  return cal;
}

Eigen::MatrixXd apply_calibration(const Eigen::MatrixXd& logits, const Calibration& cal) {
  if (static_cast<std::size_t>(logits.cols()) != cal.size()) throw InputError("calibration size differs from K");
  Eigen::MatrixXd out(logits.rows(), logits.cols());
  for (Eigen::Index k = 0; k < logits.cols(); ++k) {
    for (Eigen::Index n = 0; n < logits.rows(); ++n) out(n, k) = apply_platt(logits(n, k), cal.a[k], cal.b[k]);
  }
  return out;
}

Eigen::MatrixXd sigmoid_matrix(const Eigen::MatrixXd& logits) {
  return logits.unaryExpr([](double v) { return sigmoid(v); });
}

void write_calibration(const Calibration& cal, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << "label_id,A,B,tau\n";
  char buf[128];
  for (std::size_t k = 0; k < cal.size(); ++k) {
    const auto i = static_cast<Eigen::Index>(k);
    std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g,%.2f\n", k, cal.a[i], cal.b[i], cal.tau[i]);
    out << buf;
  }
}

Calibration read_calibration(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingArtifactError(path.string());
  const auto rows = csv::parse(in);
  if (rows.empty() || rows.front() != csv::Row{"label_id", "A", "B", "tau"}) {
    throw InputError(path.string() + ": expected header label_id,A,B,tau");
  }
  const std::size_t k = rows.size() - 1;
  Calibration cal = Calibration::identity(k);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != 4) throw InputError(path.string() + ": calibration row " + std::to_string(r) + " needs 4 fields");
    try {
      const auto id = std::stoul(row[0]);
      if (id != r - 1) throw InputError(path.string() + ": label ids must be 0..K-1 in order");
      const auto i = static_cast<Eigen::Index>(id);
      cal.a[i] = std::stod(row[1]);
      cal.b[i] = std::stod(row[2]);
      cal.tau[i] = std::stod(row[3]);
    } catch (const std::logic_error&) {
      throw InputError(path.string() + ": malformed number in calibration row " + std::to_string(r));
    }
  }
  return cal;
}

}  // namespace clignet
