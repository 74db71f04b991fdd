#include "clignet/baseline.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "clignet/errors.hpp"
#include "clignet/network.hpp"

namespace clignet {

std::vector<std::string> word_ngrams(const std::vector<std::string>& tokens) {
  std::vector<std::string> out(tokens.begin(), tokens.end());
  for (std::size_t i = 0; i + 1 < tokens.size(); ++i) out.push_back(tokens[i] + " " + tokens[i + 1]);
  return out;
}

TfidfModel fit_tfidf(const std::vector<std::vector<std::string>>& train_docs, std::size_t max_features) {
  if (train_docs.empty()) throw InputError("TF-IDF needs at least one training document");
  std::map<std::string, std::pair<std::size_t, std::size_t>> stats;  // total count, document frequency
  for (const auto& doc : train_docs) {
    std::map<std::string, std::size_t> local;
    for (auto& g : word_ngrams(doc)) ++local[std::move(g)];
    for (const auto& [term, c] : local) {
      auto& s = stats[term];
      s.first += c;
      ++s.second;
    }
  }
  std::vector<std::pair<std::string, std::pair<std::size_t, std::size_t>>> ranked(stats.begin(), stats.end());
  // `stats` is ordered lexicographically, so a stable sort keeps that order on ties.
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second.first > b.second.first; });
  if (ranked.size() > max_features) ranked.resize(max_features);

  TfidfModel m;
  m.idf.resize(static_cast<Eigen::Index>(ranked.size()));
  const double n = static_cast<double>(train_docs.size());
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    m.index.emplace(ranked[i].first, i);
    m.terms.push_back(ranked[i].first);
    m.idf[static_cast<Eigen::Index>(i)] = std::log((1.0 + n) / (1.0 + static_cast<double>(ranked[i].second.second))) + 1.0;
  }
  return m;
}

SparseRows transform_tfidf(const TfidfModel& model, const std::vector<std::vector<std::string>>& docs) {
  std::vector<Eigen::Triplet<double>> triplets;
  for (std::size_t d = 0; d < docs.size(); ++d) {
    std::map<std::size_t, double> tf;
    for (const auto& g : word_ngrams(docs[d])) {
      const auto it = model.index.find(g);
      if (it != model.index.end()) tf[it->second] += 1.0;
    }
    double norm = 0.0;
    for (auto& [j, v] : tf) {
      v *= model.idf[static_cast<Eigen::Index>(j)];
      norm += v * v;
    }
    norm = std::sqrt(norm);
    for (const auto& [j, v] : tf) {
      triplets.emplace_back(static_cast<int>(d), static_cast<int>(j), v / norm);
    }
  }
  SparseRows x(static_cast<Eigen::Index>(docs.size()), static_cast<Eigen::Index>(model.size()));
  x.setFromTriplets(triplets.begin(), triplets.end());
  return x;
}

namespace {

struct LossGrad {
  double loss = 0.0;
  Eigen::VectorXd gw;
  double gb = 0.0;
};

LossGrad loss_and_grad(const SparseRows& x, std::span<const double> y, std::span<const double> sw,
                       const Eigen::VectorXd& w, double b, double l2) {
  const Eigen::VectorXd s = (x * w).array() + b;
  const double n = static_cast<double>(y.size());
  Eigen::VectorXd r(s.size());
  LossGrad out;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    const double yi = y[static_cast<std::size_t>(i)];
    const double wi = sw[static_cast<std::size_t>(i)];
    out.loss += wi * (yi > 0.5 ? softplus(-s[i]) : softplus(s[i]));
    r[i] = wi * (sigmoid(s[i]) - yi) / n;
  }
  out.loss = out.loss / n + 0.5 * l2 * w.squaredNorm();
  out.gw = x.transpose() * r + l2 * w;
  out.gb = r.sum();
  return out;
}

}  // namespace

double logreg_objective(const SparseRows& x, std::span<const double> y, std::span<const double> sample_weight,
                        const Eigen::VectorXd& w, double b, double l2) {
  return loss_and_grad(x, y, sample_weight, w, b, l2).loss;
}

BinaryLogReg fit_binary_logreg(const SparseRows& x, std::span<const double> y, std::span<const double> sample_weight,
                               const LogRegOptions& options) {
  if (static_cast<std::size_t>(x.rows()) != y.size() || y.size() != sample_weight.size()) {
    throw InputError("logistic regression inputs differ in length");
  }
  BinaryLogReg fit;
  fit.w = Eigen::VectorXd::Zero(x.cols());
  LossGrad cur = loss_and_grad(x, y, sample_weight, fit.w, fit.b, options.l2);
  double step = 1.0;
  Eigen::VectorXd prev_w;
  double prev_b = 0.0;
  Eigen::VectorXd prev_gw;
  double prev_gb = 0.0;

  for (; fit.iterations < options.max_iter; ++fit.iterations) {
    const double gnorm2 = cur.gw.squaredNorm() + cur.gb * cur.gb;
    if (std::sqrt(gnorm2) < options.tol) {
      fit.converged = true;
      break;
    }
    if (prev_gw.size() > 0) {
      const double ss = (fit.w - prev_w).squaredNorm() + (fit.b - prev_b) * (fit.b - prev_b);
      const double sy = (fit.w - prev_w).dot(cur.gw - prev_gw) + (fit.b - prev_b) * (cur.gb - prev_gb);
      if (sy > 0.0 && std::isfinite(ss / sy)) step = ss / sy;
    }
    bool accepted = false;
    while (step > 1e-20) {
      const Eigen::VectorXd nw = fit.w - step * cur.gw;
      const double nb = fit.b - step * cur.gb;
      LossGrad next = loss_and_grad(x, y, sample_weight, nw, nb, options.l2);
      if (next.loss <= cur.loss - 1e-4 * step * gnorm2) {
        prev_w = fit.w;
        prev_b = fit.b;
        prev_gw = cur.gw;
        prev_gb = cur.gb;
        fit.w = nw;
        fit.b = nb;
        cur = std::move(next);
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;  // no descent possible at machine precision
  }
  if (!fit.converged) {
    fit.converged = std::sqrt(cur.gw.squaredNorm() + cur.gb * cur.gb) < options.tol;
  }
  fit.loss = cur.loss;
  return fit;
}

OvrModel fit_ovr_logreg(const TfidfModel& tfidf, const SparseRows& x, std::span<const int> labels,
                        std::size_t num_labels, const LogRegOptions& options) {
  if (static_cast<std::size_t>(x.rows()) != labels.size()) throw InputError("feature rows differ from label count");
  OvrModel m;
  m.tfidf = tfidf;
  m.weights.resize(x.cols(), static_cast<Eigen::Index>(num_labels));
  m.bias.resize(static_cast<Eigen::Index>(num_labels));
  const double n = static_cast<double>(labels.size());
  std::vector<double> y(labels.size());
  std::vector<double> sw(labels.size());
  for (std::size_t k = 0; k < num_labels; ++k) {
    double pos = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      y[i] = labels[i] == static_cast<int>(k) ? 1.0 : 0.0;
      pos += y[i];
    }
    const double neg = n - pos;
    const double w_pos = pos > 0.0 ? n / (2.0 * pos) : 0.0;
    const double w_neg = neg > 0.0 ? n / (2.0 * neg) : 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i) sw[i] = y[i] > 0.5 ? w_pos : w_neg;
    const auto fit = fit_binary_logreg(x, y, sw, options);
    m.weights.col(static_cast<Eigen::Index>(k)) = fit.w;
    m.bias[static_cast<Eigen::Index>(k)] = fit.b;
    m.converged.push_back(fit.converged);
  }
  return m;
}

Eigen::MatrixXd baseline_logits(const OvrModel& model, const SparseRows& x) {
  Eigen::MatrixXd s = x * model.weights;
  s.rowwise() += model.bias.transpose();
  return s;
}

Eigen::MatrixXd predict_baseline(const OvrModel& model, const SparseRows& x) {
  return baseline_logits(model, x).unaryExpr([](double v) { return sigmoid(v); });
}

Checkpoint baseline_checkpoint(const OvrModel& model, const std::string& config_text,
                               const std::vector<std::string>& labels) {
  Checkpoint c;
  c.type = kBaselineTag;
  c.config = config_text;
  c.labels = labels;
  c.lists["tfidf.terms"] = model.tfidf.terms;
  c.tensors["tfidf.idf"] = model.tfidf.idf;
  c.tensors["ovr.weights"] = model.weights;
  c.tensors["ovr.bias"] = model.bias;
  return c;
}

OvrModel baseline_from_checkpoint(const Checkpoint& ckpt) {
  if (ckpt.type != kBaselineTag) throw InputError("checkpoint type is '" + ckpt.type + "', expected " + kBaselineTag);
  OvrModel m;
  const auto it = ckpt.lists.find("tfidf.terms");
  if (it == ckpt.lists.end()) throw InputError("baseline checkpoint lacks its vocabulary");
  m.tfidf.terms = it->second;
  for (std::size_t i = 0; i < m.tfidf.terms.size(); ++i) m.tfidf.index.emplace(m.tfidf.terms[i], i);
  m.tfidf.idf = ckpt.tensor("tfidf.idf").col(0);
  m.weights = ckpt.tensor("ovr.weights");
  m.bias = ckpt.tensor("ovr.bias").col(0);
  const auto f = static_cast<Eigen::Index>(m.tfidf.terms.size());
  if (m.tfidf.idf.size() != f || m.weights.rows() != f || m.weights.cols() != m.bias.size()) {
    throw InputError("baseline checkpoint tensors have inconsistent shapes");
  }
  m.converged.assign(static_cast<std::size_t>(m.bias.size()), true);
  return m;
}

}  // namespace clignet
