#include "clignet/attribution.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "clignet/errors.hpp"

namespace clignet {

namespace {

// Logit of `label` and its gradient with respect to the document embedding.
std::pair<double, Eigen::VectorXd> logit_and_grad(const Network& net, const Eigen::VectorXd& h_doc, int label) {
  DocInput in;
  in.embedding = h_doc;
  const std::span<const DocInput> one(&in, 1);
  const auto fwd = net.forward(one, Pass::differentiate);
  Eigen::MatrixXd up = Eigen::MatrixXd::Zero(1, fwd.logits.cols());
  up(0, label) = 1.0;
  const auto back = net.backward(one, fwd, up);
  return {fwd.logits(0, label), back.d_hdoc.col(0)};
}

double logit_at(const Network& net, const Eigen::VectorXd& h_doc, int label) {
  DocInput in;
  in.embedding = h_doc;
  return net.forward(std::span<const DocInput>(&in, 1), Pass::inference).logits(0, label);
}

}  // namespace

FeatureAttribution integrated_gradients_features(const Network& net, const DocInput& doc, int label,
                                                 std::size_t steps, const Eigen::VectorXd* baseline) {
  if (!net.trained()) throw InputError("integrated gradients needs a trained model");
  if (steps < 2) throw InputError("integrated gradients needs at least 2 steps");
  if (label < 0 || static_cast<std::size_t>(label) >= net.config().num_labels) {
    throw InputError("attribution label out of range");
  }
  if (baseline != nullptr && doc.hashed()) throw InputError("a custom baseline applies to embedding inputs only");

  // The document embedding is linear in the hashed features, so the path in
  // feature space maps onto a straight path in embedding space.
  const Eigen::VectorXd x = net.embed(doc);
  const Eigen::VectorXd x0 = baseline != nullptr ? *baseline : Eigen::VectorXd::Zero(x.size());
  if (x0.size() != x.size()) throw InputError("baseline dimension differs from the input");
  const Eigen::VectorXd delta = x - x0;

  Eigen::VectorXd avg_grad = Eigen::VectorXd::Zero(x.size());
  for (std::size_t s = 0; s < steps; ++s) {
    const double alpha = (static_cast<double>(s) + 0.5) / static_cast<double>(steps);
    avg_grad += logit_and_grad(net, x0 + alpha * delta, label).second;
  }
  avg_grad /= static_cast<double>(steps);

  FeatureAttribution out;
  out.logit = logit_at(net, x, label);
  out.baseline_logit = logit_at(net, x0, label);
  if (doc.hashed()) {
    const auto& f = doc.features;
    const auto& proj = net.params().projection;
    out.unit_grad.resize(static_cast<Eigen::Index>(f.nnz()));
    out.values.resize(out.unit_grad.size());
    for (std::size_t i = 0; i < f.nnz(); ++i) {
      const auto j = static_cast<Eigen::Index>(i);
      out.unit_grad[j] = proj.col(f.index[i]).dot(avg_grad);
      out.values[j] = f.value[i] * out.unit_grad[j];
    }
  } else {
    out.unit_grad = avg_grad;
    out.values = delta.cwiseProduct(avg_grad);
  }
  return out;
}

AttributionResult integrated_gradients(const Network& net, const DocInput& doc, int label, std::size_t steps,
                                       const TokenSequence* tokens, const ChunkParams* chunks,
                                       const FeatureHasher* hasher) {
  const auto fa = integrated_gradients_features(net, doc, label, steps);
  AttributionResult r;
  r.label = label;
  r.logit = fa.logit;
  r.baseline_logit = fa.baseline_logit;

  if (doc.hashed() && tokens != nullptr && chunks != nullptr && hasher != nullptr) {
    r.token_level = true;
    const auto& f = doc.features;
    std::map<std::uint32_t, double> per_unit;
    for (std::size_t i = 0; i < f.nnz(); ++i) per_unit[f.index[i]] = fa.unit_grad[static_cast<Eigen::Index>(i)];
    std::map<std::string, double> by_token;
    for (const auto& c : token_contributions(*tokens, *chunks, *hasher)) {
      const auto it = per_unit.find(c.bucket);
      if (it != per_unit.end()) by_token[c.token] += c.amount * it->second;
    }
    r.token_scores.assign(by_token.begin(), by_token.end());
  } else {
    for (Eigen::Index j = 0; j < fa.values.size(); ++j) {
      r.token_scores.emplace_back("dim_" + std::to_string(j), fa.values[j]);
    }
  }
  for (const auto& [_, s] : r.token_scores) r.total += s;
  r.completeness_gap = std::abs(r.total - (r.logit - r.baseline_logit));
  return r;
}

std::vector<std::pair<std::string, double>> top_tokens(const AttributionResult& result, std::size_t n) {
  auto sorted = result.token_scores;
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (sorted.size() > n) sorted.resize(n);
  return sorted;
}

}  // namespace clignet
