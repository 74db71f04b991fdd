#include "clignet/network.hpp"

#include <cmath>
#include <stdexcept>

#include "clignet/errors.hpp"

namespace clignet {

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

namespace {

Eigen::VectorXd sigmoid(const Eigen::VectorXd& x) { return x.unaryExpr([](double v) { return clignet::sigmoid(v); }); }

void fill_uniform(Eigen::MatrixXd& m, Rng& rng, double bound) {
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = rng.uniform(-bound, bound);
  }
}

Eigen::MatrixXd dropout_mask(Eigen::Index rows, Eigen::Index cols, double rate, Pass pass, Rng* rng) {
  if (pass != Pass::train || rate <= 0.0) return Eigen::MatrixXd::Ones(rows, cols);
  if (rng == nullptr) throw std::logic_error("training pass needs a random generator for dropout");
  const double keep = 1.0 - rate;
  Eigen::MatrixXd mask(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c) {
    for (Eigen::Index r = 0; r < rows; ++r) mask(r, c) = rng->bernoulli(keep) ? 1.0 / keep : 0.0;
  }
  return mask;
}

Eigen::MatrixXd relu_grad(const Eigen::MatrixXd& upstream, const Eigen::MatrixXd& pre) {
  return upstream.cwiseProduct(pre.unaryExpr([](double v) { return v > 0.0 ? 1.0 : 0.0; }));
}

void require_shape(const Eigen::MatrixXd& m, Eigen::Index rows, Eigen::Index cols, const char* name) {
  if (m.rows() != rows || m.cols() != cols) {
    throw InputError(std::string("parameter ") + name + " has shape " + std::to_string(m.rows()) + "x" +
                     std::to_string(m.cols()) + ", expected " + std::to_string(rows) + "x" + std::to_string(cols));
  }
}

}  // namespace

std::vector<ModelParams::Block> ModelParams::blocks() {
  std::vector<Block> out;
  const auto add = [&](std::string_view name, auto& m, ParamGroup g, bool decay) {
    if (m.size() > 0) out.push_back(Block{name, Eigen::Map<Eigen::VectorXd>(m.data(), m.size()), g, decay});
  };
  add("projection", projection, ParamGroup::encoder, true);
  add("gcn.w0", gcn.w0, ParamGroup::head, true);
  add("gcn.w1", gcn.w1, ParamGroup::head, true);
  add("fusion.wp", fusion.wp, ParamGroup::head, true);
  add("fusion.gates", fusion.gates, ParamGroup::head, true);
  add("fusion.head_w", fusion.head_w, ParamGroup::head, true);
  add("fusion.head_b", fusion.head_b, ParamGroup::head, false);
  return out;
}

ModelParams ModelParams::zeros_like(bool with_projection) const {
  ModelParams z;
  if (with_projection) z.projection = Eigen::MatrixXd::Zero(projection.rows(), projection.cols());
  z.gcn.w0 = Eigen::MatrixXd::Zero(gcn.w0.rows(), gcn.w0.cols());
  z.gcn.w1 = Eigen::MatrixXd::Zero(gcn.w1.rows(), gcn.w1.cols());
  z.gcn.dropout_rate = gcn.dropout_rate;
  z.fusion.wp = Eigen::MatrixXd::Zero(fusion.wp.rows(), fusion.wp.cols());
  z.fusion.gates = Eigen::MatrixXd::Zero(fusion.gates.rows(), fusion.gates.cols());
  z.fusion.head_w = Eigen::MatrixXd::Zero(fusion.head_w.rows(), fusion.head_w.cols());
  z.fusion.head_b = Eigen::VectorXd::Zero(fusion.head_b.size());
  return z;
}

void ModelParams::add_scaled(const ModelParams& other, double scale) {
  auto mine = blocks();
  auto theirs = const_cast<ModelParams&>(other).blocks();
  if (mine.size() != theirs.size()) throw std::logic_error("parameter block layout mismatch");
  for (std::size_t i = 0; i < mine.size(); ++i) mine[i].values += scale * theirs[i].values;
}

double ModelParams::squared_norm() const {
  double s = 0.0;
  for (const auto& b : const_cast<ModelParams*>(this)->blocks()) s += b.values.squaredNorm();
  return s;
}

bool ModelParams::all_finite() const {
  for (const auto& b : const_cast<ModelParams*>(this)->blocks()) {
    if (!b.values.allFinite()) return false;
  }
  return true;
}

GcnTrace gcn_forward(const Eigen::MatrixXd& a_hat, const Eigen::MatrixXd& h0, const GcnParams& params, Pass pass,
                     Rng* rng) {
  GcnTrace t;
  t.ah0 = a_hat * h0;
  t.s0 = t.ah0 * params.w0;
  t.mask1 = dropout_mask(t.s0.rows(), t.s0.cols(), params.dropout_rate, pass, rng);
  t.h1 = t.s0.cwiseMax(0.0).cwiseProduct(t.mask1);
  t.ah1 = a_hat * t.h1;
  t.s1 = t.ah1 * params.w1;
  t.mask2 = dropout_mask(t.s1.rows(), t.s1.cols(), params.dropout_rate, pass, rng);
  t.h2 = t.s1.cwiseMax(0.0).cwiseProduct(t.mask2);
  return t;
}

GateFusion gate_fuse(const Eigen::VectorXd& h_doc, const Eigen::MatrixXd& h2, const FusionParams& params) {
  const Eigen::Index d2 = params.wp.cols();
  GateFusion f;
  f.h_proj = params.wp.transpose() * h_doc;
  f.gate_pre = params.gates.leftCols(d2) * f.h_proj + params.gates.rightCols(d2).cwiseProduct(h2).rowwise().sum();
  f.alpha = sigmoid(f.gate_pre);
  f.z = (1.0 - f.alpha.array()).matrix().asDiagonal() * h2;
  f.z.noalias() += f.alpha * f.h_proj.transpose();
  return f;
}

Eigen::VectorXd head_logits(const Eigen::MatrixXd& z, const FusionParams& params) {
  return params.head_w.cwiseProduct(z).rowwise().sum() + params.head_b;
}

Network::Network(NetworkConfig config, Eigen::MatrixXd a_hat, Eigen::MatrixXd node_features)
    : config_(config), a_hat_(std::move(a_hat)), h0_(std::move(node_features)) {
  const auto k = static_cast<Eigen::Index>(config_.num_labels);
  if (a_hat_.rows() != k || a_hat_.cols() != k) throw InputError("normalized adjacency must be K x K");
  if (h0_.rows() != k || h0_.cols() != static_cast<Eigen::Index>(config_.input_dim)) {
    throw InputError("node features must be K x d_enc");
  }
  params_.gcn.dropout_rate = config_.dropout;
}

void Network::initialize(Rng& rng, std::size_t hash_buckets) {
  const auto d_enc = static_cast<Eigen::Index>(config_.input_dim);
  const auto d1 = static_cast<Eigen::Index>(config_.hidden_dim);
  const auto d2 = static_cast<Eigen::Index>(config_.output_dim);
  const auto k = static_cast<Eigen::Index>(config_.num_labels);

  params_.gcn.w0.resize(d_enc, d1);
  params_.gcn.w1.resize(d1, d2);
  params_.fusion.wp.resize(d_enc, d2);
  fill_uniform(params_.gcn.w0, rng, std::sqrt(6.0 / static_cast<double>(d_enc)));
  fill_uniform(params_.gcn.w1, rng, std::sqrt(6.0 / static_cast<double>(d1)));
  fill_uniform(params_.fusion.wp, rng, std::sqrt(6.0 / static_cast<double>(d_enc)));
  params_.fusion.gates = Eigen::MatrixXd::Zero(k, 2 * d2);
  params_.fusion.head_w = Eigen::MatrixXd::Zero(k, d2);
  params_.fusion.head_b = Eigen::VectorXd::Zero(k);
  params_.gcn.dropout_rate = config_.dropout;

  if (hash_buckets > 0) {
    params_.projection.resize(d_enc, static_cast<Eigen::Index>(hash_buckets));
    fill_uniform(params_.projection, rng, std::sqrt(3.0));
  } else {
    params_.projection.resize(0, 0);
  }
}

void Network::validate() const {
  const auto d_enc = static_cast<Eigen::Index>(config_.input_dim);
  const auto d1 = static_cast<Eigen::Index>(config_.hidden_dim);
  const auto d2 = static_cast<Eigen::Index>(config_.output_dim);
  const auto k = static_cast<Eigen::Index>(config_.num_labels);
  require_shape(params_.gcn.w0, d_enc, d1, "gcn.w0");
  require_shape(params_.gcn.w1, d1, d2, "gcn.w1");
  require_shape(params_.fusion.wp, d_enc, d2, "fusion.wp");
  require_shape(params_.fusion.gates, k, 2 * d2, "fusion.gates");
  require_shape(params_.fusion.head_w, k, d2, "fusion.head_w");
  if (params_.fusion.head_b.size() != k) throw InputError("parameter fusion.head_b has the wrong length");
  if (params_.projection.size() > 0 && params_.projection.rows() != d_enc) {
    throw InputError("reference projection rows differ from d_enc");
  }
}

Eigen::VectorXd Network::embed(const DocInput& doc) const {
  if (!doc.hashed()) {
    if (doc.embedding.size() != static_cast<Eigen::Index>(config_.input_dim)) {
      throw InputError("document embedding dimension differs from d_enc");
    }
    return doc.embedding;
  }
  if (params_.projection.size() == 0) throw InputError("hashed document but no reference projection");
  return project(params_.projection, doc.features);
}

ForwardResult Network::forward(std::span<const DocInput> docs, Pass pass, Rng* rng) const {
  const auto batch = static_cast<Eigen::Index>(docs.size());
  const auto k = static_cast<Eigen::Index>(config_.num_labels);
  ForwardTrace trace;
  trace.pass = pass;
  trace.h_doc.resize(static_cast<Eigen::Index>(config_.input_dim), batch);
  for (Eigen::Index n = 0; n < batch; ++n) trace.h_doc.col(n) = embed(docs[static_cast<std::size_t>(n)]);

  ForwardResult out;
  out.logits.resize(batch, k);
  const auto& fusion = params_.fusion;
  if (config_.use_gcn) {
    trace.gcn = gcn_forward(a_hat_, h0_, params_.gcn, pass, rng);
    trace.fusion.reserve(static_cast<std::size_t>(batch));
    for (Eigen::Index n = 0; n < batch; ++n) {
      GateFusion f = gate_fuse(trace.h_doc.col(n), trace.gcn.h2, fusion);
      out.logits.row(n) = head_logits(f.z, fusion).transpose();
      trace.fusion.push_back(std::move(f));
    }
  } else {
    for (Eigen::Index n = 0; n < batch; ++n) {
      GateFusion f;
      f.h_proj = fusion.wp.transpose() * trace.h_doc.col(n);
      out.logits.row(n) = (fusion.head_w * f.h_proj + fusion.head_b).transpose();
      trace.fusion.push_back(std::move(f));
    }
  }
  if (pass != Pass::inference) out.trace = std::move(trace);
  return out;
}

BackwardResult Network::backward(std::span<const DocInput> docs, const ForwardResult& forward,
                                 const Eigen::MatrixXd& d_logits) const {
  if (!forward.trace) throw std::logic_error("backward needs a forward trace (run a train/differentiate pass)");
  const ForwardTrace& tr = *forward.trace;
  const auto batch = static_cast<Eigen::Index>(docs.size());
  if (d_logits.rows() != batch || d_logits.cols() != static_cast<Eigen::Index>(config_.num_labels)) {
    throw std::logic_error("upstream gradient shape differs from the logits");
  }

  const auto& fusion = params_.fusion;
  const Eigen::Index d2 = fusion.wp.cols();
  BackwardResult res;
  bool any_hashed = false;
  for (const auto& d : docs) any_hashed = any_hashed || d.hashed();
  res.grads = params_.zeros_like(any_hashed);
  auto& g = res.grads;
  Eigen::MatrixXd d_hproj(d2, batch);

  if (config_.use_gcn) {
    const Eigen::MatrixXd& h2 = tr.gcn.h2;
    const auto gate_doc = fusion.gates.leftCols(d2);
    const auto gate_lbl = fusion.gates.rightCols(d2);
    Eigen::MatrixXd d_h2 = Eigen::MatrixXd::Zero(h2.rows(), h2.cols());
    for (Eigen::Index n = 0; n < batch; ++n) {
      const GateFusion& f = tr.fusion[static_cast<std::size_t>(n)];
      const Eigen::VectorXd up = d_logits.row(n).transpose();
      g.fusion.head_w.noalias() += up.asDiagonal() * f.z;
      g.fusion.head_b += up;

      const Eigen::MatrixXd d_z = up.asDiagonal() * fusion.head_w;
      const Eigen::VectorXd d_alpha = d_z * f.h_proj - d_z.cwiseProduct(h2).rowwise().sum();
      const Eigen::VectorXd d_pre =
          d_alpha.cwiseProduct(f.alpha).cwiseProduct((1.0 - f.alpha.array()).matrix());

      g.fusion.gates.leftCols(d2).noalias() += d_pre * f.h_proj.transpose();
      g.fusion.gates.rightCols(d2).noalias() += d_pre.asDiagonal() * h2;

      d_hproj.col(n) = d_z.transpose() * f.alpha + gate_doc.transpose() * d_pre;
      d_h2.noalias() += (1.0 - f.alpha.array()).matrix().asDiagonal() * d_z;
      d_h2.noalias() += d_pre.asDiagonal() * gate_lbl;
    }

    const Eigen::MatrixXd d_s1 = relu_grad(d_h2.cwiseProduct(tr.gcn.mask2), tr.gcn.s1);
    g.gcn.w1.noalias() = tr.gcn.ah1.transpose() * d_s1;
    const Eigen::MatrixXd d_h1 = a_hat_.transpose() * (d_s1 * params_.gcn.w1.transpose());
    const Eigen::MatrixXd d_s0 = relu_grad(d_h1.cwiseProduct(tr.gcn.mask1), tr.gcn.s0);
    g.gcn.w0.noalias() = tr.gcn.ah0.transpose() * d_s0;
  } else {
    for (Eigen::Index n = 0; n < batch; ++n) {
      const GateFusion& f = tr.fusion[static_cast<std::size_t>(n)];
      const Eigen::VectorXd up = d_logits.row(n).transpose();
      g.fusion.head_w.noalias() += up * f.h_proj.transpose();
      g.fusion.head_b += up;
      d_hproj.col(n) = fusion.head_w.transpose() * up;
    }
  }

  g.fusion.wp.noalias() = tr.h_doc * d_hproj.transpose();
  res.d_hdoc = fusion.wp * d_hproj;

  if (any_hashed && params_.projection.size() > 0) {
    for (Eigen::Index n = 0; n < batch; ++n) {
      const DocInput& doc = docs[static_cast<std::size_t>(n)];
      if (!doc.hashed()) continue;
      for (std::size_t i = 0; i < doc.features.nnz(); ++i) {
        g.projection.col(doc.features.index[i]).noalias() += doc.features.value[i] * res.d_hdoc.col(n);
      }
    }
  }
  return res;
}

}  // namespace clignet
