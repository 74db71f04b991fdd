#pragma once

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "clignet/encoder.hpp"
#include "clignet/rng.hpp"

namespace clignet {

struct GcnParams {
  Eigen::MatrixXd w0;  // d_enc x d1
  Eigen::MatrixXd w1;  // d1 x d2
  double dropout_rate = 0.3;
};

struct FusionParams {
  Eigen::MatrixXd wp;      // d_enc x d2
  Eigen::MatrixXd gates;   // K x 2*d2, row k = [gate on h_proj | gate on H2_k]
  Eigen::MatrixXd head_w;  // K x d2
  Eigen::VectorXd head_b;  // K
};

enum class ParamGroup { encoder, head };

/// Every trainable tensor. `projection` is the reference encoder's
/// d_enc x buckets matrix and stays empty when embeddings are precomputed.
struct ModelParams {
  Eigen::MatrixXd projection;
  GcnParams gcn;
  FusionParams fusion;

  /// Flat views of every block in a fixed order. Head biases are the only
  /// blocks exempt from weight decay. Empty blocks are skipped.
  struct Block {
    std::string_view name;
    Eigen::Map<Eigen::VectorXd> values;
    ParamGroup group;
    bool decay;
  };
  std::vector<Block> blocks();

  /// Same shapes, all zero. The projection block is left empty when
  /// `with_projection` is false.
  ModelParams zeros_like(bool with_projection = true) const;
  void add_scaled(const ModelParams& other, double scale);
  double squared_norm() const;
  bool all_finite() const;
};

struct NetworkConfig {
  std::size_t input_dim = 768;   // d_enc
  std::size_t hidden_dim = 512;  // d1
  std::size_t output_dim = 256;  // d2
  std::size_t num_labels = 40;
  double dropout = 0.3;
  bool use_gcn = true;  // false: z_k = h_proj for every label
};

/// How a forward pass runs: inference keeps nothing; train samples dropout and
/// keeps the trace; differentiate keeps the trace without dropout (gradient
/// checks, attribution).
enum class Pass { inference, train, differentiate };

struct GcnTrace {
  Eigen::MatrixXd ah0;    // A_hat H0
  Eigen::MatrixXd s0;     // A_hat H0 W0
  Eigen::MatrixXd mask1;  // inverted-dropout multipliers (0 or 1/(1-p))
  Eigen::MatrixXd h1;
  Eigen::MatrixXd ah1;
  Eigen::MatrixXd s1;
  Eigen::MatrixXd mask2;
  Eigen::MatrixXd h2;
};

/// H1 = dropout(ReLU(A_hat H0 W0)), H2 = dropout(ReLU(A_hat H1 W1)).
/// Dropout only in Pass::train; `rng` is required then.
GcnTrace gcn_forward(const Eigen::MatrixXd& a_hat, const Eigen::MatrixXd& h0, const GcnParams& params, Pass pass,
                     Rng* rng);

struct GateFusion {
  Eigen::VectorXd h_proj;    // Wp^T h_doc
  Eigen::VectorXd gate_pre;  // gate_k . [h_proj || H2_k]
  Eigen::VectorXd alpha;     // sigmoid(gate_pre)
  Eigen::MatrixXd z;         // K x d2
};

GateFusion gate_fuse(const Eigen::VectorXd& h_doc, const Eigen::MatrixXd& h2, const FusionParams& params);

/// logit_k = w_k . z_k + b_k
Eigen::VectorXd head_logits(const Eigen::MatrixXd& z, const FusionParams& params);

/// Input of one document: either hashed features for the reference encoder
/// or a precomputed embedding.
struct DocInput {
  SparseVector features;
  Eigen::VectorXd embedding;
  bool hashed() const noexcept { return embedding.size() == 0; }
};

struct ForwardTrace {
  Pass pass = Pass::differentiate;
  GcnTrace gcn;
  Eigen::MatrixXd h_doc;  // d_enc x B
  std::vector<GateFusion> fusion;
};

struct ForwardResult {
  Eigen::MatrixXd logits;  // B x K
  std::optional<ForwardTrace> trace;
};

struct BackwardResult {
  ModelParams grads;      // summed over the batch
  Eigen::MatrixXd d_hdoc; // d_enc x B
};

class Network {
 public:
  Network(NetworkConfig config, Eigen::MatrixXd a_hat, Eigen::MatrixXd node_features);

  /// Kaiming-uniform fan-in init for W0, W1, Wp; zero gates and heads. The
  /// reference projection (if `hash_buckets` > 0) is drawn with unit variance
  /// per entry because its inputs are unit-norm bucket vectors.
  void initialize(Rng& rng, std::size_t hash_buckets);

  const NetworkConfig& config() const noexcept { return config_; }
  const Eigen::MatrixXd& a_hat() const noexcept { return a_hat_; }
  const Eigen::MatrixXd& node_features() const noexcept { return h0_; }
  ModelParams& params() noexcept { return params_; }
  const ModelParams& params() const noexcept { return params_; }

  Eigen::VectorXd embed(const DocInput& doc) const;

  /// Logits for a batch (one row per document). The GCN branch runs once per
  /// call, so a training batch shares one pair of dropout masks.
  ForwardResult forward(std::span<const DocInput> docs, Pass pass, Rng* rng = nullptr) const;

  /// Analytic gradients of sum_{n,k} d_logits(n,k) * logit(n,k). Includes the
  /// reference projection when documents are hashed. Throws std::logic_error
  /// when the forward pass kept no trace.
  BackwardResult backward(std::span<const DocInput> docs, const ForwardResult& forward,
                          const Eigen::MatrixXd& d_logits) const;

  /// Checks every parameter shape against the config.
  void validate() const;

  /// Set once parameters come from training or a checkpoint.
  bool trained() const noexcept { return trained_; }
  void mark_trained(bool value = true) noexcept { trained_ = value; }

 private:
  NetworkConfig config_;
  Eigen::MatrixXd a_hat_;
  Eigen::MatrixXd h0_;
  ModelParams params_;
  bool trained_ = false;
};

double sigmoid(double x);
/// log(1 + exp(x)) without overflow.
double softplus(double x);

}  // namespace clignet
