#pragma once

#include <Eigen/Dense>

#include <cstdint>

#include "clignet/network.hpp"

namespace clignet {

/// Linear warmup over floor(warmup_fraction * total_steps) steps, then cosine
/// decay from `peak` to 0 at `total_steps`.
double lr_schedule(std::size_t step, std::size_t total_steps, double peak, double warmup_fraction);

struct AdamHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// One AdamW update of a single block. `t` is the 1-based step count used for
/// bias correction. Decay is applied to theta before the moment term.
void adamw_update(Eigen::Ref<Eigen::VectorXd> theta, const Eigen::Ref<const Eigen::VectorXd>& grad,
                  Eigen::Ref<Eigen::VectorXd> m, Eigen::Ref<Eigen::VectorXd> v, std::uint64_t t, double lr, double weight_decay,
                  const AdamHyper& hyper = {});

/// AdamW over every block of a ModelParams, with separate learning rates for
/// the encoder and head groups.
class AdamW {
 public:
  explicit AdamW(const ModelParams& shapes, AdamHyper hyper = {});

  void step(ModelParams& params, ModelParams& grads, double lr_encoder, double lr_head, double weight_decay);
  std::uint64_t steps() const noexcept { return t_; }

 private:
  AdamHyper hyper_;
  ModelParams m_;
  ModelParams v_;
  std::uint64_t t_ = 0;
};

/// Scales every gradient by max_norm / norm when the global L2 norm exceeds
/// max_norm. Returns the norm before clipping.
double clip_gradients(ModelParams& grads, double max_norm);

}  // namespace clignet
