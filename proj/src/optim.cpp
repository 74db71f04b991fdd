#include "clignet/optim.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace clignet {

double lr_schedule(std::size_t step, std::size_t total_steps, double peak, double warmup_fraction) {
  if (total_steps == 0) throw std::invalid_argument("lr_schedule needs total_steps > 0");
  const auto warmup = static_cast<std::size_t>(std::floor(warmup_fraction * static_cast<double>(total_steps)));
  if (step >= total_steps) return 0.0;
  if (step < warmup) return peak * static_cast<double>(step) / static_cast<double>(warmup);
  const double progress = static_cast<double>(step - warmup) / static_cast<double>(total_steps - warmup);
  return peak * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

void adamw_update(Eigen::Ref<Eigen::VectorXd> theta, const Eigen::Ref<const Eigen::VectorXd>& grad,
                  Eigen::Ref<Eigen::VectorXd> m, Eigen::Ref<Eigen::VectorXd> v, std::uint64_t t, double lr, double weight_decay,
                  const AdamHyper& hyper) {
  if (weight_decay != 0.0) theta *= 1.0 - lr * weight_decay;
  m = hyper.beta1 * m + (1.0 - hyper.beta1) * grad;
  v = hyper.beta2 * v + (1.0 - hyper.beta2) * grad.cwiseProduct(grad);
  const double c1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(t));
  theta.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + hyper.eps);
}

AdamW::AdamW(const ModelParams& shapes, AdamHyper hyper)
    : hyper_(hyper), m_(shapes.zeros_like()), v_(shapes.zeros_like()) {}

void AdamW::step(ModelParams& params, ModelParams& grads, double lr_encoder, double lr_head, double weight_decay) {
  auto p = params.blocks();
  auto g = grads.blocks();
  auto m = m_.blocks();
  auto v = v_.blocks();
  if (p.size() != g.size() || p.size() != m.size()) throw std::logic_error("optimizer block layout mismatch");
  ++t_;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double lr = p[i].group == ParamGroup::encoder ? lr_encoder : lr_head;
    adamw_update(p[i].values, g[i].values, m[i].values, v[i].values, t_, lr, p[i].decay ? weight_decay : 0.0,
                 hyper_);
  }
}

double clip_gradients(ModelParams& grads, double max_norm) {
  if (!(max_norm > 0.0)) throw std::invalid_argument("clip norm must be positive");
  const double norm = std::sqrt(grads.squared_norm());
  if (norm > max_norm) {
    const double scale = max_norm / norm;
    for (auto& b : grads.blocks()) b.values *= scale;
  }
  return norm;
}

}  // namespace clignet
