#include "clignet/trainer.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>

#include "clignet/errors.hpp"
#include "clignet/metrics.hpp"
#include "clignet/optim.hpp"

namespace clignet {

std::size_t steps_per_epoch(std::size_t train_docs, std::size_t batch_size, std::size_t accumulation_steps) {
  const std::size_t micro = (train_docs + batch_size - 1) / batch_size;
  return (micro + accumulation_steps - 1) / accumulation_steps;
}

Eigen::MatrixXd predict_logits(const Network& net, std::span<const DocInput> docs, std::span<const std::size_t> ids,
                               std::size_t block) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(ids.size()), static_cast<Eigen::Index>(net.config().num_labels));
  std::vector<DocInput> batch;
  for (std::size_t start = 0; start < ids.size(); start += block) {
    const std::size_t end = std::min(ids.size(), start + block);
    batch.clear();
    for (std::size_t i = start; i < end; ++i) batch.push_back(docs[ids[i]]);
    const auto fwd = net.forward(batch, Pass::inference);
    out.middleRows(static_cast<Eigen::Index>(start), static_cast<Eigen::Index>(end - start)) = fwd.logits;
  }
  return out;
}

BatchGradient batch_gradient(const Network& net, std::span<const DocInput> docs, std::span<const int> labels,
                             const FocalConfig& focal, Pass pass, Rng* rng) {
  const auto fwd = net.forward(docs, pass, rng);
  Eigen::MatrixXd d_logits(fwd.logits.rows(), fwd.logits.cols());
  BatchGradient out;
  for (Eigen::Index n = 0; n < fwd.logits.rows(); ++n) {
    const Eigen::VectorXd row = fwd.logits.row(n).transpose();
    const int y = labels[static_cast<std::size_t>(n)];
    out.loss_sum += focal_bce(row, y, focal);
    d_logits.row(n) = focal_bce_grad(row, y, focal).transpose();
  }
  out.grads = net.backward(docs, fwd, d_logits).grads;
  return out;
}

TrainResult train(Network& net, const TrainingData& data, const TrainConfig& config) {
  if (data.train_ids.empty()) throw InputError("training split is empty");
  if (config.batch_size == 0 || config.accumulation_steps == 0) throw InputError("batch sizes must be positive");
  using Clock = std::chrono::steady_clock;

  const std::size_t per_epoch = steps_per_epoch(data.train_ids.size(), config.batch_size, config.accumulation_steps);
  const std::size_t total_steps = per_epoch * config.max_epochs;
  Rng rng(config.seed);
  AdamW opt(net.params());

  std::vector<std::size_t> order(data.train_ids.begin(), data.train_ids.end());
  std::vector<int> val_labels;
  for (const auto id : data.val_ids) val_labels.push_back(data.labels[id]);

  TrainResult result;
  ModelParams best = net.params();
  std::size_t since_best = 0;
  std::size_t step = 0;
  double lr_enc = 0.0, lr_head = 0.0;
  std::vector<DocInput> batch;
  std::vector<int> batch_labels;

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const auto t0 = Clock::now();
    rng.shuffle(std::span(order));
    double loss_sum = 0.0;
    ModelParams acc;
    std::size_t acc_docs = 0;
    std::size_t acc_micro = 0;

    const auto apply_step = [&] {
      lr_enc = lr_schedule(step, total_steps, config.lr_encoder, config.warmup_fraction);
      lr_head = lr_schedule(step, total_steps, config.lr_head, config.warmup_fraction);
      for (auto& b : acc.blocks()) b.values /= static_cast<double>(acc_docs);
      if (!acc.all_finite()) throw NumericError("non-finite gradient at step " + std::to_string(step));
      clip_gradients(acc, config.clip_norm);
      opt.step(net.params(), acc, lr_enc, lr_head, config.weight_decay);
      ++step;
      acc_docs = 0;
      acc_micro = 0;
    };

    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      batch.clear();
      batch_labels.clear();
      for (std::size_t i = start; i < end; ++i) {
        batch.push_back(data.docs[order[i]]);
        batch_labels.push_back(data.labels[order[i]]);
      }
      auto g = batch_gradient(net, batch, batch_labels, config.focal, Pass::train, &rng);
      if (!std::isfinite(g.loss_sum)) throw NumericError("non-finite loss at step " + std::to_string(step));
      loss_sum += g.loss_sum;
      if (acc_docs == 0) acc = std::move(g.grads);
      else acc.add_scaled(g.grads, 1.0);
      acc_docs += batch.size();
      if (++acc_micro == config.accumulation_steps) apply_step();
    }
    if (acc_micro > 0) apply_step();

    const Eigen::MatrixXd val_logits = predict_logits(net, data.docs, data.val_ids);
    Eigen::MatrixXd val_prob = val_logits.unaryExpr([](double v) { return sigmoid(v); });
    const double f1 = macro_f1(binarize(val_prob, Eigen::VectorXd::Constant(val_prob.cols(), 0.5)), val_labels);

    EpochLog entry;
    entry.epoch = epoch;
    entry.train_loss = loss_sum / static_cast<double>(order.size());
    entry.val_macro_f1 = f1;
    entry.lr_encoder = lr_enc;
    entry.lr_head = lr_head;
    if (config.record_time) entry.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    result.log.push_back(entry);

    if (f1 > result.best_val_macro_f1) {
      result.best_val_macro_f1 = f1;
      result.best_epoch = epoch;
      best = net.params();
      since_best = 0;
    } else if (++since_best >= config.patience) {
      break;
    }
  }
  net.params() = std::move(best);
  net.mark_trained();
  result.steps = step;
  return result;
}

void write_training_log(const std::vector<EpochLog>& log, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << "epoch,train_loss,val_macro_f1,lr_encoder,lr_head,seconds\n";
  char buf[256];
  for (const auto& e : log) {
    std::snprintf(buf, sizeof(buf), "%zu,%.10g,%.10g,%.10g,%.10g,%.3f\n", e.epoch, e.train_loss, e.val_macro_f1,
                  e.lr_encoder, e.lr_head, e.seconds);
    out << buf;
  }
}

}  // namespace clignet
