#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "clignet/network.hpp"
#include "clignet/objective.hpp"

namespace clignet {

struct TrainConfig {
  double lr_encoder = 2e-5;
  double lr_head = 1e-3;
  double weight_decay = 0.01;
  double warmup_fraction = 0.10;
  double clip_norm = 1.0;
  std::size_t batch_size = 16;
  std::size_t accumulation_steps = 2;
  std::size_t max_epochs = 30;
  std::size_t patience = 5;
  std::uint64_t seed = 42;
  bool record_time = false;  // wall-clock seconds in the log; 0 otherwise
  FocalConfig focal;
};

struct EpochLog {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_macro_f1 = 0.0;
  double lr_encoder = 0.0;  // rate of the last step in the epoch
  double lr_head = 0.0;
  double seconds = 0.0;
};

struct TrainResult {
  std::vector<EpochLog> log;
  std::size_t best_epoch = 0;
  double best_val_macro_f1 = -1.0;
  std::size_t steps = 0;
};

/// Labelled documents, indexed by record id.
struct TrainingData {
  std::span<const DocInput> docs;
  std::span<const int> labels;
  std::span<const std::size_t> train_ids;
  std::span<const std::size_t> val_ids;
};

std::size_t steps_per_epoch(std::size_t train_docs, std::size_t batch_size, std::size_t accumulation_steps);

/// Logits for the given documents, evaluated in blocks with dropout off.
Eigen::MatrixXd predict_logits(const Network& net, std::span<const DocInput> docs, std::span<const std::size_t> ids,
                               std::size_t block = 256);

/// Mean focal loss and summed parameter gradients of one micro-batch.
struct BatchGradient {
  double loss_sum = 0.0;
  ModelParams grads;
};
BatchGradient batch_gradient(const Network& net, std::span<const DocInput> docs, std::span<const int> labels,
                             const FocalConfig& focal, Pass pass, Rng* rng);

/// Trains in place and leaves the best-epoch parameters in `net`. Throws
/// NumericError naming the step when the loss or gradients stop being finite.
TrainResult train(Network& net, const TrainingData& data, const TrainConfig& config);

void write_training_log(const std::vector<EpochLog>& log, const std::filesystem::path& path);

}  // namespace clignet
