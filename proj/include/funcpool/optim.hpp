#pragma once

#include <cstdint>
#include <iosfwd>

#include "funcpool/model.hpp"

namespace funcpool {

/// Per-parameter Adam moment buffers over the model's flat parameter list.
struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t t = 0;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  explicit AdamState(Model& model, double learning_rate = 1e-3);
};

struct TrainConfig {
  std::size_t epochs = 350;
  std::uint64_t seed = 0;
  double lr = 1e-3;
  bool shuffle_each_epoch = true;
};

/// Raised when a training step produces a non-finite loss.
struct TrainingDiverged : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Kaiming-normal weights (std = sqrt(2 / fan_in)), zero biases, sigma left at
/// its configured init. Deterministic given the seed.
Model init_model(const ModelConfig& cfg, std::uint64_t seed);

/// Standard bias-corrected Adam update, applied in place to every parameter.
void adam_step(AdamState& state, Model& model);

struct EpochStats {
  double mean_loss = 0.0;
  double sigma = 0.0;
};

struct TrainResult {
  std::vector<double> best_parameters;  // snapshot at the best epoch
  std::size_t best_epoch = 0;
  double best_loss = 0.0;
  std::vector<EpochStats> history;  // one entry per epoch
};

/// Seeded shuffled pass over the training graphs, one Adam step per graph.
/// Returns the parameter snapshot from the epoch of minimum mean training
/// loss; the caller restores it into the model if wanted.
TrainResult train(Model& model, const std::vector<const LabeledGraph*>& train_set,
                  const TrainConfig& cfg);

/// CSV with columns epoch, mean_loss, sigma.
void write_history_csv(std::ostream& out, const std::vector<EpochStats>& history);

}  // namespace funcpool
