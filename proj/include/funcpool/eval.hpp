#pragma once

#include <iosfwd>
#include <string>

#include "funcpool/optim.hpp"

namespace funcpool {

struct CVReport {
  std::string dataset;
  std::string pooling;
  std::vector<double> fold_accuracies;  // NaN-free; failed folds are excluded
  std::vector<std::size_t> failed_folds;
  double mean = 0.0;
  double stddev = 0.0;  // population std over succeeded folds
  std::uint64_t seed = 0;
  std::size_t folds = 0;
  std::size_t epochs = 0;
  double wall_seconds = 0.0;
  std::vector<std::vector<EpochStats>> fold_histories;  // only when requested
};

struct CVConfig {
  TrainConfig train;
  std::size_t folds = 10;
  std::size_t jobs = 1;
  bool stratified = false;
  bool record_history = false;
};

/// Fraction of argmax-correct predictions.
double accuracy(const Model& model, const Dataset& ds, const std::vector<std::size_t>& indices);

/// k-fold cross validation: per fold, a fresh seeded init (seed + fold), train
/// on the complement, evaluate on the held-out fold. Folds are share-nothing,
/// so `jobs > 1` runs them on threads without changing any result.
CVReport cross_validate(const Dataset& ds, PoolingKind pooling, const ModelConfig& model_cfg,
                        const CVConfig& cfg);

/// Convenience overload deriving the ModelConfig from the dataset and defaults.
CVReport cross_validate(const Dataset& ds, PoolingKind pooling, const CVConfig& cfg);

std::string report_to_json(const CVReport& report);
void print_report_table(std::ostream& out, const CVReport& report);

}  // namespace funcpool
