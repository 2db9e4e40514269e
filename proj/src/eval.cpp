#include "funcpool/eval.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <mutex>
#include <ostream>
#include <thread>

#include <json.hpp>

namespace funcpool {

double accuracy(const Model& model, const Dataset& ds, const std::vector<std::size_t>& indices) {
  if (indices.empty()) throw std::invalid_argument("accuracy: empty index list");
  std::size_t correct = 0;
  for (std::size_t idx : indices) {
    const LabeledGraph& g = ds.graphs[idx];
    if (predict(model, g).predicted_class == g.class_label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(indices.size());
}

CVReport cross_validate(const Dataset& ds, PoolingKind pooling, const ModelConfig& model_cfg,
                        const CVConfig& cfg) {
  if (ds.graphs.empty()) throw std::invalid_argument("cross_validate: empty dataset");
  auto t0 = std::chrono::steady_clock::now();

  std::vector<FoldSplit> splits;
  if (cfg.stratified) {
    std::vector<int> labels;
    labels.reserve(ds.graphs.size());
    for (const auto& g : ds.graphs) labels.push_back(g.class_label);
    splits = stratified_kfold_split(labels, cfg.folds, cfg.train.seed);
  } else {
    splits = kfold_split(ds.graphs.size(), cfg.folds, cfg.train.seed);
  }

  std::vector<double> fold_acc(cfg.folds, std::numeric_limits<double>::quiet_NaN());
  std::vector<bool> fold_failed(cfg.folds, false);
  std::vector<std::vector<EpochStats>> fold_histories(cfg.record_history ? cfg.folds : 0);

  auto run_fold = [&](std::size_t f) {
    std::uint64_t fold_seed = cfg.train.seed + f;
    Model model = init_model(model_cfg, fold_seed);
    std::vector<const LabeledGraph*> train_set;
    train_set.reserve(splits[f].train_indices.size());
    for (std::size_t idx : splits[f].train_indices) train_set.push_back(&ds.graphs[idx]);
    TrainConfig fold_cfg = cfg.train;
    fold_cfg.seed = fold_seed;
    try {
      TrainResult tr = train(model, train_set, fold_cfg);
      model.restore_values(tr.best_parameters);
      fold_acc[f] = accuracy(model, ds, splits[f].test_indices);
      if (cfg.record_history) fold_histories[f] = std::move(tr.history);
    } catch (const TrainingDiverged&) {
      fold_failed[f] = true;
    }
  };

  if (cfg.jobs <= 1) {
    for (std::size_t f = 0; f < cfg.folds; ++f) run_fold(f);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    std::size_t nworkers = std::min(cfg.jobs, cfg.folds);
    for (std::size_t w = 0; w < nworkers; ++w)
      workers.emplace_back([&] {
        for (std::size_t f = next.fetch_add(1); f < cfg.folds; f = next.fetch_add(1)) run_fold(f);
      });
    for (auto& t : workers) t.join();
  }

  CVReport report;
  report.dataset = ds.name;
  report.pooling = to_string(pooling);
  report.seed = cfg.train.seed;
  report.folds = cfg.folds;
  report.epochs = cfg.train.epochs;
  for (std::size_t f = 0; f < cfg.folds; ++f) {
    if (fold_failed[f]) report.failed_folds.push_back(f);
    else report.fold_accuracies.push_back(fold_acc[f]);
  }
  if (!report.fold_accuracies.empty()) {
    double sum = 0.0;
    for (double a : report.fold_accuracies) sum += a;
    report.mean = sum / static_cast<double>(report.fold_accuracies.size());
    double var = 0.0;
    for (double a : report.fold_accuracies) var += (a - report.mean) * (a - report.mean);
    report.stddev = std::sqrt(var / static_cast<double>(report.fold_accuracies.size()));
  }
  report.fold_histories = std::move(fold_histories);
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

CVReport cross_validate(const Dataset& ds, PoolingKind pooling, const CVConfig& cfg) {
  ModelConfig model_cfg;
  model_cfg.num_vertex_labels = ds.num_vertex_labels;
  model_cfg.num_classes = ds.num_classes;
  model_cfg.pooling = pooling;
  return cross_validate(ds, pooling, model_cfg, cfg);
}

// wall_seconds is deliberately absent: the JSON report must be byte-identical
// across reruns with the same seed.
std::string report_to_json(const CVReport& report) {
  nlohmann::ordered_json j;
  j["dataset"] = report.dataset;
  j["pooling"] = report.pooling;
  j["seed"] = report.seed;
  j["folds"] = report.folds;
  j["epochs"] = report.epochs;
  j["fold_accuracies"] = report.fold_accuracies;
  j["failed_folds"] = report.failed_folds;
  j["mean_accuracy"] = report.mean;
  j["std_accuracy"] = report.stddev;
  return j.dump(2) + "\n";
}

void print_report_table(std::ostream& out, const CVReport& report) {
  out << "dataset: " << report.dataset << "   pooling: " << report.pooling
      << "   folds: " << report.folds << "   epochs: " << report.epochs
      << "   seed: " << report.seed << "\n";
  out << std::fixed << std::setprecision(4);
  out << "fold  accuracy\n";
  std::size_t acc_idx = 0;
  for (std::size_t f = 0; f < report.folds; ++f) {
    bool failed =
        std::find(report.failed_folds.begin(), report.failed_folds.end(), f) !=
        report.failed_folds.end();
    out << std::setw(4) << f << "  ";
    if (failed) out << "FAILED (non-finite loss)\n";
    else out << report.fold_accuracies[acc_idx++] << "\n";
  }
  out << "mean " << report.mean << "  std " << report.stddev << "  ("
      << std::setprecision(1) << report.wall_seconds << " s)\n";
  if (!report.failed_folds.empty())
    out << "warning: " << report.failed_folds.size() << " fold(s) failed\n";
  out.unsetf(std::ios::fixed);
}

}  // namespace funcpool
