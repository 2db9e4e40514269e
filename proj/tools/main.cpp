#include <cstdlib>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "funcpool/eval.hpp"
#include "funcpool/selftest.hpp"

using namespace funcpool;

namespace {

bool is_known_name(const std::string& s) {
  return s == "MUTAG" || s == "PROTEINS" || s == "ENZYMES";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Graph classification with function-space pooling: 10-fold cross validation"};

  std::string dataset;
  std::string data_dir;
  std::string pooling = "function";
  std::size_t folds = 10;
  std::size_t epochs = 350;
  std::uint64_t seed = 0;
  double lr = 1e-3;
  double l2 = 0.2;
  std::size_t grid_res = 3;
  double sigma_init = 0.125;
  std::size_t jobs = 1;
  std::string out_path;
  std::string history_prefix;
  bool self_test = false;
  bool stratified = false;

  app.add_option("--dataset", dataset, "MUTAG, PROTEINS, ENZYMES, or a path to a TU-format dir");
  app.add_option("--data-dir", data_dir, "root directory holding named datasets")
      ->envname("FUNCPOOL_DATA_DIR");
  app.add_option("--pooling", pooling, "pooling method")
      ->check(CLI::IsMember({"function", "sum", "mean"}));
  app.add_option("--folds", folds, "number of CV folds")->check(CLI::Range(std::size_t{2}, std::size_t{1000}));
  app.add_option("--epochs", epochs, "training epochs per fold");
  app.add_option("--seed", seed, "base RNG seed");
  app.add_option("--lr", lr, "Adam learning rate");
  app.add_option("--l2", l2, "L2 regularization weight");
  app.add_option("--grid-res", grid_res, "grid points per pooling dimension");
  app.add_option("--sigma-init", sigma_init, "initial Gaussian width");
  app.add_option("--jobs", jobs, "folds to run in parallel");
  app.add_option("--out", out_path, "write the JSON report here");
  app.add_option("--history-prefix", history_prefix,
                 "write per-fold training history CSVs as PREFIX.foldN.csv");
  app.add_flag("--self-test", self_test, "run the gradient-check suite and exit");
  app.add_flag("--stratified", stratified, "stratify folds by class");

  CLI11_PARSE(app, argc, argv);

  if (self_test) {
    SelfTestOptions opts;
    opts.grid_resolution = grid_res == 3 ? 2 : grid_res;
    return run_self_test(std::cout, opts) ? 0 : 1;
  }

  if (dataset.empty()) {
    std::cerr << "error: --dataset is required (or use --self-test)\n";
    return 2;
  }

  try {
    std::filesystem::path dir;
    std::string name;
    if (is_known_name(dataset)) {
      name = dataset;
      dir = data_dir.empty() ? std::filesystem::path(dataset)
                             : std::filesystem::path(data_dir) / dataset;
    } else {
      dir = dataset;
      name = dir.filename().string();
    }

    Dataset ds = parse_tu_dataset(dir, name);
    std::cout << "loaded " << ds.name << ": " << ds.graphs.size() << " graphs, "
              << ds.num_vertex_labels << " vertex labels, " << ds.num_classes << " classes\n";

    ModelConfig model_cfg;
    model_cfg.num_vertex_labels = ds.num_vertex_labels;
    model_cfg.num_classes = ds.num_classes;
    model_cfg.pooling = pooling_kind_from_string(pooling);
    model_cfg.grid_resolution = grid_res;
    model_cfg.sigma_init = sigma_init;
    model_cfg.l2_weight = l2;

    CVConfig cv_cfg;
    cv_cfg.train.epochs = epochs;
    cv_cfg.train.seed = seed;
    cv_cfg.train.lr = lr;
    cv_cfg.folds = folds;
    cv_cfg.jobs = jobs;
    cv_cfg.stratified = stratified;

    cv_cfg.record_history = !history_prefix.empty();

    CVReport report = cross_validate(ds, model_cfg.pooling, model_cfg, cv_cfg);
    print_report_table(std::cout, report);

    if (!out_path.empty()) {
      std::ofstream out(out_path, std::ios::binary);
      if (!out) {
        std::cerr << "error: cannot write " << out_path << "\n";
        return 1;
      }
      out << report_to_json(report);
    }

    for (std::size_t f = 0; f < report.fold_histories.size(); ++f) {
      if (report.fold_histories[f].empty()) continue;
      std::ofstream hist(history_prefix + ".fold" + std::to_string(f) + ".csv");
      write_history_csv(hist, report.fold_histories[f]);
    }

    return report.failed_folds.empty() ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
