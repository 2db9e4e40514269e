#include <doctest.h>

#include <cmath>
#include <sstream>

#include "funcpool/optim.hpp"
#include "test_util.hpp"

using namespace funcpool;

namespace {

ModelConfig toy_config(PoolingKind pooling = PoolingKind::kFunction) {
  ModelConfig cfg;
  cfg.num_vertex_labels = 2;
  cfg.num_classes = 2;
  cfg.pooling = pooling;
  cfg.conv_dim = 5;
  cfg.pool_input_dim = 3;
  cfg.baseline_pre_dim = 5;
  cfg.grid_resolution = 2;
  cfg.hidden_dim = 4;
  return cfg;
}

}  // namespace

TEST_CASE("init: sigma exactly at its configured value, biases zero") {
  Model model = init_model(toy_config(), 71);
  CHECK(model.pool->sigma() == 0.125);
  for (double b : model.conv1.b) CHECK(b == 0.0);
  for (double b : model.conv2.b) CHECK(b == 0.0);
  for (double b : model.pre_linear.b) CHECK(b == 0.0);
  for (double b : model.post_linear.b) CHECK(b == 0.0);
  for (double b : model.head.b) CHECK(b == 0.0);
}

TEST_CASE("init is deterministic given the seed") {
  Model a = init_model(toy_config(), 72);
  Model b = init_model(toy_config(), 72);
  Model c = init_model(toy_config(), 73);
  CHECK(a.snapshot_values() == b.snapshot_values());
  CHECK(a.snapshot_values() != c.snapshot_values());
}

TEST_CASE("Kaiming init: sample std near sqrt(2 / fan_in)") {
  ModelConfig cfg = toy_config(PoolingKind::kSum);
  cfg.conv_dim = 500;  // conv2 weights: 1000 x 500
  Model model = init_model(cfg, 74);
  const Matrix& w = model.conv2.W;
  double mean = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) mean += w.data()[i];
  mean /= static_cast<double>(w.size());
  double var = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i)
    var += (w.data()[i] - mean) * (w.data()[i] - mean);
  var /= static_cast<double>(w.size());
  double expected = std::sqrt(2.0 / 1000.0);
  CHECK(std::sqrt(var) == doctest::Approx(expected).epsilon(0.05));
}

TEST_CASE("adam: zero gradient leaves parameters unchanged") {
  Model model = init_model(toy_config(), 75);
  AdamState adam(model);
  auto before = model.snapshot_values();
  model.zero_grads();
  adam_step(adam, model);
  CHECK(model.snapshot_values() == before);
}

TEST_CASE("adam: first step moves by about -lr * sign(g)") {
  Model model = init_model(toy_config(), 76);
  AdamState adam(model, 1e-3);
  auto before = model.snapshot_values();
  model.zero_grads();
  std::mt19937_64 rng(77);
  std::vector<double> grads;
  for (auto& p : model.parameters())
    for (std::size_t i = 0; i < p.size; ++i) {
      double g = testutil::uniform(rng, -2.0, 2.0);
      if (std::abs(g) < 0.1) g = 0.1;  // keep |g| well above eps
      p.grad[i] = g;
      grads.push_back(g);
    }
  adam_step(adam, model);
  auto after = model.snapshot_values();
  for (std::size_t i = 0; i < after.size(); ++i) {
    double update = after[i] - before[i];
    double expected = -1e-3 * (grads[i] > 0 ? 1.0 : -1.0);
    CHECK(update == doctest::Approx(expected).epsilon(1e-4));
  }
}

TEST_CASE("adam: identical gradient streams keep parameter sets identical") {
  Model a = init_model(toy_config(), 78);
  Model b = init_model(toy_config(), 78);
  AdamState sa(a), sb(b);
  std::mt19937_64 rng(79);
  for (int step = 0; step < 5; ++step) {
    std::mt19937_64 grad_rng(rng());
    for (Model* m : {&a, &b}) {
      std::mt19937_64 r = grad_rng;
      for (auto& p : m->parameters())
        for (std::size_t i = 0; i < p.size; ++i) p.grad[i] = testutil::uniform(r);
    }
    adam_step(sa, a);
    adam_step(sb, b);
  }
  CHECK(a.snapshot_values() == b.snapshot_values());
}

TEST_CASE("training fits a separable toy set") {
  Dataset ds = testutil::separable_dataset(5, 80);
  Model model = init_model(toy_config(), 81);
  std::vector<const LabeledGraph*> train_set;
  for (const auto& g : ds.graphs) train_set.push_back(&g);

  TrainConfig cfg;
  cfg.epochs = 100;
  cfg.seed = 82;
  TrainResult result = train(model, train_set, cfg);

  CHECK(result.history.size() == 100);
  double min_loss = result.history[0].mean_loss;
  for (const auto& e : result.history) min_loss = std::min(min_loss, e.mean_loss);
  CHECK(result.best_loss == min_loss);
  CHECK(result.best_loss <= result.history[0].mean_loss);

  model.restore_values(result.best_parameters);
  std::size_t correct = 0;
  for (const auto& g : ds.graphs)
    if (predict(model, g).predicted_class == g.class_label) ++correct;
  CHECK(correct == ds.graphs.size());

  for (const auto& e : result.history) {
    CHECK(std::isfinite(e.sigma));
    CHECK(e.sigma > 0.0);
  }
}

TEST_CASE("training is bitwise reproducible given seed and data") {
  Dataset ds = testutil::separable_dataset(3, 83);
  std::vector<const LabeledGraph*> train_set;
  for (const auto& g : ds.graphs) train_set.push_back(&g);
  TrainConfig cfg;
  cfg.epochs = 5;
  cfg.seed = 84;

  Model a = init_model(toy_config(), 85);
  Model b = init_model(toy_config(), 85);
  TrainResult ra = train(a, train_set, cfg);
  TrainResult rb = train(b, train_set, cfg);
  CHECK(ra.best_parameters == rb.best_parameters);
  REQUIRE(ra.history.size() == rb.history.size());
  for (std::size_t e = 0; e < ra.history.size(); ++e)
    CHECK(ra.history[e].mean_loss == rb.history[e].mean_loss);
}

TEST_CASE("non-finite loss aborts with diagnostics") {
  Dataset ds = testutil::separable_dataset(2, 86);
  std::vector<const LabeledGraph*> train_set;
  for (const auto& g : ds.graphs) train_set.push_back(&g);
  Model model = init_model(toy_config(), 87);
  model.head.W(0, 0) = 1e308;  // L2 term overflows
  TrainConfig cfg;
  cfg.epochs = 2;
  try {
    train(model, train_set, cfg);
    CHECK(false);
  } catch (const TrainingDiverged& e) {
    std::string msg = e.what();
    CHECK(msg.find("epoch") != std::string::npos);
    CHECK(msg.find("sigma") != std::string::npos);
  }
}

TEST_CASE("history CSV format") {
  std::vector<EpochStats> history{{0.5, 0.125}, {0.25, 0.13}};
  std::ostringstream out;
  write_history_csv(out, history);
  CHECK(out.str() == "epoch,mean_loss,sigma\n0,0.5,0.125\n1,0.25,0.13\n");
}
