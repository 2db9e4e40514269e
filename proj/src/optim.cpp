#include "funcpool/optim.hpp"

#include <cmath>
#include <ostream>

#include "funcpool/rng.hpp"

namespace funcpool {

AdamState::AdamState(Model& model, double learning_rate) : lr(learning_rate) {
  std::size_t total = 0;
  for (const auto& p : model.parameters()) total += p.size;
  m.assign(total, 0.0);
  v.assign(total, 0.0);
}

Model init_model(const ModelConfig& cfg, std::uint64_t seed) {
  Model model(cfg);
  GaussianSampler gauss(seed);
  auto kaiming = [&](Matrix& w, std::size_t fan_in) {
    double std_dev = std::sqrt(2.0 / static_cast<double>(fan_in));
    for (std::size_t i = 0; i < w.size(); ++i) w.data()[i] = std_dev * gauss.next();
  };
  kaiming(model.conv1.W, model.conv1.W.rows());
  kaiming(model.conv2.W, model.conv2.W.rows());
  kaiming(model.pre_linear.W, model.pre_linear.W.rows());
  kaiming(model.post_linear.W, model.post_linear.W.rows());
  kaiming(model.head.W, model.head.W.rows());
  // biases are already zero; sigma sits at cfg.sigma_init
  return model;
}

void adam_step(AdamState& state, Model& model) {
  state.t += 1;
  double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
  std::size_t off = 0;
  for (auto& p : model.parameters()) {
    for (std::size_t i = 0; i < p.size; ++i) {
      double g = p.grad[i];
      double& mi = state.m[off + i];
      double& vi = state.v[off + i];
      mi = state.beta1 * mi + (1.0 - state.beta1) * g;
      vi = state.beta2 * vi + (1.0 - state.beta2) * g * g;
      double m_hat = mi / bc1;
      double v_hat = vi / bc2;
      p.value[i] -= state.lr * m_hat / (std::sqrt(v_hat) + state.eps);
    }
    off += p.size;
  }
}

TrainResult train(Model& model, const std::vector<const LabeledGraph*>& train_set,
                  const TrainConfig& cfg) {
  if (train_set.empty()) throw std::invalid_argument("train: empty training set");
  if (cfg.epochs < 1) throw std::invalid_argument("train: epochs must be >= 1");

  AdamState adam(model, cfg.lr);
  std::mt19937_64 shuffle_rng(cfg.seed);
  std::vector<std::size_t> order(train_set.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  TrainResult result;
  result.best_loss = std::numeric_limits<double>::infinity();
  ModelCache cache;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (cfg.shuffle_each_epoch) shuffle_in_place(order, shuffle_rng);
    double loss_sum = 0.0;
    for (std::size_t step = 0; step < order.size(); ++step) {
      const LabeledGraph& g = *train_set[order[step]];
      model.zero_grads();
      model_forward(model, g, cache);
      double loss = loss_value(cache.logits, g.class_label, model);
      if (!std::isfinite(loss))
        throw TrainingDiverged("non-finite loss at epoch " + std::to_string(epoch) + ", graph " +
                               std::to_string(order[step]) + ", sigma " +
                               std::to_string(model.sigma()));
      model_backward(model, cache, g.class_label);
      adam_step(adam, model);
      loss_sum += loss;
    }
    double mean_loss = loss_sum / static_cast<double>(order.size());
    result.history.push_back({mean_loss, model.sigma()});
    if (mean_loss < result.best_loss) {
      result.best_loss = mean_loss;
      result.best_epoch = epoch;
      result.best_parameters = model.snapshot_values();
    }
  }
  return result;
}

void write_history_csv(std::ostream& out, const std::vector<EpochStats>& history) {
  out << "epoch,mean_loss,sigma\n";
  for (std::size_t e = 0; e < history.size(); ++e)
    out << e << "," << history[e].mean_loss << "," << history[e].sigma << "\n";
}

}  // namespace funcpool
