#include "funcpool/selftest.hpp"

#include <cmath>
#include <functional>
#include <ostream>
#include <random>

#include "funcpool/optim.hpp"

namespace funcpool {
namespace {

constexpr double kFdStep = 1e-6;

double relative_error(double analytic, double numeric) {
  double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-3});
  return std::abs(analytic - numeric) / denom;
}

// central difference of `f` while wiggling *x
double central_diff(double* x, const std::function<double()>& f) {
  double saved = *x;
  *x = saved + kFdStep;
  double hi = f();
  *x = saved - kFdStep;
  double lo = f();
  *x = saved;
  return (hi - lo) / (2.0 * kFdStep);
}

Matrix random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng, double scale = 1.0) {
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < m.size(); ++i)
    m.data()[i] = scale * (static_cast<double>(rng() >> 11) * 0x1.0p-53 * 2.0 - 1.0);
  return m;
}

LabeledGraph random_graph(std::size_t num_vertices, int num_labels, std::mt19937_64& rng) {
  LabeledGraph g;
  g.num_vertices = num_vertices;
  for (std::size_t u = 0; u < num_vertices; ++u)
    for (std::size_t v = u + 1; v < num_vertices; ++v)
      if (rng() % 2 == 0) g.edges.push_back({static_cast<int>(u), static_cast<int>(v)});
  for (std::size_t v = 0; v < num_vertices; ++v)
    g.vertex_labels.push_back(static_cast<int>(rng() % num_labels));
  g.class_label = 0;
  return g;
}

struct Reporter {
  std::ostream& out;
  double tolerance;
  bool all_passed = true;

  void check(const std::string& name, double max_err) {
    bool ok = max_err < tolerance;
    all_passed &= ok;
    out << (ok ? "PASS" : "FAIL") << "  " << name << "  (max rel err " << max_err << ")\n";
  }
};

double check_conv_gradients(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const std::size_t nv = 4, d_in = 3, d_out = 5;
  ConvLayer layer(d_in, d_out);
  layer.W = random_matrix(2 * d_in, d_out, rng);
  for (auto& b : layer.b) b = static_cast<double>(rng() >> 11) * 0x1.0p-53 - 0.5;
  LabeledGraph g = random_graph(nv, 2, rng);
  Matrix a = adjacency(g);
  Matrix h_in = random_matrix(nv, d_in, rng);
  Matrix weights = random_matrix(nv, d_out, rng);

  auto scalar_loss = [&] {
    ConvCache cache;
    Matrix out = conv_forward(layer, a, h_in, cache);
    double s = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) s += weights.data()[i] * out.data()[i];
    return s;
  };

  layer.zero_grads();
  ConvCache cache;
  Matrix out = conv_forward(layer, a, h_in, cache);
  Matrix upstream = weights;
  Matrix grad_h_in = conv_backward(layer, cache, upstream);

  double max_err = 0.0;
  for (std::size_t i = 0; i < layer.W.size(); ++i)
    max_err = std::max(max_err,
                       relative_error(layer.grad_W.data()[i],
                                      central_diff(&layer.W.data()[i], scalar_loss)));
  for (std::size_t i = 0; i < layer.b.size(); ++i)
    max_err = std::max(max_err,
                       relative_error(layer.grad_b[i], central_diff(&layer.b[i], scalar_loss)));
  for (std::size_t i = 0; i < h_in.size(); ++i)
    max_err = std::max(max_err, relative_error(grad_h_in.data()[i],
                                               central_diff(&h_in.data()[i], scalar_loss)));
  return max_err;
}

double check_pool_gradients(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const std::size_t m = 5, n = 3, r = 3;
  FunctionPooling pooling(n, r, 0.125);
  Matrix d = random_matrix(m, n, rng, 2.0);
  const std::size_t np = pooling.output_dim();
  std::vector<double> weights(np);
  for (auto& w : weights) w = static_cast<double>(rng() >> 11) * 0x1.0p-53 * 2.0 - 1.0;

  auto scalar_loss = [&] {
    PoolCache cache;
    auto rho = pool_forward(pooling, d, cache);
    double s = 0.0;
    for (std::size_t j = 0; j < np; ++j) s += weights[j] * rho[j];
    return s;
  };

  pooling.zero_grads();
  PoolCache cache;
  pool_forward(pooling, d, cache);
  Matrix grad_d = pool_backward(pooling, cache, weights);

  double max_err = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i)
    max_err =
        std::max(max_err, relative_error(grad_d.data()[i], central_diff(&d.data()[i], scalar_loss)));
  max_err = std::max(max_err, relative_error(pooling.grad_log_sigma(),
                                             central_diff(&pooling.log_sigma(), scalar_loss)));
  return max_err;
}

double check_dense_gradients(std::uint64_t seed, bool use_relu) {
  std::mt19937_64 rng(seed);
  const std::size_t rows = 3, d_in = 4, d_out = 6;
  DenseLayer layer(d_in, d_out, use_relu);
  layer.W = random_matrix(d_in, d_out, rng);
  for (auto& b : layer.b) b = static_cast<double>(rng() >> 11) * 0x1.0p-53 - 0.5;
  Matrix x = random_matrix(rows, d_in, rng);
  Matrix weights = random_matrix(rows, d_out, rng);

  auto scalar_loss = [&] {
    DenseCache cache;
    Matrix out = dense_forward(layer, x, cache);
    double s = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) s += weights.data()[i] * out.data()[i];
    return s;
  };

  layer.zero_grads();
  DenseCache cache;
  dense_forward(layer, x, cache);
  Matrix grad_x = dense_backward(layer, cache, weights);

  double max_err = 0.0;
  for (std::size_t i = 0; i < layer.W.size(); ++i)
    max_err = std::max(max_err,
                       relative_error(layer.grad_W.data()[i],
                                      central_diff(&layer.W.data()[i], scalar_loss)));
  for (std::size_t i = 0; i < layer.b.size(); ++i)
    max_err = std::max(max_err,
                       relative_error(layer.grad_b[i], central_diff(&layer.b[i], scalar_loss)));
  for (std::size_t i = 0; i < x.size(); ++i)
    max_err =
        std::max(max_err, relative_error(grad_x.data()[i], central_diff(&x.data()[i], scalar_loss)));
  return max_err;
}

double check_model_gradients(std::uint64_t seed, std::size_t grid_resolution,
                             PoolingKind pooling) {
  std::mt19937_64 rng(seed);
  ModelConfig cfg;
  cfg.num_vertex_labels = 2;
  cfg.num_classes = 2;
  cfg.pooling = pooling;
  cfg.conv_dim = 4;
  cfg.pool_input_dim = 3;
  cfg.baseline_pre_dim = 4;
  cfg.grid_resolution = grid_resolution;
  cfg.hidden_dim = 4;
  Model model = init_model(cfg, seed);
  LabeledGraph g = random_graph(4, cfg.num_vertex_labels, rng);
  const int true_class = 1;

  auto scalar_loss = [&] {
    ModelCache cache;
    model_forward(model, g, cache);
    return loss_value(cache.logits, true_class, model);
  };

  model.zero_grads();
  ModelCache cache;
  model_forward(model, g, cache);
  model_backward(model, cache, true_class);

  double max_err = 0.0;
  for (auto& p : model.parameters())
    for (std::size_t i = 0; i < p.size; ++i)
      max_err = std::max(max_err,
                         relative_error(p.grad[i], central_diff(&p.value[i], scalar_loss)));
  return max_err;
}

}  // namespace

bool run_self_test(std::ostream& out, const SelfTestOptions& opts) {
  Reporter r{out, opts.tolerance};
  r.check("conv layer gradients (W, b, h_in)", check_conv_gradients(opts.seed));
  r.check("function pooling gradients (D, log sigma)", check_pool_gradients(opts.seed + 1));
  r.check("dense layer gradients, linear", check_dense_gradients(opts.seed + 2, false));
  r.check("dense layer gradients, relu", check_dense_gradients(opts.seed + 3, true));
  r.check("full model gradients, function pooling",
          check_model_gradients(opts.seed + 4, opts.grid_resolution, PoolingKind::kFunction));
  r.check("full model gradients, sum pooling",
          check_model_gradients(opts.seed + 5, opts.grid_resolution, PoolingKind::kSum));
  r.check("full model gradients, mean pooling",
          check_model_gradients(opts.seed + 6, opts.grid_resolution, PoolingKind::kMean));
  out << (r.all_passed ? "self-test passed\n" : "self-test FAILED\n");
  return r.all_passed;
}

}  // namespace funcpool
