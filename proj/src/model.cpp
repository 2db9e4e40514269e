#include "funcpool/model.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace funcpool {

std::string to_string(PoolingKind kind) {
  switch (kind) {
    case PoolingKind::kFunction: return "function";
    case PoolingKind::kSum: return "sum";
    case PoolingKind::kMean: return "mean";
  }
  return "?";
}

PoolingKind pooling_kind_from_string(const std::string& s) {
  if (s == "function") return PoolingKind::kFunction;
  if (s == "sum") return PoolingKind::kSum;
  if (s == "mean") return PoolingKind::kMean;
  throw std::invalid_argument("unknown pooling kind '" + s + "', expected function, sum or mean");
}

Matrix dense_forward(const DenseLayer& layer, const Matrix& x, DenseCache& cache) {
  cache.input = x;
  cache.pre_act = add_row_broadcast(matmul(x, layer.W), layer.b);
  cache.live = true;
  return layer.use_relu ? relu(cache.pre_act) : cache.pre_act;
}

Matrix dense_backward(DenseLayer& layer, DenseCache& cache, const Matrix& upstream) {
  if (!cache.live) throw StateError("dense_backward: no live forward cache");
  cache.live = false;
  Matrix g = layer.use_relu ? relu_backward(cache.pre_act, upstream) : upstream;
  layer.grad_W = add(layer.grad_W, matmul(transpose(cache.input), g));
  auto gb = col_sums(g);
  for (std::size_t j = 0; j < gb.size(); ++j) layer.grad_b[j] += gb[j];
  return matmul(g, transpose(layer.W));
}

Model::Model(const ModelConfig& cfg)
    : conv1(static_cast<std::size_t>(cfg.num_vertex_labels), cfg.conv_dim),
      conv2(cfg.conv_dim, cfg.conv_dim),
      pre_linear(cfg.conv_dim, cfg.pre_out_dim(), false),
      pool(cfg.pooling == PoolingKind::kFunction
               ? std::optional<FunctionPooling>(
                     FunctionPooling(cfg.pool_input_dim, cfg.grid_resolution, cfg.sigma_init))
               : std::nullopt),
      post_linear(cfg.pooling == PoolingKind::kFunction
                      ? grid_point_count(cfg.pool_input_dim, cfg.grid_resolution)
                      : cfg.pre_out_dim(),
                  cfg.hidden_dim, true),
      head(cfg.hidden_dim, static_cast<std::size_t>(cfg.num_classes), false),
      cfg_(cfg) {
  if (cfg.num_vertex_labels <= 0)
    throw ShapeError("Model: num_vertex_labels must be positive");
  if (cfg.num_classes <= 0) throw ShapeError("Model: num_classes must be positive");
}

std::size_t Model::pool_out_dim() const {
  return pool ? pool->output_dim() : cfg_.pre_out_dim();
}

std::vector<ParamRef> Model::parameters() {
  std::vector<ParamRef> refs;
  auto add_conv = [&](const char* name, ConvLayer& l) {
    refs.push_back({std::string(name) + ".W", l.W.data(), l.grad_W.data(), l.W.size(), true});
    refs.push_back({std::string(name) + ".b", l.b.data(), l.grad_b.data(), l.b.size(), false});
  };
  auto add_dense = [&](const char* name, DenseLayer& l) {
    refs.push_back({std::string(name) + ".W", l.W.data(), l.grad_W.data(), l.W.size(), true});
    refs.push_back({std::string(name) + ".b", l.b.data(), l.grad_b.data(), l.b.size(), false});
  };
  add_conv("conv1", conv1);
  add_conv("conv2", conv2);
  add_dense("pre_linear", pre_linear);
  if (pool) refs.push_back({"pool.log_sigma", &pool->log_sigma(), &pool->grad_log_sigma(), 1, false});
  add_dense("post_linear", post_linear);
  add_dense("head", head);
  return refs;
}

void Model::zero_grads() {
  conv1.zero_grads();
  conv2.zero_grads();
  pre_linear.zero_grads();
  if (pool) pool->zero_grads();
  post_linear.zero_grads();
  head.zero_grads();
}

std::vector<double> Model::snapshot_values() {
  std::vector<double> values;
  for (const auto& p : parameters()) values.insert(values.end(), p.value, p.value + p.size);
  return values;
}

void Model::restore_values(const std::vector<double>& values) {
  std::size_t off = 0;
  for (auto& p : parameters()) {
    if (off + p.size > values.size()) throw ShapeError("restore_values: snapshot too short");
    std::copy(values.begin() + off, values.begin() + off + p.size, p.value);
    off += p.size;
  }
  if (off != values.size()) throw ShapeError("restore_values: snapshot too long");
}

std::vector<double> softmax(std::span<const double> logits) {
  double mx = logits[0];
  for (double v : logits) mx = std::max(mx, v);
  std::vector<double> p(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - mx);
    sum += p[i];
  }
  for (double& v : p) v /= sum;
  return p;
}

PredictionResult model_forward(const Model& m, const LabeledGraph& g, ModelCache& cache) {
  if (g.num_vertices == 0) throw std::invalid_argument("model_forward: empty graph");
  const ModelConfig& cfg = m.config();

  Matrix h0 = one_hot_features(g, cfg.num_vertex_labels);
  cache.adjacency = adjacency(g);
  Matrix h1 = conv_forward(m.conv1, cache.adjacency, h0, cache.conv1);
  Matrix h2 = conv_forward(m.conv2, cache.adjacency, h1, cache.conv2);
  Matrix h3 = dense_forward(m.pre_linear, h2, cache.pre_linear);
  cache.num_vertices = g.num_vertices;

  std::vector<double> pooled;
  switch (cfg.pooling) {
    case PoolingKind::kFunction: pooled = pool_forward(*m.pool, h3, cache.pool); break;
    case PoolingKind::kSum: pooled = pool_sum(h3); break;
    case PoolingKind::kMean: pooled = pool_mean(h3); break;
  }
  Matrix v(1, pooled.size());
  std::copy(pooled.begin(), pooled.end(), v.data());

  Matrix v2 = dense_forward(m.post_linear, v, cache.post_linear);
  Matrix logits = dense_forward(m.head, v2, cache.head);

  cache.logits.assign(logits.data(), logits.data() + logits.size());
  cache.probabilities = softmax(cache.logits);
  cache.live = true;

  PredictionResult result;
  result.class_probabilities = cache.probabilities;
  result.predicted_class = 0;
  for (std::size_t c = 1; c < cache.probabilities.size(); ++c)
    if (cache.probabilities[c] > cache.probabilities[result.predicted_class])
      result.predicted_class = static_cast<int>(c);
  return result;
}

PredictionResult predict(const Model& m, const LabeledGraph& g, std::optional<int> true_class) {
  ModelCache cache;
  PredictionResult result = model_forward(m, g, cache);
  if (true_class) result.loss = loss_value(cache.logits, *true_class, m);
  return result;
}

double weight_l2_sum(const Model& m) {
  double reg = 0.0;
  auto accumulate = [&reg](const Matrix& w) {
    for (std::size_t i = 0; i < w.size(); ++i) reg += w.data()[i] * w.data()[i];
  };
  accumulate(m.conv1.W);
  accumulate(m.conv2.W);
  accumulate(m.pre_linear.W);
  accumulate(m.post_linear.W);
  accumulate(m.head.W);
  return reg;
}

double loss_value(std::span<const double> logits, int true_class, const Model& m) {
  if (true_class < 0 || static_cast<std::size_t>(true_class) >= logits.size())
    throw std::invalid_argument("loss_value: class index out of range");
  double mx = logits[0];
  for (double v : logits) mx = std::max(mx, v);
  double sum = 0.0;
  for (double v : logits) sum += std::exp(v - mx);
  double ce = std::log(sum) + mx - logits[static_cast<std::size_t>(true_class)];
  return ce + m.config().l2_weight * weight_l2_sum(m);
}

void model_backward(Model& m, ModelCache& cache, int true_class) {
  if (!cache.live) throw StateError("model_backward: no live forward cache");
  cache.live = false;
  const std::size_t num_classes = cache.probabilities.size();
  if (true_class < 0 || static_cast<std::size_t>(true_class) >= num_classes)
    throw std::invalid_argument("model_backward: class index out of range");

  // softmax + cross entropy collapse to p - y at the logits
  Matrix dlogits(1, num_classes);
  for (std::size_t c = 0; c < num_classes; ++c) dlogits(0, c) = cache.probabilities[c];
  dlogits(0, static_cast<std::size_t>(true_class)) -= 1.0;

  Matrix g_v2 = dense_backward(m.head, cache.head, dlogits);
  Matrix g_v = dense_backward(m.post_linear, cache.post_linear, g_v2);

  Matrix grad_h3;
  switch (m.config().pooling) {
    case PoolingKind::kFunction:
      grad_h3 = pool_backward(*m.pool, cache.pool, g_v.row(0));
      break;
    case PoolingKind::kSum:
      grad_h3 = pool_sum_backward(g_v.row(0), cache.num_vertices);
      break;
    case PoolingKind::kMean:
      grad_h3 = pool_mean_backward(g_v.row(0), cache.num_vertices);
      break;
  }

  Matrix g_h2 = dense_backward(m.pre_linear, cache.pre_linear, grad_h3);
  Matrix g_h1 = conv_backward(m.conv2, cache.conv2, g_h2);
  conv_backward(m.conv1, cache.conv1, g_h1);

  double two_l2 = 2.0 * m.config().l2_weight;
  for (auto& p : m.parameters()) {
    if (!p.weight_matrix) continue;
    for (std::size_t i = 0; i < p.size; ++i) p.grad[i] += two_l2 * p.value[i];
  }
}

namespace {

void write_doubles(std::ostream& out, const double* values, std::size_t n) {
  out << std::hexfloat;
  for (std::size_t i = 0; i < n; ++i) out << values[i] << "\n";
  out << std::defaultfloat;
}

double read_hex_double(std::istream& in, const std::filesystem::path& path) {
  std::string token;
  if (!(in >> token)) throw IngestError("checkpoint truncated: " + path.string());
  char* end = nullptr;
  double v = std::strtod(token.c_str(), &end);
  if (end == token.c_str()) throw IngestError("bad value '" + token + "' in " + path.string());
  return v;
}

}  // namespace

void save_checkpoint(Model& m, std::uint64_t seed, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IngestError("cannot write checkpoint: " + path.string());
  const ModelConfig& cfg = m.config();
  out << "funcpool-checkpoint 1\n";
  out << "pooling " << to_string(cfg.pooling) << "\n";
  out << "num_vertex_labels " << cfg.num_vertex_labels << "\n";
  out << "num_classes " << cfg.num_classes << "\n";
  out << "conv_dim " << cfg.conv_dim << "\n";
  out << "pool_input_dim " << cfg.pool_input_dim << "\n";
  out << "baseline_pre_dim " << cfg.baseline_pre_dim << "\n";
  out << "grid_resolution " << cfg.grid_resolution << "\n";
  out << "hidden_dim " << cfg.hidden_dim << "\n";
  out << std::hexfloat << "sigma_init " << cfg.sigma_init << "\n"
      << "l2_weight " << cfg.l2_weight << std::defaultfloat << "\n";
  out << "seed " << seed << "\n";
  for (const auto& p : m.parameters()) {
    out << "param " << p.name << " " << p.size << "\n";
    write_doubles(out, p.value, p.size);
  }
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IngestError("missing checkpoint: " + path.string());
  std::string magic;
  int version = 0;
  in >> magic >> version;
  if (magic != "funcpool-checkpoint" || version != 1)
    throw IngestError("unrecognized checkpoint header in " + path.string());

  ModelConfig cfg;
  std::uint64_t seed = 0;
  std::string key;
  while (in >> key && key != "param") {
    if (key == "pooling") {
      std::string v;
      in >> v;
      cfg.pooling = pooling_kind_from_string(v);
    } else if (key == "num_vertex_labels") in >> cfg.num_vertex_labels;
    else if (key == "num_classes") in >> cfg.num_classes;
    else if (key == "conv_dim") in >> cfg.conv_dim;
    else if (key == "pool_input_dim") in >> cfg.pool_input_dim;
    else if (key == "baseline_pre_dim") in >> cfg.baseline_pre_dim;
    else if (key == "grid_resolution") in >> cfg.grid_resolution;
    else if (key == "hidden_dim") in >> cfg.hidden_dim;
    else if (key == "sigma_init") cfg.sigma_init = read_hex_double(in, path);
    else if (key == "l2_weight") cfg.l2_weight = read_hex_double(in, path);
    else if (key == "seed") in >> seed;
    else throw IngestError("unknown checkpoint field '" + key + "' in " + path.string());
  }

  Checkpoint ckpt{Model(cfg), seed};
  auto params = ckpt.model.parameters();
  std::size_t idx = 0;
  while (in && key == "param") {
    std::string name;
    std::size_t size = 0;
    in >> name >> size;
    if (idx >= params.size() || params[idx].name != name || params[idx].size != size)
      throw IngestError("checkpoint parameter mismatch at '" + name + "' in " + path.string());
    for (std::size_t i = 0; i < size; ++i) params[idx].value[i] = read_hex_double(in, path);
    ++idx;
    if (!(in >> key)) break;
  }
  if (idx != params.size()) throw IngestError("checkpoint missing parameters: " + path.string());
  return ckpt;
}

}  // namespace funcpool
