#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "funcpool/conv.hpp"
#include "funcpool/data.hpp"
#include "funcpool/matrix.hpp"
#include "funcpool/pooling.hpp"

namespace funcpool {

enum class PoolingKind { kFunction, kSum, kMean };

std::string to_string(PoolingKind kind);
PoolingKind pooling_kind_from_string(const std::string& s);

/// Fully connected layer applied row-wise: Y = act(X.W + b).
struct DenseLayer {
  Matrix W;
  std::vector<double> b;
  Matrix grad_W;
  std::vector<double> grad_b;
  bool use_relu = false;

  DenseLayer(std::size_t d_in, std::size_t d_out, bool relu_flag)
      : W(d_in, d_out), b(d_out, 0.0), grad_W(d_in, d_out), grad_b(d_out, 0.0),
        use_relu(relu_flag) {}

  std::size_t d_in() const { return W.rows(); }
  std::size_t d_out() const { return W.cols(); }

  void zero_grads() {
    grad_W = Matrix(grad_W.rows(), grad_W.cols());
    std::fill(grad_b.begin(), grad_b.end(), 0.0);
  }
};

struct DenseCache {
  Matrix input;
  Matrix pre_act;
  bool live = false;
};

Matrix dense_forward(const DenseLayer& layer, const Matrix& x, DenseCache& cache);
Matrix dense_backward(DenseLayer& layer, DenseCache& cache, const Matrix& upstream);

struct ModelConfig {
  int num_vertex_labels = 0;
  int num_classes = 0;
  PoolingKind pooling = PoolingKind::kFunction;
  std::size_t conv_dim = 20;          // d_1 = d_2
  std::size_t pool_input_dim = 10;    // pre-pooling linear output, function pooling
  std::size_t baseline_pre_dim = 20;  // same layer when a baseline pooling is used
  std::size_t grid_resolution = 3;
  double sigma_init = 0.125;
  std::size_t hidden_dim = 20;        // post-pooling linear output
  double l2_weight = 0.2;

  std::size_t pre_out_dim() const {
    return pooling == PoolingKind::kFunction ? pool_input_dim : baseline_pre_dim;
  }
};

/// One learnable tensor, viewed flat. `weight_matrix` marks L2-regularized ones.
struct ParamRef {
  std::string name;
  double* value;
  double* grad;
  std::size_t size;
  bool weight_matrix;
};

/// The six-layer classifier: two graph convolutions, a per-vertex linear map,
/// global pooling, a hidden ReLU layer and an affine head feeding softmax.
class Model {
 public:
  explicit Model(const ModelConfig& cfg);

  const ModelConfig& config() const { return cfg_; }
  std::size_t pool_out_dim() const;

  ConvLayer conv1;
  ConvLayer conv2;
  DenseLayer pre_linear;
  std::optional<FunctionPooling> pool;  // engaged only for function pooling
  DenseLayer post_linear;
  DenseLayer head;

  double sigma() const { return pool ? pool->sigma() : 0.0; }

  std::vector<ParamRef> parameters();
  void zero_grads();

  /// Flat copy of all parameter values, and its inverse. Used for best-model
  /// snapshots during training.
  std::vector<double> snapshot_values();
  void restore_values(const std::vector<double>& values);

 private:
  ModelConfig cfg_;
};

struct PredictionResult {
  std::vector<double> class_probabilities;
  int predicted_class = 0;  // argmax, ties to the lowest class index
  double loss = 0.0;        // filled only when a true class was supplied
};

struct ModelCache {
  Matrix adjacency;
  ConvCache conv1;
  ConvCache conv2;
  DenseCache pre_linear;
  PoolCache pool;
  std::size_t num_vertices = 0;
  DenseCache post_linear;
  DenseCache head;
  std::vector<double> logits;
  std::vector<double> probabilities;
  bool live = false;
};

PredictionResult model_forward(const Model& m, const LabeledGraph& g, ModelCache& cache);

/// Forward without gradient bookkeeping; loss is filled from `true_class`.
PredictionResult predict(const Model& m, const LabeledGraph& g,
                         std::optional<int> true_class = std::nullopt);

/// Sum of squared entries over all weight matrices (biases and log sigma excluded).
double weight_l2_sum(const Model& m);

/// Cross entropy of the true class plus l2_weight times weight_l2_sum.
double loss_value(std::span<const double> logits, int true_class, const Model& m);

/// Populates every gradient slot, including the L2 terms. Consumes the cache.
void model_backward(Model& m, ModelCache& cache, int true_class);

std::vector<double> softmax(std::span<const double> logits);

void save_checkpoint(Model& m, std::uint64_t seed, const std::filesystem::path& path);
struct Checkpoint {
  Model model;
  std::uint64_t seed;
};
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace funcpool
