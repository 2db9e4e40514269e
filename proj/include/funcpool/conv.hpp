#pragma once

#include "funcpool/matrix.hpp"

namespace funcpool {

/// Reverse-mode bookkeeping misuse (backward without a live forward cache).
struct StateError : std::logic_error {
  using std::logic_error::logic_error;
};

/// Graph convolution layer: h_out = ReLU([h_in | A.h_in] . W + b).
/// W is (2 d_in) x d_out, b has length d_out.
struct ConvLayer {
  Matrix W;
  std::vector<double> b;
  Matrix grad_W;
  std::vector<double> grad_b;

  ConvLayer(std::size_t d_in, std::size_t d_out)
      : W(2 * d_in, d_out), b(d_out, 0.0), grad_W(2 * d_in, d_out), grad_b(d_out, 0.0) {}

  std::size_t d_in() const { return W.rows() / 2; }
  std::size_t d_out() const { return W.cols(); }

  void zero_grads() {
    grad_W = Matrix(grad_W.rows(), grad_W.cols());
    std::fill(grad_b.begin(), grad_b.end(), 0.0);
  }
};

struct ConvCache {
  Matrix A;        // adjacency used in forward
  Matrix concat;   // [h_in | A.h_in]
  Matrix pre_act;  // concat.W + b
  bool live = false;
};

Matrix conv_forward(const ConvLayer& layer, const Matrix& A, const Matrix& h_in, ConvCache& cache);

/// Accumulates grad_W and grad_b, returns d loss / d h_in. Consumes the cache.
Matrix conv_backward(ConvLayer& layer, ConvCache& cache, const Matrix& upstream);

}  // namespace funcpool
