#include "funcpool/conv.hpp"

namespace funcpool {

Matrix conv_forward(const ConvLayer& layer, const Matrix& A, const Matrix& h_in, ConvCache& cache) {
  if (A.rows() != A.cols() || A.rows() != h_in.rows())
    throw ShapeError("conv_forward: adjacency " + A.shape_str() + " incompatible with features " +
                     h_in.shape_str());
  if (h_in.cols() != layer.d_in())
    throw ShapeError("conv_forward: feature dim " + std::to_string(h_in.cols()) +
                     " does not match layer d_in " + std::to_string(layer.d_in()));
  cache.A = A;
  cache.concat = hconcat(h_in, matmul(A, h_in));
  cache.pre_act = add_row_broadcast(matmul(cache.concat, layer.W), layer.b);
  cache.live = true;
  return relu(cache.pre_act);
}

Matrix conv_backward(ConvLayer& layer, ConvCache& cache, const Matrix& upstream) {
  if (!cache.live) throw StateError("conv_backward: no live forward cache");
  cache.live = false;
  if (upstream.rows() != cache.pre_act.rows() || upstream.cols() != cache.pre_act.cols())
    throw ShapeError("conv_backward: upstream " + upstream.shape_str() + " does not match output " +
                     cache.pre_act.shape_str());

  Matrix g = relu_backward(cache.pre_act, upstream);
  layer.grad_W = add(layer.grad_W, matmul(transpose(cache.concat), g));
  auto gb = col_sums(g);
  for (std::size_t j = 0; j < gb.size(); ++j) layer.grad_b[j] += gb[j];

  Matrix g_in = matmul(g, transpose(layer.W));
  std::size_t d = layer.d_in();
  Matrix left = col_slice(g_in, 0, d);
  Matrix right = col_slice(g_in, d, 2 * d);
  return add(left, matmul(transpose(cache.A), right));
}

}  // namespace funcpool
