#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <span>

#include "funcpool/conv.hpp"
#include "funcpool/matrix.hpp"

namespace funcpool {

/// Global pooling that maps a set of vertex representations to a function on
/// the unit hypercube: each row of the input is squashed into (0,1)^n by a
/// sigmoid, a Gaussian bump of width sigma is placed at each squashed point,
/// and the resulting mixture is rasterized on a regular grid of r^n cell
/// centers. sigma is learnable and kept positive by optimizing log(sigma).
class FunctionPooling {
 public:
  FunctionPooling(std::size_t input_dim, std::size_t grid_resolution, double sigma_init);

  std::size_t input_dim() const { return input_dim_; }
  std::size_t grid_resolution() const { return grid_resolution_; }
  std::size_t output_dim() const { return num_points_; }
  double cell_volume() const;

  /// exp(log_sigma), except that the configured initial value is reproduced
  /// exactly until the parameter moves (exp(log(x)) can land an ulp off x).
  double sigma() const;
  double& log_sigma() { return log_sigma_; }
  double log_sigma() const { return log_sigma_; }
  double& grad_log_sigma() { return grad_log_sigma_; }
  void zero_grads() { grad_log_sigma_ = 0.0; }

  /// Grid point j (last dimension varies fastest).
  std::span<const double> grid_point(std::size_t j) const {
    return {grid_.data() + j * input_dim_, input_dim_};
  }

 private:
  std::size_t input_dim_;
  std::size_t grid_resolution_;
  std::size_t num_points_;
  double log_sigma_;
  double grad_log_sigma_ = 0.0;
  mutable double sigma_cache_ = 0.0;
  mutable double sigma_cache_key_ = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> grid_;  // num_points_ x input_dim_, row-major
};

struct PoolCache {
  Matrix u;      // sigmoid-squashed rows, m x n
  Matrix g;      // per-pair Gaussian values, m x r^n
  Matrix dist2;  // per-pair squared distances, m x r^n
  bool live = false;
};

/// r^n with an overflow guard; the rasterized vector length.
std::size_t grid_point_count(std::size_t input_dim, std::size_t grid_resolution);

/// Elementwise stable sigmoid; rows land strictly inside (0,1)^n.
Matrix sigmoid_map(const Matrix& d);

/// (1 / (2 pi sigma^2)) exp(-|z - u|^2 / (2 sigma^2)). The normalization
/// constant is dimension-independent by construction; the linear layer that
/// consumes the pooled vector absorbs it.
double gaussian_eval(std::span<const double> u, std::span<const double> z, double sigma);

/// rho[j] = sum over rows i of gaussian_eval(sigmoid(row i), grid[j], sigma).
/// An empty input pools to the zero function.
std::vector<double> pool_forward(const FunctionPooling& p, const Matrix& d, PoolCache& cache);

/// Accumulates grad_log_sigma on `p`, returns d loss / d input rows.
Matrix pool_backward(FunctionPooling& p, PoolCache& cache, std::span<const double> upstream);

std::vector<double> pool_sum(const Matrix& d);
std::vector<double> pool_mean(const Matrix& d);
Matrix pool_sum_backward(std::span<const double> upstream, std::size_t num_rows);
Matrix pool_mean_backward(std::span<const double> upstream, std::size_t num_rows);

/// Riemann approximation of the L^p distance between two rasterized functions.
double lp_distance(std::span<const double> f, std::span<const double> g, double p,
                   double cell_volume);

/// For input_dim == 2: rho as an r x r CSV grid (row-major), for plotting.
void export_rho_csv(std::ostream& out, std::span<const double> rho, std::size_t grid_resolution);

}  // namespace funcpool
