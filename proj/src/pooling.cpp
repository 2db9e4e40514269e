#include "funcpool/pooling.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>

namespace funcpool {
namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t d = 0; d < a.size(); ++d) {
    double diff = b[d] - a[d];
    acc += diff * diff;
  }
  return acc;
}

// shared with pool_forward so the cached per-pair values match gaussian_eval bit for bit
double gaussian_from_dist2(double dist2, double sigma) {
  return std::exp(-dist2 / (2.0 * sigma * sigma)) / (2.0 * std::numbers::pi * sigma * sigma);
}

// clamped into the open interval so pooled points never sit on the boundary
double stable_sigmoid(double x) {
  double s;
  if (x >= 0.0) {
    s = 1.0 / (1.0 + std::exp(-x));
  } else {
    double e = std::exp(x);
    s = e / (1.0 + e);
  }
  s = std::min(s, std::nextafter(1.0, 0.0));
  return std::max(s, std::numeric_limits<double>::min());
}

}  // namespace

FunctionPooling::FunctionPooling(std::size_t input_dim, std::size_t grid_resolution,
                                 double sigma_init)
    : input_dim_(input_dim), grid_resolution_(grid_resolution) {
  if (input_dim == 0) throw std::invalid_argument("FunctionPooling: input_dim must be positive");
  if (grid_resolution == 0)
    throw std::invalid_argument("FunctionPooling: grid_resolution must be positive");
  if (!(sigma_init > 0.0)) throw std::invalid_argument("FunctionPooling: sigma_init must be > 0");
  log_sigma_ = std::log(sigma_init);
  sigma_cache_key_ = log_sigma_;
  sigma_cache_ = sigma_init;

  num_points_ = grid_point_count(input_dim_, grid_resolution_);

  // cell centers: coordinate t is (2t+1)/(2r), last dimension fastest
  std::vector<double> coords(grid_resolution_);
  for (std::size_t t = 0; t < grid_resolution_; ++t)
    coords[t] = (2.0 * static_cast<double>(t) + 1.0) / (2.0 * static_cast<double>(grid_resolution_));
  grid_.resize(num_points_ * input_dim_);
  for (std::size_t j = 0; j < num_points_; ++j) {
    std::size_t idx = j;
    for (std::size_t d = input_dim_; d-- > 0;) {
      grid_[j * input_dim_ + d] = coords[idx % grid_resolution_];
      idx /= grid_resolution_;
    }
  }
}

std::size_t grid_point_count(std::size_t input_dim, std::size_t grid_resolution) {
  std::size_t n = 1;
  for (std::size_t d = 0; d < input_dim; ++d) {
    if (n > (std::size_t{1} << 28) / grid_resolution)
      throw std::invalid_argument("grid_point_count: grid has too many points");
    n *= grid_resolution;
  }
  return n;
}

double FunctionPooling::sigma() const {
  if (log_sigma_ != sigma_cache_key_) {
    sigma_cache_key_ = log_sigma_;
    sigma_cache_ = std::exp(log_sigma_);
  }
  return sigma_cache_;
}

double FunctionPooling::cell_volume() const { return 1.0 / static_cast<double>(num_points_); }

Matrix sigmoid_map(const Matrix& d) {
  Matrix out(d.rows(), d.cols());
  for (std::size_t i = 0; i < d.size(); ++i) out.data()[i] = stable_sigmoid(d.data()[i]);
  return out;
}

double gaussian_eval(std::span<const double> u, std::span<const double> z, double sigma) {
  if (!(sigma > 0.0)) throw std::invalid_argument("gaussian_eval: sigma must be > 0");
  if (u.size() != z.size())
    throw ShapeError("gaussian_eval: point dimensions disagree, " + std::to_string(u.size()) +
                     " and " + std::to_string(z.size()));
  return gaussian_from_dist2(squared_distance(u, z), sigma);
}

std::vector<double> pool_forward(const FunctionPooling& p, const Matrix& d, PoolCache& cache) {
  if (d.rows() > 0 && d.cols() != p.input_dim())
    throw ShapeError("pool_forward: input " + d.shape_str() + " does not match pooling dim " +
                     std::to_string(p.input_dim()));
  const std::size_t m = d.rows();
  const std::size_t np = p.output_dim();
  const double sigma = p.sigma();

  cache.u = sigmoid_map(d);
  cache.g = Matrix(m, np);
  cache.dist2 = Matrix(m, np);
  cache.live = true;

  std::vector<double> rho(np, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    auto u_row = cache.u.row(i);
    double* grow = cache.g.data() + i * np;
    double* drow = cache.dist2.data() + i * np;
    for (std::size_t j = 0; j < np; ++j) {
      double dist2 = squared_distance(u_row, p.grid_point(j));
      double g = gaussian_from_dist2(dist2, sigma);
      drow[j] = dist2;
      grow[j] = g;
      rho[j] += g;
    }
  }
  return rho;
}

Matrix pool_backward(FunctionPooling& p, PoolCache& cache, std::span<const double> upstream) {
  if (!cache.live) throw StateError("pool_backward: no live forward cache");
  cache.live = false;
  const std::size_t m = cache.u.rows();
  const std::size_t n = p.input_dim();
  const std::size_t np = p.output_dim();
  if (upstream.size() != np)
    throw ShapeError("pool_backward: upstream length " + std::to_string(upstream.size()) +
                     " does not match grid size " + std::to_string(np));

  const double sigma = p.sigma();
  const double inv_s2 = 1.0 / (sigma * sigma);
  const double* grid = p.grid_point(0).data();

  Matrix grad_d(m, n);
  double sigma_acc = 0.0;
  std::vector<double> acc(n);
  for (std::size_t i = 0; i < m; ++i) {
    std::fill(acc.begin(), acc.end(), 0.0);
    const double* u_row = cache.u.row(i).data();
    const double* grow = cache.g.data() + i * np;
    const double* drow = cache.dist2.data() + i * np;
    for (std::size_t j = 0; j < np; ++j) {
      double t = upstream[j] * grow[j];
      if (t == 0.0) continue;
      sigma_acc += t * (drow[j] * inv_s2 - 2.0);
      const double* z = grid + j * n;
      for (std::size_t dd = 0; dd < n; ++dd) acc[dd] += t * (z[dd] - u_row[dd]);
    }
    // through d rho / d u, then the sigmoid derivative
    for (std::size_t dd = 0; dd < n; ++dd) {
      double u = u_row[dd];
      grad_d(i, dd) = acc[dd] * inv_s2 * u * (1.0 - u);
    }
  }
  // d g / d sigma = g (dist2 / sigma^3 - 2 / sigma); log-domain scaling by sigma
  p.grad_log_sigma() += sigma_acc;

  cache.g = Matrix();
  cache.dist2 = Matrix();
  return grad_d;
}

std::vector<double> pool_sum(const Matrix& d) { return col_sums(d); }

std::vector<double> pool_mean(const Matrix& d) {
  if (d.rows() == 0) throw std::invalid_argument("pool_mean: empty input");
  auto sums = col_sums(d);
  for (double& v : sums) v /= static_cast<double>(d.rows());
  return sums;
}

Matrix pool_sum_backward(std::span<const double> upstream, std::size_t num_rows) {
  Matrix out(num_rows, upstream.size());
  for (std::size_t i = 0; i < num_rows; ++i)
    for (std::size_t j = 0; j < upstream.size(); ++j) out(i, j) = upstream[j];
  return out;
}

Matrix pool_mean_backward(std::span<const double> upstream, std::size_t num_rows) {
  if (num_rows == 0) throw std::invalid_argument("pool_mean_backward: empty input");
  Matrix out(num_rows, upstream.size());
  double inv = 1.0 / static_cast<double>(num_rows);
  for (std::size_t i = 0; i < num_rows; ++i)
    for (std::size_t j = 0; j < upstream.size(); ++j) out(i, j) = upstream[j] * inv;
  return out;
}

double lp_distance(std::span<const double> f, std::span<const double> g, double p,
                   double cell_volume) {
  if (f.size() != g.size())
    throw ShapeError("lp_distance: lengths disagree, " + std::to_string(f.size()) + " and " +
                     std::to_string(g.size()));
  if (p < 1.0) throw std::invalid_argument("lp_distance: p must be >= 1");
  double acc = 0.0;
  for (std::size_t j = 0; j < f.size(); ++j)
    acc += std::pow(std::abs(f[j] - g[j]), p) * cell_volume;
  return std::pow(acc, 1.0 / p);
}

void export_rho_csv(std::ostream& out, std::span<const double> rho, std::size_t grid_resolution) {
  if (rho.size() != grid_resolution * grid_resolution)
    throw ShapeError("export_rho_csv: rho length " + std::to_string(rho.size()) +
                     " is not grid_resolution^2");
  for (std::size_t i = 0; i < grid_resolution; ++i) {
    for (std::size_t j = 0; j < grid_resolution; ++j) {
      if (j) out << ",";
      out << rho[i * grid_resolution + j];
    }
    out << "\n";
  }
}

}  // namespace funcpool
