#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "funcpool/pooling.hpp"
#include "test_util.hpp"

using namespace funcpool;

namespace {

// Independent brute-force oracle: enumerate every (grid point, vertex) pair
// with its own Gaussian evaluation. Kept free of any pooling internals.
std::vector<double> oracle_pool(const Matrix& d, std::size_t r, double sigma) {
  const std::size_t n = d.cols();
  std::size_t np = 1;
  for (std::size_t i = 0; i < n; ++i) np *= r;

  Matrix u(d.rows(), d.cols());
  for (std::size_t i = 0; i < d.size(); ++i) {
    double x = d.data()[i];
    double s = x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
    s = std::min(s, std::nextafter(1.0, 0.0));
    u.data()[i] = std::max(s, std::numeric_limits<double>::min());
  }

  std::vector<double> rho(np, 0.0);
  for (std::size_t j = 0; j < np; ++j) {
    // decode grid point j, last dimension fastest, cell centers
    std::vector<double> z(n);
    std::size_t idx = j;
    for (std::size_t dim = n; dim-- > 0;) {
      z[dim] = (2.0 * static_cast<double>(idx % r) + 1.0) / (2.0 * static_cast<double>(r));
      idx /= r;
    }
    for (std::size_t i = 0; i < d.rows(); ++i) {
      double acc = 0.0;
      for (std::size_t dim = 0; dim < n; ++dim) {
        double diff = z[dim] - u(i, dim);
        acc += diff * diff;
      }
      rho[j] += std::exp(-acc / (2.0 * sigma * sigma)) / (2.0 * std::numbers::pi * sigma * sigma);
    }
  }
  return rho;
}

}  // namespace

TEST_CASE("sigmoid_map basics") {
  CHECK(sigmoid_map(Matrix(2, 3)) == Matrix(2, 3, 0.5));

  std::mt19937_64 rng(31);
  Matrix x = testutil::random_matrix(4, 3, rng, -5.0, 5.0);
  Matrix s = sigmoid_map(x);
  Matrix neg = x;
  for (std::size_t i = 0; i < neg.size(); ++i) neg.data()[i] = -neg.data()[i];
  Matrix s_neg = sigmoid_map(neg);
  for (std::size_t i = 0; i < x.size(); ++i)
    CHECK(std::abs(s.data()[i] - (1.0 - s_neg.data()[i])) < 1e-15);
}

TEST_CASE("sigmoid_map is stable at large magnitudes") {
  Matrix x = Matrix::from_rows({{40.0, -40.0}});
  Matrix s = sigmoid_map(x);
  CHECK(s(0, 0) > 0.0);
  CHECK(s(0, 0) < 1.0);
  CHECK(s(0, 1) > 0.0);
  CHECK(s(0, 1) < 1.0);
  CHECK(std::isfinite(s(0, 0)));
  CHECK(std::isfinite(s(0, 1)));
}

TEST_CASE("gaussian_eval at the mean") {
  std::vector<double> u{0.3, 0.7};
  double v = gaussian_eval(u, u, 0.125);
  CHECK(v == doctest::Approx(1.0 / (2.0 * std::numbers::pi * 0.015625)).epsilon(1e-12));
}

TEST_CASE("gaussian_eval symmetry and independent cross-check") {
  std::vector<double> u{0.5, 0.5}, z{0.5, 1.0};
  CHECK(gaussian_eval(u, z, 0.005) == gaussian_eval(z, u, 0.005));
  // direct scalar evaluation: dist^2 = 0.25, sigma = 0.005
  double expected = std::exp(-0.25 / (2.0 * 0.005 * 0.005)) / (2.0 * std::numbers::pi * 0.005 * 0.005);
  CHECK(gaussian_eval(u, z, 0.005) == doctest::Approx(expected).epsilon(1e-14));
  CHECK_THROWS_AS(gaussian_eval(u, z, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(gaussian_eval(u, z, -1.0), std::invalid_argument);
}

TEST_CASE("grid geometry: cell centers, r=3") {
  FunctionPooling p(2, 3, 0.125);
  CHECK(p.output_dim() == 9);
  auto first = p.grid_point(0);
  CHECK(first[0] == doctest::Approx(1.0 / 6.0));
  CHECK(first[1] == doctest::Approx(1.0 / 6.0));
  auto second = p.grid_point(1);  // last dimension fastest
  CHECK(second[0] == doctest::Approx(1.0 / 6.0));
  CHECK(second[1] == doctest::Approx(0.5));
  auto last = p.grid_point(8);
  CHECK(last[0] == doctest::Approx(5.0 / 6.0));
  CHECK(last[1] == doctest::Approx(5.0 / 6.0));
}

TEST_CASE("pooled vector length is r^n") {
  FunctionPooling p10(10, 3, 0.125);
  CHECK(p10.output_dim() == 59049);
  FunctionPooling p2(10, 2, 0.125);
  CHECK(p2.output_dim() == 1024);
}

TEST_CASE("empty vertex set pools to the zero function") {
  FunctionPooling p(3, 2, 0.125);
  PoolCache cache;
  auto rho = pool_forward(p, Matrix(0, 3), cache);
  CHECK(rho == std::vector<double>(8, 0.0));
}

TEST_CASE("pool_forward matches the brute-force oracle exactly") {
  std::mt19937_64 rng(32);
  for (int trial = 0; trial < 30; ++trial) {
    std::size_t m = rng() % 9, n = 1 + rng() % 3, r = 2 + rng() % 3;
    Matrix d = testutil::random_matrix(m, n, rng, -3.0, 3.0);
    FunctionPooling p(n, r, 0.125);
    PoolCache cache;
    auto rho = pool_forward(p, d, cache);
    auto expected = oracle_pool(d, r, p.sigma());
    REQUIRE(rho.size() == expected.size());
    for (std::size_t j = 0; j < rho.size(); ++j) CHECK(rho[j] == expected[j]);
  }
}

TEST_CASE("single vertex pools to one Gaussian") {
  FunctionPooling p(2, 3, 0.125);
  Matrix d(1, 2);  // sigmoid(0) = (0.5, 0.5)
  PoolCache cache;
  auto rho = pool_forward(p, d, cache);
  std::vector<double> center{0.5, 0.5};
  for (std::size_t j = 0; j < rho.size(); ++j)
    CHECK(rho[j] == gaussian_eval(center, p.grid_point(j), p.sigma()));
}

TEST_CASE("pool_forward permutation invariance") {
  std::mt19937_64 rng(33);
  Matrix d = testutil::random_matrix(6, 3, rng, -2.0, 2.0);
  FunctionPooling p(3, 3, 0.125);
  PoolCache c1, c2;
  auto rho = pool_forward(p, d, c1);

  Matrix shuffled(6, 3);
  std::vector<std::size_t> perm{3, 0, 5, 1, 4, 2};
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 3; ++j) shuffled(perm[i], j) = d(i, j);
  auto rho2 = pool_forward(p, shuffled, c2);
  for (std::size_t j = 0; j < rho.size(); ++j) CHECK(std::abs(rho[j] - rho2[j]) < 1e-12);
}

TEST_CASE("pool_backward: zero upstream, gradients vanish") {
  std::mt19937_64 rng(34);
  Matrix d = testutil::random_matrix(4, 2, rng);
  FunctionPooling p(2, 3, 0.125);
  p.zero_grads();
  PoolCache cache;
  pool_forward(p, d, cache);
  std::vector<double> zero(9, 0.0);
  Matrix grad = pool_backward(p, cache, zero);
  CHECK(grad == Matrix(4, 2));
  CHECK(p.grad_log_sigma() == 0.0);
}

TEST_CASE("pool_backward finite differences, D and log sigma") {
  std::mt19937_64 rng(35);
  const std::size_t m = 5, n = 3, r = 3;
  Matrix d = testutil::random_matrix(m, n, rng, -2.0, 2.0);
  FunctionPooling p(n, r, 0.125);
  std::vector<double> w(p.output_dim());
  for (auto& v : w) v = testutil::uniform(rng);

  auto loss = [&] {
    PoolCache cache;
    auto rho = pool_forward(p, d, cache);
    double s = 0.0;
    for (std::size_t j = 0; j < rho.size(); ++j) s += w[j] * rho[j];
    return s;
  };

  p.zero_grads();
  PoolCache cache;
  pool_forward(p, d, cache);
  Matrix grad_d = pool_backward(p, cache, w);

  const double step = 1e-6;
  auto fd = [&](double* x) {
    double saved = *x;
    *x = saved + step;
    double hi = loss();
    *x = saved - step;
    double lo = loss();
    *x = saved;
    return (hi - lo) / (2.0 * step);
  };
  auto rel = [](double a, double b) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-3});
  };

  double max_err = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i)
    max_err = std::max(max_err, rel(grad_d.data()[i], fd(&d.data()[i])));
  max_err = std::max(max_err, rel(p.grad_log_sigma(), fd(&p.log_sigma())));
  CHECK(max_err < 1e-5);
}

TEST_CASE("mirror-symmetric vertices contribute equal sigma gradients") {
  FunctionPooling p(1, 4, 0.2);
  // sigmoid(x) and sigmoid(-x) mirror about 0.5, the grid center in 1D
  Matrix both = Matrix::from_rows({{0.8}, {-0.8}});
  std::vector<double> w(p.output_dim());
  for (std::size_t j = 0; j < w.size(); ++j) w[j] = 1.0;  // symmetric upstream

  auto sigma_grad_of = [&](const Matrix& d) {
    FunctionPooling q(1, 4, 0.2);
    PoolCache cache;
    pool_forward(q, d, cache);
    pool_backward(q, cache, w);
    return q.grad_log_sigma();
  };
  double g1 = sigma_grad_of(Matrix::from_rows({{0.8}}));
  double g2 = sigma_grad_of(Matrix::from_rows({{-0.8}}));
  CHECK(g1 == doctest::Approx(g2).epsilon(1e-12));
}

TEST_CASE("pool_backward without forward is a state error") {
  FunctionPooling p(2, 2, 0.125);
  PoolCache cache;
  std::vector<double> w(4, 1.0);
  CHECK_THROWS_AS(pool_backward(p, cache, w), StateError);
}

TEST_CASE("sum and mean baselines") {
  Matrix d = Matrix::from_rows({{1, 2}, {3, 4}});
  CHECK(pool_sum(d) == std::vector<double>{4, 6});
  CHECK(pool_mean(d) == std::vector<double>{2, 3});

  Matrix single = Matrix::from_rows({{5, -1}});
  CHECK(pool_sum(single) == pool_mean(single));
  CHECK(pool_sum(single) == std::vector<double>{5, -1});

  CHECK_THROWS_AS(pool_mean(Matrix(0, 2)), std::invalid_argument);

  std::mt19937_64 rng(36);
  Matrix r = testutil::random_matrix(5, 3, rng);
  Matrix shuffled(5, 3);
  std::vector<std::size_t> perm{4, 2, 0, 1, 3};
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 3; ++j) shuffled(perm[i], j) = r(i, j);
  auto s1 = pool_sum(r);
  auto s2 = pool_sum(shuffled);
  for (std::size_t j = 0; j < 3; ++j) CHECK(std::abs(s1[j] - s2[j]) < 1e-12);
}

TEST_CASE("baseline pooling backwards match finite differences") {
  std::mt19937_64 rng(37);
  Matrix d = testutil::random_matrix(4, 3, rng);
  std::vector<double> w{0.5, -1.0, 2.0};
  Matrix gs = pool_sum_backward(w, 4);
  Matrix gm = pool_mean_backward(w, 4);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 3; ++j) {
      CHECK(gs(i, j) == w[j]);
      CHECK(gm(i, j) == w[j] / 4.0);
    }
}

TEST_CASE("lp_distance") {
  std::vector<double> f{1.0, 2.0, 3.0};
  CHECK(lp_distance(f, f, 2.0, 1.0 / 3.0) == 0.0);

  std::vector<double> ones(16, 1.0), zeros(16, 0.0);
  CHECK(lp_distance(ones, zeros, 2.0, 1.0 / 16.0) == doctest::Approx(1.0).epsilon(1e-14));

  CHECK_THROWS_AS(lp_distance(ones, f, 2.0, 1.0), ShapeError);
  CHECK_THROWS_AS(lp_distance(f, f, 0.5, 1.0), std::invalid_argument);
}

TEST_CASE("lp_distance triangle inequality on random triples") {
  std::mt19937_64 rng(38);
  for (int trial = 0; trial < 50; ++trial) {
    std::size_t len = 1 + rng() % 20;
    std::vector<double> a(len), b(len), c(len);
    for (std::size_t i = 0; i < len; ++i) {
      a[i] = testutil::uniform(rng, -5, 5);
      b[i] = testutil::uniform(rng, -5, 5);
      c[i] = testutil::uniform(rng, -5, 5);
    }
    double p = 1.0 + testutil::uniform(rng, 0.0, 3.0);
    double cv = 1.0 / static_cast<double>(len);
    CHECK(lp_distance(a, c, p, cv) <= lp_distance(a, b, p, cv) + lp_distance(b, c, p, cv) + 1e-12);
  }
}

TEST_CASE("sigma smoothing: distances shrink as sigma grows") {
  Matrix d1 = Matrix::from_rows({{-1.0, 0.5}, {0.3, -0.2}});
  Matrix d2 = Matrix::from_rows({{1.2, -0.7}, {-0.4, 0.9}, {0.1, 0.1}});
  const std::size_t r = 8;
  double prev = std::numeric_limits<double>::infinity();
  for (double sigma : {0.01, 0.05, 0.25, 1.0}) {
    FunctionPooling p(2, r, sigma);
    PoolCache c1, c2;
    auto f = pool_forward(p, d1, c1);
    auto g = pool_forward(p, d2, c2);
    double dist = lp_distance(f, g, 2.0, p.cell_volume());
    CHECK(dist <= prev);
    prev = dist;
  }
}

TEST_CASE("total mass stabilizes as the grid refines") {
  Matrix d = Matrix::from_rows({{0.4, -0.3}, {-1.0, 0.8}, {0.0, 0.1}});
  auto mass_at = [&](std::size_t r) {
    FunctionPooling p(2, r, 0.125);
    PoolCache cache;
    auto rho = pool_forward(p, d, cache);
    double acc = 0.0;
    for (double v : rho) acc += v;
    return acc * p.cell_volume();
  };
  double m64 = mass_at(64);
  double m128 = mass_at(128);
  CHECK(std::abs(m64 - m128) / m128 < 0.01);
}

TEST_CASE("rho CSV export for n=2") {
  FunctionPooling p(2, 3, 0.125);
  PoolCache cache;
  auto rho = pool_forward(p, Matrix(1, 2), cache);
  std::ostringstream out;
  export_rho_csv(out, rho, 3);
  std::string text = out.str();
  CHECK(std::count(text.begin(), text.end(), '\n') == 3);
  CHECK(std::count(text.begin(), text.end(), ',') == 6);
  std::vector<double> bad(5);
  CHECK_THROWS_AS(export_rho_csv(out, bad, 3), ShapeError);
}
