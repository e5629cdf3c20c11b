#include <doctest.h>

#include <cmath>

#include "pdalign/errors.hpp"
#include "pdalign/losses.hpp"
#include "pdalign/rng.hpp"

using namespace pdalign;

namespace {

Mat unit_rows(DetRng& rng, std::size_t n, std::size_t d) {
  Mat m(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    Vec v(d);
    for (auto& x : v) x = rng.next_gaussian();
    m.set_row(i, normalize(v));
  }
  return m;
}

// Brute-force loss recomputation straight from the defining formula,
// independent of the production code path.
double contrastive_reference(const Mat& x, const Mat& y, double tau) {
  const std::size_t n = x.rows;
  std::vector<std::vector<double>> s(n, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < n; ++k) {
      double acc = 0.0;
      for (std::size_t c = 0; c < x.cols; ++c) {
        acc += x.row(i)[c] * y.row(k)[c];
      }
      s[i][k] = acc / tau;
    }
  }
  double total = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    double col = 0.0, row = 0.0;
    for (std::size_t i = 0; i < n; ++i) col += std::exp(s[i][k]);
    for (std::size_t j = 0; j < n; ++j) row += std::exp(s[k][j]);
    total += std::log(std::exp(s[k][k]) / col) +
             std::log(std::exp(s[k][k]) / row);
  }
  return -0.5 * total / double(n);
}

}  // namespace

TEST_CASE("contrastive: single matched pair has zero loss") {
  Mat x(1, 3);
  x.set_row(0, normalize({1.0, 2.0, -1.0}));
  Mat y = x;
  const auto lg = contrastive_loss(x, y, 1.0);
  CHECK(lg.value == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("contrastive: n=2 orthogonal-perfect case") {
  Mat x(2, 2);
  x.set_row(0, {1.0, 0.0});
  x.set_row(1, {0.0, 1.0});
  const Mat y = x;
  const auto lg = contrastive_loss(x, y, 1.0);
  // Each of the 4 terms is -log(e / (e + 1)).
  CHECK(std::abs(lg.value - std::log(1.0 + std::exp(-1.0))) < 1e-12);
  CHECK(std::abs(lg.value - 0.313262) < 1e-6);
}

TEST_CASE("contrastive: uniform similarities give exactly log n") {
  for (const std::size_t n : {2, 8, 64}) {
    Mat x(n, 4);
    Mat y(n, 4);
    const Vec u = normalize({1.0, 1.0, -1.0, 0.5});
    for (std::size_t i = 0; i < n; ++i) {
      x.set_row(i, u);
      y.set_row(i, u);
    }
    const auto lg = contrastive_loss(x, y, 0.7);
    CHECK(std::abs(lg.value - std::log(double(n))) < 1e-9);
  }
}

TEST_CASE("contrastive matches the brute-force formula on random batches") {
  DetRng rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t n = 2 + rng.next_below(6);
    const Mat x = unit_rows(rng, n, 5);
    const Mat y = unit_rows(rng, n, 5);
    const double tau = 0.5 + rng.next_unit();
    CHECK(std::abs(contrastive_loss(x, y, tau).value -
                   contrastive_reference(x, y, tau)) < 1e-10);
  }
}

TEST_CASE("contrastive is permutation-equivariant") {
  DetRng rng(32);
  const std::size_t n = 6;
  const Mat x = unit_rows(rng, n, 4);
  const Mat y = unit_rows(rng, n, 4);
  std::vector<std::size_t> perm = {3, 1, 5, 0, 4, 2};
  Mat xp(n, 4), yp(n, 4);
  for (std::size_t i = 0; i < n; ++i) {
    xp.set_row(i, x.row_vec(perm[i]));
    yp.set_row(i, y.row_vec(perm[i]));
  }
  CHECK(std::abs(contrastive_loss(x, y, 1.0).value -
                 contrastive_loss(xp, yp, 1.0).value) < 1e-12);
}

TEST_CASE("contrastive is nonnegative when diagonals dominate") {
  // x_i . y_k maximal at i = k implies every softmax term <= 1.
  Mat x(3, 3), y(3, 3);
  for (std::size_t i = 0; i < 3; ++i) {
    Vec e(3, 0.05);
    e[i] = 1.0;
    x.set_row(i, normalize(e));
    y.set_row(i, normalize(e));
  }
  CHECK(contrastive_loss(x, y, 1.0).value >= 0.0);
}

TEST_CASE("contrastive analytic gradient matches finite differences on Y") {
  DetRng rng(33);
  const std::size_t n = 5, d = 4;
  const Mat x = unit_rows(rng, n, d);
  Mat y = unit_rows(rng, n, d);
  const double tau = 0.8;
  const auto lg = contrastive_loss(x, y, tau);
  const double eps = 1e-6;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < d; ++c) {
      const double saved = y.row(i)[c];
      y.row(i)[c] = saved + eps;
      const double up = contrastive_loss(x, y, tau).value;
      y.row(i)[c] = saved - eps;
      const double down = contrastive_loss(x, y, tau).value;
      y.row(i)[c] = saved;
      const double numeric = (up - down) / (2.0 * eps);
      CHECK(std::abs(numeric - lg.grad_y.row(i)[c]) < 1e-7);
    }
  }
}

TEST_CASE("contrastive preconditions") {
  Mat x(2, 2), y(2, 2);
  x.set_row(0, {1.0, 0.0});
  x.set_row(1, {0.0, 1.0});
  y = x;
  Mat bad = x;
  bad.row(0)[0] = 2.0;  // norm 2
  CHECK_THROWS_AS(contrastive_loss(bad, y, 1.0), PreconditionError);
  CHECK_THROWS_AS(contrastive_loss(x, bad, 1.0), PreconditionError);
  CHECK_THROWS_AS(contrastive_loss(x, y, 0.0), ConfigError);
  Mat narrow(2, 3);
  CHECK_THROWS_AS(contrastive_loss(x, narrow, 1.0), DimError);
  CHECK_THROWS_AS(contrastive_loss(Mat(0, 2), Mat(0, 2), 1.0), DimError);
}

TEST_CASE("mse: identical batches give zero") {
  DetRng rng(34);
  const Mat x = unit_rows(rng, 4, 6);
  const auto lg = mse_loss(x, x);
  CHECK(lg.value == doctest::Approx(0.0));
  for (double g : lg.grad_y.data) CHECK(g == 0.0);
}

TEST_CASE("mse: analytic two-basis-vector case") {
  Mat x(1, 2), y(1, 2);
  x.set_row(0, {1.0, 0.0});
  y.set_row(0, {0.0, 1.0});
  const auto lg = mse_loss(x, y);
  CHECK(lg.value == doctest::Approx(2.0));
  CHECK(lg.grad_y.row(0)[0] == doctest::Approx(-2.0));
  CHECK(lg.grad_y.row(0)[1] == doctest::Approx(2.0));
}

TEST_CASE("mse matches brute-force elementwise summation") {
  DetRng rng(35);
  Mat x(8, 16), y(8, 16);
  for (auto& v : x.data) v = rng.next_gaussian();
  for (auto& v : y.data) v = rng.next_gaussian();
  double expect = 0.0;
  for (std::size_t i = 0; i < x.data.size(); ++i) {
    expect += (x.data[i] - y.data[i]) * (x.data[i] - y.data[i]);
  }
  CHECK(std::abs(mse_loss(x, y).value - expect) < 1e-9);
  CHECK_THROWS_AS(mse_loss(x, Mat(8, 15)), DimError);
}
