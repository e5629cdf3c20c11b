#include "pdalign/losses.hpp"

#include <algorithm>
#include <cmath>

#include "pdalign/errors.hpp"

namespace pdalign {

namespace {

constexpr double kUnitRowTol = 1e-4;

void require_unit_rows(const Mat& m, const char* which) {
  for (std::size_t i = 0; i < m.rows; ++i) {
    double acc = 0.0;
    const double* r = m.row(i);
    for (std::size_t c = 0; c < m.cols; ++c) acc += r[c] * r[c];
    if (std::abs(std::sqrt(acc) - 1.0) > kUnitRowTol) {
      throw PreconditionError(std::string(which) + " row " +
                              std::to_string(i) + " is not unit-norm");
    }
  }
}

}  // namespace

void Mat::set_row(std::size_t i, const Vec& v) {
  if (v.size() != cols) throw DimError("row length mismatch");
  std::copy(v.begin(), v.end(), row(i));
}

Vec Mat::row_vec(std::size_t i) const {
  return Vec(row(i), row(i) + cols);
}

LossGrad contrastive_loss(const Mat& x, const Mat& y, double tau) {
  if (x.rows != y.rows || x.cols != y.cols) {
    throw DimError("X and Y shapes must match");
  }
  if (x.rows == 0) throw DimError("empty batch");
  if (!(tau > 0.0)) throw ConfigError("tau must be positive");
  require_unit_rows(x, "X");
  require_unit_rows(y, "Y");

  const std::size_t n = x.rows;
  const std::size_t d = x.cols;

  Mat s(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    const double* xi = x.row(i);
    for (std::size_t k = 0; k < n; ++k) {
      const double* yk = y.row(k);
      double acc = 0.0;
      for (std::size_t c = 0; c < d; ++c) acc += xi[c] * yk[c];
      s.row(i)[k] = acc / tau;
    }
  }

  // Stable log-sum-exp per row and per column.
  std::vector<double> row_lse(n), col_lse(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double* si = s.row(i);
    const double m = *std::max_element(si, si + n);
    double acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) acc += std::exp(si[k] - m);
    row_lse[i] = m + std::log(acc);
  }
  for (std::size_t k = 0; k < n; ++k) {
    double m = s.row(0)[k];
    for (std::size_t i = 1; i < n; ++i) m = std::max(m, s.row(i)[k]);
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += std::exp(s.row(i)[k] - m);
    col_lse[k] = m + std::log(acc);
  }

  double loss = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    loss += (s.row(k)[k] - col_lse[k]) + (s.row(k)[k] - row_lse[k]);
  }
  loss *= -0.5 / double(n);

  // dL/dS_ik = -(1/2n) [ (delta - P_col)_ik + (delta - P_row)_ik ],
  // dL/dy_k = sum_i dL/dS_ik * x_i / tau.
  LossGrad out;
  out.value = loss;
  out.grad_y = Mat(n, d);
  const double scale = -0.5 / (double(n) * tau);
  for (std::size_t i = 0; i < n; ++i) {
    const double* si = s.row(i);
    const double* xi = x.row(i);
    for (std::size_t k = 0; k < n; ++k) {
      const double p_col = std::exp(si[k] - col_lse[k]);
      const double p_row = std::exp(si[k] - row_lse[i]);
      const double delta = (i == k) ? 1.0 : 0.0;
      const double ds = scale * ((delta - p_col) + (delta - p_row));
      double* gk = out.grad_y.row(k);
      for (std::size_t c = 0; c < d; ++c) gk[c] += ds * xi[c];
    }
  }
  return out;
}

LossGrad mse_loss(const Mat& x, const Mat& y) {
  if (x.rows != y.rows || x.cols != y.cols) {
    throw DimError("X and Y shapes must match");
  }
  LossGrad out;
  out.grad_y = Mat(y.rows, y.cols);
  double acc = 0.0;
  for (std::size_t i = 0; i < x.rows; ++i) {
    const double* xi = x.row(i);
    const double* yi = y.row(i);
    double* gi = out.grad_y.row(i);
    for (std::size_t c = 0; c < x.cols; ++c) {
      const double diff = xi[c] - yi[c];
      acc += diff * diff;
      gi[c] = 2.0 * (yi[c] - xi[c]);
    }
  }
  out.value = acc;
  return out;
}

}  // namespace pdalign
