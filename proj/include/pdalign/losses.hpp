#pragma once

#include <cstddef>
#include <vector>

#include "pdalign/embedding.hpp"

namespace pdalign {

// Dense row-major matrix of doubles; rows are embeddings.
struct Mat {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Mat() = default;
  Mat(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double* row(std::size_t i) { return data.data() + i * cols; }
  const double* row(std::size_t i) const { return data.data() + i * cols; }

  void set_row(std::size_t i, const Vec& v);
  Vec row_vec(std::size_t i) const;
};

struct LossGrad {
  double value = 0.0;
  Mat grad_y;  // d(loss)/dY, same shape as Y
};

// Symmetric batch contrastive loss over the similarity matrix S = X Y^T /
// tau:
//
//   loss = -(1/2n) sum_k [ log softmax_col(S)_kk + log softmax_row(S)_kk ]
//
// X is the frozen image side; gradients are returned for Y only. Rows of
// both inputs must be unit-norm within 1e-4 (PreconditionError otherwise);
// shapes must match (DimError); tau must be positive (ConfigError).
LossGrad contrastive_loss(const Mat& x, const Mat& y, double tau);

// Squared error summed over the batch: sum_i |x_i - y_i|^2, with
// d/dy_i = 2 (y_i - x_i). Shape mismatch throws DimError.
LossGrad mse_loss(const Mat& x, const Mat& y);

}  // namespace pdalign
