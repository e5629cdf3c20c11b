#include "pdalign/embedding.hpp"

#include <cmath>

#include "pdalign/errors.hpp"

namespace pdalign {

bool all_finite(const Vec& v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

void require_same_dim(const Vec& u, const Vec& v) {
  if (u.size() != v.size()) {
    throw DimError("dimension mismatch: " + std::to_string(u.size()) +
                   " vs " + std::to_string(v.size()));
  }
}

double dot(const Vec& u, const Vec& v) {
  require_same_dim(u, v);
  double acc = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) acc += u[i] * v[i];
  return acc;
}

double l2_norm(const Vec& v) {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return std::sqrt(acc);
}

Vec normalize(const Vec& v) {
  if (!all_finite(v)) throw NormalizationError("non-finite entry");
  const double n = l2_norm(v);
  if (n == 0.0) throw NormalizationError("cannot normalize the zero vector");
  Vec out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] / n;
  return out;
}

double cosine_similarity(const Vec& u, const Vec& v) {
  require_same_dim(u, v);
  if (!all_finite(u) || !all_finite(v)) {
    throw NormalizationError("non-finite entry");
  }
  const double nu = l2_norm(u);
  const double nv = l2_norm(v);
  if (nu == 0.0 || nv == 0.0) {
    throw NormalizationError("cosine of a zero vector is undefined");
  }
  return dot(u, v) / (nu * nv);
}

double cosine_distance(const Vec& u, const Vec& v) {
  return 1.0 - cosine_similarity(u, v);
}

Vec subtract(const Vec& u, const Vec& v) {
  require_same_dim(u, v);
  Vec out(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) out[i] = u[i] - v[i];
  return out;
}

Vec add(const Vec& u, const Vec& v) {
  require_same_dim(u, v);
  Vec out(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) out[i] = u[i] + v[i];
  return out;
}

Vec scale(const Vec& v, double c) {
  Vec out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] * c;
  return out;
}

}  // namespace pdalign
