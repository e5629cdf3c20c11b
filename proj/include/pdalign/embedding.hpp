#pragma once

#include <vector>

namespace pdalign {

// An embedding is a fixed-dimension real vector. Values are kept in double
// precision in memory; the on-disk interchange format is 32-bit IEEE-754
// (see table.hpp). All reductions accumulate in double.
using Vec = std::vector<double>;

bool all_finite(const Vec& v);

// Throws DimError if u and v differ in length.
void require_same_dim(const Vec& u, const Vec& v);

double dot(const Vec& u, const Vec& v);
double l2_norm(const Vec& v);

// Unit-norm copy of v. Throws NormalizationError for the zero vector or
// any non-finite entry.
Vec normalize(const Vec& v);

// Cosine similarity/distance normalize internally: callers routinely pass
// raw embedding differences, which are never unit-norm.
double cosine_similarity(const Vec& u, const Vec& v);

// 1 - cos(u, v), in [0, 2].
double cosine_distance(const Vec& u, const Vec& v);

Vec subtract(const Vec& u, const Vec& v);
Vec add(const Vec& u, const Vec& v);
Vec scale(const Vec& v, double c);

}  // namespace pdalign
