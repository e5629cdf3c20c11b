#include <doctest.h>

#include <cmath>

#include "pdalign/embedding.hpp"
#include "pdalign/errors.hpp"
#include "pdalign/rng.hpp"

using namespace pdalign;

namespace {

Vec random_vec(DetRng& rng, std::size_t dim) {
  Vec v(dim);
  for (auto& x : v) x = rng.next_gaussian();
  return v;
}

}  // namespace

TEST_CASE("normalize: analytic norm-5 case") {
  const Vec out = normalize({3.0, 4.0});
  CHECK(out[0] == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(out[1] == doctest::Approx(0.8).epsilon(1e-12));
}

TEST_CASE("normalize: zero vector and non-finite entries are errors") {
  CHECK_THROWS_AS(normalize({0.0, 0.0}), NormalizationError);
  CHECK_THROWS_AS(normalize({1.0, std::nan("")}), NormalizationError);
  CHECK_THROWS_AS(normalize({1.0, INFINITY}), NormalizationError);
}

TEST_CASE("normalize: seeded vector keeps direction and gains unit norm") {
  DetRng rng(0);
  const Vec v = random_vec(rng, 32);
  const Vec n = normalize(v);
  CHECK(std::abs(l2_norm(n) - 1.0) < 1e-6);
  CHECK(std::abs(cosine_similarity(v, n) - 1.0) < 1e-6);
}

TEST_CASE("normalize is idempotent") {
  DetRng rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const Vec v = random_vec(rng, 8);
    const Vec once = normalize(v);
    const Vec twice = normalize(once);
    for (std::size_t i = 0; i < v.size(); ++i) {
      CHECK(std::abs(once[i] - twice[i]) < 1e-6);
    }
  }
}

TEST_CASE("cosine_distance: identity, antipodal, orthogonal") {
  const Vec v = {0.3, -1.2, 2.0};
  CHECK(cosine_distance(v, v) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(cosine_distance(v, scale(v, -1.0)) ==
        doctest::Approx(2.0).epsilon(1e-12));
  CHECK(cosine_distance({1.0, 0.0}, {0.0, 1.0}) ==
        doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("cosine_distance errors") {
  CHECK_THROWS_AS(cosine_distance({1.0, 0.0}, {1.0, 0.0, 0.0}), DimError);
  CHECK_THROWS_AS(cosine_distance({0.0, 0.0}, {1.0, 0.0}),
                  NormalizationError);
}

TEST_CASE("antipodal identity: d(u, w) + d(-u, w) = 2") {
  DetRng rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const Vec u = random_vec(rng, 12);
    const Vec w = random_vec(rng, 12);
    const double sum = cosine_distance(u, w) +
                       cosine_distance(scale(u, -1.0), w);
    CHECK(std::abs(sum - 2.0) < 1e-9);
  }
}

TEST_CASE("cosine_distance is scale-invariant") {
  DetRng rng(3);
  for (double c : {0.001, 0.5, 3.0, 1e6}) {
    const Vec u = random_vec(rng, 10);
    const Vec w = random_vec(rng, 10);
    CHECK(std::abs(cosine_distance(scale(u, c), w) -
                   cosine_distance(u, w)) < 1e-9);
  }
}

TEST_CASE("dot uses matching dimensions") {
  CHECK_THROWS_AS(dot({1.0}, {1.0, 2.0}), DimError);
  CHECK(dot({1.0, 2.0}, {3.0, 4.0}) == doctest::Approx(11.0));
}
