#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "pdalign/encoder.hpp"
#include "pdalign/errors.hpp"
#include "pdalign/rng.hpp"

using namespace pdalign;

namespace {

EncoderConfig small_config() {
  EncoderConfig config;
  config.vocab_size = 128;
  config.token_dim = 8;
  config.hidden_dim = 12;
  config.out_dim = 6;
  config.seed = 4;
  return config;
}

std::string random_words(DetRng& rng) {
  static const std::vector<std::string> pool = {
      "small", "large", "red",  "blue",  "cat", "dog",
      "first", "image", "while", "second", "has", "attributes"};
  std::string out;
  const std::size_t n = 1 + rng.next_below(8);
  for (std::size_t i = 0; i < n; ++i) {
    if (!out.empty()) out += ' ';
    out += pool[rng.next_below(pool.size())];
  }
  return out;
}

}  // namespace

TEST_CASE("tokenize_hashed folds case and splits on non-alphanumerics") {
  const auto a = tokenize_hashed("Cat DOG", 4096);
  const auto b = tokenize_hashed("cat dog", 4096);
  CHECK(a == b);
  CHECK(a.size() == 2);
  CHECK(tokenize_hashed("one,two;three!", 4096).size() == 3);
  CHECK(tokenize_hashed("...!!!", 4096).empty());
  CHECK(tokenize_hashed("mix3d t0kens", 4096).size() == 2);
}

TEST_CASE("encode_text is deterministic and case-insensitive") {
  const auto params = EncoderParams::init(small_config());
  CHECK(encode_text(params, "a small red cat") ==
        encode_text(params, "a small red cat"));
  CHECK(encode_text(params, "Cat DOG") == encode_text(params, "cat dog"));
}

TEST_CASE("encode_text output is unit norm for random strings") {
  const auto params = EncoderParams::init(small_config());
  DetRng rng(9);
  for (int i = 0; i < 100; ++i) {
    const Vec out = encode_text(params, random_words(rng));
    CHECK(std::abs(l2_norm(out) - 1.0) < 1e-6);
  }
}

TEST_CASE("encode_text rejects token-free text") {
  const auto params = EncoderParams::init(small_config());
  CHECK_THROWS_AS(encode_text(params, "!!! ... ??"), EncodeError);
}

TEST_CASE("init is seed-deterministic") {
  CHECK(EncoderParams::init(small_config()) ==
        EncoderParams::init(small_config()));
  auto other = small_config();
  other.seed = 5;
  CHECK_FALSE(EncoderParams::init(other) ==
              EncoderParams::init(small_config()));
}

TEST_CASE("checkpoint round trip is bit-exact") {
  const auto params = EncoderParams::init(small_config());
  const auto path =
      std::filesystem::temp_directory_path() / "pdalign-test-enc.encp";
  write_checkpoint(params, path);
  const auto back = read_checkpoint(path);
  CHECK(back == params);
  CHECK(serialize_checkpoint(back) == serialize_checkpoint(params));
  std::filesystem::remove(path);
}

TEST_CASE("checkpoint parsing rejects malformed bytes") {
  const auto params = EncoderParams::init(small_config());
  std::string bytes = serialize_checkpoint(params);

  std::string bad_magic = bytes;
  bad_magic[0] = 'X';
  CHECK_THROWS_AS(parse_checkpoint(bad_magic), FormatError);

  CHECK_THROWS_AS(parse_checkpoint(std::string_view(bytes).substr(
                      0, bytes.size() - 3)),
                  FormatError);

  std::string trailing = bytes + "zz";
  CHECK_THROWS_AS(parse_checkpoint(trailing), FormatError);
}

TEST_CASE("ensemble_weights: fixed points and elementwise mean") {
  const auto p = EncoderParams::init(small_config());

  SUBCASE("ensemble(p, p) = p") { CHECK(ensemble_weights(p, p) == p); }

  SUBCASE("ensemble(zeros, 2w) = w") {
    EncoderParams zeros = p;
    for (auto view : tensor_views(zeros)) {
      std::fill(view.data->begin(), view.data->end(), 0.0);
    }
    EncoderParams doubled = p;
    for (auto view : tensor_views(doubled)) {
      for (auto& x : *view.data) x *= 2.0;
    }
    const auto mean = ensemble_weights(zeros, doubled);
    CHECK(mean == p);
  }

  SUBCASE("random pair: elementwise oracle") {
    auto q_config = small_config();
    q_config.seed = 77;
    const auto q = EncoderParams::init(q_config);
    auto mean = ensemble_weights(p, q);
    auto pv = tensor_views(const_cast<EncoderParams&>(p));
    auto qv = tensor_views(const_cast<EncoderParams&>(q));
    auto mv = tensor_views(mean);
    for (std::size_t t = 0; t < pv.size(); ++t) {
      for (std::size_t i = 0; i < pv[t].data->size(); ++i) {
        const double expect = ((*pv[t].data)[i] + (*qv[t].data)[i]) / 2.0;
        CHECK(std::abs((*mv[t].data)[i] - expect) < 1e-9);
      }
    }
  }

  SUBCASE("shape mismatch throws") {
    auto other_config = small_config();
    other_config.hidden_dim = 16;
    const auto other = EncoderParams::init(other_config);
    CHECK_THROWS_AS(ensemble_weights(p, other), DimError);
  }
}
