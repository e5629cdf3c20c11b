#include <doctest.h>

#include <cmath>
#include <map>
#include <set>

#include "pdalign/errors.hpp"
#include "pdalign/toyworld.hpp"

using namespace pdalign;

TEST_CASE("same seed yields byte-identical worlds") {
  ToyWorldConfig config;
  config.n_items = 25;
  config.seed = 7;
  const ToyWorld a = generate_world(config);
  const ToyWorld b = generate_world(config);
  CHECK(world_jsonl(a) == world_jsonl(b));
  CHECK(serialize_table(a.image_table()) == serialize_table(b.image_table()));
  for (std::size_t i = 0; i < a.items().size(); ++i) {
    CHECK(a.items()[i].image_embedding == b.items()[i].image_embedding);
  }
}

TEST_CASE("sigma=0 makes equal attributes give identical embeddings") {
  ToyWorldConfig config;
  config.n_items = 60;
  config.n_kinds = 2;
  config.noise_sigma = 0.0;
  config.seed = 3;
  const ToyWorld world = generate_world(config);
  std::map<std::array<std::uint32_t, 3>, Vec> seen;
  bool found_duplicate_attrs = false;
  for (const auto& item : world.items()) {
    const auto [it, inserted] =
        seen.emplace(item.attributes, item.image_embedding);
    if (!inserted) {
      found_duplicate_attrs = true;
      CHECK(it->second == item.image_embedding);
    }
  }
  CHECK(found_duplicate_attrs);  // 60 items over 24 combos must collide
}

TEST_CASE("mixing columns are orthonormal") {
  const ToyWorld world = generate_world({});
  const auto& cols = world.mixing_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) {
    for (std::size_t j = 0; j < cols.size(); ++j) {
      const double expect = i == j ? 1.0 : 0.0;
      CHECK(std::abs(dot(cols[i], cols[j]) - expect) < 1e-9);
    }
  }
}

TEST_CASE("nearest neighbor shares the kind at sigma=0.05") {
  ToyWorldConfig config;
  config.n_items = 100;
  config.noise_sigma = 0.05;
  config.seed = 11;
  const ToyWorld world = generate_world(config);
  const auto& items = world.items();
  std::size_t matches = 0;
  for (std::size_t i = 0; i < items.size(); ++i) {
    double best = 2.0;
    std::size_t best_j = i;
    for (std::size_t j = 0; j < items.size(); ++j) {
      if (j == i) continue;
      const double d = cosine_distance(items[i].image_embedding,
                                       items[j].image_embedding);
      if (d < best) {
        best = d;
        best_j = j;
      }
    }
    if (items[i].attributes[2] == items[best_j].attributes[2]) ++matches;
  }
  CHECK(double(matches) / double(items.size()) >= 0.95);
}

TEST_CASE("sigma=0 differences equal the attribute direction") {
  ToyWorldConfig config;
  config.n_items = 30;
  config.noise_sigma = 0.0;
  config.seed = 5;
  const ToyWorld world = generate_world(config);
  const auto& items = world.items();
  for (std::size_t i = 0; i < 10; ++i) {
    for (std::size_t j = 0; j < 10; ++j) {
      if (i == j || items[i].attributes == items[j].attributes) continue;
      const Vec diff = subtract(items[i].image_embedding,
                                items[j].image_embedding);
      const Vec dir =
          world.attribute_direction(items[i].attributes, items[j].attributes);
      // Same direction: the raw difference is G(1/sqrt(3))(onehot_i - onehot_j).
      CHECK(std::abs(cosine_similarity(diff, dir) - 1.0) < 1e-9);
    }
  }
}

TEST_CASE("caption template") {
  CHECK(caption_for({1, 0, 0}, 4) == "a photo of a large, red cat");
  CHECK(caption_for({0, 2, 1}, 4) == "a photo of a small, yellow dog");
  const ToyWorld world = generate_world({});
  for (const auto& item : world.items()) {
    CHECK(item.caption ==
          caption_for(item.attributes, world.config().n_kinds));
  }
}

TEST_CASE("oracle_difference template instantiation") {
  ToyItem a;
  a.attributes = {1, 0, 0};  // large, red, cat
  ToyItem b;
  b.attributes = {0, 0, 1};  // small, red, dog
  CHECK(oracle_difference(a, b) ==
        "The first image has attributes of large, cat, while the second "
        "image has attributes of small, dog");
  CHECK(oracle_difference(b, a) ==
        "The first image has attributes of small, dog, while the second "
        "image has attributes of large, cat");
  CHECK(oracle_difference(a, a) == kNoDifferenceText);
}

TEST_CASE("oracle_difference round-trips the attribute set difference") {
  ToyWorldConfig config;
  config.n_items = 10;
  config.seed = 9;
  const ToyWorld world = generate_world(config);
  const auto& items = world.items();
  const std::string sep = ", while the second image has attributes of ";
  const std::string prefix = "The first image has attributes of ";

  const auto split_list = [](const std::string& s) {
    std::set<std::string> out;
    std::size_t start = 0;
    while (start < s.size()) {
      std::size_t end = s.find(", ", start);
      if (end == std::string::npos) end = s.size();
      out.insert(s.substr(start, end - start));
      start = end + 2;
    }
    return out;
  };

  for (const auto& a : items) {
    for (const auto& b : items) {
      if (a.id == b.id) continue;
      const std::string text = oracle_difference(a, b);
      const auto names_a = attribute_names(a.attributes);
      const auto names_b = attribute_names(b.attributes);
      std::set<std::string> expect_first, expect_second;
      for (std::size_t s = 0; s < names_a.size(); ++s) {
        if (names_a[s] != names_b[s]) {
          expect_first.insert(names_a[s]);
          expect_second.insert(names_b[s]);
        }
      }
      if (expect_first.empty()) {
        CHECK(text == kNoDifferenceText);
        continue;
      }
      REQUIRE(text.rfind(prefix, 0) == 0);
      const auto sep_pos = text.find(sep);
      REQUIRE(sep_pos != std::string::npos);
      const std::string first =
          text.substr(prefix.size(), sep_pos - prefix.size());
      const std::string second = text.substr(sep_pos + sep.size());
      CHECK(split_list(first) == expect_first);
      CHECK(split_list(second) == expect_second);

      // Antisymmetry: swapping arguments swaps the two lists.
      const std::string reversed = oracle_difference(b, a);
      CHECK(reversed == prefix + second + sep + first);
    }
  }
}

TEST_CASE("config validation") {
  ToyWorldConfig config;
  config.dim = 4;  // far fewer than 2 + 6 + n_kinds one-hot features
  CHECK_THROWS_AS(generate_world(config), ConfigError);
  config = {};
  config.noise_sigma = 1.0;
  CHECK_THROWS_AS(generate_world(config), ConfigError);
  config = {};
  config.n_items = 0;
  CHECK_THROWS_AS(generate_world(config), ConfigError);
}

TEST_CASE("world dump round trip") {
  const ToyWorld world = generate_world({});
  const auto path =
      std::filesystem::temp_directory_path() / "pdalign-test-world.jsonl";
  write_world_jsonl(world, path);
  const auto records = read_world_jsonl(path);
  REQUIRE(records.size() == world.items().size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    CHECK(records[i].id == world.items()[i].id);
    CHECK(records[i].caption == world.items()[i].caption);
    CHECK(records[i].attributes ==
          attribute_names(world.items()[i].attributes));
  }
  std::filesystem::remove(path);
}
