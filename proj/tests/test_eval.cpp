#include <doctest.h>

#include <cmath>
#include <set>

#include "pdalign/errors.hpp"
#include "pdalign/evaluate.hpp"
#include "pdalign/rng.hpp"
#include "pdalign/toyworld.hpp"

using namespace pdalign;

namespace {

struct WorldFixture {
  ToyWorld world;
  EmbeddingTable images;
  std::vector<std::string> large_ids, small_ids;
  std::vector<AttrItem> attr_items;
};

WorldFixture make_world(double sigma, std::uint64_t seed,
                        std::uint32_t n_items = 60) {
  ToyWorldConfig config;
  config.n_items = n_items;
  config.noise_sigma = sigma;
  config.seed = seed;
  ToyWorld world = generate_world(config);
  WorldFixture fixture{std::move(world), {}, {}, {}, {}};
  fixture.images = fixture.world.image_table();
  for (const auto& item : fixture.world.items()) {
    (item.attributes[0] == 1 ? fixture.large_ids : fixture.small_ids)
        .push_back(item.id);
    fixture.attr_items.push_back(
        {item.id, attribute_names(item.attributes)});
  }
  return fixture;
}

TextEncoderFn oracle_encoder(const ToyWorld& world) {
  return [&world](const std::string& text) {
    return world.oracle_encode_text(text);
  };
}

}  // namespace

TEST_CASE("build_size_task: templates and gold match the group oracle") {
  auto fixture = make_world(0.05, 51);
  REQUIRE(!fixture.large_ids.empty());
  REQUIRE(!fixture.small_ids.empty());
  const std::set<std::string> large(fixture.large_ids.begin(),
                                    fixture.large_ids.end());

  const auto task =
      build_size_task(fixture.large_ids, fixture.small_ids, 100, 3);
  REQUIRE(task.pairs.size() == 100);
  const std::string first_larger =
      "The first image contains a larger animal, while the second contains "
      "a smaller animal";
  const std::string first_smaller =
      "The first image contains a smaller animal, while the second contains "
      "a larger animal";
  std::size_t golds_first = 0;
  for (const auto& pair : task.pairs) {
    const bool text_says_first_larger =
        pair.difference_text == first_larger;
    if (!text_says_first_larger) {
      REQUIRE(pair.difference_text == first_smaller);
    }
    // The item filling the text's "first" role must match its group.
    const bool i_is_large = large.count(pair.id_i) > 0;
    const PairSide expect =
        (text_says_first_larger == i_is_large) ? PairSide::First
                                               : PairSide::Second;
    CHECK(pair.gold == expect);
    if (pair.gold == PairSide::First) ++golds_first;
  }
  // Direction sampling actually exercises both sides.
  CHECK(golds_first > 20);
  CHECK(golds_first < 80);

  CHECK_THROWS_AS(build_size_task({}, fixture.small_ids, 10, 0), ConfigError);
}

TEST_CASE("build_color_task: template carries the group colors") {
  auto fixture = make_world(0.05, 52);
  std::vector<std::string> yellow, blue;
  for (const auto& item : fixture.world.items()) {
    if (item.attributes[1] == 2) yellow.push_back(item.id);
    if (item.attributes[1] == 1) blue.push_back(item.id);
  }
  REQUIRE(!yellow.empty());
  REQUIRE(!blue.empty());
  const std::set<std::string> yellow_set(yellow.begin(), yellow.end());

  const auto task = build_color_task("yellow", yellow, "blue", blue, 60, 5);
  for (const auto& pair : task.pairs) {
    const bool first_yellow =
        pair.difference_text ==
        "The first flower is yellow, while the second is blue";
    if (!first_yellow) {
      REQUIRE(pair.difference_text ==
              "The first flower is blue, while the second is yellow");
    }
    const bool i_is_yellow = yellow_set.count(pair.id_i) > 0;
    const PairSide expect =
        (first_yellow == i_is_yellow) ? PairSide::First : PairSide::Second;
    CHECK(pair.gold == expect);
  }
}

TEST_CASE("build_attribute_task: texts parse back and exclusions apply") {
  auto fixture = make_world(0.05, 53);
  const auto task = build_attribute_task(fixture.attr_items, 80, 7);
  REQUIRE(task.pairs.size() == 80);
  for (const auto& pair : task.pairs) {
    CHECK(pair.difference_text.rfind("The first image has attributes of",
                                     0) == 0);
    CHECK(pair.difference_text != kNoDifferenceText);
  }

  // Excluding every size value removes size words from all texts.
  const auto excl = build_attribute_task(fixture.attr_items, 80, 7,
                                         {"small", "large"});
  for (const auto& pair : excl.pairs) {
    CHECK(pair.difference_text.find("small") == std::string::npos);
    CHECK(pair.difference_text.find("large") == std::string::npos);
  }

  // A single excluded value hides any slot comparison touching it.
  const auto one = build_attribute_task(fixture.attr_items, 80, 7, {"red"});
  for (const auto& pair : one.pairs) {
    CHECK(pair.difference_text.find("red") == std::string::npos);
    CHECK(pair.difference_text != kNoDifferenceText);
  }
}

TEST_CASE("attribute task gold agrees with the oracle encoder at sigma=0") {
  auto fixture = make_world(0.0, 54);
  const auto task = build_attribute_task(fixture.attr_items, 200, 11);
  const auto result = eval_difference(task, fixture.images,
                                      oracle_encoder(fixture.world));
  CHECK(result.accuracy == 1.0);
}

TEST_CASE("degenerate constant encoder: accuracy equals fraction of gold=first") {
  // Images with an exactly-zero third coordinate; the constant encoder
  // output is orthogonal to every difference, so every comparison ties
  // and diff_classify answers "first" throughout.
  EmbeddingTable images({"p", "q", "r"},
                        {0.6f, 0.8f, 0.0f,  //
                         1.0f, 0.0f, 0.0f,  //
                         0.0f, 1.0f, 0.0f},
                        3, true);
  DifferenceTask task;
  task.style = TaskStyle::Attribute;
  task.pairs = {
      {"p", "q", "text a", PairSide::First},
      {"q", "r", "text b", PairSide::Second},
      {"r", "p", "text c", PairSide::Second},
      {"p", "r", "text d", PairSide::First},
      {"q", "p", "text e", PairSide::Second},
  };
  const TextEncoderFn constant = [](const std::string&) {
    return Vec{0.0, 0.0, 1.0};
  };
  const auto result = eval_difference(task, images, constant);
  CHECK(result.accuracy == doctest::Approx(2.0 / 5.0));
  for (const auto side : result.predictions) {
    CHECK(side == PairSide::First);
  }
}

TEST_CASE("negated encoder flips accuracy off the tie plane") {
  auto fixture = make_world(0.05, 55);
  const auto task = build_attribute_task(fixture.attr_items, 150, 13);
  const TextEncoderFn enc = oracle_encoder(fixture.world);
  const TextEncoderFn neg = [&](const std::string& text) {
    return scale(enc(text), -1.0);
  };
  const double a = eval_difference(task, fixture.images, enc).accuracy;
  const double b = eval_difference(task, fixture.images, neg).accuracy;
  CHECK(a + b == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("eval_difference: missing id raises DataError") {
  auto fixture = make_world(0.05, 56, 10);
  DifferenceTask task;
  task.pairs = {{"item-0000", "missing", "t", PairSide::First}};
  CHECK_THROWS_AS(
      eval_difference(task, fixture.images, oracle_encoder(fixture.world)),
      DataError);
}

TEST_CASE("llm task presents records in both orders") {
  auto fixture = make_world(0.05, 57, 20);
  std::vector<std::string> ids;
  for (const auto& item : fixture.world.items()) ids.push_back(item.id);
  const auto records =
      generate_dataset_oracle(fixture.world, sample_pairs(ids, 20, 2));
  const auto task = build_llm_task(records, 120, 3);
  REQUIRE(task.pairs.size() == 120);
  std::size_t firsts = 0;
  for (const auto& pair : task.pairs) {
    if (pair.gold == PairSide::First) ++firsts;
    CHECK_FALSE(pair.difference_text.empty());
  }
  CHECK(firsts > 30);
  CHECK(firsts < 90);
  // Oracle encoder gets forward and reversed presentations right at once.
  const auto noiseless = make_world(0.0, 57, 20);
  const auto records0 = generate_dataset_oracle(
      noiseless.world, sample_pairs(ids, 20, 2));
  std::vector<ComparisonRecord> differing;
  for (const auto& rec : records0) {
    if (rec.difference_text != kNoDifferenceText) differing.push_back(rec);
  }
  const auto task0 = build_llm_task(differing, 100, 5);
  const auto result = eval_difference(task0, noiseless.images,
                                      oracle_encoder(noiseless.world));
  CHECK(result.accuracy == 1.0);
}

TEST_CASE("localization: perfect and orthogonal differences") {
  PromptBank bank;
  bank.entries.push_back({"A", "a", normalize({1.0, 0.0, 0.0})});
  bank.entries.push_back({"B", "b", normalize({0.0, 1.0, 0.0})});

  SUBCASE("f_{B-A} proportional to f_B - f_A") {
    std::vector<ClassDifference> diffs = {
        {"B", "A", "b minus a", normalize({-1.0, 1.0, 0.0})}};
    const auto rows = localization_report(bank, diffs);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].d_fwd == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(rows[0].d_rev == doctest::Approx(2.0).epsilon(1e-9));
  }

  SUBCASE("orthogonal difference text") {
    std::vector<ClassDifference> diffs = {
        {"B", "A", "unrelated", {0.0, 0.0, 1.0}}};
    const auto rows = localization_report(bank, diffs);
    CHECK(rows[0].d_fwd == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(rows[0].d_rev == doctest::Approx(1.0).epsilon(1e-9));
  }

  SUBCASE("missing class") {
    std::vector<ClassDifference> diffs = {{"B", "nope", "x", {1.0, 0.0, 0.0}}};
    CHECK_THROWS_AS(localization_report(bank, diffs), DataError);
  }
}

TEST_CASE("localization identity: d_fwd + d_rev = 2 on random inputs") {
  DetRng rng(58);
  PromptBank bank;
  for (int i = 0; i < 6; ++i) {
    Vec v(8);
    for (auto& x : v) x = rng.next_gaussian();
    bank.entries.push_back({"c" + std::to_string(i), "p", normalize(v)});
  }
  std::vector<ClassDifference> diffs;
  for (int i = 0; i < 200; ++i) {
    Vec v(8);
    for (auto& x : v) x = rng.next_gaussian();
    diffs.push_back({"c" + std::to_string(rng.next_below(6)),
                     "c" + std::to_string(rng.next_below(6)), "t",
                     normalize(v)});
  }
  // Self pairs would make f_B - f_A zero; drop them.
  std::erase_if(diffs, [](const ClassDifference& d) {
    return d.class_b == d.class_a;
  });
  const auto rows = localization_report(bank, diffs);
  for (const auto& row : rows) {
    CHECK(std::abs(row.d_fwd + row.d_rev - 2.0) < 1e-9);
  }
}

TEST_CASE("accuracy_mean_stderr") {
  const auto single = accuracy_mean_stderr({0.5});
  CHECK(single.first == doctest::Approx(0.5));
  CHECK(single.second == 0.0);

  const auto pair = accuracy_mean_stderr({0.4, 0.6});
  CHECK(pair.first == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(pair.second == doctest::Approx(0.1).epsilon(1e-9));

  DetRng rng(59);
  std::vector<double> values;
  for (int i = 0; i < 5; ++i) values.push_back(rng.next_unit());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= 5.0;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double expect_se = std::sqrt(ss / 4.0) / std::sqrt(5.0);
  const auto got = accuracy_mean_stderr(values);
  CHECK(std::abs(got.first - mean) < 1e-12);
  CHECK(std::abs(got.second - expect_se) < 1e-12);

  CHECK_THROWS_AS(accuracy_mean_stderr({}), ConfigError);
}

TEST_CASE("run_difference_eval aggregates per-seed resamples") {
  auto fixture = make_world(0.05, 60);
  const auto report = run_difference_eval(
      [&](std::uint64_t seed) {
        return build_attribute_task(fixture.attr_items, 50, seed);
      },
      fixture.images, oracle_encoder(fixture.world), 5, 100,
      "difference/attribute");
  CHECK(report.per_seed.size() == 5);
  const auto [mean, se] = accuracy_mean_stderr(report.per_seed);
  CHECK(report.mean == doctest::Approx(mean));
  CHECK(report.stderr_mean == doctest::Approx(se));

  // Deterministic given the same inputs.
  const auto again = run_difference_eval(
      [&](std::uint64_t seed) {
        return build_attribute_task(fixture.attr_items, 50, seed);
      },
      fixture.images, oracle_encoder(fixture.world), 5, 100,
      "difference/attribute");
  CHECK(again.per_seed == report.per_seed);
}

TEST_CASE("eval_zeroshot fills the confusion matrix") {
  EmbeddingTable images({"x1", "x2", "x3"},
                        {1.0f, 0.0f,  //
                         0.0f, 1.0f,  //
                         1.0f, 0.0f},
                        2, true);
  PromptBank bank;
  bank.entries.push_back({"A", "a", {1.0, 0.0}});
  bank.entries.push_back({"B", "b", {0.0, 1.0}});
  const std::vector<std::pair<std::string, std::string>> labeled = {
      {"x1", "A"}, {"x2", "B"}, {"x3", "B"}};
  const auto result = eval_zeroshot(labeled, images, bank);
  CHECK(result.accuracy == doctest::Approx(2.0 / 3.0));
  CHECK(result.confusion.at(0, 0) == 1);
  CHECK(result.confusion.at(1, 1) == 1);
  CHECK(result.confusion.at(1, 0) == 1);
  CHECK_THROWS_AS(eval_zeroshot({{"x1", "missing"}}, images, bank),
                  DataError);
}

TEST_CASE("eval report JSON round trip") {
  EvalReport report;
  report.task = "difference/size";
  report.per_seed = {0.5, 0.75};
  report.mean = 0.625;
  report.stderr_mean = 0.125;
  report.classes = {"cat", "dog"};
  report.confusion = ConfusionMatrix(2);
  report.confusion.at(0, 1) = 3;
  report.localization = {{"dog", "cat", 0.9, 1.1}};
  report.mean_d_fwd = 0.9;
  report.mean_d_rev = 1.1;

  const auto back = EvalReport::from_json(report.to_json());
  CHECK(back.task == report.task);
  CHECK(back.per_seed == report.per_seed);
  CHECK(back.confusion.at(0, 1) == 3);
  CHECK(back.localization.size() == 1);
  CHECK(back.localization[0].d_rev == doctest::Approx(1.1));
  CHECK(back.to_json() == report.to_json());

  CHECK_THROWS_AS(EvalReport::from_json("{broken"), FormatError);
}
