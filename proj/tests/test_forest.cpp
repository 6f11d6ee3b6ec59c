#include <algorithm>
#include <cmath>
#include <numeric>
#include <memory>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "relact/error.hpp"
#include "relact/forest.hpp"

using namespace relact;

namespace {

TrainingSet one_dimensional() {
  return {{{1.0}, {2.0}, {8.0}, {9.0}}, {0, 0, 1, 1}};
}

TrainingSet random_set(std::mt19937_64& rng, std::size_t n, std::size_t dims, bool separable) {
  std::uniform_real_distribution<double> u(0, 1);
  TrainingSet s;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> row(dims);
    for (auto& x : row) x = u(rng);
    const bool pos = separable ? row[0] > 0.5 : u(rng) < 0.3;
    s.rows.push_back(row);
    s.labels.push_back(pos ? 1 : 0);
  }
  return s;
}

ForestModel constant_forest(std::vector<double> fractions, std::size_t length = 3) {
  ForestModel m;
  m.action_id = "x";
  m.embedding_length = length;
  for (double f : fractions) {
    DecisionTree::Node leaf;
    leaf.positive_fraction = f;
    m.trees.emplace_back(std::vector<DecisionTree::Node>{leaf});
  }
  return m;
}

}  // namespace

TEST_SUITE("forest") {

TEST_CASE("pure labels make a single leaf") {
  const TrainingSet s{{{1.0, 4.0}, {2.0, 3.0}, {5.0, 0.0}}, {1, 1, 1}};
  std::mt19937_64 rng(0);
  const auto tree = train_tree(s, ForestParams{}, rng);
  REQUIRE(tree.nodes().size() == 1);
  CHECK(tree.nodes()[0].terminal());
  CHECK(tree.nodes()[0].positive_fraction == 1.0);
}

TEST_CASE("separable 1-D data splits at the gap") {
  const auto s = one_dimensional();
  std::mt19937_64 rng(0);
  const auto tree = train_tree(s, ForestParams{.bootstrap = false}, rng);
  const auto& root = tree.nodes().at(0);
  REQUIRE_FALSE(root.terminal());
  CHECK(root.threshold > 2.0);
  CHECK(root.threshold < 8.0);
  const auto expect = oracle::best_gini_split(s.rows, s.labels);
  CHECK(root.feature == expect.feature);
  CHECK(root.threshold == expect.threshold);
  CHECK(tree.nodes()[root.left].positive_fraction == 0.0);
  CHECK(tree.nodes()[root.right].positive_fraction == 1.0);
  CHECK(tree.depth() == 1);
}

TEST_CASE("root split matches the exhaustive search") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    auto s = random_set(rng, 4 + rng() % 20, 1 + rng() % 4, false);
    for (auto& row : s.rows)
      for (auto& x : row) x = std::round(x * 6);  // force ties between values
    if (s.positives() == 0 || s.positives() == s.size()) continue;
    std::mt19937_64 tr(1);
    const ForestParams p{.features_per_split = s.dims(), .bootstrap = false};
    const auto tree = train_tree(s, p, tr);
    const auto expect = oracle::best_gini_split(s.rows, s.labels);
    const auto& root = tree.nodes().at(0);
    if (expect.feature < 0) {
      CHECK(root.terminal());
      continue;
    }
    CHECK(root.feature == expect.feature);
    CHECK(root.threshold == doctest::Approx(expect.threshold));
  }
}

TEST_CASE("min_samples_split stops at the root") {
  std::mt19937_64 rng(0);
  const auto tree = train_tree(one_dimensional(), ForestParams{.min_samples_split = 5, .bootstrap = false}, rng);
  REQUIRE(tree.nodes().size() == 1);
  CHECK(tree.nodes()[0].positive_fraction == 0.5);
}

TEST_CASE("identical samples make a leaf") {
  std::mt19937_64 rng(0);
  const auto tree = train_tree(TrainingSet{{{1.0}, {1.0}, {1.0}}, {0, 1, 1}}, ForestParams{.bootstrap = false}, rng);
  CHECK(tree.nodes().size() == 1);
}

TEST_CASE("unlimited single tree fits consistent data") {
  std::mt19937_64 rng(5);
  const auto s = random_set(rng, 120, 6, false);
  std::mt19937_64 tr(2);
  const auto tree = train_tree(s, ForestParams{.bootstrap = false}, tr);
  for (std::size_t i = 0; i < s.size(); ++i) CHECK(tree.predict(s.rows[i]) == static_cast<double>(s.labels[i]));
}

TEST_CASE("training is deterministic") {
  std::mt19937_64 rng(8);
  const auto s = random_set(rng, 80, 5, false);
  const ForestParams p{.num_trees = 20, .seed = 9};
  const auto a = train_forest(s, p, "x", "fp", 1);
  const auto b = train_forest(s, p, "x", "fp", 4);
  CHECK(forest_to_json(a).dump() == forest_to_json(b).dump());
  const auto c = train_forest(s, ForestParams{.num_trees = 20, .seed = 10}, "x", "fp", 1);
  CHECK(forest_to_json(a).dump() != forest_to_json(c).dump());
}

TEST_CASE("separable data, 50 trees") {
  std::mt19937_64 rng(12);
  const auto s = random_set(rng, 100, 1, true);
  const auto m = train_forest(s, ForestParams{.num_trees = 50});
  CHECK(m.trees.size() == 50);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double p = predict_proba(m, s.rows[i]);
    correct += (p > 0.5) == (s.labels[i] == 1);
  }
  CHECK(correct == s.size());
  CHECK(predict_proba(m, std::vector<double>{0.99}) > 0.5);
}

TEST_CASE("random labels give the base rate") {
  std::mt19937_64 rng(13);
  const auto train = random_set(rng, 400, 4, false);
  const auto held = random_set(rng, 400, 4, false);
  const auto m = train_forest(train, ForestParams{.num_trees = 50, .seed = 3});
  double mean = 0.0;
  for (const auto& row : held.rows) mean += predict_proba(m, row);
  mean /= static_cast<double>(held.size());
  const double base = static_cast<double>(train.positives()) / static_cast<double>(train.size());
  CHECK(std::abs(mean - base) < 0.1);
}

TEST_CASE("soft voting") {
  const std::vector<double> x{0, 0, 0};
  CHECK(predict_proba(constant_forest({0.2, 0.8}), x) == doctest::Approx(0.5));
  CHECK(predict_proba(constant_forest({1.0, 1.0, 1.0}), x) == 1.0);
  CHECK_THROWS_AS(predict_proba(constant_forest({0.2}), std::vector<double>{0, 0}), ContractError);
}

TEST_CASE("probabilities stay in [0, 1]") {
  std::mt19937_64 rng(14);
  const auto s = random_set(rng, 60, 3, false);
  const auto m = train_forest(s, ForestParams{.num_trees = 15, .balanced_class_weight = true});
  std::uniform_real_distribution<double> u(-2, 3);
  for (int i = 0; i < 200; ++i) {
    const double p = predict_proba(m, std::vector<double>{u(rng), u(rng), u(rng)});
    CHECK(p >= 0.0);
    CHECK(p <= 1.0);
  }
}

TEST_CASE("sample order does not matter without bootstrap") {
  std::mt19937_64 rng(15);
  const auto s = random_set(rng, 50, 4, false);
  std::vector<std::size_t> order(s.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  TrainingSet shuffled;
  for (std::size_t i : order) {
    shuffled.rows.push_back(s.rows[i]);
    shuffled.labels.push_back(s.labels[i]);
  }
  const ForestParams p{.num_trees = 10, .bootstrap = false, .seed = 4};
  const auto a = train_forest(s, p);
  const auto b = train_forest(shuffled, p);
  for (std::size_t t = 0; t < a.trees.size(); ++t) CHECK(a.trees[t] == b.trees[t]);
}

TEST_CASE("serialization round trip") {
  std::mt19937_64 rng(16);
  const auto s = random_set(rng, 80, 6, false);
  const auto m = train_forest(s, ForestParams{.num_trees = 12, .max_depth = 6}, "put-into", "abc");
  const auto back = forest_from_json(nlohmann::json::parse(forest_to_json(m).dump()));
  CHECK(back.action_id == "put-into");
  CHECK(back.layout_fingerprint == "abc");
  CHECK(back.params == m.params);
  CHECK(back.trees == m.trees);
  std::uniform_real_distribution<double> u(-1, 2);
  for (int i = 0; i < 300; ++i) {
    std::vector<double> x(6);
    for (auto& v : x) v = u(rng);
    CHECK(predict_proba(back, x) == predict_proba(m, x));
  }
  CHECK_THROWS_AS(forest_from_json(nlohmann::json{{"format", "other"}}), ParseError);
}

TEST_CASE("single-class data is refused") {
  const TrainingSet s{{{1.0}, {2.0}}, {0, 0}};
  CHECK_THROWS_AS(train_forest(s, ForestParams{}), ValidationError);
}

TEST_CASE("parameters") {
  CHECK(ForestParams{}.split_features(105) == 10);
  CHECK(ForestParams{.features_per_split = 200}.split_features(105) == 105);
  CHECK_THROWS_AS((ForestParams{.num_trees = 0}.validate()), ConfigError);
  CHECK_THROWS_AS((ForestParams{.min_samples_split = 1}.validate()), ConfigError);
  const ForestParams p{.num_trees = 7, .max_depth = 3, .balanced_class_weight = true, .seed = 5};
  CHECK(forest_params_from_json(forest_params_to_json(p)) == p);
  CHECK(tree_seed(1, 0) != tree_seed(1, 1));
}

TEST_CASE("classify") {
  ForestModel a = constant_forest({0.9}), b = constant_forest({0.2}), c = constant_forest({0.1});
  a.action_id = "A";
  b.action_id = "B";
  c.action_id = "C";
  auto layout = std::make_shared<EmbeddingLayout>();
  layout->names = {"u", "v", "w"};
  const auto emb = [&](const std::string& id) {
    VideoEmbedding e;
    e.video_id = "v";
    e.action_id = id;
    e.layout = layout;
    e.values = {0, 0, 0};
    return e;
  };
  std::map<std::string, VideoEmbedding> embs{{"A", emb("A")}, {"B", emb("B")}, {"C", emb("C")}};
  const auto r = classify({{"A", a}, {"B", b}, {"C", c}}, embs);
  CHECK(r.action_id == "A");
  CHECK(r.probabilities.at("B") == 0.2);

  ForestModel half_a = constant_forest({0.5}), half_b = constant_forest({0.5});
  half_a.action_id = "A";
  half_b.action_id = "B";
  CHECK(classify({{"B", half_b}, {"A", half_a}}, embs).action_id == "A");

  embs.erase("C");
  CHECK_THROWS_AS(classify({{"A", a}, {"C", c}}, embs), ContractError);
}

}  // TEST_SUITE
