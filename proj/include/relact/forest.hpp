#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "relact/embed.hpp"

namespace relact {

struct ForestParams {
  std::size_t num_trees = 200;
  std::optional<std::size_t> max_depth;           // unlimited when empty
  std::size_t min_samples_split = 2;
  std::optional<std::size_t> features_per_split;  // floor(sqrt(dims)) when empty
  bool bootstrap = true;
  bool balanced_class_weight = false;             // inverse-frequency sample weights
  std::uint64_t seed = 42;

  void validate() const;
  std::size_t split_features(std::size_t dims) const;
  friend bool operator==(const ForestParams&, const ForestParams&) = default;
};

nlohmann::json forest_params_to_json(const ForestParams& p);
ForestParams forest_params_from_json(const nlohmann::json& j);

// Binary-labelled samples; every row has the same length.
struct TrainingSet {
  std::vector<std::vector<double>> rows;
  std::vector<std::uint8_t> labels;  // 1 = positive

  std::size_t size() const { return rows.size(); }
  std::size_t dims() const { return rows.empty() ? 0 : rows.front().size(); }
  std::size_t positives() const;
};

class DecisionTree {
 public:
  struct Node {
    std::int32_t feature = -1;  // -1 marks a terminal node
    double threshold = 0.0;     // go left when x[feature] <= threshold
    std::uint32_t left = 0;
    std::uint32_t right = 0;
    double positive_fraction = 0.0;

    bool terminal() const { return feature < 0; }
    friend bool operator==(const Node&, const Node&) = default;
  };

  DecisionTree() = default;
  explicit DecisionTree(std::vector<Node> nodes);

  // Positive fraction of the leaf reached by x.
  double predict(std::span<const double> x) const;

  const std::vector<Node>& nodes() const { return nodes_; }
  std::size_t depth() const;
  friend bool operator==(const DecisionTree&, const DecisionTree&) = default;

 private:
  std::vector<Node> nodes_;
};

// Grows one tree on data.rows[sample] for each entry of `sample` (duplicates
// allowed). Splits minimise weighted Gini impurity over a random subset of
// features; candidate thresholds are midpoints between consecutive distinct
// values; ties go to the lowest feature index, then the lowest threshold.
DecisionTree train_tree(const TrainingSet& data, std::span<const std::size_t> sample, const ForestParams& params,
                        std::mt19937_64& rng);
DecisionTree train_tree(const TrainingSet& data, const ForestParams& params, std::mt19937_64& rng);

struct ForestModel {
  std::string action_id;
  ForestParams params;
  std::string layout_fingerprint;
  std::size_t embedding_length = 0;
  std::vector<DecisionTree> trees;
};

// Seed of the random stream used by tree `index` of a forest seeded with `seed`.
std::uint64_t tree_seed(std::uint64_t seed, std::uint64_t index);

// Needs at least one positive and one negative sample (ValidationError
// otherwise). Trees are trained concurrently on `threads` workers (0 = hardware
// concurrency); the result does not depend on the worker count.
ForestModel train_forest(const TrainingSet& data, const ForestParams& params, std::string action_id = {},
                         std::string layout_fingerprint = {}, unsigned threads = 0);

// Mean leaf positive fraction over the trees.
double predict_proba(const ForestModel& model, std::span<const double> x);
double predict_proba(const ForestModel& model, const VideoEmbedding& v);

struct Classification {
  std::string action_id;
  std::map<std::string, double> probabilities;
};

// Runs every model on the embedding built by its own action model and returns
// the most probable action; exact ties go to the lowest action id.
Classification classify(const std::map<std::string, ForestModel>& models,
                        const std::map<std::string, VideoEmbedding>& embeddings);

nlohmann::json forest_to_json(const ForestModel& model);
ForestModel forest_from_json(const nlohmann::json& doc);

}  // namespace relact
