#include "relact/forest.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <thread>

#include "relact/error.hpp"

namespace relact {

using nlohmann::json;

void ForestParams::validate() const {
  if (num_trees < 1) throw ConfigError("forest needs at least one tree");
  if (min_samples_split < 2) throw ConfigError("min_samples_split must be at least 2");
  if (features_per_split && *features_per_split < 1) throw ConfigError("features_per_split must be at least 1");
}

std::size_t ForestParams::split_features(std::size_t dims) const {
  if (dims == 0) return 0;
  const std::size_t k =
      features_per_split ? *features_per_split
                         : static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(dims))));
  return std::clamp<std::size_t>(k, 1, dims);
}

json forest_params_to_json(const ForestParams& p) {
  return {{"num_trees", p.num_trees},
          {"max_depth", p.max_depth ? json(*p.max_depth) : json(nullptr)},
          {"min_samples_split", p.min_samples_split},
          {"features_per_split", p.features_per_split ? json(*p.features_per_split) : json("sqrt")},
          {"bootstrap", p.bootstrap},
          {"class_weight", p.balanced_class_weight ? "balanced" : "none"},
          {"seed", p.seed}};
}

ForestParams forest_params_from_json(const json& j) {
  ForestParams p;
  try {
    p.num_trees = j.at("num_trees").get<std::size_t>();
    if (const auto& d = j.at("max_depth"); !d.is_null()) p.max_depth = d.get<std::size_t>();
    p.min_samples_split = j.at("min_samples_split").get<std::size_t>();
    if (const auto& f = j.at("features_per_split"); !(f.is_string() && f.get<std::string>() == "sqrt")) {
      p.features_per_split = f.get<std::size_t>();
    }
    p.bootstrap = j.at("bootstrap").get<bool>();
    p.balanced_class_weight = j.at("class_weight").get<std::string>() == "balanced";
    p.seed = j.at("seed").get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("invalid forest parameters: ") + e.what());
  }
  p.validate();
  return p;
}

std::size_t TrainingSet::positives() const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), std::uint8_t{1}));
}

DecisionTree::DecisionTree(std::vector<Node> nodes) : nodes_(std::move(nodes)) {
  for (const auto& n : nodes_) {
    if (!n.terminal() && (n.left >= nodes_.size() || n.right >= nodes_.size())) {
      throw ParseError("decision tree node references a missing child");
    }
  }
}

double DecisionTree::predict(std::span<const double> x) const {
  if (nodes_.empty()) throw ContractError("empty decision tree");
  std::size_t i = 0;
  while (!nodes_[i].terminal()) {
    const auto& n = nodes_[i];
    if (static_cast<std::size_t>(n.feature) >= x.size()) throw ContractError("embedding shorter than the tree expects");
    i = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
  }
  return nodes_[i].positive_fraction;
}

std::size_t DecisionTree::depth() const {
  if (nodes_.empty()) return 0;
  std::vector<std::size_t> depth(nodes_.size(), 0);
  std::size_t deepest = 0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    deepest = std::max(deepest, depth[i]);
    if (!nodes_[i].terminal()) {
      depth[nodes_[i].left] = depth[i] + 1;
      depth[nodes_[i].right] = depth[i] + 1;
    }
  }
  return deepest;
}

namespace {

struct ClassWeights {
  double positive = 1.0;
  double negative = 1.0;
};

// Weighted Gini impurity of both children, up to the constant factor 2/W.
double split_impurity(double lp, double ln, double rp, double rn) {
  const auto side = [](double p, double n) { return p + n > 0.0 ? p * n / (p + n) : 0.0; };
  return side(lp, ln) + side(rp, rn);
}

class TreeBuilder {
 public:
  TreeBuilder(const TrainingSet& data, const ForestParams& params, ClassWeights weights, std::mt19937_64& rng)
      : data_(data), params_(params), weights_(weights), rng_(rng), dims_(data.dims()) {
    feature_pool_.resize(dims_);
  }

  std::vector<DecisionTree::Node> build(std::vector<std::size_t> sample) {
    grow(std::move(sample), 0);
    return std::move(nodes_);
  }

 private:
  struct Split {
    std::int32_t feature = -1;
    double threshold = 0.0;
    double impurity = 0.0;
  };

  std::uint32_t grow(std::vector<std::size_t> sample, std::size_t depth) {
    const auto id = static_cast<std::uint32_t>(nodes_.size());
    nodes_.emplace_back();

    std::size_t pos = 0;
    for (auto i : sample) pos += data_.labels[i];
    const std::size_t neg = sample.size() - pos;
    const double wp = static_cast<double>(pos) * weights_.positive;
    const double wn = static_cast<double>(neg) * weights_.negative;
    nodes_[id].positive_fraction = wp + wn > 0.0 ? wp / (wp + wn) : 0.0;

    const bool pure = pos == 0 || neg == 0;
    const bool too_deep = params_.max_depth && depth >= *params_.max_depth;
    if (pure || too_deep || sample.size() < params_.min_samples_split) return id;

    const auto split = best_split(sample);
    if (split.feature < 0) return id;

    std::vector<std::size_t> left;
    std::vector<std::size_t> right;
    for (auto i : sample) {
      (data_.rows[i][static_cast<std::size_t>(split.feature)] <= split.threshold ? left : right).push_back(i);
    }
    sample.clear();
    sample.shrink_to_fit();

    const auto l = grow(std::move(left), depth + 1);
    const auto r = grow(std::move(right), depth + 1);
    nodes_[id].feature = split.feature;
    nodes_[id].threshold = split.threshold;
    nodes_[id].left = l;
    nodes_[id].right = r;
    return id;
  }

  std::vector<std::size_t> candidate_features() {
    const std::size_t k = params_.split_features(dims_);
    std::iota(feature_pool_.begin(), feature_pool_.end(), std::size_t{0});
    if (k < dims_) {
      for (std::size_t i = 0; i < k; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, dims_ - 1);
        std::swap(feature_pool_[i], feature_pool_[pick(rng_)]);
      }
    }
    std::vector<std::size_t> chosen(feature_pool_.begin(), feature_pool_.begin() + static_cast<std::ptrdiff_t>(k));
    std::sort(chosen.begin(), chosen.end());
    return chosen;
  }

  Split best_split(const std::vector<std::size_t>& sample) {
    Split best;
    std::vector<std::pair<double, std::uint8_t>> column(sample.size());
    for (std::size_t f : candidate_features()) {
      for (std::size_t k = 0; k < sample.size(); ++k) {
        column[k] = {data_.rows[sample[k]][f], data_.labels[sample[k]]};
      }
      std::sort(column.begin(), column.end());

      std::size_t total_pos = 0;
      for (const auto& c : column) total_pos += c.second;
      const std::size_t total_neg = column.size() - total_pos;

      std::size_t left_pos = 0;
      std::size_t left_neg = 0;
      for (std::size_t k = 0; k + 1 < column.size(); ++k) {
        (column[k].second ? left_pos : left_neg) += 1;
        const double v = column[k].first;
        const double next = column[k + 1].first;
        if (!(v < next)) continue;
        double threshold = v + 0.5 * (next - v);
        if (!(threshold < next)) threshold = v;
        const double imp = split_impurity(
            static_cast<double>(left_pos) * weights_.positive, static_cast<double>(left_neg) * weights_.negative,
            static_cast<double>(total_pos - left_pos) * weights_.positive,
            static_cast<double>(total_neg - left_neg) * weights_.negative);
        // equal up to rounding counts as a tie and keeps the earlier split
        if (best.feature < 0 || imp < best.impurity - 1e-12 * std::max(1.0, best.impurity)) {
          best = {static_cast<std::int32_t>(f), threshold, imp};
        }
      }
    }
    return best;
  }

  const TrainingSet& data_;
  const ForestParams& params_;
  ClassWeights weights_;
  std::mt19937_64& rng_;
  std::size_t dims_;
  std::vector<std::size_t> feature_pool_;
  std::vector<DecisionTree::Node> nodes_;
};

void check_training_set(const TrainingSet& data) {
  if (data.rows.empty()) throw ContractError("training set is empty");
  if (data.labels.size() != data.rows.size()) throw ContractError("training labels and rows differ in count");
  for (const auto& r : data.rows) {
    if (r.size() != data.dims()) throw ContractError("training rows differ in length");
  }
}

ClassWeights class_weights(const TrainingSet& data, const ForestParams& params) {
  if (!params.balanced_class_weight) return {};
  const double n = static_cast<double>(data.size());
  const double pos = static_cast<double>(data.positives());
  const double neg = n - pos;
  return {pos > 0 ? n / (2.0 * pos) : 1.0, neg > 0 ? n / (2.0 * neg) : 1.0};
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

}  // namespace

DecisionTree train_tree(const TrainingSet& data, std::span<const std::size_t> sample, const ForestParams& params,
                        std::mt19937_64& rng) {
  check_training_set(data);
  params.validate();
  if (sample.empty()) throw ContractError("cannot train a tree on zero samples");
  TreeBuilder builder(data, params, class_weights(data, params), rng);
  return DecisionTree(builder.build({sample.begin(), sample.end()}));
}

DecisionTree train_tree(const TrainingSet& data, const ForestParams& params, std::mt19937_64& rng) {
  std::vector<std::size_t> all(data.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return train_tree(data, all, params, rng);
}

std::uint64_t tree_seed(std::uint64_t seed, std::uint64_t index) { return splitmix64(splitmix64(seed) ^ index); }

ForestModel train_forest(const TrainingSet& data, const ForestParams& params, std::string action_id,
                         std::string layout_fingerprint, unsigned threads) {
  check_training_set(data);
  params.validate();
  const std::size_t pos = data.positives();
  if (pos == 0 || pos == data.size()) {
    throw ValidationError("cannot train a binary detector" +
                          (action_id.empty() ? std::string() : " for '" + action_id + "'") + ": all " +
                          std::to_string(data.size()) + " samples are " + (pos == 0 ? "negative" : "positive"));
  }

  ForestModel model;
  model.action_id = std::move(action_id);
  model.params = params;
  model.layout_fingerprint = std::move(layout_fingerprint);
  model.embedding_length = data.dims();
  model.trees.resize(params.num_trees);

  const auto grow_tree = [&](std::size_t t) {
    std::mt19937_64 rng(tree_seed(params.seed, t));
    std::vector<std::size_t> sample(data.size());
    if (params.bootstrap) {
      std::uniform_int_distribution<std::size_t> draw(0, data.size() - 1);
      for (auto& s : sample) s = draw(rng);
    } else {
      std::iota(sample.begin(), sample.end(), std::size_t{0});
    }
    model.trees[t] = train_tree(data, sample, params, rng);
  };

  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, params.num_trees));
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(threads);
  {
    std::vector<std::jthread> workers;
    for (unsigned w = 0; w < threads; ++w) {
      workers.emplace_back([&, w] {
        try {
          for (std::size_t t = next++; t < params.num_trees; t = next++) grow_tree(t);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return model;
}

double predict_proba(const ForestModel& model, std::span<const double> x) {
  if (x.size() != model.embedding_length) {
    throw ContractError("embedding length " + std::to_string(x.size()) + " does not match model '" +
                        model.action_id + "' (" + std::to_string(model.embedding_length) + ")");
  }
  if (model.trees.empty()) throw ContractError("forest '" + model.action_id + "' has no trees");
  double sum = 0.0;
  for (const auto& t : model.trees) sum += t.predict(x);
  return std::clamp(sum / static_cast<double>(model.trees.size()), 0.0, 1.0);
}

double predict_proba(const ForestModel& model, const VideoEmbedding& v) {
  if (v.action_id != model.action_id) {
    throw ContractError("embedding for '" + v.action_id + "' given to model '" + model.action_id + "'");
  }
  if (v.layout && !model.layout_fingerprint.empty() && v.layout->fingerprint != model.layout_fingerprint) {
    throw ContractError("embedding layout " + v.layout->fingerprint + " does not match model '" + model.action_id +
                        "' layout " + model.layout_fingerprint);
  }
  return predict_proba(model, std::span<const double>(v.values));
}

Classification classify(const std::map<std::string, ForestModel>& models,
                        const std::map<std::string, VideoEmbedding>& embeddings) {
  if (models.empty()) throw ContractError("no models to classify with");
  Classification out;
  std::optional<double> best;
  for (const auto& [action, model] : models) {
    auto it = embeddings.find(action);
    if (it == embeddings.end()) throw ContractError("no embedding for action '" + action + "'");
    const double p = predict_proba(model, it->second);
    out.probabilities[action] = p;
    if (!best || p > *best) {
      best = p;
      out.action_id = action;
    }
  }
  return out;
}

json forest_to_json(const ForestModel& model) {
  json trees = json::array();
  for (const auto& t : model.trees) {
    json feature = json::array(), threshold = json::array(), left = json::array(), right = json::array(),
         value = json::array();
    for (const auto& n : t.nodes()) {
      feature.push_back(n.feature);
      threshold.push_back(n.threshold);
      left.push_back(n.left);
      right.push_back(n.right);
      value.push_back(n.positive_fraction);
    }
    trees.push_back({{"feature", std::move(feature)},
                     {"threshold", std::move(threshold)},
                     {"left", std::move(left)},
                     {"right", std::move(right)},
                     {"positive_fraction", std::move(value)}});
  }
  return {{"format", "relact-forest"},
          {"version", 1},
          {"action_id", model.action_id},
          {"params", forest_params_to_json(model.params)},
          {"layout_fingerprint", model.layout_fingerprint},
          {"embedding_length", model.embedding_length},
          {"trees", std::move(trees)}};
}

ForestModel forest_from_json(const json& doc) {
  ForestModel model;
  try {
    if (doc.at("format").get<std::string>() != "relact-forest") throw ParseError("not a forest model document");
    if (doc.at("version").get<int>() != 1) throw ParseError("unsupported forest model version");
    model.action_id = doc.at("action_id").get<std::string>();
    model.params = forest_params_from_json(doc.at("params"));
    model.layout_fingerprint = doc.at("layout_fingerprint").get<std::string>();
    model.embedding_length = doc.at("embedding_length").get<std::size_t>();
    for (const auto& t : doc.at("trees")) {
      const auto& feature = t.at("feature");
      const std::size_t n = feature.size();
      const auto& threshold = t.at("threshold");
      const auto& left = t.at("left");
      const auto& right = t.at("right");
      const auto& value = t.at("positive_fraction");
      if (threshold.size() != n || left.size() != n || right.size() != n || value.size() != n || n == 0) {
        throw ParseError("malformed decision tree in model '" + model.action_id + "'");
      }
      std::vector<DecisionTree::Node> nodes(n);
      for (std::size_t i = 0; i < n; ++i) {
        nodes[i] = {feature[i].get<std::int32_t>(), threshold[i].get<double>(), left[i].get<std::uint32_t>(),
                    right[i].get<std::uint32_t>(), value[i].get<double>()};
        if (nodes[i].feature >= static_cast<std::int32_t>(model.embedding_length)) {
          throw ParseError("decision node feature outside the embedding in model '" + model.action_id + "'");
        }
      }
      model.trees.emplace_back(std::move(nodes));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("invalid forest model document: ") + e.what());
  }
  if (model.trees.empty()) throw ParseError("forest model '" + model.action_id + "' has no trees");
  return model;
}

}  // namespace relact
