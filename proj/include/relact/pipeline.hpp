#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "relact/action_model.hpp"
#include "relact/embed.hpp"
#include "relact/eval.hpp"
#include "relact/forest.hpp"
#include "relact/phase.hpp"

namespace relact {

// 64-bit FNV-1a of the bytes, as 16 hex digits.
std::string fingerprint_hex(std::string_view bytes);

struct PipelineConfig {
  int window_half_width = kDefaultWindowHalfWidth;
  double sigma = kDefaultSigma;
  EmbeddingMode embedding = EmbeddingMode::scores_and_features;
  ForestParams forest;
  std::uint64_t seed = 42;
  unsigned threads = 0;  // 0 = hardware concurrency; never affects results

  void validate() const;
  // Settings that influence results (threads excluded).
  nlohmann::json to_json() const;
  std::string fingerprint() const;
};

// Runs fn(i) for i in [0, count) on a pool of workers; rethrows the first
// failure after all workers stop.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& fn);

using ActionAssignments = std::map<std::string, BestAssignment>;
using ActionEmbeddings = std::map<std::string, VideoEmbedding>;

// One entry per track, keyed by action id. Errors carry the video id.
std::vector<ActionAssignments> assign_all(const std::vector<VideoTrack>& tracks,
                                          const std::vector<ActionModel>& models, const PipelineConfig& config);
std::vector<ActionEmbeddings> embed_all(const std::vector<VideoTrack>& tracks, const std::vector<ActionModel>& models,
                                        const PipelineConfig& config);

struct TrainOutcome {
  std::map<std::string, ForestModel> forests;
  std::map<std::string, std::pair<std::size_t, std::size_t>> counts;  // positives, negatives
  std::vector<std::string> warnings;  // actions skipped for single-class data
};

// One-vs-rest forest per action model; labels come from the tracks.
TrainOutcome train_all(const std::vector<VideoTrack>& tracks, const std::vector<ActionModel>& models,
                       const PipelineConfig& config);
TrainOutcome train_from_embeddings(const std::vector<VideoTrack>& tracks,
                                   const std::vector<ActionEmbeddings>& embeddings,
                                   const std::vector<ActionModel>& models, const PipelineConfig& config);

PredictionSet predict_all(const std::vector<VideoTrack>& tracks, const std::vector<ActionModel>& models,
                          const std::map<std::string, ForestModel>& forests, const PipelineConfig& config);
PredictionSet predict_from_embeddings(const std::vector<VideoTrack>& tracks,
                                      const std::vector<ActionEmbeddings>& embeddings,
                                      const std::map<std::string, ForestModel>& forests);

struct DataSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
};

// Per label, round(fraction * count) videos go to validation, drawn with the seed.
DataSplit stratified_split(const std::vector<VideoTrack>& tracks, double validation_fraction, std::uint64_t seed);
// Document {"train": [ids], "validation": [ids]}; unknown ids are an error.
DataSplit split_from_json(const std::vector<VideoTrack>& tracks, const nlohmann::json& doc);

std::vector<VideoTrack> select(const std::vector<VideoTrack>& tracks, const std::vector<std::size_t>& indices);

}  // namespace relact
