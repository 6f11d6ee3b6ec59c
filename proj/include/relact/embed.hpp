#pragma once

#include <array>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "relact/action_model.hpp"
#include "relact/phase.hpp"

namespace relact {

struct SummaryStats {
  double mean = 0.0;
  double median = 0.0;
  double max = 0.0;
  double min = 0.0;
};

// Mean, median (mean of the middle pair for even counts), max and min.
// All zero for an empty input.
SummaryStats summarize(std::span<const double> values);

struct PhaseFeature {
  SummaryStats score;
  std::vector<SummaryStats> features;  // one per feature_list entry
  bool assigned = false;
};

// Statistics of a phase window. `scores` and `relations` cover the window's
// frames; an empty window yields the unassigned block (all zero).
PhaseFeature phase_feature(std::span<const double> scores, std::span<const FrameRelations> relations,
                           const std::vector<FeatureRef>& feature_list);

struct EmbeddingLayout {
  std::string action_id;
  EmbeddingMode mode = EmbeddingMode::scores_and_features;
  std::vector<std::string> names;  // one per embedding dimension
  std::string fingerprint;         // stable hash of the above

  std::size_t size() const { return names.size(); }
  friend bool operator==(const EmbeddingLayout&, const EmbeddingLayout&) = default;
};

// Per phase a..e: score mean/median/max/min followed by the same four
// statistics for each listed feature (scores only in scores_only mode), then
// one presence flag per phase.
EmbeddingLayout embedding_layout(const ActionModel& model, EmbeddingMode mode = EmbeddingMode::scores_and_features);

struct VideoEmbedding {
  std::string video_id;
  std::string action_id;
  std::vector<double> values;
  std::array<bool, kPhaseCount> assigned{};
  std::shared_ptr<const EmbeddingLayout> layout;
};

// Builds V from the assigned windows using raw (unstandardized) scores of
// `matrix`. Relations are evaluated in the matrix's object order. Throws
// ContractError when the action ids or frame counts disagree.
VideoEmbedding embed_video(const VideoTrack& track, const PhaseAssignment& assignment,
                           const PhaseScoreMatrix& matrix, const ActionModel& model,
                           EmbeddingMode mode = EmbeddingMode::scores_and_features);

nlohmann::json embedding_to_json(const VideoEmbedding& e);

}  // namespace relact
