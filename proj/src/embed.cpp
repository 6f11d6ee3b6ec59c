#include "relact/embed.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>

#include "relact/error.hpp"

namespace relact {

SummaryStats summarize(std::span<const double> values) {
  if (values.empty()) return {};
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  SummaryStats s;
  s.mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) / static_cast<double>(n);
  s.median = n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  s.min = sorted.front();
  s.max = sorted.back();
  // Rounding in the mean can push it a hair outside [min, max] for constant input.
  s.mean = std::clamp(s.mean, s.min, s.max);
  return s;
}

PhaseFeature phase_feature(std::span<const double> scores, std::span<const FrameRelations> relations,
                           const std::vector<FeatureRef>& feature_list) {
  PhaseFeature out;
  out.features.resize(feature_list.size());
  if (scores.empty()) return out;
  if (relations.size() != scores.size()) throw ContractError("phase window scores and relations differ in length");
  out.assigned = true;
  out.score = summarize(scores);
  std::vector<double> column(relations.size());
  for (std::size_t f = 0; f < feature_list.size(); ++f) {
    for (std::size_t i = 0; i < relations.size(); ++i) column[i] = feature_value(relations[i], feature_list[f]);
    out.features[f] = summarize(column);
  }
  return out;
}

namespace {

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

constexpr std::array<const char*, 4> kStatNames = {"mean", "median", "max", "min"};

void append_stats(std::vector<double>& v, const SummaryStats& s) {
  v.insert(v.end(), {s.mean, s.median, s.max, s.min});
}

}  // namespace

EmbeddingLayout embedding_layout(const ActionModel& model, EmbeddingMode mode) {
  EmbeddingLayout layout;
  layout.action_id = model.action_id;
  layout.mode = mode;
  for (Phase p : kPhases) {
    const std::string prefix = std::string(1, phase_name(p)) + ".";
    for (const char* stat : kStatNames) layout.names.push_back(prefix + "score." + stat);
    if (mode == EmbeddingMode::scores_only) continue;
    for (const auto& f : model.feature_list) {
      for (const char* stat : kStatNames) layout.names.push_back(prefix + f.name() + "." + stat);
    }
  }
  for (Phase p : kPhases) layout.names.push_back(std::string("assigned.") + phase_name(p));

  std::string canonical = layout.action_id + "\n" + std::string(embedding_mode_name(mode)) + "\n";
  for (const auto& n : layout.names) canonical += n + "\n";
  layout.fingerprint = fnv1a_hex(canonical);
  return layout;
}

VideoEmbedding embed_video(const VideoTrack& track, const PhaseAssignment& assignment,
                           const PhaseScoreMatrix& matrix, const ActionModel& model, EmbeddingMode mode) {
  if (assignment.action_id != model.action_id || matrix.action_id != model.action_id) {
    throw ContractError("video '" + track.video_id + "': assignment/matrix/model action ids disagree ('" +
                        assignment.action_id + "', '" + matrix.action_id + "', '" + model.action_id + "')");
  }
  if (matrix.frames() != track.frames.size()) {
    throw ContractError("video '" + track.video_id + "': score matrix does not match the track length");
  }

  const VideoTrack oriented = matrix.object_order == ObjectOrder::swapped ? swap_objects(track) : track;
  static const std::vector<FeatureRef> kNoFeatures;
  const auto& features = mode == EmbeddingMode::scores_only ? kNoFeatures : model.feature_list;

  VideoEmbedding out;
  out.video_id = track.video_id;
  out.action_id = model.action_id;
  out.layout = std::make_shared<const EmbeddingLayout>(embedding_layout(model, mode));
  out.values.reserve(out.layout->size());

  for (Phase p : kPhases) {
    const auto& window = assignment.window(p);
    std::vector<double> scores;
    std::vector<FrameRelations> relations;
    if (window) {
      if (window->last >= matrix.frames()) throw ContractError("phase window outside the video");
      const auto& row = matrix.raw[index_of(p)];
      for (std::size_t pos = window->first; pos <= window->last; ++pos) {
        scores.push_back(row[pos]);
        relations.push_back(frame_relations_at(oriented, pos, model.thresholds));
      }
    }
    const auto pf = phase_feature(scores, relations, features);
    out.assigned[index_of(p)] = pf.assigned;
    append_stats(out.values, pf.score);
    for (const auto& s : pf.features) append_stats(out.values, s);
  }
  for (bool a : out.assigned) out.values.push_back(a ? 1.0 : 0.0);
  return out;
}

nlohmann::json embedding_to_json(const VideoEmbedding& e) {
  nlohmann::json flags = nlohmann::json::array();
  for (bool a : e.assigned) flags.push_back(a);
  return {{"video_id", e.video_id},
          {"action_id", e.action_id},
          {"layout_fingerprint", e.layout ? e.layout->fingerprint : std::string()},
          {"values", e.values},
          {"assigned_flags", std::move(flags)}};
}

}  // namespace relact
