#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "relact/relations.hpp"

namespace relact {

enum class Phase : std::uint8_t { a = 0, b, c, d, e };
inline constexpr std::size_t kPhaseCount = 5;
inline constexpr std::array<Phase, kPhaseCount> kPhases = {Phase::a, Phase::b, Phase::c, Phase::d, Phase::e};

constexpr std::size_t index_of(Phase p) { return static_cast<std::size_t>(p); }
char phase_name(Phase p);
std::optional<Phase> phase_from_name(std::string_view name);

// Relational features a scoring term can reference. Offset is the magnitude
// of the centre displacement; OffsetX/OffsetY are its signed components.
// Moving(E) is true when |Offset(E)| exceeds the move threshold.
enum class Feature : std::uint8_t {
  Size,
  Offset,
  OffsetX,
  OffsetY,
  Present,
  Moving,
  MoveWithHand,
  HandMoveRelative,
  OverlapNormalised,
  OffsetDist,
  OffsetAngle,
  CentreDist,
  Touching,
  Contained,
  CentreOnTop,
  CentreUnderneath,
  ObjectMoveRelative,
};

std::string_view feature_name(Feature f);
std::optional<Feature> feature_from_name(std::string_view name);
std::size_t feature_arity(Feature f);
bool feature_is_boolean(Feature f);

struct FeatureRef {
  Feature feature = Feature::Present;
  Entity first = Entity::object1;
  std::optional<Entity> second;

  // e.g. "Touching(hand,object1)"
  std::string name() const;
  friend bool operator==(const FeatureRef&, const FeatureRef&) = default;
};

// Raw value of a feature: booleans as 0/1, reals as computed.
double feature_value(const FrameRelations& rel, const FeatureRef& ref);

// One weighted term of a phase scoring function. With a threshold the value
// becomes 1 when it exceeds the threshold and 0 otherwise. Negation maps a
// 0/1 value v to 1 - v and a real value v to -v.
struct ScoreTerm {
  FeatureRef ref;
  double weight = 1.0;
  bool negate = false;
  std::optional<double> threshold;

  double evaluate(const FrameRelations& rel) const;
  friend bool operator==(const ScoreTerm&, const ScoreTerm&) = default;
};

enum class EmbeddingMode : std::uint8_t { scores_and_features, scores_only };
std::string_view embedding_mode_name(EmbeddingMode m);
EmbeddingMode embedding_mode_from_name(std::string_view name);

struct ActionModel {
  std::string action_id;
  std::array<std::vector<ScoreTerm>, kPhaseCount> phases;
  // Features summarised per phase in the embedding, in layout order.
  std::vector<FeatureRef> feature_list;
  RelationThresholds thresholds;

  double score(Phase p, const FrameRelations& rel) const;
};

// Config document:
//   {"action_id": str,
//    "thresholds": {...}                       (optional, overrides `base`)
//    "features": [{"feature": str, "args": [role, ...]}]   (optional)
//    "phases": {"a": [term...], ..., "e": [term...]}}
// where term = {"feature": str, "args": [role...], "weight": num,
//               "negate": bool (optional), "threshold": num (optional)}.
// Without "features" the feature list is every distinct referenced feature in
// order of first appearance. Throws ConfigError on any invalid content.
ActionModel action_model_from_json(const nlohmann::json& doc, const RelationThresholds& base = {});
nlohmann::json action_model_to_json(const ActionModel& model);

// Loads one model file, or every *.json file of a directory sorted by name.
std::vector<ActionModel> load_action_models(const std::filesystem::path& path, const RelationThresholds& base = {});

}  // namespace relact
