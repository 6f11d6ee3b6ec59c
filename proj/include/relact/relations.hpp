#pragma once

#include <array>
#include <cstddef>
#include <optional>

#include "json.hpp"
#include "relact/geometry.hpp"

namespace relact {

// Normaliser applied to the smaller box area in overlap_normalised().
inline constexpr double kOverlapAreaFactor = 0.1;

// Tunable thresholds for the boolean relations. Action models may override
// any of them.
struct RelationThresholds {
  double touch_tol = 5.0;              // px gap still counted as touching
  double containment_fraction = 0.9;   // overlap / area(A) for Contained(A,B)
  double move_threshold = 3.0;         // px/frame for an entity to count as moving
  double move_with_hand_tol = 4.0;     // px/frame offset difference for "moving together"

  friend bool operator==(const RelationThresholds&, const RelationThresholds&) = default;
};

// Reads any subset of the four keys; absent keys keep the values in `base`.
RelationThresholds thresholds_from_json(const nlohmann::json& doc, RelationThresholds base = {});
nlohmann::json thresholds_to_json(const RelationThresholds& t);

template <class T>
using PairTable = std::array<std::array<T, kEntityCount>, kEntityCount>;

// Every relational feature of one frame. Pair tables are indexed
// [index_of(A)][index_of(B)]; per-object tables use index_of(object).
// Real-valued features involving an absent entity are 0 and booleans false.
struct FrameRelations {
  std::array<bool, kEntityCount> present{};
  std::array<double, kEntityCount> size{};
  std::array<Vec2, kEntityCount> offset{};
  std::array<bool, kEntityCount> moving{};

  PairTable<double> overlap_norm{};
  PairTable<double> offset_dist{};
  PairTable<double> offset_angle{};
  PairTable<double> centre_dist{};

  PairTable<bool> touching{};
  PairTable<bool> contained{};
  PairTable<bool> centre_on_top{};
  PairTable<bool> centre_underneath{};
  PairTable<bool> object_move_relative{};

  // Indexed by object; the hand slot is always false.
  std::array<bool, kEntityCount> move_with_hand{};
  std::array<bool, kEntityCount> hand_move_relative{};
};

double size(const BoundingBox& b);
double overlap_area(const BoundingBox& a, const BoundingBox& b);

// (x overlap * y overlap) / (kOverlapAreaFactor * area of the smaller box).
// Returns 0 when the boxes are disjoint or the smaller box has zero area.
double overlap_normalised(const BoundingBox& a, const BoundingBox& b);

// Centre displacement of `entity` between frame `frame_index` and the
// previous annotated frame. (0,0) at the first frame or when the entity was
// absent in the previous frame. Throws ContractError when the entity is absent
// at frame_index or the frame does not exist.
Vec2 offset(const VideoTrack& track, Entity entity, std::int64_t frame_index);
Vec2 offset_at(const VideoTrack& track, Entity entity, std::size_t position);

double offset_dist(Vec2 a, Vec2 b);

struct OffsetAngle {
  double radians = 0.0;   // absolute direction difference in [0, pi]
  bool stationary = false;  // set when either offset is below the move threshold
};
OffsetAngle offset_angle(Vec2 a, Vec2 b, double move_threshold = RelationThresholds{}.move_threshold);

double centre_dist(const BoundingBox& a, const BoundingBox& b);

// Overlapping, or nearest-edge gap at most tol.
bool touching(const BoundingBox& a, const BoundingBox& b, double tol);
// overlap_area(a,b) / area(a) >= fraction. A zero-area `a` is contained when its
// centre lies inside b.
bool contained(const BoundingBox& a, const BoundingBox& b, double fraction);
// Centre of a inside b's x-extent and above (smaller y than) b's centre.
bool centre_on_top(const BoundingBox& a, const BoundingBox& b);
bool centre_underneath(const BoundingBox& a, const BoundingBox& b);

// Boolean features of `frame`. Offsets come from `prev` (the preceding
// annotated frame); without it every Move feature is false.
FrameRelations binary_relations(const FrameAnnotation& frame, const FrameAnnotation* prev,
                                const RelationThresholds& thresholds = {});

// All features of the frame with the given index.
FrameRelations frame_relations(const VideoTrack& track, std::int64_t frame_index,
                               const RelationThresholds& thresholds = {});
FrameRelations frame_relations_at(const VideoTrack& track, std::size_t position,
                                  const RelationThresholds& thresholds = {});

}  // namespace relact
