#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace relact {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend bool operator==(Vec2, Vec2) = default;

  double norm() const { return std::hypot(x, y); }
};

// Axis-aligned box in image pixels; (x, y) is the top-left corner and y grows
// downward.
struct BoundingBox {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  double left() const { return x; }
  double right() const { return x + w; }
  double top() const { return y; }
  double bottom() const { return y + h; }
  Vec2 centre() const { return {x + 0.5 * w, y + 0.5 * h}; }

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

// Annotated roles. Object order can be swapped during phase assignment, so
// code refers to roles rather than to particular physical objects.
enum class Entity : std::uint8_t { object1 = 0, object2 = 1, hand = 2 };

inline constexpr std::size_t kEntityCount = 3;
inline constexpr std::array<Entity, kEntityCount> kEntities = {
    Entity::object1, Entity::object2, Entity::hand};

constexpr std::size_t index_of(Entity e) { return static_cast<std::size_t>(e); }

std::string_view entity_name(Entity e);
std::optional<Entity> entity_from_name(std::string_view name);

struct FrameAnnotation {
  std::int64_t frame_index = 0;
  std::array<std::optional<BoundingBox>, kEntityCount> boxes;

  const std::optional<BoundingBox>& box(Entity e) const { return boxes[index_of(e)]; }
  std::optional<BoundingBox>& box(Entity e) { return boxes[index_of(e)]; }
  bool present(Entity e) const { return boxes[index_of(e)].has_value(); }

  friend bool operator==(const FrameAnnotation&, const FrameAnnotation&) = default;
};

struct VideoTrack {
  std::string video_id;
  std::vector<FrameAnnotation> frames;
  std::optional<std::string> label;
  double frame_width = 0.0;
  double frame_height = 0.0;

  std::size_t size() const { return frames.size(); }

  // Position of frame_index within `frames`, if annotated.
  std::optional<std::size_t> position_of(std::int64_t frame_index) const;

  friend bool operator==(const VideoTrack&, const VideoTrack&) = default;
};

// Copy of `track` with the object1 and object2 roles exchanged in every frame.
VideoTrack swap_objects(const VideoTrack& track);

// Throws ValidationError when a box or the track breaks its invariants.
void validate_box(const BoundingBox& box, const std::string& video_id, std::int64_t frame_index);
void validate_track(const VideoTrack& track);

}  // namespace relact
