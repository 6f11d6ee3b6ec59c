#include "relact/relations.hpp"

#include <algorithm>
#include <cmath>

#include "relact/error.hpp"

namespace relact {

RelationThresholds thresholds_from_json(const nlohmann::json& doc, RelationThresholds base) {
  if (!doc.is_object()) throw ConfigError("threshold configuration must be a JSON object");
  const auto read = [&](const char* key, double& field) {
    if (auto it = doc.find(key); it != doc.end()) {
      if (!it->is_number()) throw ConfigError(std::string("threshold '") + key + "' must be a number");
      field = it->get<double>();
    }
  };
  read("touch_tol", base.touch_tol);
  read("containment_fraction", base.containment_fraction);
  read("move_threshold", base.move_threshold);
  read("move_with_hand_tol", base.move_with_hand_tol);
  for (const auto& [key, _] : doc.items()) {
    if (key != "touch_tol" && key != "containment_fraction" && key != "move_threshold" &&
        key != "move_with_hand_tol") {
      throw ConfigError("unknown threshold key '" + key + "'");
    }
  }
  if (base.touch_tol < 0 || base.move_threshold < 0 || base.move_with_hand_tol < 0 ||
      base.containment_fraction <= 0 || base.containment_fraction > 1) {
    throw ConfigError("threshold out of range");
  }
  return base;
}

nlohmann::json thresholds_to_json(const RelationThresholds& t) {
  return {{"touch_tol", t.touch_tol},
          {"containment_fraction", t.containment_fraction},
          {"move_threshold", t.move_threshold},
          {"move_with_hand_tol", t.move_with_hand_tol}};
}

double size(const BoundingBox& b) { return b.w * b.h; }

namespace {

double axis_overlap(double lo1, double hi1, double lo2, double hi2) {
  return std::max(0.0, std::min(hi1, hi2) - std::max(lo1, lo2));
}

double axis_gap(double lo1, double hi1, double lo2, double hi2) {
  return std::max(0.0, std::max(lo1, lo2) - std::min(hi1, hi2));
}

}  // namespace

double overlap_area(const BoundingBox& a, const BoundingBox& b) {
  return axis_overlap(a.left(), a.right(), b.left(), b.right()) *
         axis_overlap(a.top(), a.bottom(), b.top(), b.bottom());
}

double overlap_normalised(const BoundingBox& a, const BoundingBox& b) {
  const double smaller = std::min(size(a), size(b));
  if (smaller <= 0.0) return 0.0;
  return overlap_area(a, b) / (kOverlapAreaFactor * smaller);
}

Vec2 offset_at(const VideoTrack& track, Entity entity, std::size_t position) {
  if (position >= track.frames.size()) {
    throw ContractError("video '" + track.video_id + "': frame position out of range");
  }
  const auto& cur = track.frames[position].box(entity);
  if (!cur) {
    throw ContractError("video '" + track.video_id + "' frame " +
                        std::to_string(track.frames[position].frame_index) + ": " +
                        std::string(entity_name(entity)) + " is absent");
  }
  if (position == 0) return {};
  const auto& prev = track.frames[position - 1].box(entity);
  if (!prev) return {};
  return cur->centre() - prev->centre();
}

Vec2 offset(const VideoTrack& track, Entity entity, std::int64_t frame_index) {
  auto pos = track.position_of(frame_index);
  if (!pos) {
    throw ContractError("video '" + track.video_id + "' has no frame " + std::to_string(frame_index));
  }
  return offset_at(track, entity, *pos);
}

double offset_dist(Vec2 a, Vec2 b) { return (a - b).norm(); }

OffsetAngle offset_angle(Vec2 a, Vec2 b, double move_threshold) {
  if (a.norm() <= move_threshold || b.norm() <= move_threshold) return {0.0, true};
  const double cross = a.x * b.y - a.y * b.x;
  const double dot = a.x * b.x + a.y * b.y;
  return {std::atan2(std::abs(cross), dot), false};
}

double centre_dist(const BoundingBox& a, const BoundingBox& b) { return (a.centre() - b.centre()).norm(); }

bool touching(const BoundingBox& a, const BoundingBox& b, double tol) {
  const double dx = axis_gap(a.left(), a.right(), b.left(), b.right());
  const double dy = axis_gap(a.top(), a.bottom(), b.top(), b.bottom());
  return std::hypot(dx, dy) <= tol;
}

bool contained(const BoundingBox& a, const BoundingBox& b, double fraction) {
  const double area = size(a);
  if (area <= 0.0) {
    const Vec2 c = a.centre();
    return c.x >= b.left() && c.x <= b.right() && c.y >= b.top() && c.y <= b.bottom();
  }
  return overlap_area(a, b) / area >= fraction;
}

bool centre_on_top(const BoundingBox& a, const BoundingBox& b) {
  const Vec2 c = a.centre();
  return c.x >= b.left() && c.x <= b.right() && c.y < b.centre().y;
}

bool centre_underneath(const BoundingBox& a, const BoundingBox& b) {
  const Vec2 c = a.centre();
  return c.x >= b.left() && c.x <= b.right() && c.y > b.centre().y;
}

FrameRelations binary_relations(const FrameAnnotation& frame, const FrameAnnotation* prev,
                                const RelationThresholds& t) {
  FrameRelations r;
  for (Entity e : kEntities) {
    const auto i = index_of(e);
    r.present[i] = frame.present(e);
    if (r.present[i] && prev != nullptr && prev->present(e)) {
      r.offset[i] = frame.box(e)->centre() - prev->box(e)->centre();
    }
    r.moving[i] = r.present[i] && r.offset[i].norm() > t.move_threshold;
  }

  for (Entity ea : kEntities) {
    for (Entity eb : kEntities) {
      if (ea == eb || !frame.present(ea) || !frame.present(eb)) continue;
      const auto ia = index_of(ea);
      const auto ib = index_of(eb);
      const auto& a = *frame.box(ea);
      const auto& b = *frame.box(eb);
      r.touching[ia][ib] = touching(a, b, t.touch_tol);
      r.contained[ia][ib] = contained(a, b, t.containment_fraction);
      r.centre_on_top[ia][ib] = centre_on_top(a, b);
      r.centre_underneath[ia][ib] = centre_underneath(a, b);
      r.object_move_relative[ia][ib] =
          r.moving[ia] && offset_dist(r.offset[ia], r.offset[ib]) > t.move_with_hand_tol;
    }
  }

  const auto h = index_of(Entity::hand);
  for (Entity obj : {Entity::object1, Entity::object2}) {
    const auto o = index_of(obj);
    if (!r.present[o] || !r.present[h]) continue;
    const double dist = offset_dist(r.offset[h], r.offset[o]);
    r.move_with_hand[o] = r.moving[o] && r.moving[h] && r.touching[h][o] && dist <= t.move_with_hand_tol;
    r.hand_move_relative[o] = r.moving[h] && dist > t.move_with_hand_tol;
  }
  return r;
}

FrameRelations frame_relations_at(const VideoTrack& track, std::size_t position, const RelationThresholds& t) {
  if (position >= track.frames.size()) {
    throw ContractError("video '" + track.video_id + "': frame position out of range");
  }
  const auto& frame = track.frames[position];
  const FrameAnnotation* prev = position > 0 ? &track.frames[position - 1] : nullptr;
  FrameRelations r = binary_relations(frame, prev, t);

  for (Entity e : kEntities) {
    if (frame.present(e)) r.size[index_of(e)] = size(*frame.box(e));
  }
  for (Entity ea : kEntities) {
    for (Entity eb : kEntities) {
      if (ea == eb || !frame.present(ea) || !frame.present(eb)) continue;
      const auto ia = index_of(ea);
      const auto ib = index_of(eb);
      const auto& a = *frame.box(ea);
      const auto& b = *frame.box(eb);
      r.overlap_norm[ia][ib] = overlap_normalised(a, b);
      r.centre_dist[ia][ib] = centre_dist(a, b);
      r.offset_dist[ia][ib] = offset_dist(r.offset[ia], r.offset[ib]);
      r.offset_angle[ia][ib] = offset_angle(r.offset[ia], r.offset[ib], t.move_threshold).radians;
    }
  }
  return r;
}

FrameRelations frame_relations(const VideoTrack& track, std::int64_t frame_index, const RelationThresholds& t) {
  auto pos = track.position_of(frame_index);
  if (!pos) throw ContractError("video '" + track.video_id + "' has no frame " + std::to_string(frame_index));
  return frame_relations_at(track, *pos, t);
}

}  // namespace relact
