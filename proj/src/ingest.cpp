#include "relact/ingest.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "relact/error.hpp"

namespace relact {

using nlohmann::json;

std::string_view entity_name(Entity e) {
  switch (e) {
    case Entity::object1: return "object1";
    case Entity::object2: return "object2";
    case Entity::hand: return "hand";
  }
  return "?";
}

std::optional<Entity> entity_from_name(std::string_view name) {
  for (Entity e : kEntities) {
    if (entity_name(e) == name) return e;
  }
  return std::nullopt;
}

std::optional<std::size_t> VideoTrack::position_of(std::int64_t frame_index) const {
  auto it = std::lower_bound(frames.begin(), frames.end(), frame_index,
                             [](const FrameAnnotation& f, std::int64_t idx) { return f.frame_index < idx; });
  if (it == frames.end() || it->frame_index != frame_index) return std::nullopt;
  return static_cast<std::size_t>(it - frames.begin());
}

VideoTrack swap_objects(const VideoTrack& track) {
  VideoTrack out = track;
  for (auto& frame : out.frames) {
    std::swap(frame.box(Entity::object1), frame.box(Entity::object2));
  }
  return out;
}

void validate_box(const BoundingBox& box, const std::string& video_id, std::int64_t frame_index) {
  const auto where = [&] { return "video '" + video_id + "' frame " + std::to_string(frame_index); };
  for (double v : {box.x, box.y, box.w, box.h}) {
    if (!std::isfinite(v)) throw ValidationError(where() + ": non-finite box coordinate");
  }
  if (box.w < 0.0 || box.h < 0.0) {
    throw ValidationError(where() + ": negative box extent (w=" + std::to_string(box.w) +
                          ", h=" + std::to_string(box.h) + ")");
  }
}

void validate_track(const VideoTrack& track) {
  if (track.frames.empty()) throw ValidationError("video '" + track.video_id + "' has no frames");
  for (std::size_t i = 0; i < track.frames.size(); ++i) {
    const auto& f = track.frames[i];
    if (f.frame_index < 0) {
      throw ValidationError("video '" + track.video_id + "' has negative frame index " +
                            std::to_string(f.frame_index));
    }
    if (i > 0 && track.frames[i - 1].frame_index >= f.frame_index) {
      throw ValidationError("video '" + track.video_id + "' frames not strictly ascending at frame " +
                            std::to_string(f.frame_index));
    }
    for (const auto& b : f.boxes) {
      if (b) validate_box(*b, track.video_id, f.frame_index);
    }
  }
}

namespace {

double number_field(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_number()) {
    throw ParseError(where + ": missing or non-numeric field '" + key + "'");
  }
  return it->get<double>();
}

FrameAnnotation frame_from_json(const json& rec, const std::string& video_id) {
  if (!rec.is_object()) throw ParseError("video '" + video_id + "': frame record is not an object");
  auto idx_it = rec.find("idx");
  if (idx_it == rec.end() || !idx_it->is_number_integer()) {
    throw ParseError("video '" + video_id + "': frame record without integer 'idx'");
  }
  FrameAnnotation frame;
  frame.frame_index = idx_it->get<std::int64_t>();
  const std::string where = "video '" + video_id + "' frame " + std::to_string(frame.frame_index);

  auto boxes_it = rec.find("boxes");
  if (boxes_it == rec.end()) return frame;
  if (!boxes_it->is_array()) throw ParseError(where + ": 'boxes' is not an array");
  for (const auto& b : *boxes_it) {
    if (!b.is_object()) throw ParseError(where + ": box record is not an object");
    auto role_it = b.find("role");
    if (role_it == b.end() || !role_it->is_string()) throw ParseError(where + ": box without 'role'");
    const auto role_name = role_it->get<std::string>();
    auto role = entity_from_name(role_name);
    if (!role) {
      throw ParseError(where + ": unknown role '" + role_name + "' (expected object1, object2 or hand)");
    }
    if (frame.present(*role)) throw ParseError(where + ": duplicate role '" + role_name + "'");
    BoundingBox box{number_field(b, "x", where), number_field(b, "y", where), number_field(b, "w", where),
                    number_field(b, "h", where)};
    validate_box(box, video_id, frame.frame_index);
    frame.box(*role) = box;
  }
  return frame;
}

}  // namespace

VideoTrack track_from_json(const json& record) {
  if (!record.is_object()) throw ParseError("video record is not an object");
  auto id_it = record.find("id");
  if (id_it == record.end() || !id_it->is_string()) throw ParseError("video record without string 'id'");

  VideoTrack track;
  track.video_id = id_it->get<std::string>();
  const std::string where = "video '" + track.video_id + "'";
  track.frame_width = number_field(record, "width", where);
  track.frame_height = number_field(record, "height", where);
  if (auto it = record.find("label"); it != record.end() && !it->is_null()) {
    if (!it->is_string()) throw ParseError(where + ": 'label' is not a string");
    track.label = it->get<std::string>();
  }
  auto frames_it = record.find("frames");
  if (frames_it == record.end() || !frames_it->is_array()) throw ParseError(where + ": missing 'frames' array");
  track.frames.reserve(frames_it->size());
  for (const auto& f : *frames_it) track.frames.push_back(frame_from_json(f, track.video_id));

  std::stable_sort(track.frames.begin(), track.frames.end(),
                   [](const auto& a, const auto& b) { return a.frame_index < b.frame_index; });
  for (std::size_t i = 1; i < track.frames.size(); ++i) {
    if (track.frames[i].frame_index == track.frames[i - 1].frame_index) {
      throw ParseError(where + " frame " + std::to_string(track.frames[i].frame_index) + ": duplicate frame index");
    }
  }
  validate_track(track);
  return track;
}

json track_to_json(const VideoTrack& track) {
  json frames = json::array();
  for (const auto& f : track.frames) {
    json boxes = json::array();
    for (Entity e : kEntities) {
      if (const auto& b = f.box(e)) {
        boxes.push_back({{"role", entity_name(e)}, {"x", b->x}, {"y", b->y}, {"w", b->w}, {"h", b->h}});
      }
    }
    frames.push_back({{"idx", f.frame_index}, {"boxes", std::move(boxes)}});
  }
  json rec = {{"id", track.video_id}, {"width", track.frame_width}, {"height", track.frame_height}};
  if (track.label) rec["label"] = *track.label;
  rec["frames"] = std::move(frames);
  return rec;
}

std::vector<VideoTrack> tracks_from_json(const json& doc) {
  if (!doc.is_array()) throw ParseError("annotation document must be a JSON array of video records");
  std::vector<VideoTrack> tracks;
  tracks.reserve(doc.size());
  for (const auto& rec : doc) tracks.push_back(track_from_json(rec));
  return tracks;
}

std::vector<VideoTrack> parse_annotations_text(std::string_view text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  json doc;
  if (text[first] == '[') {
    try {
      doc = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ParseError(std::string("annotation document is not valid JSON: ") + e.what());
    }
    return tracks_from_json(doc);
  }
  // one video record per line
  std::vector<VideoTrack> tracks;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const auto line = text.substr(pos, end - pos);
    ++line_no;
    pos = end + 1;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    try {
      doc = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError("annotation line " + std::to_string(line_no) + " is not valid JSON: " + e.what());
    }
    tracks.push_back(track_from_json(doc));
  }
  return tracks;
}

std::vector<VideoTrack> parse_annotations(const std::filesystem::path& path) {
  return parse_annotations_text(read_text_file(path));
}

std::string serialize_annotations(const std::vector<VideoTrack>& tracks) {
  if (tracks.empty()) return "[]\n";
  std::string out = "[\n";
  for (std::size_t i = 0; i < tracks.size(); ++i) {
    out += track_to_json(tracks[i]).dump();
    out += i + 1 < tracks.size() ? ",\n" : "\n";
  }
  out += "]\n";
  return out;
}

void write_annotations(const std::filesystem::path& path, const std::vector<VideoTrack>& tracks) {
  write_text_file(path, serialize_annotations(tracks));
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
}

}  // namespace relact
