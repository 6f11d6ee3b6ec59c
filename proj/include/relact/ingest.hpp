#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "relact/geometry.hpp"

namespace relact {

// Annotation documents are JSON: a top-level array of video records
//
//   {"id": str, "width": num, "height": num, "label": str (optional),
//    "frames": [{"idx": int, "boxes": [{"role": "object1"|"object2"|"hand",
//                                       "x": num, "y": num, "w": num, "h": num}]}]}
//
// Serialized documents hold one record per line, so a file can also be read
// as JSON Lines (one bare record per line, no enclosing array). Frames may
// appear in any order; parsed tracks are sorted by idx.

std::vector<VideoTrack> parse_annotations(const std::filesystem::path& path);
std::vector<VideoTrack> parse_annotations_text(std::string_view text);
std::vector<VideoTrack> tracks_from_json(const nlohmann::json& doc);

VideoTrack track_from_json(const nlohmann::json& record);
nlohmann::json track_to_json(const VideoTrack& track);

// Compact, deterministic serialization; parse(serialize(t)) == t.
std::string serialize_annotations(const std::vector<VideoTrack>& tracks);
void write_annotations(const std::filesystem::path& path, const std::vector<VideoTrack>& tracks);

// Reads a whole file or throws ParseError naming the path.
std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace relact
