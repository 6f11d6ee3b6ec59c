#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "relact/action_model.hpp"
#include "relact/geometry.hpp"

namespace relact {

// Scripted manipulation archetypes. Every script follows the same five
// segments: setup (a), hand approach (b), hold (c), hand departure (d) and
// result (e). The hand always enters from the left edge.
//
//   put-into             hand carries O1 in and leaves it inside O2
//   take-out-of          O1 starts inside O2; the hand fetches it and both leave
//   put-next-to          hand carries O1 in and leaves it touching O2's left side
//   pretend-put-next-to  hand carries O1 near O2 without touching, then sets it
//                        down at a rest position on the entry side
//   put-behind           hand carries O1 in and leaves it partly hidden behind
//                        O2 (centre above O2's centre, overlapping its top)
enum class Archetype : std::uint8_t { put_into, take_out_of, put_next_to, pretend_put_next_to, put_behind };
inline constexpr std::array<Archetype, 5> kArchetypes = {Archetype::put_into, Archetype::take_out_of,
                                                         Archetype::put_next_to, Archetype::pretend_put_next_to,
                                                         Archetype::put_behind};

std::string_view archetype_name(Archetype a);
std::optional<Archetype> archetype_from_name(std::string_view name);

struct NoiseParams {
  double jitter_sigma = 0.0;   // px, independent Gaussian jitter on every box corner
  double copy_lag_prob = 0.0;  // per frame: box copied from the previous frame, snapped on the next
  std::uint64_t seed = 0;      // also drives the scene layout

  void validate() const;
  friend bool operator==(const NoiseParams&, const NoiseParams&) = default;
};

// "none" (0 px, 0), "moderate" (1.5 px, 0.1) and "paper-artifacts" (3 px, 0.3).
NoiseParams noise_preset(std::string_view name, std::uint64_t seed = 0);

using PhaseCenters = std::array<std::size_t, kPhaseCount>;

// Segment boundaries derived from phase centers: the setup segment is
// [0, 2 f_a + 1), and the approach, hold and departure segments are each
// centred on f_b, f_c and f_d. The result segment runs to the end and must
// contain f_e.
struct SyntheticScript {
  Archetype archetype = Archetype::put_into;
  std::size_t num_frames = 60;
  PhaseCenters true_phase_centers{};
  NoiseParams noise;

  // Throws ValidationError unless the centers are strictly increasing, inside
  // the video and yield non-empty segments (approach and departure >= 3 frames).
  void validate() const;
  friend bool operator==(const SyntheticScript&, const SyntheticScript&) = default;
};

struct SyntheticSegments {
  std::size_t approach_begin = 0;  // end of setup
  std::size_t hold_begin = 0;
  std::size_t depart_begin = 0;
  std::size_t result_begin = 0;
};
SyntheticSegments script_segments(const SyntheticScript& script);

struct SyntheticVideo {
  VideoTrack track;
  PhaseCenters ground_truth{};
};

// Deterministic in the script. The track is labelled with the archetype name
// and annotated densely (frame index == position).
SyntheticVideo generate_synthetic(const SyntheticScript& script, std::string video_id = {});

// Random script with realistic segment lengths; needs num_frames >= 30.
SyntheticScript sample_script(Archetype archetype, std::size_t num_frames, const NoiseParams& noise);

// Geometric postconditions of the archetype on a zero-noise track, evaluated
// at the scripted phase centers. Returns one message per violated condition.
std::vector<std::string> check_postconditions(const VideoTrack& track, const SyntheticScript& script);

// Labelled dataset: `count` videos per archetype, each with its own script
// sampled from a per-video seed derived from `seed`. Video ids are
// "<archetype>-<seed>-<i>".
struct DatasetSpec {
  std::vector<Archetype> archetypes{kArchetypes.begin(), kArchetypes.end()};
  std::size_t count = 100;
  std::size_t num_frames = 60;
  double jitter_sigma = 0.0;
  double copy_lag_prob = 0.0;
  std::uint64_t seed = 1;
};

struct DatasetVideo {
  SyntheticScript script;
  SyntheticVideo video;
};

std::uint64_t video_seed(std::uint64_t seed, Archetype archetype, std::size_t i);
std::vector<DatasetVideo> generate_dataset(const DatasetSpec& spec);

nlohmann::json script_to_json(const SyntheticScript& script);
SyntheticScript script_from_json(const nlohmann::json& doc);

}  // namespace relact
