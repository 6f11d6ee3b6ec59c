#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "relact/action_model.hpp"
#include "relact/geometry.hpp"

namespace relact {

inline constexpr double kDefaultSigma = 2.0;
inline constexpr int kDefaultWindowHalfWidth = 3;
// Frames removed on each side of the best b before searching for the second best.
inline constexpr std::size_t kSecondBestExclusion = 3;

using PhaseRows = std::array<std::vector<double>, kPhaseCount>;

enum class ObjectOrder : std::uint8_t { as_annotated, swapped };
enum class BChoice : std::uint8_t { best, second_best };

std::string_view object_order_name(ObjectOrder o);
std::string_view b_choice_name(BChoice b);

struct PhaseScoreMatrix {
  std::string action_id;
  ObjectOrder object_order = ObjectOrder::as_annotated;
  double sigma = kDefaultSigma;
  PhaseRows raw;       // phase x frame position
  PhaseRows smoothed;

  std::size_t frames() const { return raw[0].size(); }
};

// Inclusive range of frame positions.
struct FrameWindow {
  std::size_t first = 0;
  std::size_t last = 0;

  std::size_t length() const { return last - first + 1; }
  bool contains(std::size_t pos) const { return pos >= first && pos <= last; }
  friend bool operator==(const FrameWindow&, const FrameWindow&) = default;
};

// Centers and windows are frame positions within the track (equal to frame
// indices for tracks annotated densely from 0).
struct PhaseAssignment {
  std::string action_id;
  std::array<std::optional<std::size_t>, kPhaseCount> centers{};
  std::array<std::optional<FrameWindow>, kPhaseCount> windows{};
  double total_score = 0.0;
  BChoice b_choice = BChoice::best;
  ObjectOrder object_order = ObjectOrder::as_annotated;

  const std::optional<std::size_t>& center(Phase p) const { return centers[index_of(p)]; }
  const std::optional<FrameWindow>& window(Phase p) const { return windows[index_of(p)]; }
  bool fully_assigned() const;
  bool degenerate() const { return !fully_assigned(); }
};

// Unnormalised Gaussian weights for offsets -R..R, R = ceil(3 sigma).
std::vector<double> gaussian_kernel(double sigma);

// Convolution with the truncated Gaussian; at the series boundaries the
// kernel is renormalised over the samples that exist. Throws ContractError
// for sigma <= 0.
std::vector<double> smooth(std::span<const double> series, double sigma);

// Raw and smoothed phase scores for every frame. With ObjectOrder::swapped
// the object1 and object2 roles are exchanged before features are computed.
PhaseScoreMatrix score_frames(const VideoTrack& track, const ActionModel& model, ObjectOrder order,
                              double sigma = kDefaultSigma);

// Greedy assignment in the order b, a, d, c, e: b at the global maximum of
// its row, a before b, d after b, c strictly between b and d, e after d.
// Phases with an empty admissible range stay unassigned. total_score sums
// rows[p][center] over assigned phases.
PhaseAssignment assign_phases(const PhaseRows& rows, int n = kDefaultWindowHalfWidth);
PhaseAssignment assign_phases_with_b(const PhaseRows& rows, std::size_t f_b, int n = kDefaultWindowHalfWidth);

// Windows of center +- n, clipped to the video and stopped at the midpoint
// between neighbouring assigned centers.
std::array<std::optional<FrameWindow>, kPhaseCount> phase_windows(
    const std::array<std::optional<std::size_t>, kPhaseCount>& centers, std::size_t frames, int n);

// Best b with kSecondBestExclusion frames on each side of the best removed.
// nullopt for series of length <= 7 or when nothing remains.
std::optional<std::size_t> second_best_b(std::span<const double> b_row);
std::optional<std::size_t> second_best_b(const PhaseRows& rows);

// Each row shifted to mean 0 and scaled to unit standard deviation over the
// video; constant rows become all zero.
PhaseRows standardize(const PhaseRows& rows);

// Evaluates {best b, second-best b} x {as annotated, swapped} on the given
// rows and returns the highest total; ties keep the earlier alternative in
// that order.
PhaseAssignment choose_alternative(const PhaseRows& as_annotated, const PhaseRows& swapped,
                                   int n = kDefaultWindowHalfWidth);

struct BestAssignment {
  PhaseAssignment assignment;
  PhaseScoreMatrix matrix;  // scores for the winning object order
};

// Scores the track in both object orders, smooths, standardizes each row and
// picks the best of the four alternatives.
BestAssignment best_assignment(const VideoTrack& track, const ActionModel& model,
                               int n = kDefaultWindowHalfWidth, double sigma = kDefaultSigma);

}  // namespace relact
