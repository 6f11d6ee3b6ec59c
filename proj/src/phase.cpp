#include "relact/phase.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "relact/error.hpp"
#include "relact/relations.hpp"

namespace relact {

std::string_view object_order_name(ObjectOrder o) {
  return o == ObjectOrder::swapped ? "swapped" : "as_annotated";
}

std::string_view b_choice_name(BChoice b) { return b == BChoice::second_best ? "second_best" : "best"; }

bool PhaseAssignment::fully_assigned() const {
  return std::all_of(centers.begin(), centers.end(), [](const auto& c) { return c.has_value(); });
}

std::vector<double> gaussian_kernel(double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ContractError("smoothing sigma must be positive");
  const auto radius = static_cast<std::ptrdiff_t>(std::ceil(3.0 * sigma));
  std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
  for (std::ptrdiff_t k = -radius; k <= radius; ++k) {
    const double x = static_cast<double>(k) / sigma;
    kernel[static_cast<std::size_t>(k + radius)] = std::exp(-0.5 * x * x);
  }
  return kernel;
}

std::vector<double> smooth(std::span<const double> series, double sigma) {
  const auto kernel = gaussian_kernel(sigma);
  if (series.empty()) return {};
  const auto radius = static_cast<std::ptrdiff_t>(kernel.size() / 2);
  const auto n = static_cast<std::ptrdiff_t>(series.size());
  std::vector<double> out(series.size());
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    double acc = 0.0;
    double norm = 0.0;
    const auto lo = std::max<std::ptrdiff_t>(0, i - radius);
    const auto hi = std::min<std::ptrdiff_t>(n - 1, i + radius);
    for (std::ptrdiff_t j = lo; j <= hi; ++j) {
      const double w = kernel[static_cast<std::size_t>(j - i + radius)];
      acc += w * series[static_cast<std::size_t>(j)];
      norm += w;
    }
    out[static_cast<std::size_t>(i)] = acc / norm;
  }
  return out;
}

PhaseScoreMatrix score_frames(const VideoTrack& track, const ActionModel& model, ObjectOrder order, double sigma) {
  if (track.frames.empty()) throw ContractError("video '" + track.video_id + "' has no frames");
  const VideoTrack& source = track;
  VideoTrack swapped;
  if (order == ObjectOrder::swapped) swapped = swap_objects(track);
  const VideoTrack& t = order == ObjectOrder::swapped ? swapped : source;

  PhaseScoreMatrix m;
  m.action_id = model.action_id;
  m.object_order = order;
  m.sigma = sigma;
  for (auto& row : m.raw) row.resize(t.frames.size());
  for (std::size_t pos = 0; pos < t.frames.size(); ++pos) {
    const auto rel = frame_relations_at(t, pos, model.thresholds);
    for (Phase p : kPhases) m.raw[index_of(p)][pos] = model.score(p, rel);
  }
  for (Phase p : kPhases) m.smoothed[index_of(p)] = smooth(m.raw[index_of(p)], sigma);
  return m;
}

namespace {

// First position of the maximum over [lo, hi); nullopt when empty.
std::optional<std::size_t> argmax_in(const std::vector<double>& row, std::size_t lo, std::size_t hi) {
  hi = std::min(hi, row.size());
  if (lo >= hi) return std::nullopt;
  std::size_t best = lo;
  for (std::size_t i = lo + 1; i < hi; ++i) {
    if (row[i] > row[best]) best = i;
  }
  return best;
}

void check_rows(const PhaseRows& rows) {
  for (const auto& r : rows) {
    if (r.size() != rows[0].size()) throw ContractError("phase score rows differ in length");
  }
}

}  // namespace

std::array<std::optional<FrameWindow>, kPhaseCount> phase_windows(
    const std::array<std::optional<std::size_t>, kPhaseCount>& centers, std::size_t frames, int n) {
  if (n < 0) throw ContractError("window half-width must be non-negative");
  std::array<std::optional<FrameWindow>, kPhaseCount> windows{};
  const auto half = static_cast<std::size_t>(n);
  for (std::size_t i = 0; i < kPhaseCount; ++i) {
    if (!centers[i]) continue;
    const std::size_t c = *centers[i];
    std::size_t lo = c >= half ? c - half : 0;
    std::size_t hi = std::min(frames - 1, c + half);
    for (std::size_t j = i; j-- > 0;) {
      if (centers[j]) {
        lo = std::max(lo, (*centers[j] + c) / 2 + 1);
        break;
      }
    }
    for (std::size_t j = i + 1; j < kPhaseCount; ++j) {
      if (centers[j]) {
        hi = std::min(hi, (c + *centers[j] - 1) / 2);
        break;
      }
    }
    windows[i] = FrameWindow{lo, hi};
  }
  return windows;
}

PhaseAssignment assign_phases_with_b(const PhaseRows& rows, std::size_t f_b, int n) {
  check_rows(rows);
  const std::size_t frames = rows[0].size();
  if (f_b >= frames) throw ContractError("phase b center outside the video");
  const auto row = [&](Phase p) -> const std::vector<double>& { return rows[index_of(p)]; };

  PhaseAssignment out;
  auto& c = out.centers;
  c[index_of(Phase::b)] = f_b;
  c[index_of(Phase::a)] = argmax_in(row(Phase::a), 0, f_b);
  const auto f_d = argmax_in(row(Phase::d), f_b + 1, frames);
  c[index_of(Phase::d)] = f_d;
  c[index_of(Phase::c)] = argmax_in(row(Phase::c), f_b + 1, f_d.value_or(frames));
  c[index_of(Phase::e)] = argmax_in(row(Phase::e), f_d.value_or(f_b) + 1, frames);

  for (Phase p : kPhases) {
    if (c[index_of(p)]) out.total_score += row(p)[*c[index_of(p)]];
  }
  out.windows = phase_windows(c, frames, n);
  return out;
}

PhaseAssignment assign_phases(const PhaseRows& rows, int n) {
  check_rows(rows);
  const auto& b_row = rows[index_of(Phase::b)];
  if (b_row.empty()) {
    PhaseAssignment empty;
    return empty;
  }
  return assign_phases_with_b(rows, *argmax_in(b_row, 0, b_row.size()), n);
}

std::optional<std::size_t> second_best_b(std::span<const double> b_row) {
  if (b_row.size() <= 2 * kSecondBestExclusion + 1) return std::nullopt;
  std::size_t best = 0;
  for (std::size_t i = 1; i < b_row.size(); ++i) {
    if (b_row[i] > b_row[best]) best = i;
  }
  const std::size_t lo = best >= kSecondBestExclusion ? best - kSecondBestExclusion : 0;
  const std::size_t hi = best + kSecondBestExclusion;
  std::optional<std::size_t> second;
  for (std::size_t i = 0; i < b_row.size(); ++i) {
    if (i >= lo && i <= hi) continue;
    if (!second || b_row[i] > b_row[*second]) second = i;
  }
  return second;
}

std::optional<std::size_t> second_best_b(const PhaseRows& rows) { return second_best_b(rows[index_of(Phase::b)]); }

PhaseRows standardize(const PhaseRows& rows) {
  PhaseRows out;
  for (std::size_t p = 0; p < kPhaseCount; ++p) {
    const auto& r = rows[p];
    out[p].assign(r.size(), 0.0);
    if (r.empty()) continue;
    const double mean = std::accumulate(r.begin(), r.end(), 0.0) / static_cast<double>(r.size());
    double var = 0.0;
    double scale = 0.0;
    for (double v : r) {
      var += (v - mean) * (v - mean);
      scale = std::max(scale, std::abs(v));
    }
    const double sd = std::sqrt(var / static_cast<double>(r.size()));
    if (sd <= 1e-9 * std::max(1.0, scale)) continue;
    for (std::size_t i = 0; i < r.size(); ++i) out[p][i] = (r[i] - mean) / sd;
  }
  return out;
}

PhaseAssignment choose_alternative(const PhaseRows& as_annotated, const PhaseRows& swapped, int n) {
  std::optional<PhaseAssignment> winner;
  const auto consider = [&](const PhaseRows& rows, ObjectOrder order, BChoice choice) {
    if (rows[0].empty()) return;
    std::optional<PhaseAssignment> cand;
    if (choice == BChoice::best) {
      cand = assign_phases(rows, n);
    } else if (auto sb = second_best_b(rows)) {
      cand = assign_phases_with_b(rows, *sb, n);
    }
    if (!cand) return;
    cand->object_order = order;
    cand->b_choice = choice;
    if (!winner || cand->total_score > winner->total_score) winner = std::move(cand);
  };
  consider(as_annotated, ObjectOrder::as_annotated, BChoice::best);
  consider(swapped, ObjectOrder::swapped, BChoice::best);
  consider(as_annotated, ObjectOrder::as_annotated, BChoice::second_best);
  consider(swapped, ObjectOrder::swapped, BChoice::second_best);
  if (!winner) throw ContractError("cannot assign phases to an empty score matrix");
  return *winner;
}

BestAssignment best_assignment(const VideoTrack& track, const ActionModel& model, int n, double sigma) {
  auto as_annotated = score_frames(track, model, ObjectOrder::as_annotated, sigma);
  auto swapped = score_frames(track, model, ObjectOrder::swapped, sigma);
  auto assignment = choose_alternative(standardize(as_annotated.smoothed), standardize(swapped.smoothed), n);
  assignment.action_id = model.action_id;
  if (assignment.object_order == ObjectOrder::swapped) return {std::move(assignment), std::move(swapped)};
  return {std::move(assignment), std::move(as_annotated)};
}

}  // namespace relact
