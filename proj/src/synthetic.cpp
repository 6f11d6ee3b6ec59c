#include "relact/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "relact/error.hpp"
#include "relact/relations.hpp"

namespace relact {

using nlohmann::json;

namespace {

constexpr double kFrameWidth = 320.0;
constexpr double kFrameHeight = 240.0;

struct ArchetypeInfo {
  Archetype archetype;
  std::string_view name;
};

constexpr std::array<ArchetypeInfo, 5> kArchetypeNames = {{
    {Archetype::put_into, "put-into"},
    {Archetype::take_out_of, "take-out-of"},
    {Archetype::put_next_to, "put-next-to"},
    {Archetype::pretend_put_next_to, "pretend-put-next-to"},
    {Archetype::put_behind, "put-behind"},
}};

std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

std::size_t uniform_index(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

// Minimum-jerk profile: zero velocity and acceleration at both ends, peak
// speed at the midpoint.
double min_jerk(double t) { return t * t * t * (10.0 + t * (-15.0 + 6.0 * t)); }

Vec2 min_jerk_path(Vec2 from, Vec2 to, double t) { return from + min_jerk(t) * (to - from); }

BoundingBox box_at(Vec2 centre, double w, double h) { return {centre.x - 0.5 * w, centre.y - 0.5 * h, w, h}; }

double round2(double v) { return std::round(v * 100.0) / 100.0; }

// Scene geometry drawn once per video from the script seed.
struct Layout {
  BoundingBox o2;
  double o1_w = 0, o1_h = 0;
  double hand_w = 0, hand_h = 0;
  Vec2 grip;    // hand centre minus O1 centre while holding
  Vec2 entry;   // hand centre on entering
  Vec2 exit;    // hand centre on leaving
  Vec2 target;  // O1 centre during the hold
  Vec2 rest;    // O1 resting place on the entry side (pretend-put-next-to)
};

Layout make_layout(Archetype archetype, std::uint64_t seed) {
  std::mt19937_64 rng(mix(seed));
  Layout l;
  const double o2_w = uniform(rng, 80, 100);
  const double o2_h = uniform(rng, 65, 80);
  l.o2 = {uniform(rng, 165, 200), uniform(rng, 100, 130), o2_w, o2_h};
  l.o1_w = uniform(rng, 24, 32);
  l.o1_h = uniform(rng, 24, 32);
  l.hand_w = uniform(rng, 36, 44);
  l.hand_h = uniform(rng, 36, 44);
  l.grip = {uniform(rng, -12, -8), uniform(rng, -24, -20)};
  l.entry = {22, uniform(rng, 50, 90)};
  l.exit = {22, uniform(rng, 40, 70)};
  const Vec2 c2 = l.o2.centre();
  const double ground = l.o2.bottom() - 0.5 * l.o1_h - uniform(rng, 0, 5);
  switch (archetype) {
    case Archetype::put_into:
    case Archetype::take_out_of:
      l.target = {c2.x + uniform(rng, -8, 8), c2.y + uniform(rng, 0, 6)};
      break;
    case Archetype::put_next_to:
      l.target = {l.o2.left() - uniform(rng, 0, 3) - 0.5 * l.o1_w, ground};
      break;
    case Archetype::pretend_put_next_to:
      l.target = {l.o2.left() - uniform(rng, 15, 25) - 0.5 * l.o1_w, ground};
      l.rest = {uniform(rng, 50, 70), uniform(rng, 150, 180)};
      break;
    case Archetype::put_behind: {
      const double overlap = uniform(rng, 0.3, 0.5) * l.o1_h;
      l.target = {c2.x + uniform(rng, -8, 8), l.o2.top() + overlap - 0.5 * l.o1_h};
      break;
    }
  }
  return l;
}

// Noise-free entity centres per frame.
struct Truth {
  std::vector<std::optional<Vec2>> o1;
  std::vector<std::optional<Vec2>> hand;
};

Truth script_truth(const SyntheticScript& s, const Layout& l) {
  const auto seg = script_segments(s);
  const std::size_t n = s.num_frames;
  Truth t{std::vector<std::optional<Vec2>>(n), std::vector<std::optional<Vec2>>(n)};
  const bool carry_in = s.archetype != Archetype::take_out_of;
  const Vec2 hold_hand = l.target + l.grip;

  for (std::size_t f = 0; f < n; ++f) {
    if (f < seg.approach_begin) {
      if (!carry_in) t.o1[f] = l.target;
    } else if (f < seg.hold_begin) {
      const double len = static_cast<double>(seg.hold_begin - seg.approach_begin);
      const double tau = static_cast<double>(f - seg.approach_begin + 1) / len;
      t.hand[f] = min_jerk_path(l.entry, hold_hand, tau);
      t.o1[f] = carry_in ? *t.hand[f] - l.grip : l.target;
    } else if (f < seg.depart_begin) {
      t.hand[f] = hold_hand;
      t.o1[f] = l.target;
    } else if (f < seg.result_begin) {
      const double len = static_cast<double>(seg.result_begin - seg.depart_begin);
      const double tau = static_cast<double>(f - seg.depart_begin + 1) / len;
      switch (s.archetype) {
        case Archetype::pretend_put_next_to:
          t.hand[f] = min_jerk_path(hold_hand, l.rest + l.grip, tau);
          t.o1[f] = *t.hand[f] - l.grip;
          break;
        case Archetype::take_out_of:
          t.hand[f] = min_jerk_path(hold_hand, l.exit, tau);
          t.o1[f] = *t.hand[f] - l.grip;
          break;
        default:
          t.hand[f] = min_jerk_path(hold_hand, l.exit, tau);
          t.o1[f] = l.target;
          break;
      }
    } else {
      if (s.archetype == Archetype::pretend_put_next_to) {
        t.o1[f] = l.rest;
      } else if (carry_in) {
        t.o1[f] = l.target;
      }
    }
  }
  return t;
}

// Emits the observed boxes of one entity: jitter on every corner, and with
// probability copy_lag_prob an exact copy of the previous observed box (never
// twice in a row).
class NoiseModel {
 public:
  explicit NoiseModel(const NoiseParams& p) : params_(p), rng_(mix(p.seed ^ 0x6e6f697365ull)) {}

  std::vector<std::optional<BoundingBox>> observe(const std::vector<std::optional<BoundingBox>>& truth) {
    std::vector<std::optional<BoundingBox>> out(truth.size());
    bool lagged = false;
    std::normal_distribution<double> jitter(0.0, 1.0);
    std::bernoulli_distribution lag(params_.copy_lag_prob);
    for (std::size_t f = 0; f < truth.size(); ++f) {
      if (!truth[f]) {
        lagged = false;
        continue;
      }
      if (params_.copy_lag_prob > 0.0 && f > 0 && out[f - 1] && !lagged && lag(rng_)) {
        out[f] = out[f - 1];
        lagged = true;
        continue;
      }
      lagged = false;
      BoundingBox b = *truth[f];
      if (params_.jitter_sigma > 0.0) {
        const double s = params_.jitter_sigma;
        const double x1 = b.left() + s * jitter(rng_);
        const double y1 = b.top() + s * jitter(rng_);
        const double x2 = b.right() + s * jitter(rng_);
        const double y2 = b.bottom() + s * jitter(rng_);
        b = {x1, y1, std::max(0.0, x2 - x1), std::max(0.0, y2 - y1)};
      }
      out[f] = BoundingBox{round2(b.x), round2(b.y), round2(b.w), round2(b.h)};
    }
    return out;
  }

 private:
  NoiseParams params_;
  std::mt19937_64 rng_;
};

}  // namespace

std::string_view archetype_name(Archetype a) { return kArchetypeNames[static_cast<std::size_t>(a)].name; }

std::optional<Archetype> archetype_from_name(std::string_view name) {
  for (const auto& info : kArchetypeNames) {
    if (info.name == name) return info.archetype;
  }
  return std::nullopt;
}

void NoiseParams::validate() const {
  if (!(jitter_sigma >= 0.0) || !std::isfinite(jitter_sigma)) throw ValidationError("jitter_sigma must be >= 0");
  if (!(copy_lag_prob >= 0.0 && copy_lag_prob <= 1.0)) throw ValidationError("copy_lag_prob must lie in [0, 1]");
}

NoiseParams noise_preset(std::string_view name, std::uint64_t seed) {
  if (name == "none") return {0.0, 0.0, seed};
  if (name == "moderate") return {1.5, 0.1, seed};
  if (name == "paper-artifacts") return {3.0, 0.3, seed};
  throw ValidationError("unknown noise preset '" + std::string(name) + "'");
}

SyntheticSegments script_segments(const SyntheticScript& s) {
  const auto& c = s.true_phase_centers;
  SyntheticSegments seg;
  seg.approach_begin = 2 * c[0] + 1;
  seg.hold_begin = 2 * c[1] + 1 - std::min(seg.approach_begin, 2 * c[1] + 1);
  seg.depart_begin = 2 * c[2] + 1 - std::min(seg.hold_begin, 2 * c[2] + 1);
  seg.result_begin = 2 * c[3] + 1 - std::min(seg.depart_begin, 2 * c[3] + 1);
  return seg;
}

void SyntheticScript::validate() const {
  noise.validate();
  const auto& c = true_phase_centers;
  for (std::size_t i = 0; i < kPhaseCount; ++i) {
    if (c[i] >= num_frames) throw ValidationError("synthetic script: phase center outside the video");
    if (i > 0 && c[i] <= c[i - 1]) throw ValidationError("synthetic script: phase centers must strictly increase");
  }
  const auto seg = script_segments(*this);
  const bool ok = c[1] >= seg.approach_begin + 1 &&     // approach >= 3 frames
                  c[2] >= seg.hold_begin &&             // hold >= 1 frame
                  c[3] >= seg.depart_begin + 1 &&       // departure >= 3 frames
                  seg.result_begin <= c[4] && c[4] < num_frames;
  if (!ok) throw ValidationError("synthetic script: phase centers do not describe consecutive segments");
}

SyntheticVideo generate_synthetic(const SyntheticScript& script, std::string video_id) {
  script.validate();
  const Layout layout = make_layout(script.archetype, script.noise.seed);
  const Truth truth = script_truth(script, layout);
  const std::size_t n = script.num_frames;

  std::array<std::vector<std::optional<BoundingBox>>, kEntityCount> boxes;
  for (auto& v : boxes) v.resize(n);
  for (std::size_t f = 0; f < n; ++f) {
    boxes[index_of(Entity::object2)][f] = layout.o2;
    if (truth.o1[f]) boxes[index_of(Entity::object1)][f] = box_at(*truth.o1[f], layout.o1_w, layout.o1_h);
    if (truth.hand[f]) boxes[index_of(Entity::hand)][f] = box_at(*truth.hand[f], layout.hand_w, layout.hand_h);
  }

  NoiseModel noise(script.noise);
  for (Entity e : kEntities) boxes[index_of(e)] = noise.observe(boxes[index_of(e)]);

  SyntheticVideo out;
  out.ground_truth = script.true_phase_centers;
  out.track.video_id = video_id.empty() ? std::string(archetype_name(script.archetype)) + "-" +
                                              std::to_string(script.noise.seed)
                                        : std::move(video_id);
  out.track.label = std::string(archetype_name(script.archetype));
  out.track.frame_width = kFrameWidth;
  out.track.frame_height = kFrameHeight;
  out.track.frames.resize(n);
  for (std::size_t f = 0; f < n; ++f) {
    out.track.frames[f].frame_index = static_cast<std::int64_t>(f);
    for (Entity e : kEntities) out.track.frames[f].box(e) = boxes[index_of(e)][f];
  }
  return out;
}

SyntheticScript sample_script(Archetype archetype, std::size_t num_frames, const NoiseParams& noise) {
  if (num_frames < 30) throw ValidationError("sample_script needs at least 30 frames");
  noise.validate();
  std::mt19937_64 rng(mix(noise.seed ^ 0x736372697074ull));

  const std::size_t setup = uniform_index(rng, 0, 3) == 0 ? 5 : 3;
  const std::size_t hold = 2 * uniform_index(rng, 2, 4) + 1;  // 5, 7 or 9
  std::size_t result = uniform_index(rng, 3, 5);
  if ((num_frames - setup - hold - result) % 2 == 1) result = result == 4 ? 3 + 2 * uniform_index(rng, 0, 1) : 4;
  const std::size_t moving = num_frames - setup - hold - result;  // approach + departure, both odd
  const std::size_t half = moving / 2;
  std::size_t approach = half % 2 == 1 ? half : half - 1;
  const std::size_t spread = approach > 7 ? std::min<std::size_t>(2, (approach - 7) / 2) : 0;
  approach = approach - 2 * spread + 2 * uniform_index(rng, 0, 2 * spread);
  const std::size_t depart = moving - approach;

  SyntheticScript s;
  s.archetype = archetype;
  s.num_frames = num_frames;
  s.noise = noise;
  auto& c = s.true_phase_centers;
  c[0] = (setup - 1) / 2;
  c[1] = setup + (approach - 1) / 2;
  c[2] = setup + approach + (hold - 1) / 2;
  c[3] = setup + approach + hold + (depart - 1) / 2;
  c[4] = num_frames - 1 - (result - 1) / 2;
  s.validate();
  return s;
}

std::vector<std::string> check_postconditions(const VideoTrack& track, const SyntheticScript& script) {
  std::vector<std::string> fails;
  const auto& c = script.true_phase_centers;
  if (track.frames.size() != script.num_frames) return {"track length differs from the script"};
  const auto rel = [&](std::size_t f) { return frame_relations_at(track, f, {}); };
  const auto expect = [&](bool cond, std::string what) {
    if (!cond) fails.push_back(std::move(what));
  };
  constexpr auto o1 = index_of(Entity::object1);
  constexpr auto o2 = index_of(Entity::object2);
  constexpr auto h = index_of(Entity::hand);

  const auto& first_o2 = track.frames.front().box(Entity::object2);
  for (const auto& f : track.frames) {
    if (f.box(Entity::object2) != first_o2) {
      fails.push_back("object2 moves at frame " + std::to_string(f.frame_index));
      break;
    }
  }

  const auto ra = rel(c[0]), rb = rel(c[1]), rc = rel(c[2]), rd = rel(c[3]), re = rel(c[4]);
  expect(ra.present[o2] && !ra.present[h], "a: object2 present, hand absent");
  expect(re.present[o2] && !re.present[h], "e: object2 present, hand absent");
  expect(rb.present[h] && rb.moving[h], "b: hand present and moving");
  expect(rc.touching[h][o1] && !rc.moving[h], "c: hand holds object1 still");
  expect(rd.present[h] && rd.moving[h], "d: hand present and moving");
  expect(!track.frames.front().present(Entity::hand), "first frame: hand absent");

  switch (script.archetype) {
    case Archetype::put_into:
      expect(!ra.present[o1], "a: object1 not yet in view");
      expect(rb.move_with_hand[o1], "b: object1 carried by the hand");
      expect(rc.contained[o1][o2], "c: object1 inside object2");
      expect(re.present[o1] && re.contained[o1][o2], "e: object1 left inside object2");
      break;
    case Archetype::take_out_of:
      expect(ra.contained[o1][o2], "a: object1 inside object2");
      expect(!rb.touching[h][o1] || !rb.move_with_hand[o1], "b: hand arrives empty");
      expect(rc.contained[o1][o2], "c: object1 still inside object2");
      expect(rd.move_with_hand[o1], "d: object1 carried out");
      expect(!re.present[o1], "e: object1 gone");
      break;
    case Archetype::put_next_to:
      expect(!ra.present[o1], "a: object1 not yet in view");
      expect(rb.move_with_hand[o1], "b: object1 carried by the hand");
      for (const auto* r : {&rc, &re}) {
        expect(r->touching[o1][o2] && r->overlap_norm[o1][o2] == 0.0 && !r->centre_on_top[o1][o2],
               "c/e: object1 beside object2, touching without overlap");
      }
      break;
    case Archetype::pretend_put_next_to: {
      expect(!ra.present[o1], "a: object1 not yet in view");
      expect(rb.move_with_hand[o1], "b: object1 carried by the hand");
      expect(!rc.touching[o1][o2], "c: object1 held short of object2");
      expect(rd.move_with_hand[o1], "d: object1 carried back");
      expect(re.present[o1] && !re.touching[o1][o2], "e: object1 left apart from object2");
      const auto& last = track.frames.back();
      expect(last.present(Entity::object1) && last.present(Entity::object2) &&
                 last.box(Entity::object1)->right() < last.box(Entity::object2)->left(),
             "final frame: object1 rests on the entry side of object2");
      for (const auto& f : track.frames) {
        if (f.present(Entity::object1) && overlap_area(*f.box(Entity::object1), *f.box(Entity::object2)) > 0.0) {
          fails.push_back("object1 overlaps object2 at frame " + std::to_string(f.frame_index));
          break;
        }
      }
      break;
    }
    case Archetype::put_behind:
      expect(!ra.present[o1], "a: object1 not yet in view");
      expect(rb.move_with_hand[o1], "b: object1 carried by the hand");
      for (const auto* r : {&rc, &re}) {
        expect(r->centre_on_top[o1][o2] && r->overlap_norm[o1][o2] > 0.0 && !r->contained[o1][o2],
               "c/e: object1 partly behind object2");
      }
      break;
  }
  return fails;
}

std::uint64_t video_seed(std::uint64_t seed, Archetype archetype, std::size_t i) {
  return mix(mix(seed) ^ (static_cast<std::uint64_t>(archetype) << 48) ^ static_cast<std::uint64_t>(i));
}

std::vector<DatasetVideo> generate_dataset(const DatasetSpec& spec) {
  std::vector<DatasetVideo> out;
  out.reserve(spec.archetypes.size() * spec.count);
  for (Archetype a : spec.archetypes) {
    for (std::size_t i = 0; i < spec.count; ++i) {
      const NoiseParams noise{spec.jitter_sigma, spec.copy_lag_prob, video_seed(spec.seed, a, i)};
      auto script = sample_script(a, spec.num_frames, noise);
      auto video = generate_synthetic(
          script, std::string(archetype_name(a)) + "-" + std::to_string(spec.seed) + "-" + std::to_string(i));
      out.push_back({std::move(script), std::move(video)});
    }
  }
  return out;
}

json script_to_json(const SyntheticScript& s) {
  json centers = json::object();
  for (Phase p : kPhases) centers[std::string(1, phase_name(p))] = s.true_phase_centers[index_of(p)];
  return {{"archetype", archetype_name(s.archetype)},
          {"num_frames", s.num_frames},
          {"true_phase_centers", std::move(centers)},
          {"noise",
           {{"jitter_sigma", s.noise.jitter_sigma},
            {"copy_lag_prob", s.noise.copy_lag_prob},
            {"seed", s.noise.seed}}}};
}

SyntheticScript script_from_json(const json& doc) {
  SyntheticScript s;
  try {
    const auto name = doc.at("archetype").get<std::string>();
    auto a = archetype_from_name(name);
    if (!a) throw ParseError("unknown archetype '" + name + "' in synthetic script");
    s.archetype = *a;
    s.num_frames = doc.at("num_frames").get<std::size_t>();
    const auto& centers = doc.at("true_phase_centers");
    for (Phase p : kPhases) s.true_phase_centers[index_of(p)] = centers.at(std::string(1, phase_name(p))).get<std::size_t>();
    if (auto it = doc.find("noise"); it != doc.end()) {
      s.noise.jitter_sigma = it->value("jitter_sigma", 0.0);
      s.noise.copy_lag_prob = it->value("copy_lag_prob", 0.0);
      s.noise.seed = it->value("seed", std::uint64_t{0});
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("invalid synthetic script: ") + e.what());
  }
  s.validate();
  return s;
}

}  // namespace relact
