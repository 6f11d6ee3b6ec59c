#include <algorithm>
#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "relact/embed.hpp"
#include "relact/error.hpp"
#include "relact/synthetic.hpp"

using namespace relact;

namespace {

std::size_t expected_length(const ActionModel& m) { return 5 * (1 + m.feature_list.size()) * 4 + 5; }

}  // namespace

TEST_SUITE("embed") {

TEST_CASE("summary statistics") {
  const std::vector<double> c(7, 2.5);
  const auto s = summarize(c);
  CHECK(s.mean == 2.5);
  CHECK(s.median == 2.5);
  CHECK(s.max == 2.5);
  CHECK(s.min == 2.5);

  const auto r = summarize(std::vector<double>{3, 1, 7, 5, 2, 6, 4});
  CHECK(r.mean == 4.0);
  CHECK(r.median == 4.0);
  CHECK(r.max == 7.0);
  CHECK(r.min == 1.0);

  CHECK(summarize(std::vector<double>{4, 1, 3, 2}).median == 2.5);
  const auto z = summarize(std::vector<double>{});
  CHECK(z.mean == 0.0);
  CHECK(z.max == 0.0);
}

TEST_CASE("statistics ordering on random inputs") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1e3, 1e3);
  for (int i = 0; i < 1000; ++i) {
    std::vector<double> v(1 + rng() % 15);
    for (auto& x : v) x = u(rng);
    if (rng() % 4 == 0) std::fill(v.begin(), v.end(), v[0]);
    const auto s = summarize(v);
    CHECK(s.min <= s.median);
    CHECK(s.median <= s.max);
    CHECK(s.min <= s.mean);
    CHECK(s.mean <= s.max);
  }
}

TEST_CASE("unassigned phase block") {
  const std::vector<FeatureRef> features{{Feature::Present, Entity::hand, std::nullopt}};
  const auto f = phase_feature({}, {}, features);
  CHECK_FALSE(f.assigned);
  CHECK(f.score.mean == 0.0);
  REQUIRE(f.features.size() == 1);
  CHECK(f.features[0].max == 0.0);
}

TEST_CASE("layout and values") {
  const auto m = testutil::reference_model("put-into");
  const auto layout = embedding_layout(m);
  CHECK(layout.size() == expected_length(m));
  CHECK(layout.names.front() == "a.score.mean");
  CHECK(layout.names[4] == "a.Present(object1).mean");
  CHECK(layout.names.back() == "assigned.e");
  CHECK(embedding_layout(m, EmbeddingMode::scores_only).size() == 5 * 4 + 5);
  CHECK(embedding_layout(m, EmbeddingMode::scores_only).fingerprint != layout.fingerprint);

  std::vector<VideoEmbedding> embeddings;
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    const auto script = sample_script(Archetype::put_into, 60, {0.0, 0.0, seed});
    const auto t = generate_synthetic(script).track;
    const auto best = best_assignment(t, m);
    embeddings.push_back(embed_video(t, best.assignment, best.matrix, m));
  }
  for (const auto& e : embeddings) {
    CHECK(e.values.size() == expected_length(m));
    CHECK(*e.layout == *embeddings[0].layout);
  }
}

TEST_CASE("put-into phase c is fully contained") {
  const auto m = testutil::reference_model("put-into");
  const auto layout = embedding_layout(m);
  const auto at = std::find(layout.names.begin(), layout.names.end(), "c.Contained(object1,object2).mean");
  REQUIRE(at != layout.names.end());
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto script = sample_script(Archetype::put_into, 60, {0.0, 0.0, seed});
    const auto t = generate_synthetic(script).track;
    const auto best = best_assignment(t, m);
    const auto e = embed_video(t, best.assignment, best.matrix, m);
    REQUIRE(best.assignment.object_order == ObjectOrder::as_annotated);
    CHECK(e.values[static_cast<std::size_t>(at - layout.names.begin())] == 1.0);
  }
}

TEST_CASE("frames outside every window do not matter") {
  const auto m = testutil::reference_model("put-next-to");
  const auto script = sample_script(Archetype::put_next_to, 60, {0.0, 0.0, 2});
  const auto t = generate_synthetic(script).track;
  const auto best = best_assignment(t, m);
  const auto base = embed_video(t, best.assignment, best.matrix, m);

  std::vector<bool> inside(t.frames.size(), false);
  for (const auto& w : best.assignment.windows) {
    if (!w) continue;
    for (std::size_t p = w->first; p <= w->last; ++p) inside[p] = true;
  }
  // scramble raw scores and relations outside the windows
  auto matrix = best.matrix;
  std::mt19937_64 rng(1);
  for (auto& row : matrix.raw) {
    for (std::size_t p = 0; p < row.size(); ++p) {
      if (!inside[p]) row[p] = static_cast<double>(rng() % 100);
    }
  }
  auto scrambled = t;
  for (std::size_t p = 0; p < t.frames.size(); ++p) {
    // keep the frame before each window so offsets inside windows are unchanged
    if (inside[p] || (p + 1 < t.frames.size() && inside[p + 1])) continue;
    scrambled.frames[p].boxes = t.frames[t.frames.size() - 1 - p].boxes;
  }
  const auto e = embed_video(scrambled, best.assignment, matrix, m);
  CHECK(e.values == base.values);
}

TEST_CASE("contract errors") {
  const auto m = testutil::reference_model("put-into");
  const auto other = testutil::reference_model("put-behind");
  const auto t = generate_synthetic(sample_script(Archetype::put_into, 40, {0.0, 0.0, 1})).track;
  const auto best = best_assignment(t, m);
  CHECK_THROWS_AS(embed_video(t, best.assignment, best.matrix, other), ContractError);
  auto shorter = t;
  shorter.frames.pop_back();
  CHECK_THROWS_AS(embed_video(shorter, best.assignment, best.matrix, m), ContractError);
}

TEST_CASE("dump record") {
  const auto m = testutil::reference_model("take-out-of");
  const auto t = generate_synthetic(sample_script(Archetype::take_out_of, 40, {0.0, 0.0, 1})).track;
  const auto best = best_assignment(t, m);
  const auto j = embedding_to_json(embed_video(t, best.assignment, best.matrix, m));
  CHECK(j.at("video_id") == t.video_id);
  CHECK(j.at("action_id") == "take-out-of");
  CHECK(j.at("values").size() == expected_length(m));
  CHECK(j.at("assigned_flags").size() == 5);
}

}  // TEST_SUITE
