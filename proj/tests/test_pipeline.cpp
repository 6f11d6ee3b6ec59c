#include <atomic>
#include <set>
#include <stdexcept>

#include "doctest.h"
#include "helpers.hpp"
#include "relact/error.hpp"
#include "relact/pipeline.hpp"
#include "relact/synthetic.hpp"

using namespace relact;

namespace {

std::vector<VideoTrack> dataset(std::size_t count, std::uint64_t seed, std::size_t frames = 40) {
  std::vector<VideoTrack> tracks;
  for (auto& d : generate_dataset({.count = count, .num_frames = frames, .seed = seed})) tracks.push_back(d.video.track);
  return tracks;
}

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("fingerprints") {
  CHECK(fingerprint_hex("") == "cbf29ce484222325");
  CHECK(fingerprint_hex("a") == "af63dc4c8601ec8c");
  PipelineConfig a, b;
  b.threads = 7;
  CHECK(a.fingerprint() == b.fingerprint());
  b.sigma = 1.5;
  CHECK(a.fingerprint() != b.fingerprint());
  PipelineConfig bad;
  bad.sigma = 0.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("parallel_for visits every index once and rethrows") {
  std::vector<std::atomic<int>> hits(500);
  parallel_for(hits.size(), 4, [&](std::size_t i) { hits[i]++; });
  for (const auto& h : hits) CHECK(h.load() == 1);
  CHECK_THROWS_AS(parallel_for(100, 3,
                               [](std::size_t i) {
                                 if (i == 42) throw std::runtime_error("boom");
                               }),
                  std::runtime_error);
  parallel_for(0, 2, [](std::size_t) { FAIL("no work expected"); });
}

TEST_CASE("results do not depend on the thread count") {
  const auto tracks = dataset(6, 11);
  const auto models = load_action_models(testutil::models_dir());
  PipelineConfig one;
  one.threads = 1;
  one.forest.num_trees = 15;
  PipelineConfig many = one;
  many.threads = 8;

  const auto ea = embed_all(tracks, models, one);
  const auto eb = embed_all(tracks, models, many);
  REQUIRE(ea.size() == eb.size());
  for (std::size_t i = 0; i < ea.size(); ++i) {
    for (const auto& [action, e] : ea[i]) CHECK(e.values == eb[i].at(action).values);
  }
  const auto ta = train_from_embeddings(tracks, ea, models, one);
  const auto tb = train_from_embeddings(tracks, eb, models, many);
  REQUIRE(ta.forests.size() == 5);
  for (const auto& [action, f] : ta.forests) {
    CHECK(forest_to_json(f).dump() == forest_to_json(tb.forests.at(action)).dump());
    CHECK(ta.counts.at(action) == std::pair<std::size_t, std::size_t>{6, 24});
  }
  const auto pa = predict_from_embeddings(tracks, ea, ta.forests);
  const auto pb = predict_from_embeddings(tracks, eb, tb.forests);
  CHECK(prediction_set_to_json(pa) == prediction_set_to_json(pb));
}

TEST_CASE("single-class actions are skipped with a warning") {
  auto tracks = dataset(3, 12);
  for (auto& t : tracks) t.label = "put-into";
  PipelineConfig cfg;
  cfg.forest.num_trees = 5;
  const auto outcome = train_all(tracks, load_action_models(testutil::models_dir()), cfg);
  CHECK(outcome.forests.empty());
  CHECK(outcome.warnings.size() == 5);
}

TEST_CASE("errors name the video") {
  auto tracks = dataset(1, 13);
  tracks[2].frames.clear();
  try {
    assign_all(tracks, load_action_models(testutil::models_dir()), PipelineConfig{});
    FAIL("expected an error for the empty track");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find(tracks[2].video_id) != std::string::npos);
  }
}

TEST_CASE("stratified split") {
  const auto tracks = dataset(10, 14);
  const auto s = stratified_split(tracks, 0.3, 42);
  CHECK(s.validation.size() == 15);
  CHECK(s.train.size() == 35);
  std::set<std::size_t> all(s.train.begin(), s.train.end());
  for (auto i : s.validation) CHECK(all.insert(i).second);
  CHECK(all.size() == tracks.size());
  std::map<std::string, int> per_label;
  for (auto i : s.validation) per_label[*tracks[i].label]++;
  for (const auto& [label, n] : per_label) CHECK(n == 3);

  const auto again = stratified_split(tracks, 0.3, 42);
  CHECK(again.validation == s.validation);
  CHECK(stratified_split(tracks, 0.3, 43).validation != s.validation);
  CHECK_THROWS(stratified_split(tracks, 1.5, 1));
}

TEST_CASE("split documents") {
  const auto tracks = dataset(1, 15);
  const nlohmann::json doc = {{"train", {tracks[0].video_id, tracks[1].video_id}}, {"validation", {tracks[4].video_id}}};
  const auto s = split_from_json(tracks, doc);
  CHECK(s.train == std::vector<std::size_t>{0, 1});
  CHECK(s.validation == std::vector<std::size_t>{4});
  CHECK(select(tracks, s.validation)[0].video_id == tracks[4].video_id);
  CHECK_THROWS_AS(split_from_json(tracks, {{"train", {"nope"}}, {"validation", nlohmann::json::array()}}),
                  ValidationError);
}

}  // TEST_SUITE
