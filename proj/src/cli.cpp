#include "relact/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "relact/error.hpp"
#include "relact/eval.hpp"
#include "relact/forest.hpp"
#include "relact/ingest.hpp"
#include "relact/pipeline.hpp"
#include "relact/synthetic.hpp"

namespace relact {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "1.0.0";

struct UsageError : Error {
  using Error::Error;
};

struct Options {
  std::string config_file;
  std::string annotations;
  std::string models = "config/models";
  std::string thresholds;
  std::string out;
  std::string out_dir;
  std::string forests;
  std::string truth;
  std::string split_file;
  std::string split_out;
  std::optional<double> validation_fraction;
  int window = kDefaultWindowHalfWidth;
  double sigma = kDefaultSigma;
  std::string embedding = "scores_and_features";
  std::size_t trees = 200;
  std::size_t max_depth = 0;           // 0 = unlimited
  std::size_t min_samples_split = 2;
  std::size_t features_per_split = 0;  // 0 = floor(sqrt(dims))
  bool no_bootstrap = false;
  bool balanced = false;
  std::uint64_t seed = 42;
  unsigned threads = 0;

  std::vector<std::string> archetypes;
  std::size_t count = 100;
  std::size_t frames = 60;
  std::string noise = "none";
  std::optional<double> jitter;
  std::optional<double> copy_lag;

  std::string predictions;
  std::string external;
  std::string table;
  std::string confusion;
  std::string method = "Proposed";
  std::vector<std::string> inputs;

  std::vector<double> sigma_grid;
  std::vector<int> window_grid;
  std::vector<double> touch_tol_grid;
  std::vector<std::size_t> trees_grid;
  std::vector<std::size_t> depth_grid;
  std::vector<std::size_t> features_grid;
};

json read_json_file(const std::string& path) {
  const auto text = read_text_file(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError("'" + path + "' is not valid JSON: " + e.what());
  }
}

void write_json_file(const std::string& path, const json& doc) { write_text_file(path, doc.dump(2) + "\n"); }

void require(const std::string& value, const char* flag) {
  if (value.empty()) throw UsageError(std::string(flag) + " is required");
}

// Keys of a --config document; command-line flags take precedence.
void apply_config(Options& o, const json& doc, const std::function<bool(const char*)>& given) {
  if (!doc.is_object()) throw ConfigError("config document must be an object");
  static const std::set<std::string> known = {"annotations", "models", "thresholds", "out_dir", "n", "sigma",
                                              "embedding", "forest", "split", "seed", "threads"};
  for (const auto& [key, _] : doc.items()) {
    if (!known.count(key)) throw ConfigError("unknown config key '" + key + "'");
  }
  try {
    const auto take = [&](const char* key, const char* flag, auto& field) {
      if (doc.contains(key) && !given(flag)) field = doc.at(key).get<std::decay_t<decltype(field)>>();
    };
    take("annotations", "--annotations", o.annotations);
    take("models", "--models", o.models);
    take("thresholds", "--thresholds", o.thresholds);
    take("out_dir", "--out-dir", o.out_dir);
    take("n", "--window", o.window);
    take("sigma", "--sigma", o.sigma);
    take("embedding", "--embedding", o.embedding);
    take("seed", "--seed", o.seed);
    take("threads", "--threads", o.threads);
    if (auto it = doc.find("forest"); it != doc.end()) {
      const auto p = forest_params_from_json(*it);
      if (!given("--trees")) o.trees = p.num_trees;
      if (!given("--max-depth")) o.max_depth = p.max_depth.value_or(0);
      if (!given("--min-samples-split")) o.min_samples_split = p.min_samples_split;
      if (!given("--features-per-split")) o.features_per_split = p.features_per_split.value_or(0);
      if (!given("--no-bootstrap")) o.no_bootstrap = !p.bootstrap;
      if (!given("--balanced")) o.balanced = p.balanced_class_weight;
    }
    if (auto it = doc.find("split"); it != doc.end()) {
      if (it->contains("file") && !given("--split")) o.split_file = it->at("file").get<std::string>();
      if (it->contains("validation_fraction") && !given("--validation-fraction")) {
        o.validation_fraction = it->at("validation_fraction").get<double>();
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid config document: ") + e.what());
  }
}

ForestParams forest_params(const Options& o) {
  ForestParams p;
  p.num_trees = o.trees;
  if (o.max_depth > 0) p.max_depth = o.max_depth;
  p.min_samples_split = o.min_samples_split;
  if (o.features_per_split > 0) p.features_per_split = o.features_per_split;
  p.bootstrap = !o.no_bootstrap;
  p.balanced_class_weight = o.balanced;
  p.seed = o.seed;
  return p;
}

PipelineConfig pipeline_config(const Options& o) {
  PipelineConfig c;
  c.window_half_width = o.window;
  c.sigma = o.sigma;
  c.embedding = embedding_mode_from_name(o.embedding);
  c.forest = forest_params(o);
  c.seed = o.seed;
  c.threads = o.threads;
  c.validate();
  return c;
}

RelationThresholds base_thresholds(const Options& o) {
  if (o.thresholds.empty()) return {};
  return thresholds_from_json(read_json_file(o.thresholds));
}

std::vector<ActionModel> load_models(const Options& o) {
  require(o.models, "--models");
  if (!fs::exists(o.models)) throw ConfigError("action-model path '" + o.models + "' does not exist");
  auto models = load_action_models(o.models, base_thresholds(o));
  if (models.empty()) throw ConfigError("no action models found at '" + o.models + "'");
  return models;
}

std::vector<VideoTrack> load_tracks(const Options& o) {
  require(o.annotations, "--annotations");
  return parse_annotations(o.annotations);
}

json provenance(std::string_view command, const PipelineConfig& cfg, const std::vector<ActionModel>& models) {
  json m = json::array();
  for (const auto& x : models) m.push_back(action_model_to_json(x));
  const json basis = {{"pipeline", cfg.to_json()}, {"models", std::move(m)}};
  return {{"tool", "relact"},
          {"version", kVersion},
          {"command", command},
          {"config", cfg.to_json()},
          {"config_fingerprint", fingerprint_hex(basis.dump())},
          {"seed", cfg.seed}};
}

std::optional<DataSplit> resolve_split(const Options& o, const std::vector<VideoTrack>& tracks) {
  if (!o.split_file.empty()) return split_from_json(tracks, read_json_file(o.split_file));
  if (o.validation_fraction) return stratified_split(tracks, *o.validation_fraction, o.seed);
  return std::nullopt;
}

void write_split(const std::string& path, const std::vector<VideoTrack>& tracks, const DataSplit& split) {
  json train = json::array();
  json validation = json::array();
  for (auto i : split.train) train.push_back(tracks[i].video_id);
  for (auto i : split.validation) validation.push_back(tracks[i].video_id);
  write_json_file(path, {{"train", std::move(train)}, {"validation", std::move(validation)}});
}

json phase_map(const std::array<std::optional<std::size_t>, kPhaseCount>& centers, const VideoTrack& track) {
  json out = json::object();
  for (Phase p : kPhases) {
    const auto& c = centers[index_of(p)];
    out[std::string(1, phase_name(p))] = c ? json(track.frames[*c].frame_index) : json(nullptr);
  }
  return out;
}

json assignment_record(const VideoTrack& track, const PhaseAssignment& a) {
  json windows = json::object();
  for (Phase p : kPhases) {
    const auto& w = a.window(p);
    windows[std::string(1, phase_name(p))] =
        w ? json::array({track.frames[w->first].frame_index, track.frames[w->last].frame_index}) : json(nullptr);
  }
  return {{"video_id", track.video_id},
          {"action_id", a.action_id},
          {"centers", phase_map(a.centers, track)},
          {"windows", std::move(windows)},
          {"total_score", a.total_score},
          {"b_choice", b_choice_name(a.b_choice)},
          {"object_order", object_order_name(a.object_order)},
          {"degenerate", a.degenerate()}};
}

std::string truth_path_for(const std::string& out) {
  if (out.size() > 5 && out.ends_with(".json")) return out.substr(0, out.size() - 5) + ".truth.json";
  return out + ".truth.json";
}

int cmd_generate(const Options& o, std::ostream& out) {
  require(o.out, "--out");
  DatasetSpec spec;
  spec.archetypes.clear();
  const bool all = o.archetypes.empty() || std::count(o.archetypes.begin(), o.archetypes.end(), "all") > 0;
  if (all) {
    spec.archetypes.assign(kArchetypes.begin(), kArchetypes.end());
  } else {
    for (const auto& name : o.archetypes) {
      auto a = archetype_from_name(name);
      if (!a) throw UsageError("unknown archetype '" + name + "'");
      spec.archetypes.push_back(*a);
    }
  }
  NoiseParams noise;
  try {
    noise = noise_preset(o.noise);
  } catch (const ValidationError&) {
    throw UsageError("unknown noise preset '" + o.noise + "' (none, moderate, paper-artifacts)");
  }
  spec.jitter_sigma = o.jitter.value_or(noise.jitter_sigma);
  spec.copy_lag_prob = o.copy_lag.value_or(noise.copy_lag_prob);
  spec.count = o.count;
  spec.num_frames = o.frames;
  spec.seed = o.seed;
  NoiseParams{spec.jitter_sigma, spec.copy_lag_prob, 0}.validate();

  const auto data = generate_dataset(spec);
  std::vector<VideoTrack> tracks;
  json videos = json::array();
  for (const auto& d : data) {
    tracks.push_back(d.video.track);
    videos.push_back({{"video_id", d.video.track.video_id},
                      {"label", *d.video.track.label},
                      {"true_phase_centers", script_to_json(d.script).at("true_phase_centers")},
                      {"script", script_to_json(d.script)}});
  }
  json names = json::array();
  for (auto a : spec.archetypes) names.push_back(archetype_name(a));
  const json generator = {{"archetypes", std::move(names)},
                          {"count", spec.count},
                          {"num_frames", spec.num_frames},
                          {"jitter_sigma", spec.jitter_sigma},
                          {"copy_lag_prob", spec.copy_lag_prob},
                          {"seed", spec.seed}};
  const json prov = {{"tool", "relact"},
                     {"version", kVersion},
                     {"command", "generate"},
                     {"config", generator},
                     {"config_fingerprint", fingerprint_hex(generator.dump())},
                     {"seed", spec.seed}};

  write_annotations(o.out, tracks);
  const auto truth = o.truth.empty() ? truth_path_for(o.out) : o.truth;
  write_json_file(truth, {{"provenance", prov}, {"videos", std::move(videos)}});
  out << "wrote " << tracks.size() << " videos to " << o.out << " (ground truth: " << truth << ")\n";
  return kExitOk;
}

// Share of scripted centers recovered within a tolerance, using the model
// named by each video's label.
json recovery_summary(const std::vector<VideoTrack>& tracks, const std::vector<ActionAssignments>& assigned,
                      const json& truth_doc) {
  std::map<std::string, json> truth;
  for (const auto& v : truth_doc.at("videos")) truth[v.at("video_id").get<std::string>()] = v.at("true_phase_centers");
  std::size_t centers = 0;
  std::array<std::size_t, 4> within{};  // tolerance 0..3
  std::size_t b_total = 0, b_within3 = 0;
  std::size_t videos = 0;
  for (std::size_t i = 0; i < tracks.size(); ++i) {
    auto t = truth.find(tracks[i].video_id);
    if (t == truth.end() || !tracks[i].label) continue;
    auto a = assigned[i].find(*tracks[i].label);
    if (a == assigned[i].end()) continue;
    ++videos;
    for (Phase p : kPhases) {
      const auto key = std::string(1, phase_name(p));
      const auto expected = t->second.at(key).get<std::int64_t>();
      const auto& c = a->second.assignment.center(p);
      ++centers;
      if (p == Phase::b) ++b_total;
      if (!c) continue;
      const auto diff = std::llabs(tracks[i].frames[*c].frame_index - expected);
      for (std::size_t tol = 0; tol < within.size(); ++tol) {
        if (diff <= static_cast<long long>(tol)) ++within[tol];
      }
      if (p == Phase::b && diff <= 3) ++b_within3;
    }
  }
  const auto frac = [](std::size_t k, std::size_t n) { return n ? static_cast<double>(k) / static_cast<double>(n) : 0.0; };
  return {{"videos", videos},
          {"centers", centers},
          {"within_0", frac(within[0], centers)},
          {"within_1", frac(within[1], centers)},
          {"within_2", frac(within[2], centers)},
          {"within_3", frac(within[3], centers)},
          {"b_within_3", frac(b_within3, b_total)}};
}

int cmd_assign(const Options& o, std::ostream& out) {
  require(o.out, "--out");
  const auto cfg = pipeline_config(o);
  const auto tracks = load_tracks(o);
  const auto models = load_models(o);
  const auto assigned = assign_all(tracks, models, cfg);

  json records = json::array();
  std::size_t degenerate = 0;
  for (std::size_t i = 0; i < tracks.size(); ++i) {
    for (const auto& [action, best] : assigned[i]) {
      records.push_back(assignment_record(tracks[i], best.assignment));
      if (best.assignment.degenerate()) ++degenerate;
    }
  }
  json doc = {{"provenance", provenance("assign", cfg, models)}, {"assignments", std::move(records)}};
  out << "assigned " << tracks.size() << " videos x " << models.size() << " action models";
  if (degenerate) out << " (" << degenerate << " degenerate)";
  out << "\n";
  if (!o.truth.empty()) {
    doc["recovery"] = recovery_summary(tracks, assigned, read_json_file(o.truth));
    const auto& r = doc["recovery"];
    out << "phase recovery over " << r["centers"].get<std::size_t>() << " centers: within 2 frames "
        << r["within_2"].get<double>() << ", phase b within 3 frames " << r["b_within_3"].get<double>() << "\n";
  }
  write_json_file(o.out, doc);
  return kExitOk;
}

int cmd_embed(const Options& o, std::ostream& out) {
  require(o.out, "--out");
  const auto cfg = pipeline_config(o);
  const auto tracks = load_tracks(o);
  const auto models = load_models(o);
  const auto embedded = embed_all(tracks, models, cfg);

  json layouts = json::object();
  for (const auto& m : models) {
    const auto layout = embedding_layout(m, cfg.embedding);
    layouts[m.action_id] = {{"fingerprint", layout.fingerprint}, {"names", layout.names}};
  }
  json records = json::array();
  for (const auto& per_video : embedded) {
    for (const auto& [action, e] : per_video) records.push_back(embedding_to_json(e));
  }
  write_json_file(o.out, {{"provenance", provenance("embed", cfg, models)},
                          {"layouts", std::move(layouts)},
                          {"embeddings", std::move(records)}});
  out << "embedded " << tracks.size() << " videos x " << models.size() << " action models\n";
  return kExitOk;
}

int cmd_train(const Options& o, std::ostream& out, std::ostream& err) {
  require(o.out_dir, "--out-dir");
  const auto cfg = pipeline_config(o);
  const auto all_tracks = load_tracks(o);
  const auto models = load_models(o);
  const auto split = resolve_split(o, all_tracks);
  if (split && !o.split_out.empty()) write_split(o.split_out, all_tracks, *split);
  const auto tracks = split ? select(all_tracks, split->train) : all_tracks;

  const auto outcome = train_all(tracks, models, cfg);
  const auto prov = provenance("train", cfg, models);
  json actions = json::array();
  for (const auto& m : models) {
    const auto [pos, neg] = outcome.counts.at(m.action_id);
    json rec = {{"action_id", m.action_id}, {"positives", pos}, {"negatives", neg}};
    if (auto it = outcome.forests.find(m.action_id); it != outcome.forests.end()) {
      const auto file = (fs::path(o.out_dir) / (m.action_id + ".forest.json")).string();
      json doc = forest_to_json(it->second);
      doc["provenance"] = prov;
      write_text_file(file, doc.dump() + "\n");
      rec["model_file"] = file;
    } else {
      rec["model_file"] = nullptr;
    }
    actions.push_back(std::move(rec));
  }
  for (const auto& w : outcome.warnings) err << "warning: " << w << "\n";
  write_json_file((fs::path(o.out_dir) / "train_log.json").string(), {{"provenance", prov},
                                                                      {"training_videos", tracks.size()},
                                                                      {"actions", std::move(actions)},
                                                                      {"warnings", outcome.warnings},
                                                                      {"complete", outcome.warnings.empty()}});
  out << "trained " << outcome.forests.size() << " of " << models.size() << " forests on " << tracks.size()
      << " videos into " << o.out_dir << "\n";
  return outcome.warnings.empty() ? kExitOk : kExitValidation;
}

std::map<std::string, ForestModel> load_forests(const std::string& path) {
  std::vector<fs::path> files;
  if (fs::is_directory(path)) {
    for (const auto& entry : fs::directory_iterator(path)) {
      if (entry.is_regular_file() && entry.path().string().ends_with(".forest.json")) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
  } else {
    files.emplace_back(path);
  }
  std::map<std::string, ForestModel> forests;
  for (const auto& f : files) {
    auto model = forest_from_json(read_json_file(f.string()));
    const auto id = model.action_id;
    if (!forests.emplace(id, std::move(model)).second) throw ValidationError("duplicate forest for action '" + id + "'");
  }
  if (forests.empty()) throw ValidationError("no forest models found at '" + path + "'");
  return forests;
}

int cmd_predict(const Options& o, std::ostream& out) {
  require(o.out, "--out");
  require(o.forests, "--forests");
  const auto cfg = pipeline_config(o);
  const auto all_tracks = load_tracks(o);
  const auto models = load_models(o);
  const auto forests = load_forests(o.forests);
  const auto split = resolve_split(o, all_tracks);
  const auto tracks = split ? select(all_tracks, split->validation) : all_tracks;

  const auto preds = predict_all(tracks, models, forests, cfg);
  json doc = prediction_set_to_json(preds);
  doc["provenance"] = provenance("predict", cfg, models);
  write_json_file(o.out, doc);
  out << "predicted " << preds.videos.size() << " videos with " << forests.size() << " forests\n";
  return kExitOk;
}

json derived_provenance(std::string_view command, const std::vector<json>& inputs) {
  json parts = json::array();
  json seed = nullptr;
  for (const auto& doc : inputs) {
    if (doc.is_object() && doc.contains("provenance")) {
      parts.push_back(doc["provenance"]);
      if (seed.is_null()) seed = doc["provenance"].value("seed", json(nullptr));
    } else {
      parts.push_back(nullptr);
    }
  }
  return {{"tool", "relact"},
          {"version", kVersion},
          {"command", command},
          {"inputs", parts},
          {"config_fingerprint", fingerprint_hex(parts.dump())},
          {"seed", seed}};
}

int cmd_eval(const Options& o, std::ostream& out, std::ostream& err) {
  require(o.predictions, "--predictions");
  std::vector<json> docs{read_json_file(o.predictions)};
  auto preds = prediction_set_from_json(docs[0]);
  if (!o.external.empty()) {
    docs.push_back(read_json_file(o.external));
    preds = fuse(preds, prediction_set_from_json(docs[1]));
  }
  const auto report = evaluate(preds);
  for (const auto& w : report.warnings) err << "warning: " << w << "\n";
  const auto table = report_table(report, o.method);
  out << table;
  if (!o.out.empty()) {
    json doc = report_to_json(report);
    doc["method"] = o.method;
    doc["fused"] = !o.external.empty();
    doc["provenance"] = derived_provenance("eval", docs);
    write_json_file(o.out, doc);
  }
  if (!o.table.empty()) write_text_file(o.table, table);
  if (!o.confusion.empty()) write_text_file(o.confusion, confusion_csv(report));
  return kExitOk;
}

int cmd_fuse(const Options& o, std::ostream& out) {
  require(o.out, "--out");
  if (o.inputs.size() != 2) throw UsageError("fuse takes exactly two prediction files");
  std::vector<json> docs{read_json_file(o.inputs[0]), read_json_file(o.inputs[1])};
  const auto fused = fuse(prediction_set_from_json(docs[0]), prediction_set_from_json(docs[1]));
  json doc = prediction_set_to_json(fused);
  doc["provenance"] = derived_provenance("fuse", docs);
  write_json_file(o.out, doc);
  out << "fused " << fused.videos.size() << " videos\n";
  return kExitOk;
}

int cmd_sweep(const Options& o, std::ostream& out) {
  const auto base = pipeline_config(o);
  const auto tracks = load_tracks(o);
  Options with_split = o;
  if (o.split_file.empty() && !o.validation_fraction) with_split.validation_fraction = 0.3;
  const auto split = *resolve_split(with_split, tracks);
  if (split.train.empty() || split.validation.empty()) throw ValidationError("sweep needs non-empty train and validation sets");
  const auto train_tracks = select(tracks, split.train);
  const auto val_tracks = select(tracks, split.validation);
  std::optional<json> truth;
  if (!o.truth.empty()) truth = read_json_file(o.truth);

  const auto or_default = [](auto grid, auto value) {
    if (grid.empty()) grid.push_back(value);
    return grid;
  };
  const auto sigmas = or_default(o.sigma_grid, o.sigma);
  const auto windows = or_default(o.window_grid, o.window);
  const auto base_t = base_thresholds(o);
  const auto touch = or_default(o.touch_tol_grid, base_t.touch_tol);
  const auto trees = or_default(o.trees_grid, o.trees);
  const auto depths = or_default(o.depth_grid, o.max_depth);
  const auto features = or_default(o.features_grid, o.features_per_split);

  json rows = json::array();
  std::ostringstream table;
  table << "sigma | n | touch_tol | trees | max_depth | features | accuracy | mAP | mAP(macro)";
  if (truth) table << " | within2";
  table << "\n";
  std::vector<ActionModel> first_models;
  for (double tol : touch) {
    RelationThresholds th = base_t;
    th.touch_tol = tol;
    const auto models = load_action_models(o.models, th);
    if (first_models.empty()) first_models = models;
    for (double sigma : sigmas) {
      for (int n : windows) {
        PipelineConfig cfg = base;
        cfg.sigma = sigma;
        cfg.window_half_width = n;
        cfg.validate();
        const auto train_emb = embed_all(train_tracks, models, cfg);
        const auto val_emb = embed_all(val_tracks, models, cfg);
        std::optional<double> within2;
        if (truth) {
          within2 = recovery_summary(val_tracks, assign_all(val_tracks, models, cfg), *truth)["within_2"].get<double>();
        }
        for (auto num_trees : trees) {
          for (auto depth : depths) {
            for (auto fps : features) {
              cfg.forest.num_trees = num_trees;
              cfg.forest.max_depth = depth > 0 ? std::optional<std::size_t>(depth) : std::nullopt;
              cfg.forest.features_per_split = fps > 0 ? std::optional<std::size_t>(fps) : std::nullopt;
              cfg.validate();
              const auto trained = train_from_embeddings(train_tracks, train_emb, models, cfg);
              const auto report = evaluate(predict_from_embeddings(val_tracks, val_emb, trained.forests));
              json row = {{"sigma", sigma},
                          {"n", n},
                          {"touch_tol", tol},
                          {"num_trees", num_trees},
                          {"max_depth", depth > 0 ? json(depth) : json(nullptr)},
                          {"features_per_split", fps > 0 ? json(fps) : json(nullptr)},
                          {"accuracy", report.accuracy},
                          {"weighted_map", report.weighted_map},
                          {"macro_map", report.macro_map}};
              table << std::fixed << std::setprecision(2) << sigma << " | " << n << " | " << tol << " | " << num_trees
                    << " | " << (depth > 0 ? std::to_string(depth) : "-") << " | "
                    << (fps > 0 ? std::to_string(fps) : "sqrt") << " | " << report.accuracy << " | "
                    << report.weighted_map << " | " << report.macro_map;
              if (within2) {
                row["phase_within_2"] = *within2;
                table << " | " << *within2;
              }
              table << "\n";
              rows.push_back(std::move(row));
            }
          }
        }
      }
    }
  }
  out << table.str();
  if (!o.out.empty()) {
    write_json_file(o.out, {{"provenance", provenance("sweep", base, first_models)},
                            {"train_videos", train_tracks.size()},
                            {"validation_videos", val_tracks.size()},
                            {"results", std::move(rows)}});
  }
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"relact: activity recognition from hand and object bounding boxes"};
  app.name(args.empty() ? "relact" : fs::path(args[0]).filename().string());
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);
  Options o;
  double validation_fraction = 0.0;
  double jitter = 0.0;
  double copy_lag = 0.0;

  const auto add_pipeline = [&](CLI::App* s) {
    s->add_option("--config", o.config_file, "pipeline config document")->check(CLI::ExistingFile);
    s->add_option("--annotations", o.annotations, "annotation file")->check(CLI::ExistingFile);
    s->add_option("--models", o.models, "action-model file or directory")->capture_default_str();
    s->add_option("--thresholds", o.thresholds, "relation threshold document")->check(CLI::ExistingFile);
    s->add_option("-n,--window", o.window, "phase window half-width")->capture_default_str();
    s->add_option("--sigma", o.sigma, "phase score smoothing width (frames)")->capture_default_str();
    s->add_option("--embedding", o.embedding, "scores_and_features or scores_only")
        ->check(CLI::IsMember({"scores_and_features", "scores_only"}))
        ->capture_default_str();
    s->add_option("--seed", o.seed, "seed for forests and splits")->capture_default_str();
    s->add_option("--threads", o.threads, "worker threads (0 = all cores)")->capture_default_str();
  };
  const auto add_forest = [&](CLI::App* s) {
    s->add_option("--trees", o.trees, "trees per forest")->capture_default_str();
    s->add_option("--max-depth", o.max_depth, "maximum tree depth (0 = unlimited)")->capture_default_str();
    s->add_option("--min-samples-split", o.min_samples_split)->capture_default_str();
    s->add_option("--features-per-split", o.features_per_split, "0 = floor(sqrt(dims))")->capture_default_str();
    s->add_flag("--no-bootstrap", o.no_bootstrap, "grow every tree on the full training set");
    s->add_flag("--balanced", o.balanced, "inverse-frequency class weights");
  };
  const auto add_split = [&](CLI::App* s) {
    s->add_option("--split", o.split_file, "split document {train: [ids], validation: [ids]}")
        ->check(CLI::ExistingFile);
    s->add_option("--validation-fraction", validation_fraction, "seeded stratified split")
        ->check(CLI::Range(0.0, 1.0));
  };

  auto* gen = app.add_subcommand("generate", "write a synthetic annotation file and its ground truth");
  gen->add_option("--archetype", o.archetypes, "archetype name or 'all' (repeatable)");
  gen->add_option("--count", o.count, "videos per archetype")->capture_default_str();
  gen->add_option("--frames", o.frames, "frames per video")->capture_default_str()->check(CLI::Range(30, 100000));
  gen->add_option("--noise", o.noise, "none, moderate or paper-artifacts")->capture_default_str();
  gen->add_option("--jitter", jitter, "box-corner jitter sigma (px), overrides the preset")->check(CLI::NonNegativeNumber);
  gen->add_option("--copy-lag", copy_lag, "copy-lag probability, overrides the preset")->check(CLI::Range(0.0, 1.0));
  gen->add_option("--seed", o.seed, "dataset seed")->capture_default_str();
  gen->add_option("--out", o.out, "annotation file to write")->required();
  gen->add_option("--truth", o.truth, "ground-truth file (default: <out>.truth.json)");

  auto* assign = app.add_subcommand("assign", "assign phases a-e for every video and action model");
  add_pipeline(assign);
  assign->add_option("--truth", o.truth, "ground truth from generate; adds a recovery summary")
      ->check(CLI::ExistingFile);
  assign->add_option("--out", o.out, "phase report to write");

  auto* embed = app.add_subcommand("embed", "write phase embeddings");
  add_pipeline(embed);
  embed->add_option("--out", o.out, "embedding dump to write");

  auto* train = app.add_subcommand("train", "train one forest per action model");
  add_pipeline(train);
  add_forest(train);
  add_split(train);
  train->add_option("--split-out", o.split_out, "write the split used");
  train->add_option("--out-dir", o.out_dir, "directory for model files and the training log");

  auto* predict = app.add_subcommand("predict", "run every forest on every video");
  add_pipeline(predict);
  add_split(predict);
  predict->add_option("--forests", o.forests, "forest file or directory")->check(CLI::ExistingPath);
  predict->add_option("--out", o.out, "prediction file to write");

  auto* eval = app.add_subcommand("eval", "AP per action, mAP and confusion matrix");
  eval->add_option("--predictions", o.predictions, "prediction file")->required()->check(CLI::ExistingFile);
  eval->add_option("--external", o.external, "external probabilities to fuse before evaluating")
      ->check(CLI::ExistingFile);
  eval->add_option("--method", o.method, "row label of the table")->capture_default_str();
  eval->add_option("--out", o.out, "machine-readable report");
  eval->add_option("--table", o.table, "text table");
  eval->add_option("--confusion", o.confusion, "confusion matrix CSV");

  auto* fuse_cmd = app.add_subcommand("fuse", "sum the probabilities of two prediction files");
  fuse_cmd->add_option("inputs", o.inputs, "two prediction files")->expected(2)->required()->check(CLI::ExistingFile);
  fuse_cmd->add_option("--out", o.out, "fused prediction file")->required();

  auto* sweep = app.add_subcommand("sweep", "grid over smoothing, window, threshold and forest settings");
  add_pipeline(sweep);
  add_forest(sweep);
  add_split(sweep);
  sweep->add_option("--truth", o.truth, "ground truth; adds phase recovery per setting")->check(CLI::ExistingFile);
  sweep->add_option("--sigma-grid", o.sigma_grid)->delimiter(',');
  sweep->add_option("--window-grid", o.window_grid)->delimiter(',');
  sweep->add_option("--touch-tol-grid", o.touch_tol_grid)->delimiter(',');
  sweep->add_option("--trees-grid", o.trees_grid)->delimiter(',');
  sweep->add_option("--max-depth-grid", o.depth_grid, "0 = unlimited")->delimiter(',');
  sweep->add_option("--features-grid", o.features_grid, "0 = floor(sqrt(dims))")->delimiter(',');
  sweep->add_option("--out", o.out, "sweep results");

  std::vector<std::string> reversed(args.size() > 1 ? args.begin() + 1 : args.end(), args.end());
  std::reverse(reversed.begin(), reversed.end());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
  }

  CLI::App* active = app.get_subcommands().front();
  const auto given = [&](const char* flag) {
    const auto* opt = active->get_option_no_throw(flag);
    return opt != nullptr && opt->count() > 0;
  };
  if (given("--validation-fraction")) o.validation_fraction = validation_fraction;
  if (given("--jitter")) o.jitter = jitter;
  if (given("--copy-lag")) o.copy_lag = copy_lag;

  try {
    if (!o.config_file.empty()) apply_config(o, read_json_file(o.config_file), given);
    const auto name = active->get_name();
    if (name == "generate") return cmd_generate(o, out);
    if (name == "assign") return cmd_assign(o, out);
    if (name == "embed") return cmd_embed(o, out);
    if (name == "train") return cmd_train(o, out, err);
    if (name == "predict") return cmd_predict(o, out);
    if (name == "eval") return cmd_eval(o, out, err);
    if (name == "fuse") return cmd_fuse(o, out);
    if (name == "sweep") return cmd_sweep(o, out);
    throw UsageError("unknown command '" + name + "'");
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  }
}

int run_cli(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return run_cli(args, std::cout, std::cerr);
}

}  // namespace relact
