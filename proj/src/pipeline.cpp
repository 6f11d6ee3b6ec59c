#include "relact/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <random>
#include <thread>

#include "relact/error.hpp"

namespace relact {

using nlohmann::json;

void PipelineConfig::validate() const {
  if (window_half_width < 0) throw ConfigError("window half-width must be non-negative");
  if (!(sigma > 0.0)) throw ConfigError("sigma must be positive");
  forest.validate();
}

json PipelineConfig::to_json() const {
  return {{"window_half_width", window_half_width},
          {"sigma", sigma},
          {"embedding", embedding_mode_name(embedding)},
          {"forest", forest_params_to_json(forest)},
          {"seed", seed}};
}

std::string fingerprint_hex(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string PipelineConfig::fingerprint() const { return fingerprint_hex(to_json().dump()); }

void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& fn) {
  if (count == 0) return;
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, count));
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::vector<std::exception_ptr> errors(threads);
  {
    std::vector<std::jthread> workers;
    for (unsigned w = 0; w < threads; ++w) {
      workers.emplace_back([&, w] {
        try {
          for (std::size_t i = next++; i < count && !failed; i = next++) fn(i);
        } catch (...) {
          errors[w] = std::current_exception();
          failed = true;
        }
      });
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

namespace {

[[noreturn]] void rethrow_with_video(const std::string& video_id) {
  try {
    throw;
  } catch (const ContractError& e) {
    throw ContractError("video '" + video_id + "': " + e.what());
  } catch (const ValidationError& e) {
    throw ValidationError("video '" + video_id + "': " + e.what());
  } catch (const ConfigError& e) {
    throw ConfigError("video '" + video_id + "': " + e.what());
  } catch (const Error& e) {
    throw Error("video '" + video_id + "': " + e.what());
  }
}

}  // namespace

std::vector<ActionAssignments> assign_all(const std::vector<VideoTrack>& tracks,
                                          const std::vector<ActionModel>& models, const PipelineConfig& config) {
  config.validate();
  std::vector<ActionAssignments> out(tracks.size());
  parallel_for(tracks.size(), config.threads, [&](std::size_t i) {
    try {
      for (const auto& m : models) {
        out[i].emplace(m.action_id, best_assignment(tracks[i], m, config.window_half_width, config.sigma));
      }
    } catch (...) {
      rethrow_with_video(tracks[i].video_id);
    }
  });
  return out;
}

std::vector<ActionEmbeddings> embed_all(const std::vector<VideoTrack>& tracks, const std::vector<ActionModel>& models,
                                        const PipelineConfig& config) {
  config.validate();
  std::vector<ActionEmbeddings> out(tracks.size());
  parallel_for(tracks.size(), config.threads, [&](std::size_t i) {
    try {
      for (const auto& m : models) {
        const auto best = best_assignment(tracks[i], m, config.window_half_width, config.sigma);
        out[i].emplace(m.action_id, embed_video(tracks[i], best.assignment, best.matrix, m, config.embedding));
      }
    } catch (...) {
      rethrow_with_video(tracks[i].video_id);
    }
  });
  return out;
}

TrainOutcome train_from_embeddings(const std::vector<VideoTrack>& tracks,
                                   const std::vector<ActionEmbeddings>& embeddings,
                                   const std::vector<ActionModel>& models, const PipelineConfig& config) {
  if (embeddings.size() != tracks.size()) throw ContractError("embeddings and tracks differ in count");
  TrainOutcome outcome;
  for (const auto& m : models) {
    TrainingSet data;
    std::string fingerprint;
    for (std::size_t i = 0; i < tracks.size(); ++i) {
      if (!tracks[i].label) continue;
      const auto& e = embeddings[i].at(m.action_id);
      if (e.layout) fingerprint = e.layout->fingerprint;
      data.rows.push_back(e.values);
      data.labels.push_back(*tracks[i].label == m.action_id ? 1 : 0);
    }
    const std::size_t pos = data.positives();
    outcome.counts[m.action_id] = {pos, data.size() - pos};
    if (pos == 0 || pos == data.size()) {
      outcome.warnings.push_back("action '" + m.action_id + "': " + std::to_string(pos) + " positive and " +
                                 std::to_string(data.size() - pos) +
                                 " negative labelled videos; a binary detector needs both, skipped");
      continue;
    }
    ForestParams params = config.forest;
    params.seed = config.seed;
    outcome.forests.emplace(m.action_id, train_forest(data, params, m.action_id, fingerprint, config.threads));
  }
  return outcome;
}

TrainOutcome train_all(const std::vector<VideoTrack>& tracks, const std::vector<ActionModel>& models,
                       const PipelineConfig& config) {
  return train_from_embeddings(tracks, embed_all(tracks, models, config), models, config);
}

PredictionSet predict_from_embeddings(const std::vector<VideoTrack>& tracks,
                                      const std::vector<ActionEmbeddings>& embeddings,
                                      const std::map<std::string, ForestModel>& forests) {
  if (embeddings.size() != tracks.size()) throw ContractError("embeddings and tracks differ in count");
  PredictionSet out;
  out.videos.reserve(tracks.size());
  for (std::size_t i = 0; i < tracks.size(); ++i) {
    try {
      const auto cls = classify(forests, embeddings[i]);
      out.videos.push_back({tracks[i].video_id, tracks[i].label.value_or(""), cls.probabilities});
    } catch (...) {
      rethrow_with_video(tracks[i].video_id);
    }
  }
  return out;
}

PredictionSet predict_all(const std::vector<VideoTrack>& tracks, const std::vector<ActionModel>& models,
                          const std::map<std::string, ForestModel>& forests, const PipelineConfig& config) {
  std::vector<ActionModel> used;
  for (const auto& m : models) {
    if (forests.count(m.action_id)) used.push_back(m);
  }
  for (const auto& [action, _] : forests) {
    if (std::none_of(models.begin(), models.end(), [&](const auto& m) { return m.action_id == action; })) {
      throw ContractError("forest '" + action + "' has no matching action model");
    }
  }
  return predict_from_embeddings(tracks, embed_all(tracks, used, config), forests);
}

DataSplit stratified_split(const std::vector<VideoTrack>& tracks, double validation_fraction, std::uint64_t seed) {
  if (!(validation_fraction >= 0.0 && validation_fraction <= 1.0)) {
    throw ConfigError("validation fraction must lie in [0, 1]");
  }
  std::map<std::string, std::vector<std::size_t>> by_label;
  for (std::size_t i = 0; i < tracks.size(); ++i) by_label[tracks[i].label.value_or("")].push_back(i);
  std::mt19937_64 rng(seed);
  std::vector<char> is_validation(tracks.size(), 0);
  for (auto& [label, idx] : by_label) {
    std::shuffle(idx.begin(), idx.end(), rng);
    const auto take = static_cast<std::size_t>(std::llround(validation_fraction * static_cast<double>(idx.size())));
    for (std::size_t k = 0; k < take; ++k) is_validation[idx[k]] = 1;
  }
  DataSplit split;
  for (std::size_t i = 0; i < tracks.size(); ++i) (is_validation[i] ? split.validation : split.train).push_back(i);
  return split;
}

DataSplit split_from_json(const std::vector<VideoTrack>& tracks, const json& doc) {
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < tracks.size(); ++i) index[tracks[i].video_id] = i;
  DataSplit split;
  const auto read = [&](const char* key, std::vector<std::size_t>& out) {
    auto it = doc.find(key);
    if (it == doc.end()) return;
    if (!it->is_array()) throw ParseError(std::string("split '") + key + "' must be an array of video ids");
    for (const auto& id : *it) {
      const auto name = id.get<std::string>();
      auto found = index.find(name);
      if (found == index.end()) throw ValidationError("split file names unknown video '" + name + "'");
      out.push_back(found->second);
    }
    std::sort(out.begin(), out.end());
  };
  if (!doc.is_object()) throw ParseError("split document must be an object");
  read("train", split.train);
  read("validation", split.validation);
  return split;
}

std::vector<VideoTrack> select(const std::vector<VideoTrack>& tracks, const std::vector<std::size_t>& indices) {
  std::vector<VideoTrack> out;
  out.reserve(indices.size());
  for (auto i : indices) out.push_back(tracks.at(i));
  return out;
}

}  // namespace relact
