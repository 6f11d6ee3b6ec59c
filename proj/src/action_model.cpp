#include "relact/action_model.hpp"

#include <algorithm>
#include <set>

#include "relact/error.hpp"
#include "relact/ingest.hpp"

namespace relact {

using nlohmann::json;

char phase_name(Phase p) { return static_cast<char>('a' + index_of(p)); }

std::optional<Phase> phase_from_name(std::string_view name) {
  if (name.size() != 1 || name[0] < 'a' || name[0] > 'e') return std::nullopt;
  return static_cast<Phase>(name[0] - 'a');
}

namespace {

struct FeatureInfo {
  Feature feature;
  std::string_view name;
  std::size_t arity;
  bool boolean;
};

constexpr std::array<FeatureInfo, 17> kFeatureTable = {{
    {Feature::Size, "Size", 1, false},
    {Feature::Offset, "Offset", 1, false},
    {Feature::OffsetX, "OffsetX", 1, false},
    {Feature::OffsetY, "OffsetY", 1, false},
    {Feature::Present, "Present", 1, true},
    {Feature::Moving, "Moving", 1, true},
    {Feature::MoveWithHand, "MoveWithHand", 1, true},
    {Feature::HandMoveRelative, "HandMoveRelative", 1, true},
    {Feature::OverlapNormalised, "OverlapNormalised", 2, false},
    {Feature::OffsetDist, "OffsetDist", 2, false},
    {Feature::OffsetAngle, "OffsetAngle", 2, false},
    {Feature::CentreDist, "CentreDist", 2, false},
    {Feature::Touching, "Touching", 2, true},
    {Feature::Contained, "Contained", 2, true},
    {Feature::CentreOnTop, "CentreOnTop", 2, true},
    {Feature::CentreUnderneath, "CentreUnderneath", 2, true},
    {Feature::ObjectMoveRelative, "ObjectMoveRelative", 2, true},
}};

const FeatureInfo& info(Feature f) { return kFeatureTable[static_cast<std::size_t>(f)]; }

}  // namespace

std::string_view feature_name(Feature f) { return info(f).name; }
std::size_t feature_arity(Feature f) { return info(f).arity; }
bool feature_is_boolean(Feature f) { return info(f).boolean; }

std::optional<Feature> feature_from_name(std::string_view name) {
  for (const auto& fi : kFeatureTable) {
    if (fi.name == name) return fi.feature;
  }
  return std::nullopt;
}

std::string FeatureRef::name() const {
  std::string s(feature_name(feature));
  s += '(';
  s += entity_name(first);
  if (second) {
    s += ',';
    s += entity_name(*second);
  }
  s += ')';
  return s;
}

double feature_value(const FrameRelations& r, const FeatureRef& ref) {
  const auto a = index_of(ref.first);
  const auto b = ref.second ? index_of(*ref.second) : a;
  const auto flag = [](bool v) { return v ? 1.0 : 0.0; };
  switch (ref.feature) {
    case Feature::Size: return r.size[a];
    case Feature::Offset: return r.offset[a].norm();
    case Feature::OffsetX: return r.offset[a].x;
    case Feature::OffsetY: return r.offset[a].y;
    case Feature::Present: return flag(r.present[a]);
    case Feature::Moving: return flag(r.moving[a]);
    case Feature::MoveWithHand: return flag(r.move_with_hand[a]);
    case Feature::HandMoveRelative: return flag(r.hand_move_relative[a]);
    case Feature::OverlapNormalised: return r.overlap_norm[a][b];
    case Feature::OffsetDist: return r.offset_dist[a][b];
    case Feature::OffsetAngle: return r.offset_angle[a][b];
    case Feature::CentreDist: return r.centre_dist[a][b];
    case Feature::Touching: return flag(r.touching[a][b]);
    case Feature::Contained: return flag(r.contained[a][b]);
    case Feature::CentreOnTop: return flag(r.centre_on_top[a][b]);
    case Feature::CentreUnderneath: return flag(r.centre_underneath[a][b]);
    case Feature::ObjectMoveRelative: return flag(r.object_move_relative[a][b]);
  }
  return 0.0;
}

double ScoreTerm::evaluate(const FrameRelations& rel) const {
  double v = feature_value(rel, ref);
  bool unit = feature_is_boolean(ref.feature);
  if (threshold) {
    v = v > *threshold ? 1.0 : 0.0;
    unit = true;
  }
  if (negate) v = unit ? 1.0 - v : -v;
  return weight * v;
}

std::string_view embedding_mode_name(EmbeddingMode m) {
  return m == EmbeddingMode::scores_only ? "scores_only" : "scores_and_features";
}

EmbeddingMode embedding_mode_from_name(std::string_view name) {
  if (name == "scores_only") return EmbeddingMode::scores_only;
  if (name == "scores_and_features") return EmbeddingMode::scores_and_features;
  throw ConfigError("unknown embedding mode '" + std::string(name) + "'");
}

double ActionModel::score(Phase p, const FrameRelations& rel) const {
  double s = 0.0;
  for (const auto& term : phases[index_of(p)]) s += term.evaluate(rel);
  return s;
}

namespace {

FeatureRef feature_ref_from_json(const json& j, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": feature entry must be an object");
  auto fit = j.find("feature");
  if (fit == j.end() || !fit->is_string()) throw ConfigError(where + ": missing 'feature' name");
  const auto fname = fit->get<std::string>();
  auto feature = feature_from_name(fname);
  if (!feature) throw ConfigError(where + ": unknown feature '" + fname + "'");

  auto ait = j.find("args");
  if (ait == j.end() || !ait->is_array()) throw ConfigError(where + ": '" + fname + "' needs an 'args' array");
  if (ait->size() != feature_arity(*feature)) {
    throw ConfigError(where + ": '" + fname + "' takes " + std::to_string(feature_arity(*feature)) +
                      " argument(s)");
  }
  std::vector<Entity> roles;
  for (const auto& arg : *ait) {
    auto role = arg.is_string() ? entity_from_name(arg.get<std::string>()) : std::nullopt;
    if (!role) throw ConfigError(where + ": '" + fname + "' has an unknown entity role " + arg.dump());
    roles.push_back(*role);
  }
  FeatureRef ref{*feature, roles[0], std::nullopt};
  if (roles.size() == 2) {
    if (roles[0] == roles[1]) throw ConfigError(where + ": '" + fname + "' needs two distinct entities");
    ref.second = roles[1];
  }
  if ((*feature == Feature::MoveWithHand || *feature == Feature::HandMoveRelative) && ref.first == Entity::hand) {
    throw ConfigError(where + ": '" + fname + "' takes an object, not the hand");
  }
  return ref;
}

json feature_ref_to_json(const FeatureRef& ref) {
  json args = json::array({entity_name(ref.first)});
  if (ref.second) args.push_back(entity_name(*ref.second));
  return {{"feature", feature_name(ref.feature)}, {"args", std::move(args)}};
}

}  // namespace

ActionModel action_model_from_json(const json& doc, const RelationThresholds& base) {
  if (!doc.is_object()) throw ConfigError("action model must be a JSON object");
  ActionModel model;
  auto id_it = doc.find("action_id");
  if (id_it == doc.end() || !id_it->is_string() || id_it->get<std::string>().empty()) {
    throw ConfigError("action model without 'action_id'");
  }
  model.action_id = id_it->get<std::string>();
  const std::string where = "action model '" + model.action_id + "'";

  model.thresholds = base;
  if (auto it = doc.find("thresholds"); it != doc.end()) model.thresholds = thresholds_from_json(*it, base);

  auto phases_it = doc.find("phases");
  if (phases_it == doc.end() || !phases_it->is_object()) throw ConfigError(where + ": missing 'phases' object");
  for (const auto& [key, _] : phases_it->items()) {
    if (!phase_from_name(key)) throw ConfigError(where + ": unknown phase '" + key + "'");
  }
  for (Phase p : kPhases) {
    const std::string key(1, phase_name(p));
    const std::string pwhere = where + " phase " + key;
    auto it = phases_it->find(key);
    if (it == phases_it->end() || !it->is_array() || it->empty()) {
      throw ConfigError(pwhere + ": every phase needs at least one term");
    }
    for (const auto& t : *it) {
      ScoreTerm term;
      term.ref = feature_ref_from_json(t, pwhere);
      if (auto w = t.find("weight"); w != t.end()) {
        if (!w->is_number()) throw ConfigError(pwhere + ": 'weight' must be a number");
        term.weight = w->get<double>();
      }
      if (auto n = t.find("negate"); n != t.end()) {
        if (!n->is_boolean()) throw ConfigError(pwhere + ": 'negate' must be a boolean");
        term.negate = n->get<bool>();
      }
      if (auto th = t.find("threshold"); th != t.end() && !th->is_null()) {
        if (!th->is_number()) throw ConfigError(pwhere + ": 'threshold' must be a number");
        term.threshold = th->get<double>();
      }
      model.phases[index_of(p)].push_back(term);
    }
  }

  if (auto it = doc.find("features"); it != doc.end()) {
    if (!it->is_array()) throw ConfigError(where + ": 'features' must be an array");
    for (const auto& f : *it) {
      auto ref = feature_ref_from_json(f, where + " features");
      if (std::find(model.feature_list.begin(), model.feature_list.end(), ref) != model.feature_list.end()) {
        throw ConfigError(where + ": duplicate feature " + ref.name());
      }
      model.feature_list.push_back(ref);
    }
  } else {
    for (const auto& terms : model.phases) {
      for (const auto& t : terms) {
        if (std::find(model.feature_list.begin(), model.feature_list.end(), t.ref) == model.feature_list.end()) {
          model.feature_list.push_back(t.ref);
        }
      }
    }
  }
  return model;
}

json action_model_to_json(const ActionModel& model) {
  json phases = json::object();
  for (Phase p : kPhases) {
    json terms = json::array();
    for (const auto& t : model.phases[index_of(p)]) {
      json jt = feature_ref_to_json(t.ref);
      jt["weight"] = t.weight;
      if (t.negate) jt["negate"] = true;
      if (t.threshold) jt["threshold"] = *t.threshold;
      terms.push_back(std::move(jt));
    }
    phases[std::string(1, phase_name(p))] = std::move(terms);
  }
  json features = json::array();
  for (const auto& f : model.feature_list) features.push_back(feature_ref_to_json(f));
  return {{"action_id", model.action_id},
          {"thresholds", thresholds_to_json(model.thresholds)},
          {"features", std::move(features)},
          {"phases", std::move(phases)}};
}

std::vector<ActionModel> load_action_models(const std::filesystem::path& path, const RelationThresholds& base) {
  std::vector<std::filesystem::path> files;
  if (std::filesystem::is_directory(path)) {
    for (const auto& entry : std::filesystem::directory_iterator(path)) {
      if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
  } else {
    files.push_back(path);
  }
  std::vector<ActionModel> models;
  std::set<std::string> seen;
  for (const auto& f : files) {
    json doc;
    try {
      doc = json::parse(read_text_file(f));
    } catch (const json::parse_error& e) {
      throw ConfigError("'" + f.string() + "' is not valid JSON: " + e.what());
    }
    auto model = action_model_from_json(doc, base);
    if (!seen.insert(model.action_id).second) {
      throw ConfigError("duplicate action model '" + model.action_id + "' in '" + f.string() + "'");
    }
    models.push_back(std::move(model));
  }
  if (models.empty()) throw ConfigError("no action models found at '" + path.string() + "'");
  return models;
}

}  // namespace relact
