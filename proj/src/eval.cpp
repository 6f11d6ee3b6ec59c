#include "relact/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>
#include <sstream>

#include "relact/error.hpp"

namespace relact {

using nlohmann::json;

std::vector<std::string> PredictionSet::actions() const {
  std::vector<std::string> out;
  if (videos.empty()) return out;
  for (const auto& [a, _] : videos.front().probabilities) out.push_back(a);
  return out;
}

void PredictionSet::validate() const {
  const auto universe = actions();
  std::set<std::string> ids;
  for (const auto& v : videos) {
    if (!ids.insert(v.video_id).second) throw ContractError("duplicate video '" + v.video_id + "' in prediction set");
    if (v.probabilities.size() != universe.size() ||
        !std::equal(universe.begin(), universe.end(), v.probabilities.begin(),
                    [](const std::string& a, const auto& kv) { return a == kv.first; })) {
      throw ContractError("video '" + v.video_id + "' has a different action set than the rest of the predictions");
    }
    for (const auto& [a, p] : v.probabilities) {
      if (!std::isfinite(p)) throw ContractError("video '" + v.video_id + "': non-finite probability for '" + a + "'");
    }
  }
}

std::string argmax_action(const std::map<std::string, double>& probabilities) {
  if (probabilities.empty()) throw ContractError("empty probability map");
  auto best = probabilities.begin();
  for (auto it = std::next(best); it != probabilities.end(); ++it) {
    if (it->second > best->second) best = it;
  }
  return best->first;
}

std::optional<double> average_precision(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  if (scores.size() != labels.size()) throw ContractError("scores and labels differ in length");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    if (scores[i] != scores[j]) return scores[i] > scores[j];
    return labels[i] < labels[j];
  });
  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    if (labels[order[rank]] != 0) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(rank + 1);
    }
  }
  if (hits == 0) return std::nullopt;
  return sum / static_cast<double>(hits);
}

EvalReport evaluate(const PredictionSet& preds) {
  if (preds.videos.empty()) throw ContractError("cannot evaluate an empty prediction set");
  preds.validate();
  EvalReport report;
  report.actions = preds.actions();
  std::map<std::string, std::size_t> column;
  for (std::size_t i = 0; i < report.actions.size(); ++i) column[report.actions[i]] = i;

  const std::size_t k = report.actions.size();
  report.confusion.assign(k, std::vector<std::size_t>(k, 0));
  std::size_t correct = 0;
  for (const auto& v : preds.videos) {
    auto it = column.find(v.true_label);
    if (it == column.end()) {
      throw ContractError("video '" + v.video_id + "' is labelled '" + v.true_label +
                          "', which has no probability column");
    }
    const auto predicted = argmax_action(v.probabilities);
    report.confusion[it->second][column[predicted]] += 1;
    correct += predicted == v.true_label;
  }
  report.accuracy = static_cast<double>(correct) / static_cast<double>(preds.videos.size());

  std::vector<double> scores(preds.videos.size());
  std::vector<std::uint8_t> labels(preds.videos.size());
  double weighted = 0.0;
  double weight = 0.0;
  double macro = 0.0;
  std::size_t defined = 0;
  for (const auto& action : report.actions) {
    for (std::size_t i = 0; i < preds.videos.size(); ++i) {
      scores[i] = preds.videos[i].probabilities.at(action);
      labels[i] = preds.videos[i].true_label == action;
    }
    const auto support = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), std::uint8_t{1}));
    report.support[action] = support;
    const auto ap = average_precision(scores, labels);
    report.ap[action] = ap;
    if (!ap) {
      report.warnings.push_back("action '" + action + "' has no positive videos; AP undefined and excluded from mAP");
      continue;
    }
    weighted += static_cast<double>(support) * *ap;
    weight += static_cast<double>(support);
    macro += *ap;
    ++defined;
  }
  if (defined > 0) {
    report.weighted_map = weighted / weight;
    report.macro_map = macro / static_cast<double>(defined);
  } else {
    report.warnings.push_back("no action has positive videos; mAP reported as 0");
  }
  return report;
}

PredictionSet fuse(const PredictionSet& a, const PredictionSet& b) {
  a.validate();
  b.validate();
  std::map<std::string, const VideoPrediction*> index_b;
  for (const auto& v : b.videos) index_b[v.video_id] = &v;
  std::set<std::string> ids_a;
  for (const auto& v : a.videos) ids_a.insert(v.video_id);

  std::vector<std::string> only_a;
  std::vector<std::string> only_b;
  for (const auto& id : ids_a) {
    if (!index_b.count(id)) only_a.push_back(id);
  }
  for (const auto& [id, _] : index_b) {
    if (!ids_a.count(id)) only_b.push_back(id);
  }
  if (!only_a.empty() || !only_b.empty()) {
    std::string msg = "prediction sets cover different videos;";
    const auto list = [&](const char* name, const std::vector<std::string>& ids) {
      if (ids.empty()) return;
      msg += std::string(" only in ") + name + ":";
      for (std::size_t i = 0; i < ids.size() && i < 10; ++i) msg += " " + ids[i];
      if (ids.size() > 10) msg += " ... (" + std::to_string(ids.size()) + " total)";
    };
    list("first", only_a);
    list("second", only_b);
    throw ContractError(msg);
  }
  if (!a.videos.empty() && a.actions() != b.actions()) throw ContractError("prediction sets use different action sets");

  PredictionSet out;
  out.videos.reserve(a.videos.size());
  for (const auto& va : a.videos) {
    const auto& vb = *index_b.at(va.video_id);
    VideoPrediction fused{va.video_id, va.true_label.empty() ? vb.true_label : va.true_label, {}};
    for (const auto& [action, p] : va.probabilities) fused.probabilities[action] = p + vb.probabilities.at(action);
    out.videos.push_back(std::move(fused));
  }
  return out;
}

json prediction_set_to_json(const PredictionSet& preds) {
  json videos = json::array();
  for (const auto& v : preds.videos) {
    json rec = {{"video_id", v.video_id}, {"probabilities", v.probabilities}};
    if (!v.true_label.empty()) rec["true_label"] = v.true_label;
    videos.push_back(std::move(rec));
  }
  return {{"actions", preds.actions()}, {"predictions", std::move(videos)}};
}

PredictionSet prediction_set_from_json(const json& doc) {
  PredictionSet out;
  try {
    const auto& records = doc.is_array() ? doc : doc.at("predictions");
    for (const auto& rec : records) {
      VideoPrediction v;
      v.video_id = rec.at("video_id").get<std::string>();
      if (auto it = rec.find("true_label"); it != rec.end() && !it->is_null()) v.true_label = it->get<std::string>();
      v.probabilities = rec.at("probabilities").get<std::map<std::string, double>>();
      out.videos.push_back(std::move(v));
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("invalid prediction document: ") + e.what());
  }
  out.validate();
  return out;
}

json report_to_json(const EvalReport& r) {
  json per_action = json::array();
  for (const auto& a : r.actions) {
    const auto& ap = r.ap.at(a);
    per_action.push_back({{"action_id", a}, {"ap", ap ? json(*ap) : json(nullptr)}, {"support", r.support.at(a)}});
  }
  return {{"actions", r.actions},
          {"per_action", std::move(per_action)},
          {"weighted_map", r.weighted_map},
          {"macro_map", r.macro_map},
          {"accuracy", r.accuracy},
          {"confusion", r.confusion},
          {"warnings", r.warnings}};
}

namespace {

std::string fixed2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace

std::string report_table(const EvalReport& r, const std::string& method) {
  std::vector<std::string> header{"Method"};
  std::vector<std::string> row{method};
  for (const auto& a : r.actions) {
    header.push_back(a);
    const auto& ap = r.ap.at(a);
    row.push_back(ap ? fixed2(*ap) : "n/a");
  }
  header.push_back("mAP");
  row.push_back(fixed2(r.weighted_map));
  header.push_back("mAP(macro)");
  row.push_back(fixed2(r.macro_map));

  std::vector<std::size_t> width(header.size());
  for (std::size_t i = 0; i < header.size(); ++i) width[i] = std::max(header[i].size(), row[i].size());
  std::ostringstream out;
  const auto emit = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i > 0) out << " | ";
      if (i == 0) {
        out << cells[i] << std::string(width[i] - cells[i].size(), ' ');
      } else {
        out << std::string(width[i] - cells[i].size(), ' ') << cells[i];
      }
    }
    out << '\n';
  };
  emit(header);
  std::string rule;
  for (std::size_t i = 0; i < width.size(); ++i) rule += (i ? "-|-" : "") + std::string(width[i], '-');
  out << rule << '\n';
  emit(row);
  return out.str();
}

std::string confusion_csv(const EvalReport& r) {
  std::ostringstream out;
  out << "true\\predicted";
  for (const auto& a : r.actions) out << ',' << a;
  out << '\n';
  for (std::size_t i = 0; i < r.actions.size(); ++i) {
    out << r.actions[i];
    for (auto c : r.confusion[i]) out << ',' << c;
    out << '\n';
  }
  return out.str();
}

}  // namespace relact
