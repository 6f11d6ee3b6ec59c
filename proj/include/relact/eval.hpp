#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace relact {

struct VideoPrediction {
  std::string video_id;
  std::string true_label;  // empty when unknown
  std::map<std::string, double> probabilities;
};

struct PredictionSet {
  std::vector<VideoPrediction> videos;

  // Action universe shared by every probability map (sorted).
  std::vector<std::string> actions() const;
  // Throws ContractError when the maps disagree or hold non-finite values.
  void validate() const;
};

// Highest-probability action; exact ties go to the lowest action id.
std::string argmax_action(const std::map<std::string, double>& probabilities);

// Mean over positives (in score-descending order) of the precision at each
// positive's rank. Tied scores rank negatives first. nullopt without positives.
std::optional<double> average_precision(std::span<const double> scores, std::span<const std::uint8_t> labels);

struct EvalReport {
  std::vector<std::string> actions;
  std::map<std::string, std::optional<double>> ap;  // nullopt: no positives
  std::map<std::string, std::size_t> support;
  double weighted_map = 0.0;  // support-weighted mean of the defined APs
  double macro_map = 0.0;     // unweighted mean of the defined APs
  double accuracy = 0.0;
  std::vector<std::vector<std::size_t>> confusion;  // [true][predicted], `actions` order
  std::vector<std::string> warnings;
};

EvalReport evaluate(const PredictionSet& preds);

// Per-video, per-action sum of probabilities. Throws ContractError listing the
// differing video ids when the sets or action universes do not match.
PredictionSet fuse(const PredictionSet& a, const PredictionSet& b);

// {"actions": [...], "predictions": [{"video_id", "true_label"?, "probabilities"}]};
// the reader also takes a bare array of prediction records.
nlohmann::json prediction_set_to_json(const PredictionSet& preds);
PredictionSet prediction_set_from_json(const nlohmann::json& doc);

nlohmann::json report_to_json(const EvalReport& report);
// Per-action AP columns followed by weighted and macro mAP, one row per method.
std::string report_table(const EvalReport& report, const std::string& method = "Proposed");
// Confusion grid with a header row of predicted actions and one row per true action.
std::string confusion_csv(const EvalReport& report);

}  // namespace relact
