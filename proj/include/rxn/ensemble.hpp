#pragma once

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rxn/align.hpp"
#include "rxn/error.hpp"
#include "rxn/core.hpp"
#include "rxn/prediction.hpp"

namespace rxn::ensemble {

// predictor id -> that predictor's set for one protein
using PredictorSets = std::map<std::string, PredictionSet>;

struct ExternalPredictions {
  std::map<std::string, PredictorSets> by_protein;
  std::vector<std::string> predictors;  // in order of first appearance
  std::vector<std::string> warnings;
};

// `protein_id<TAB>predictor_id<TAB>reaction_id[<TAB>confidence]`. Missing
// confidences default to 1. Every (protein, predictor) pair without rows is
// filled in as an abstention.
ExternalPredictions parse_external_predictions(std::string_view text);

// Merges `more` into `into`; a protein/predictor pair present in both is an
// error.
void merge_predictions(ExternalPredictions& into, const ExternalPredictions& more);

enum class Mode { Dynamic, Majority, RecallBoost };
Mode parse_mode(std::string_view name);  // "stacking" -> UnsupportedMode
std::string to_string(Mode m);

enum class TieRule { All, Fallback };
TieRule parse_tie_rule(std::string_view name);

struct EnsembleConfig {
  std::vector<std::string> predictors;
  std::string s1_id;
  double gate_threshold = 0.75;
  Mode mode = Mode::Dynamic;
  TieRule ties = TieRule::All;

  void validate() const;
};

// Reactions voted by the most predictors, when that count is at least two;
// otherwise the fallback predictor's set. Abstaining predictors neither vote
// nor count towards the confidence denominator.
PredictionSet integrate_majority(const PredictorSets& sets, const std::string& s1_id, TieRule ties = TieRule::All);

// Exact union; each reaction keeps its highest confidence.
PredictionSet integrate_recall_boost(const PredictorSets& sets);

// Majority path iff identity >= threshold.
Mode gate(double identity, double threshold);

PredictionSet dynamic_integrate(const ProteinRecord& query, std::span<const ProteinRecord> references,
                                const PredictorSets& sets, const EnsembleConfig& cfg,
                                const ScoringScheme& scheme = {});

// Applies cfg.mode to one protein. Dynamic mode needs references.
PredictionSet integrate(const ProteinRecord& query, std::span<const ProteinRecord> references,
                        const PredictorSets& sets, const EnsembleConfig& cfg);

// Rows for every non-abstaining set. With `with_gate` the mode and identity
// metadata are appended as two extra columns.
std::string write_predictions_tsv(std::span<const PredictionSet> sets, const std::string& predictor_id,
                                  bool with_gate = false);

}  // namespace rxn::ensemble
