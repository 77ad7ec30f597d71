#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "rxn/core.hpp"

namespace rxn {

struct PredictionItem {
  std::string reaction;  // kVirtualLabel for a non-enzyme call
  double confidence = 1.0;
  std::vector<std::string> sources;  // contributing predictors, sorted
};

// Ranked candidate reactions for one protein from one predictor (or from an
// ensemble). `no_prediction` means the predictor abstained.
struct PredictionSet {
  std::string protein_id;
  std::vector<PredictionItem> items;
  bool no_prediction = false;
  std::map<std::string, std::string> metadata;

  static PredictionSet abstain(std::string protein_id);

  // Reaction ids, with the virtual label kept as its own token.
  std::set<std::string> labels() const;
  const PredictionItem* find(const std::string& reaction) const;

  // Orders items by confidence, then by reaction id.
  void rank();
  // Throws InvalidArgument when an invariant is broken.
  void validate() const;
};

// Gold label set in the same vocabulary as PredictionSet::labels().
std::set<std::string> label_tokens(const ReactionSet& reactions);

}  // namespace rxn
