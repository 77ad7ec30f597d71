#include "rxn/prediction.hpp"

#include <algorithm>

#include "rxn/error.hpp"

namespace rxn {

PredictionSet PredictionSet::abstain(std::string protein_id) {
  PredictionSet out;
  out.protein_id = std::move(protein_id);
  out.no_prediction = true;
  return out;
}

std::set<std::string> PredictionSet::labels() const {
  std::set<std::string> out;
  for (const auto& it : items) out.insert(it.reaction);
  return out;
}

const PredictionItem* PredictionSet::find(const std::string& reaction) const {
  for (const auto& it : items) {
    if (it.reaction == reaction) return &it;
  }
  return nullptr;
}

void PredictionSet::rank() {
  std::stable_sort(items.begin(), items.end(), [](const auto& x, const auto& y) {
    if (x.confidence != y.confidence) return x.confidence > y.confidence;
    return x.reaction < y.reaction;
  });
}

void PredictionSet::validate() const {
  if (no_prediction && !items.empty()) {
    throw Error(ErrorCode::InvalidArgument, "no_prediction set for '" + protein_id + "' carries items");
  }
  std::set<std::string> seen;
  for (const auto& it : items) {
    if (!seen.insert(it.reaction).second) {
      throw Error(ErrorCode::InvalidArgument, "duplicate reaction '" + it.reaction + "' for '" + protein_id + "'");
    }
    if (!(it.confidence >= 0.0 && it.confidence <= 1.0)) {
      throw Error(ErrorCode::InvalidArgument, "confidence outside [0,1] for '" + protein_id + "'");
    }
  }
}

std::set<std::string> label_tokens(const ReactionSet& reactions) {
  if (reactions.empty()) return {std::string(kVirtualLabel)};
  return {reactions.begin(), reactions.end()};
}

}  // namespace rxn
