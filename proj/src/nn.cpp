#include <algorithm>

#include "rxn/io.hpp"
#include "rxn/nn/train.hpp"

namespace rxn::nn {

std::vector<Example> make_examples(const Dataset& dataset, std::span<const std::string> ids) {
  std::vector<Example> out;
  out.reserve(ids.size());
  for (const auto& id : ids) {
    const auto& p = dataset.protein(id);
    out.push_back({id, tokenize(p.sequence), encode_labels(dataset.labels_of(id), dataset.space).bits()});
  }
  return out;
}

std::vector<double> alpha_from_frequencies(const Dataset& dataset, std::span<const std::string> ids) {
  if (ids.empty()) throw Error(ErrorCode::EmptyInput, "cannot derive label frequencies from no proteins");
  std::vector<double> positives(dataset.space.size(), 0.0);
  for (const auto& id : ids) {
    const auto bits = encode_labels(dataset.labels_of(id), dataset.space).bits();
    for (std::size_t i = 0; i < bits.size(); ++i) positives[i] += bits[i];
  }
  std::vector<double> alpha(positives.size());
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    alpha[i] = std::clamp(1.0 - positives[i] / static_cast<double>(ids.size()), 0.05, 0.95);
  }
  return alpha;
}

void TrainConfig::validate() const {
  if (epochs < 0) throw Error(ErrorCode::InvalidArgument, "epochs must be >= 0");
  if (batch_size < 1) throw Error(ErrorCode::InvalidArgument, "batch_size must be >= 1");
  if (!(learning_rate >= 0.0)) throw Error(ErrorCode::InvalidArgument, "learning rate must be >= 0");
  if (!(threshold > 0.0 && threshold < 1.0)) throw Error(ErrorCode::InvalidArgument, "threshold outside (0,1)");
  if (patience < 0) throw Error(ErrorCode::InvalidArgument, "patience must be >= 0");
}

std::string format_history(const TrainingHistory& history) {
  std::string out = "#epoch\ttrain_loss\tval_mF1\n";
  for (const auto& r : history) {
    out += std::to_string(r.epoch) + "\t" + format_real(r.train_loss) + "\t" + format_real(r.val_mf1) + "\n";
  }
  return out;
}

PredictionSet decide(const std::string& protein_id, std::span<const double> scores, const LabelSpace& space,
                     double threshold) {
  if (scores.size() != space.size()) throw Error(ErrorCode::ShapeMismatch, "score vector length differs from space");
  PredictionSet out;
  out.protein_id = protein_id;
  const auto top = static_cast<std::size_t>(std::max_element(scores.begin(), scores.end()) - scores.begin());
  const auto none = LabelSpace::none_index();
  if (top == none && scores[none] >= threshold) {
    out.items.push_back({space.label(none), scores[none], {}});
    return out;
  }
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (i != none && scores[i] >= threshold) out.items.push_back({space.label(i), scores[i], {}});
  }
  if (out.items.empty()) out.items.push_back({space.label(top), scores[top], {}});
  out.rank();
  return out;
}

}  // namespace rxn::nn
