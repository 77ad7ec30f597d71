#pragma once

#include <cmath>
#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "rxn/core.hpp"
#include "rxn/metrics.hpp"
#include "rxn/nn/focal.hpp"
#include "rxn/nn/network.hpp"
#include "rxn/prediction.hpp"

namespace rxn::nn {

struct Example {
  std::string id;
  std::vector<int> tokens;
  std::vector<std::uint8_t> target;  // encoded LabelVector bits
};

std::vector<Example> make_examples(const Dataset& dataset, std::span<const std::string> ids);

struct TrainConfig {
  int epochs = 30;
  int batch_size = 16;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double clip_norm = 5.0;
  int patience = 8;  // epochs without validation improvement; 0 disables
  double threshold = 0.5;
  bool use_attention = true;
  std::uint64_t seed = 0;

  void validate() const;
};

template <class T>
struct AdamState {
  Params<T> m, v;
  long step = 0;

  explicit AdamState(const Params<T>& like) : m(like.zeros_like()), v(like.zeros_like()) {}
};

struct StepResult {
  double loss = 0;
  double grad_norm = 0;
  bool clipped = false;
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0;
  double val_mf1 = 0;
  int clipped_steps = 0;
};

using TrainingHistory = std::vector<EpochRecord>;

std::string format_history(const TrainingHistory& history);

// Mean focal loss over the batch; the gradient of that mean is accumulated
// into `grad` (which must be zeroed by the caller).
template <class T>
T loss_and_gradient(const Model<T>& model, std::span<const Example> batch, const FocalLossConfig& focal,
                    bool use_attention, Params<T>& grad) {
  const T inv_b = T(1) / static_cast<T>(batch.size());
  T total = 0;
  Trace<T> tr;
  for (const auto& ex : batch) {
    forward_trace(model, ex.tokens, use_attention, tr);
    total += focal_loss<T>(clamp_for_loss<T>(tr.scores), ex.target, focal);
    const Vec<T> d_logits = focal_loss_logit_grad<T>(tr.scores, ex.target, focal) * inv_b;
    backward(model, tr, d_logits, grad);
  }
  return total * inv_b;
}

// One clipped adaptive-moment step over the batch.
template <class T>
StepResult train_step(Model<T>& model, std::span<const Example> batch, const FocalLossConfig& focal,
                      AdamState<T>& state, const TrainConfig& cfg) {
  if (batch.empty()) throw Error(ErrorCode::EmptyInput, "empty training batch");
  if (!(cfg.learning_rate >= 0.0)) throw Error(ErrorCode::InvalidArgument, "learning rate must be >= 0");
  Params<T> grad = model.params.zeros_like();
  StepResult res;
  res.loss = static_cast<double>(loss_and_gradient(model, batch, focal, cfg.use_attention, grad));
  if (!std::isfinite(res.loss)) throw Error(ErrorCode::NonFinite, "non-finite loss in layer loss");

  double sq = 0;
  grad.visit([&](const char*, const auto& g) { sq += static_cast<double>(g.squaredNorm()); });
  res.grad_norm = std::sqrt(sq);
  if (!std::isfinite(res.grad_norm)) throw Error(ErrorCode::NonFinite, "non-finite gradient norm");
  if (cfg.clip_norm > 0 && res.grad_norm > cfg.clip_norm) {
    const T s = static_cast<T>(cfg.clip_norm / res.grad_norm);
    grad.visit([&](const char*, auto& g) { g *= s; });
    res.clipped = true;
  }

  ++state.step;
  const T b1 = static_cast<T>(cfg.beta1), b2 = static_cast<T>(cfg.beta2);
  const T c1 = static_cast<T>(1.0 - std::pow(cfg.beta1, static_cast<double>(state.step)));
  const T c2 = static_cast<T>(1.0 - std::pow(cfg.beta2, static_cast<double>(state.step)));
  const T lr = static_cast<T>(cfg.learning_rate), eps = static_cast<T>(cfg.adam_eps);

  // Walk the four Params trees in lockstep through their flat visit order.
  std::vector<T*> g_ptr, m_ptr, v_ptr, p_ptr;
  std::vector<Eigen::Index> sizes;
  grad.visit([&](const char*, auto& t) { g_ptr.push_back(t.data()); sizes.push_back(t.size()); });
  state.m.visit([&](const char*, auto& t) { m_ptr.push_back(t.data()); });
  state.v.visit([&](const char*, auto& t) { v_ptr.push_back(t.data()); });
  model.params.visit([&](const char*, auto& t) { p_ptr.push_back(t.data()); });
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    for (Eigen::Index i = 0; i < sizes[k]; ++i) {
      const T g = g_ptr[k][i];
      T& m = m_ptr[k][i];
      T& v = v_ptr[k][i];
      m = b1 * m + (T(1) - b1) * g;
      v = b2 * v + (T(1) - b2) * g * g;
      p_ptr[k][i] -= lr * (m / c1) / (std::sqrt(v / c2) + eps);
    }
  }
  return res;
}

// Thresholded prediction. The virtual label wins when it clears the threshold
// and is the top score; otherwise every reaction clearing the threshold is
// returned. With nothing above the threshold the single top label is kept.
PredictionSet decide(const std::string& protein_id, std::span<const double> scores, const LabelSpace& space,
                     double threshold);

template <class T>
PredictionSet predict(const Model<T>& model, const ProteinRecord& protein, const LabelSpace& space,
                      double threshold = 0.5, bool use_attention = true) {
  if (!(threshold > 0.0 && threshold < 1.0)) throw Error(ErrorCode::InvalidArgument, "threshold outside (0,1)");
  if (static_cast<std::size_t>(model.config.n_labels) != space.size()) {
    throw Error(ErrorCode::ShapeMismatch, "model label count differs from the label space");
  }
  const auto tokens = tokenize(protein.sequence);
  const Vec<T> s = forward(model, tokens, use_attention);
  std::vector<double> scores(static_cast<std::size_t>(s.size()));
  for (Eigen::Index i = 0; i < s.size(); ++i) scores[static_cast<std::size_t>(i)] = static_cast<double>(s(i));
  return decide(protein.id, scores, space, threshold);
}

template <class T>
MetricsReport evaluate_model(const Model<T>& model, const Dataset& dataset, std::span<const std::string> ids,
                             double threshold = 0.5, const MetricsOptions& opts = {}) {
  Labelings gold, pred;
  for (const auto& id : ids) {
    gold.emplace(id, label_tokens(dataset.labels_of(id)));
    pred.emplace(id, predict(model, dataset.protein(id), dataset.space, threshold).labels());
  }
  return macro_metrics(gold, pred, dataset.space, opts);
}

// Mini-batch training with per-epoch seeded shuffling. The model ends up
// holding the parameters of the epoch with the best validation mF1.
template <class T>
TrainingHistory train(Model<T>& model, const Dataset& dataset, std::span<const std::string> train_ids,
                      std::span<const std::string> val_ids, const TrainConfig& cfg, const FocalLossConfig& focal) {
  cfg.validate();
  TrainingHistory history;
  if (cfg.epochs == 0) return history;
  if (train_ids.empty()) throw Error(ErrorCode::EmptyInput, "empty training set");
  {
    std::set<std::string> tr(train_ids.begin(), train_ids.end());
    for (const auto& id : val_ids) {
      if (tr.count(id)) throw Error(ErrorCode::InvalidArgument, "protein '" + id + "' in both train and validation");
    }
  }
  focal.validate(static_cast<std::size_t>(model.config.n_labels));

  auto examples = make_examples(dataset, train_ids);
  AdamState<T> state(model.params);
  Params<T> best = model.params;
  double best_f1 = -1;
  int since_best = 0;
  const std::size_t bs = static_cast<std::size_t>(cfg.batch_size);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    Rng rng(derive_seed(cfg.seed, "epoch-" + std::to_string(epoch)));
    rng.shuffle(examples);
    EpochRecord rec;
    rec.epoch = epoch;
    double loss_sum = 0;
    for (std::size_t start = 0; start < examples.size(); start += bs) {
      const auto len = std::min(bs, examples.size() - start);
      const auto r = train_step(model, std::span<const Example>(examples).subspan(start, len), focal, state, cfg);
      loss_sum += r.loss * static_cast<double>(len);
      rec.clipped_steps += r.clipped ? 1 : 0;
    }
    rec.train_loss = loss_sum / static_cast<double>(examples.size());
    rec.val_mf1 = val_ids.empty() ? 0.0 : evaluate_model(model, dataset, val_ids, cfg.threshold).mf1;
    history.push_back(rec);

    if (val_ids.empty() || rec.val_mf1 > best_f1) {
      best_f1 = rec.val_mf1;
      best = model.params;
      since_best = 0;
    } else if (cfg.patience > 0 && ++since_best >= cfg.patience) {
      break;
    }
  }
  model.params = std::move(best);
  return history;
}

}  // namespace rxn::nn
