#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "rxn/core.hpp"
#include "rxn/nn/model.hpp"

namespace rxn::nn {

struct FocalLossConfig {
  double gamma = 2.0;
  std::vector<double> alpha;  // one per label

  void validate(std::size_t n_labels) const {
    if (!(gamma > 0.0)) throw Error(ErrorCode::InvalidArgument, "focal gamma must be > 0");
    if (alpha.size() != n_labels) throw Error(ErrorCode::ShapeMismatch, "alpha length differs from label count");
    for (double a : alpha) {
      if (!(a >= 0.0 && a <= 1.0)) throw Error(ErrorCode::InvalidArgument, "alpha outside [0,1]");
    }
  }
};

inline constexpr double kLossClamp = 1e-7;

// alpha_i = 1 - (positive frequency of label i among `ids`), clamped to
// [0.05, 0.95].
std::vector<double> alpha_from_frequencies(const Dataset& dataset, std::span<const std::string> ids);

template <class T>
Vec<T> clamp_for_loss(const Vec<T>& scores) {
  const T lo = static_cast<T>(kLossClamp), hi = static_cast<T>(1.0 - kLossClamp);
  return scores.cwiseMax(lo).cwiseMin(hi);
}

namespace detail {

inline void check_loss_inputs(std::size_t n_scores, std::size_t n_target, std::size_t n_alpha) {
  if (n_scores != n_target || n_scores != n_alpha) {
    throw Error(ErrorCode::ShapeMismatch, "focal loss operands differ in length");
  }
  if (n_scores == 0) throw Error(ErrorCode::EmptyInput, "focal loss over zero labels");
}

}  // namespace detail

// Mean over labels of
//   -[a_i (1-p_i)^g y_i log p_i + (1-a_i) p_i^g (1-y_i) log(1-p_i)].
// Scores must lie strictly inside (0,1); callers clamp.
template <class T>
T focal_loss(const Vec<T>& scores, std::span<const std::uint8_t> target, const FocalLossConfig& cfg) {
  detail::check_loss_inputs(static_cast<std::size_t>(scores.size()), target.size(), cfg.alpha.size());
  const T gamma = static_cast<T>(cfg.gamma);
  T sum = 0;
  for (Eigen::Index i = 0; i < scores.size(); ++i) {
    const T p = scores(i);
    if (!(p > T(0) && p < T(1))) {
      throw Error(ErrorCode::InvalidArgument, "focal loss needs scores strictly inside (0,1)");
    }
    const T a = static_cast<T>(cfg.alpha[static_cast<std::size_t>(i)]);
    if (target[static_cast<std::size_t>(i)]) {
      sum -= a * std::pow(T(1) - p, gamma) * std::log(p);
    } else {
      sum -= (T(1) - a) * std::pow(p, gamma) * std::log(T(1) - p);
    }
  }
  return sum / static_cast<T>(scores.size());
}

// Derivative of focal_loss(clamp_for_loss(sigmoid(logits))) with respect to
// the logits, given the unclamped scores. Labels whose score sits on the
// clamp boundary receive zero gradient.
template <class T>
Vec<T> focal_loss_logit_grad(const Vec<T>& scores, std::span<const std::uint8_t> target,
                             const FocalLossConfig& cfg) {
  detail::check_loss_inputs(static_cast<std::size_t>(scores.size()), target.size(), cfg.alpha.size());
  const T gamma = static_cast<T>(cfg.gamma);
  const T lo = static_cast<T>(kLossClamp), hi = static_cast<T>(1.0 - kLossClamp);
  const T inv_n = T(1) / static_cast<T>(scores.size());
  Vec<T> g(scores.size());
  for (Eigen::Index i = 0; i < scores.size(); ++i) {
    const T p = scores(i);
    if (p <= lo || p >= hi) {
      g(i) = 0;
      continue;
    }
    const T a = static_cast<T>(cfg.alpha[static_cast<std::size_t>(i)]);
    // d/dz with p = sigmoid(z), folded so no negative powers of p appear.
    if (target[static_cast<std::size_t>(i)]) {
      g(i) = a * std::pow(T(1) - p, gamma) * (gamma * p * std::log(p) - (T(1) - p));
    } else {
      g(i) = (T(1) - a) * std::pow(p, gamma) * (p - gamma * (T(1) - p) * std::log(T(1) - p));
    }
    g(i) *= inv_n;
  }
  return g;
}

}  // namespace rxn::nn
