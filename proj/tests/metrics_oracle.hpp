#pragma once

// Brute-force macro metrics: every class is tallied by its own pass over the
// samples, straight from the one-vs-rest definitions.

#include <string>
#include <vector>

#include "rxn/metrics.hpp"

namespace rxn::test {

struct OracleMetrics {
  std::size_t n_classes = 0;
  double macc = 0, mpr = 0, mrecall = 0, mf1 = 0, mf1_per_class = 0;
};

inline OracleMetrics brute_force_metrics(const Labelings& gold, const Labelings& pred,
                                         const std::vector<std::string>& classes, bool global_n = false) {
  OracleMetrics o;
  double acc = 0, ppv = 0, rec = 0, f1 = 0;
  for (const auto& c : classes) {
    double tp = 0, fp = 0, fn = 0, tn = 0;
    for (const auto& [id, g] : gold) {
      const bool in_g = g.count(c) > 0;
      const bool in_p = pred.at(id).count(c) > 0;
      tp += in_g && in_p;
      fp += !in_g && in_p;
      fn += in_g && !in_p;
      tn += !in_g && !in_p;
    }
    const bool seen = tp + fp + fn > 0;
    if (!seen && !global_n) continue;
    ++o.n_classes;
    if (!seen) {
      acc += 1, ppv += 1, rec += 1, f1 += 1;
      continue;
    }
    const double p = tp + fp == 0 ? 0.0 : tp / (tp + fp);
    const double r = tp + fn == 0 ? 0.0 : tp / (tp + fn);
    acc += (tp + tn) / (tp + fp + fn + tn);
    ppv += p;
    rec += r;
    f1 += p + r == 0 ? 0.0 : 2 * p * r / (p + r);
  }
  if (o.n_classes == 0) return o;
  const double n = static_cast<double>(o.n_classes);
  o.macc = acc / n;
  o.mpr = ppv / n;
  o.mrecall = rec / n;
  o.mf1 = o.mpr + o.mrecall == 0 ? 0.0 : 2 * o.mpr * o.mrecall / (o.mpr + o.mrecall);
  o.mf1_per_class = f1 / n;
  return o;
}

}  // namespace rxn::test
