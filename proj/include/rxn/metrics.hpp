#pragma once

#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "rxn/core.hpp"
#include "rxn/prediction.hpp"

namespace rxn {

// protein id -> label tokens (kVirtualLabel for non-enzymes). An empty set is
// an abstention.
using Labelings = std::map<std::string, std::set<std::string>>;

struct ClassCounts {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  bool operator==(const ClassCounts&) const = default;
};

struct ClassMetrics {
  std::string label;
  ClassCounts counts;
  double acc = 0, ppv = 0, recall = 0, f1 = 0;
};

struct MetricsOptions {
  // Average over every label of the space instead of only the labels seen in
  // gold or predictions. Unseen classes then score 1 on every metric.
  bool global_n = false;
  // Report the mean of per-class F1 as mF1 instead of the harmonic mean of
  // mPR and mRecall.
  bool per_class_f1 = false;
};

struct MetricsReport {
  std::size_t n_classes = 0;
  std::size_t n_samples = 0;
  std::vector<ClassMetrics> classes;
  double macc = 0, mpr = 0, mrecall = 0, mf1 = 0;
  double mf1_harmonic = 0;       // 2*mPR*mRecall/(mPR+mRecall)
  double mf1_per_class_mean = 0; // mean over classes of per-class F1
};

struct CoverageReport {
  std::size_t n_proteins = 0;
  double enzyme = 0, non_enzyme = 0, no_prediction = 0, reaction_mapped = 0;
};

// One-vs-rest counts for every label of `space`. Gold and predictions must
// cover the same ids and use labels of the space.
std::map<std::string, ClassCounts> confusion_per_class(const Labelings& gold, const Labelings& pred,
                                                       const LabelSpace& space);

MetricsReport macro_metrics(const Labelings& gold, const Labelings& pred, const LabelSpace& space,
                            const MetricsOptions& opts = {});

CoverageReport coverage_report(const std::vector<PredictionSet>& predictions, const LabelSpace& space);

Labelings to_labelings(const Annotations& annotations);
Labelings to_labelings(const std::vector<PredictionSet>& predictions);

std::string format_metrics(const MetricsReport& report, bool with_classes = true);
std::string format_coverage(const CoverageReport& report);

}  // namespace rxn
