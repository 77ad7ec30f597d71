#include "rxn/metrics.hpp"

#include "rxn/error.hpp"
#include "rxn/io.hpp"

namespace rxn {

std::map<std::string, ClassCounts> confusion_per_class(const Labelings& gold, const Labelings& pred,
                                                       const LabelSpace& space) {
  if (gold.size() != pred.size()) throw Error(ErrorCode::IdMismatch, "gold and predictions cover different ids");
  std::vector<ClassCounts> counts(space.size());
  auto g = gold.begin();
  auto p = pred.begin();
  for (; g != gold.end(); ++g, ++p) {
    if (g->first != p->first) {
      throw Error(ErrorCode::IdMismatch, "id '" + g->first + "' vs '" + p->first + "' in gold/predictions");
    }
    std::vector<std::uint8_t> in_gold(space.size(), 0), in_pred(space.size(), 0);
    for (const auto& l : g->second) in_gold[space.index(l)] = 1;
    for (const auto& l : p->second) in_pred[space.index(l)] = 1;
    for (std::size_t i = 0; i < space.size(); ++i) {
      auto& c = counts[i];
      if (in_gold[i] && in_pred[i]) ++c.tp;
      else if (in_pred[i]) ++c.fp;
      else if (in_gold[i]) ++c.fn;
      else ++c.tn;
    }
  }
  std::map<std::string, ClassCounts> out;
  for (std::size_t i = 0; i < space.size(); ++i) out.emplace(space.label(i), counts[i]);
  return out;
}

MetricsReport macro_metrics(const Labelings& gold, const Labelings& pred, const LabelSpace& space,
                            const MetricsOptions& opts) {
  if (gold.empty()) throw Error(ErrorCode::EmptyInput, "empty evaluation set");
  const auto counts = confusion_per_class(gold, pred, space);

  MetricsReport rep;
  rep.n_samples = gold.size();
  const double total = static_cast<double>(gold.size());
  double sum_acc = 0, sum_ppv = 0, sum_rec = 0, sum_f1 = 0;
  for (const auto& label : space.labels()) {
    const auto& c = counts.at(label);
    const bool vacuous = c.tp + c.fp + c.fn == 0;
    if (vacuous && !opts.global_n) continue;
    ClassMetrics m{label, c, 1.0, 1.0, 1.0, 1.0};
    if (!vacuous) {
      m.acc = static_cast<double>(c.tp + c.tn) / total;
      m.ppv = c.tp + c.fp > 0 ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp) : 0.0;
      m.recall = c.tp + c.fn > 0 ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn) : 0.0;
      m.f1 = m.ppv + m.recall > 0 ? 2 * m.ppv * m.recall / (m.ppv + m.recall) : 0.0;
    }
    sum_acc += m.acc;
    sum_ppv += m.ppv;
    sum_rec += m.recall;
    sum_f1 += m.f1;
    rep.classes.push_back(std::move(m));
  }
  rep.n_classes = rep.classes.size();
  if (rep.n_classes == 0) return rep;
  const double N = static_cast<double>(rep.n_classes);
  rep.macc = sum_acc / N;
  rep.mpr = sum_ppv / N;
  rep.mrecall = sum_rec / N;
  rep.mf1_harmonic = rep.mpr + rep.mrecall > 0 ? 2 * rep.mpr * rep.mrecall / (rep.mpr + rep.mrecall) : 0.0;
  rep.mf1_per_class_mean = sum_f1 / N;
  rep.mf1 = opts.per_class_f1 ? rep.mf1_per_class_mean : rep.mf1_harmonic;
  return rep;
}

CoverageReport coverage_report(const std::vector<PredictionSet>& predictions, const LabelSpace& space) {
  CoverageReport rep;
  rep.n_proteins = predictions.size();
  if (predictions.empty()) return rep;
  std::size_t enzyme = 0, non_enzyme = 0, none = 0, mapped = 0;
  for (const auto& p : predictions) {
    if (p.no_prediction || p.items.empty()) {
      ++none;
      continue;
    }
    bool has_reaction = false, all_known = true;
    for (const auto& it : p.items) {
      if (it.reaction == kVirtualLabel) continue;
      has_reaction = true;
      all_known = all_known && space.contains(it.reaction);
    }
    if (has_reaction) {
      ++enzyme;
      if (all_known) ++mapped;
    } else {
      ++non_enzyme;
    }
  }
  const double n = static_cast<double>(predictions.size());
  rep.enzyme = static_cast<double>(enzyme) / n;
  rep.non_enzyme = static_cast<double>(non_enzyme) / n;
  rep.no_prediction = static_cast<double>(none) / n;
  rep.reaction_mapped = static_cast<double>(mapped) / n;
  return rep;
}

Labelings to_labelings(const Annotations& annotations) {
  Labelings out;
  for (const auto& [id, set] : annotations) out.emplace(id, label_tokens(set));
  return out;
}

Labelings to_labelings(const std::vector<PredictionSet>& predictions) {
  Labelings out;
  for (const auto& p : predictions) {
    if (!out.emplace(p.protein_id, p.labels()).second) {
      throw Error(ErrorCode::DuplicateId, "two prediction sets for '" + p.protein_id + "'");
    }
  }
  return out;
}

std::string format_metrics(const MetricsReport& r, bool with_classes) {
  std::string out;
  auto kv = [&](const std::string& k, const std::string& v) { out += k + " = " + v + "\n"; };
  kv("n_samples", std::to_string(r.n_samples));
  kv("n_classes", std::to_string(r.n_classes));
  kv("mACC", format_real(r.macc));
  kv("mPR", format_real(r.mpr));
  kv("mRecall", format_real(r.mrecall));
  kv("mF1", format_real(r.mf1));
  kv("mF1_harmonic", format_real(r.mf1_harmonic));
  kv("mF1_per_class_mean", format_real(r.mf1_per_class_mean));
  if (with_classes) {
    for (const auto& c : r.classes) {
      const auto p = "class." + c.label + ".";
      kv(p + "counts", std::to_string(c.counts.tp) + "," + std::to_string(c.counts.fp) + "," +
                           std::to_string(c.counts.fn) + "," + std::to_string(c.counts.tn));
      kv(p + "ACC", format_real(c.acc));
      kv(p + "PPV", format_real(c.ppv));
      kv(p + "Recall", format_real(c.recall));
    }
  }
  return out;
}

std::string format_coverage(const CoverageReport& r) {
  std::string out;
  out += "n_proteins = " + std::to_string(r.n_proteins) + "\n";
  out += "enzyme = " + format_real(r.enzyme) + "\n";
  out += "non_enzyme = " + format_real(r.non_enzyme) + "\n";
  out += "no_prediction = " + format_real(r.no_prediction) + "\n";
  out += "reaction_mapped = " + format_real(r.reaction_mapped) + "\n";
  return out;
}

}  // namespace rxn
