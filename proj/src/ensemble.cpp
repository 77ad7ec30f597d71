#include "rxn/ensemble.hpp"

#include <algorithm>
#include <set>

#include "rxn/io.hpp"

namespace rxn::ensemble {

ExternalPredictions parse_external_predictions(std::string_view text) {
  ExternalPredictions out;
  std::map<std::pair<std::string, std::string>, std::map<std::string, double>> rows;
  std::set<std::string> proteins;
  std::size_t line_no = 0;
  for (auto line : lines(text)) {
    ++line_no;
    if (trim(line).empty() || line.front() == '#') continue;
    const auto cols = split(line, '\t');
    const auto where = "prediction line " + std::to_string(line_no);
    if (cols.size() < 3 || cols.size() > 6) throw Error(ErrorCode::MalformedLine, where + ": expected 3 or 4 columns");
    const std::string protein(trim(cols[0])), predictor(trim(cols[1])), reaction(trim(cols[2]));
    if (protein.empty() || predictor.empty() || reaction.empty()) {
      throw Error(ErrorCode::MalformedLine, where + ": empty field");
    }
    double conf = 1.0;
    if (cols.size() >= 4 && !trim(cols[3]).empty()) conf = parse_real(trim(cols[3]));
    if (!(conf >= 0.0 && conf <= 1.0)) throw Error(ErrorCode::MalformedLine, where + ": confidence outside [0,1]");
    if (std::find(out.predictors.begin(), out.predictors.end(), predictor) == out.predictors.end()) {
      out.predictors.push_back(predictor);
    }
    proteins.insert(protein);
    auto& slot = rows[{protein, predictor}];
    auto [it, fresh] = slot.try_emplace(reaction, conf);
    if (!fresh) {
      out.warnings.push_back(where + ": duplicate " + protein + "/" + predictor + "/" + reaction +
                             " (keeping the higher confidence)");
      it->second = std::max(it->second, conf);
    }
  }
  for (const auto& p : proteins) {
    auto& sets = out.by_protein[p];
    for (const auto& pred : out.predictors) {
      auto it = rows.find({p, pred});
      if (it == rows.end()) {
        sets[pred] = PredictionSet::abstain(p);
        continue;
      }
      PredictionSet s;
      s.protein_id = p;
      for (const auto& [r, c] : it->second) s.items.push_back({r, c, {pred}});
      s.rank();
      sets[pred] = std::move(s);
    }
  }
  return out;
}

void merge_predictions(ExternalPredictions& into, const ExternalPredictions& more) {
  for (const auto& pred : more.predictors) {
    if (std::find(into.predictors.begin(), into.predictors.end(), pred) != into.predictors.end()) {
      throw Error(ErrorCode::DuplicateId, "predictor '" + pred + "' supplied twice");
    }
    into.predictors.push_back(pred);
  }
  for (const auto& [p, sets] : more.by_protein) {
    for (const auto& [pred, s] : sets) into.by_protein[p][pred] = s;
  }
  for (auto& [p, sets] : into.by_protein) {
    for (const auto& pred : into.predictors) {
      if (!sets.count(pred)) sets[pred] = PredictionSet::abstain(p);
    }
  }
  into.warnings.insert(into.warnings.end(), more.warnings.begin(), more.warnings.end());
}

Mode parse_mode(std::string_view name) {
  if (name == "dynamic") return Mode::Dynamic;
  if (name == "majority") return Mode::Majority;
  if (name == "recall_boost") return Mode::RecallBoost;
  if (name == "stacking") {
    throw Error(ErrorCode::UnsupportedMode,
                "ensemble mode 'stacking' is not implemented (no formal definition to follow); use dynamic, majority "
                "or recall_boost");
  }
  throw Error(ErrorCode::InvalidArgument, "unknown ensemble mode '" + std::string(name) + "'");
}

std::string to_string(Mode m) {
  switch (m) {
    case Mode::Dynamic:
      return "dynamic";
    case Mode::Majority:
      return "majority";
    case Mode::RecallBoost:
      return "recall_boost";
  }
  return "?";
}

TieRule parse_tie_rule(std::string_view name) {
  if (name == "all") return TieRule::All;
  if (name == "fallback") return TieRule::Fallback;
  throw Error(ErrorCode::InvalidArgument, "unknown tie rule '" + std::string(name) + "'");
}

void EnsembleConfig::validate() const {
  if (predictors.empty()) throw Error(ErrorCode::InvalidArgument, "no predictors configured");
  if (std::find(predictors.begin(), predictors.end(), s1_id) == predictors.end()) {
    throw Error(ErrorCode::InvalidArgument, "fallback predictor '" + s1_id + "' is not among the predictors");
  }
  if (!(gate_threshold > 0.0 && gate_threshold < 1.0)) {
    throw Error(ErrorCode::ConfigRange, "gate threshold must lie in (0,1)");
  }
}

namespace {

std::string protein_of(const PredictorSets& sets) {
  if (sets.empty()) throw Error(ErrorCode::EmptyInput, "no predictor outputs to integrate");
  return sets.begin()->second.protein_id;
}

}  // namespace

PredictionSet integrate_majority(const PredictorSets& sets, const std::string& s1_id, TieRule ties) {
  const auto protein = protein_of(sets);
  const auto s1 = sets.find(s1_id);
  if (s1 == sets.end()) throw Error(ErrorCode::UnknownId, "fallback predictor '" + s1_id + "' has no output");

  std::map<std::string, std::vector<std::string>> votes;
  std::size_t voters = 0;
  for (const auto& [pred, s] : sets) {
    if (s.no_prediction) continue;
    ++voters;
    for (const auto& r : s.labels()) votes[r].push_back(pred);
  }
  std::size_t top = 0;
  for (const auto& [r, v] : votes) top = std::max(top, v.size());
  std::size_t n_top = 0;
  for (const auto& [r, v] : votes) n_top += v.size() == top;

  PredictionSet out;
  out.protein_id = protein;
  if (top >= 2 && (ties == TieRule::All || n_top == 1)) {
    for (const auto& [r, v] : votes) {
      if (v.size() == top) out.items.push_back({r, static_cast<double>(top) / static_cast<double>(voters), v});
    }
    out.rank();
  } else {
    out = s1->second;
    out.protein_id = protein;
    out.metadata["fallback"] = s1_id;
  }
  return out;
}

PredictionSet integrate_recall_boost(const PredictorSets& sets) {
  PredictionSet out;
  out.protein_id = protein_of(sets);
  std::map<std::string, PredictionItem> merged;
  bool any = false;
  for (const auto& [pred, s] : sets) {
    if (s.no_prediction) continue;
    any = true;
    for (const auto& it : s.items) {
      auto [m, fresh] = merged.try_emplace(it.reaction, PredictionItem{it.reaction, it.confidence, {}});
      if (!fresh) m->second.confidence = std::max(m->second.confidence, it.confidence);
      m->second.sources.push_back(pred);
    }
  }
  if (!any) return PredictionSet::abstain(out.protein_id);
  for (auto& [r, it] : merged) out.items.push_back(std::move(it));
  out.rank();
  return out;
}

Mode gate(double identity, double threshold) { return identity >= threshold ? Mode::Majority : Mode::RecallBoost; }

PredictionSet dynamic_integrate(const ProteinRecord& query, std::span<const ProteinRecord> references,
                                const PredictorSets& sets, const EnsembleConfig& cfg, const ScoringScheme& scheme) {
  cfg.validate();
  const auto hit = best_hit_identity(query.sequence, references, scheme);
  const Mode m = gate(hit.identity, cfg.gate_threshold);
  PredictionSet out =
      m == Mode::Majority ? integrate_majority(sets, cfg.s1_id, cfg.ties) : integrate_recall_boost(sets);
  out.protein_id = query.id;
  out.metadata["mode"] = to_string(m);
  out.metadata["identity"] = format_real(hit.identity);
  out.metadata["hit"] = hit.ref_id;
  return out;
}

PredictionSet integrate(const ProteinRecord& query, std::span<const ProteinRecord> references,
                        const PredictorSets& sets, const EnsembleConfig& cfg) {
  switch (cfg.mode) {
    case Mode::Dynamic:
      return dynamic_integrate(query, references, sets, cfg);
    case Mode::Majority: {
      auto out = integrate_majority(sets, cfg.s1_id, cfg.ties);
      out.metadata["mode"] = "majority";
      return out;
    }
    case Mode::RecallBoost: {
      auto out = integrate_recall_boost(sets);
      out.metadata["mode"] = "recall_boost";
      return out;
    }
  }
  return {};
}

std::string write_predictions_tsv(std::span<const PredictionSet> sets, const std::string& predictor_id,
                                  bool with_gate) {
  std::string out = "#protein_id\tpredictor_id\treaction_id\tconfidence";
  out += with_gate ? "\tmode\tidentity\n" : "\n";
  for (const auto& s : sets) {
    for (const auto& it : s.items) {
      out += s.protein_id + "\t" + predictor_id + "\t" + it.reaction + "\t" + format_real(it.confidence);
      if (with_gate) {
        auto get = [&](const char* key) {
          auto f = s.metadata.find(key);
          return f == s.metadata.end() ? std::string("NA") : f->second;
        };
        out += "\t" + get("mode") + "\t" + get("identity");
      }
      out += "\n";
    }
  }
  return out;
}

}  // namespace rxn::ensemble
