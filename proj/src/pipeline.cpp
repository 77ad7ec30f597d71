#include "rxn/pipeline.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <map>
#include <optional>
#include <set>

#include "rxn/active.hpp"
#include "rxn/align.hpp"
#include "rxn/core.hpp"
#include "rxn/ensemble.hpp"
#include "rxn/error.hpp"
#include "rxn/interpret.hpp"
#include "rxn/io.hpp"
#include "rxn/knn.hpp"
#include "rxn/metrics.hpp"
#include "rxn/nn/checkpoint.hpp"
#include "rxn/nn/train.hpp"
#include "rxn/random.hpp"

namespace rxn {

namespace fs = std::filesystem;

namespace {

std::string hex64(std::uint64_t x) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
  return buf;
}

// Bookkeeping for one command: inputs are checksummed as they are read and
// outputs are held back until the command finishes.
class Run {
 public:
  Run(std::string command, const Config& cfg, std::ostream* log)
      : command_(std::move(command)), cfg_(cfg), log_(log), out_dir_(cfg.path("output_dir")) {}

  const Config& cfg() const { return cfg_; }

  // Path of an input key, falling back to <output_dir>/<fallback>.
  fs::path input_path(std::string_view key, std::string_view fallback = {}) const {
    if (cfg_.is_set(key) || fallback.empty()) return cfg_.path(key);
    return out_dir_ / fallback;
  }

  std::string read(std::string_view key, std::string_view fallback = {}) { return read_path(input_path(key, fallback)); }

  std::string read_path(const fs::path& p) {
    if (!fs::exists(p)) throw Error(ErrorCode::Io, "input '" + p.string() + "' does not exist");
    auto text = read_file(p);
    const auto entry = std::make_pair(p.string(), fnv1a(text));
    if (std::find(inputs_.begin(), inputs_.end(), entry) == inputs_.end()) inputs_.push_back(entry);
    return text;
  }

  void write(const std::string& name, std::string contents) {
    if (!outputs_.emplace(name, std::move(contents)).second) {
      throw Error(ErrorCode::DuplicateId, "output '" + name + "' produced twice");
    }
  }

  void note(const std::string& line) {
    if (log_) *log_ << command_ << ": " << line << "\n";
  }

  void warn(const std::string& w) {
    warnings_.push_back(w);
    note("warning: " + w);
  }

  RunResult finish() {
    std::error_code ec;
    for (const auto& [name, contents] : outputs_) {
      const auto target = out_dir_ / name;
      for (const auto& [in, sum] : inputs_) {
        if (fs::exists(in) && fs::equivalent(in, target, ec)) {
          throw Error(ErrorCode::InvalidArgument, "output '" + target.string() + "' would overwrite input '" + in + "'");
        }
      }
    }
    RunResult res;
    nlohmann::ordered_json m;
    m["command"] = command_;
    m["version"] = std::string(kVersion);
    m["config_hash"] = hex64(cfg_.hash());
    m["seed"] = cfg_.seed();
    nlohmann::ordered_json config = nlohmann::ordered_json::object();
    const auto canonical = cfg_.canonical();
    for (auto line : lines(canonical)) {
      const auto eq = line.find(" = ");
      config[std::string(line.substr(0, eq))] = std::string(line.substr(eq + 3));
    }
    m["config"] = config;
    m["inputs"] = nlohmann::ordered_json::array();
    for (const auto& [path, sum] : inputs_) m["inputs"].push_back({{"path", path}, {"fnv1a", hex64(sum)}});
    m["outputs"] = nlohmann::ordered_json::array();
    for (const auto& [name, contents] : outputs_) {
      const auto target = out_dir_ / name;
      fs::create_directories(target.parent_path());
      write_file_atomic(target, contents);
      res.outputs.push_back(target);
      m["outputs"].push_back({{"path", name}, {"fnv1a", hex64(fnv1a(contents))}});
    }
    m["warnings"] = warnings_;
    res.manifest = out_dir_ / ("manifest." + command_ + ".json");
    fs::create_directories(out_dir_);
    write_file_atomic(res.manifest, m.dump(2) + "\n");
    res.warnings = warnings_;
    return res;
  }

 private:
  std::string command_;
  const Config& cfg_;
  std::ostream* log_;
  fs::path out_dir_;
  std::vector<std::pair<std::string, std::uint64_t>> inputs_;
  std::map<std::string, std::string> outputs_;
  std::vector<std::string> warnings_;
};

std::string write_labels(const LabelSpace& space) {
  std::string out = "#index\tlabel\n";
  for (std::size_t i = 0; i < space.size(); ++i) out += std::to_string(i) + "\t" + space.label(i) + "\n";
  return out;
}

LabelSpace parse_labels(std::string_view text) {
  std::vector<std::string> reactions;
  std::size_t expected = 0;
  for (auto line : lines(text)) {
    if (line.empty() || line.front() == '#') continue;
    const auto f = split(line, '\t');
    if (f.size() != 2 || parse_int(f[0]) != static_cast<long long>(expected)) {
      throw Error(ErrorCode::MalformedLine, "label file: expected '" + std::to_string(expected) + "<TAB>label'");
    }
    if (expected == 0) {
      if (f[1] != kVirtualLabel) throw Error(ErrorCode::MalformedLine, "label file must start with the virtual label");
    } else {
      reactions.emplace_back(f[1]);
    }
    ++expected;
  }
  LabelSpace space(reactions);
  if (space.size() != expected) throw Error(ErrorCode::MalformedLine, "label file is not sorted or has duplicates");
  return space;
}

Dataset load_dataset(Run& run) {
  auto fasta = parse_fasta(run.read("fasta", "proteins.fasta"));
  if (fasta.normalization_warnings > 0) {
    run.warn(std::to_string(fasta.normalization_warnings) + " residues replaced by the wildcard");
  }
  return make_dataset(std::move(fasta.records), parse_reaction_map(run.read("annotations", "annotations.tsv")));
}

// Same proteins and label space, restricted to `ids`.
Dataset subset(const Dataset& ds, const std::vector<std::string>& ids) {
  Dataset out;
  out.space = ds.space;
  for (const auto& id : ids) {
    out.proteins.push_back(ds.protein(id));
    out.annotations[id] = ds.labels_of(id);
  }
  out.reindex();
  return out;
}

struct Split {
  std::vector<std::string> train, validation, test;
};

Split fold_split(Run& run, const Dataset& ds) {
  const auto folds = parse_folds(run.read("folds", "folds.tsv"));
  const int test = static_cast<int>(run.cfg().integer("test_fold"));
  if (test >= folds.k) {
    throw Error(ErrorCode::ConfigRange, "test_fold " + std::to_string(test) + " outside the " + std::to_string(folds.k) + " folds");
  }
  for (const auto& p : ds.proteins) {
    if (!folds.fold_of.count(p.id)) throw Error(ErrorCode::UnknownId, "protein '" + p.id + "' has no fold");
  }
  const int val = (test + 1) % folds.k;
  Split s;
  for (const auto& [id, f] : folds.fold_of) {
    ds.index_of(id);
    (f == test ? s.test : f == val ? s.validation : s.train).push_back(id);
  }
  return s;
}

// Proteins a command reports on.
std::vector<std::string> scope_ids(Run& run, const Dataset& ds) {
  if (run.cfg().str("scope") == "test") return fold_split(run, ds).test;
  return ds.ids();
}

// Labeled references for alignment and neighbour search.
Dataset reference_set(Run& run, const Dataset& ds) {
  if (run.cfg().is_set("reference_fasta")) {
    auto fasta = parse_fasta(run.read("reference_fasta"));
    auto ann = parse_reaction_map(run.read("annotations", "annotations.tsv"));
    std::set<std::string> ids;
    for (const auto& r : fasta.records) ids.insert(r.id);
    for (auto it = ann.begin(); it != ann.end();) it = ids.count(it->first) ? std::next(it) : ann.erase(it);
    auto ref = make_dataset(std::move(fasta.records), ann);
    ref.space = ds.space;
    return ref;
  }
  if (run.cfg().str("scope") != "test") {
    throw Error(ErrorCode::MissingConfigKey, "reference_fasta is required unless scope = test");
  }
  auto s = fold_split(run, ds);
  auto ids = s.train;
  ids.insert(ids.end(), s.validation.begin(), s.validation.end());
  std::sort(ids.begin(), ids.end());
  return subset(ds, ids);
}

nn::ModelConfig model_config(const Config& cfg, std::size_t n_labels, std::string_view component) {
  nn::ModelConfig mc;
  mc.embed_dim = static_cast<int>(cfg.integer("embed_dim"));
  mc.recurrent_hidden = static_cast<int>(cfg.integer("hidden"));
  mc.attention_heads = static_cast<int>(cfg.integer("heads"));
  mc.max_len = static_cast<int>(cfg.integer("max_len"));
  mc.n_labels = static_cast<int>(n_labels);
  mc.seed = derive_seed(cfg.seed(), component);
  mc.validate();
  return mc;
}

nn::TrainConfig train_config(const Config& cfg, int epochs, std::string_view component) {
  nn::TrainConfig tc;
  tc.epochs = epochs;
  tc.batch_size = static_cast<int>(cfg.integer("batch_size"));
  tc.learning_rate = cfg.real("learning_rate");
  tc.clip_norm = cfg.real("clip_norm");
  tc.patience = static_cast<int>(cfg.integer("patience"));
  tc.threshold = cfg.real("threshold");
  tc.use_attention = cfg.flag("use_attention");
  tc.seed = derive_seed(cfg.seed(), component);
  tc.validate();
  return tc;
}

nn::Model<float> load_model(Run& run, std::string_view key, std::string_view fallback, const LabelSpace& space) {
  auto model = nn::deserialize_checkpoint(run.read(key, fallback));
  if (static_cast<std::size_t>(model.config.n_labels) != space.size()) {
    throw Error(ErrorCode::ShapeMismatch, std::string(fallback) + ": " + std::to_string(model.config.n_labels) +
                                              " outputs but the label file has " + std::to_string(space.size()));
  }
  return model;
}

LabelSpace load_labels(Run& run, const Dataset& ds) {
  auto space = parse_labels(run.read("labels", "labels.tsv"));
  for (const auto& [id, set] : ds.annotations) {
    for (const auto& r : set) {
      if (!space.contains(r)) throw Error(ErrorCode::UnknownLabel, "reaction '" + r + "' of '" + id + "' is not in the label file");
    }
  }
  return space;
}

// Prediction sets of one predictor for `ids`; missing proteins abstain.
std::vector<PredictionSet> select_predictor(Run& run, const ensemble::ExternalPredictions& ext,
                                            const std::vector<std::string>& ids) {
  std::string pred = run.cfg().str("eval_predictor");
  if (pred.empty()) {
    if (ext.predictors.size() != 1) {
      throw Error(ErrorCode::MissingConfigKey, "eval_predictor is required when the prediction file holds " +
                                                   std::to_string(ext.predictors.size()) + " predictors");
    }
    pred = ext.predictors.front();
  } else if (std::find(ext.predictors.begin(), ext.predictors.end(), pred) == ext.predictors.end()) {
    throw Error(ErrorCode::UnknownId, "predictor '" + pred + "' not found in the prediction file");
  }
  std::vector<PredictionSet> out;
  for (const auto& id : ids) {
    auto it = ext.by_protein.find(id);
    out.push_back(it == ext.by_protein.end() ? PredictionSet::abstain(id) : it->second.at(pred));
  }
  return out;
}

ensemble::ExternalPredictions read_predictions(Run& run, std::string_view key) {
  auto ext = ensemble::parse_external_predictions(run.read(key, "predictions.tsv"));
  for (const auto& w : ext.warnings) run.warn(w);
  return ext;
}

void check_known(const Dataset& ds, const ensemble::ExternalPredictions& ext) {
  for (const auto& [id, sets] : ext.by_protein) ds.index_of(id);
}

// ---------------------------------------------------------------- commands

void cmd_synth(Run& run) {
  const auto& cfg = run.cfg();
  SyntheticOptions opts;
  opts.min_length = static_cast<int>(cfg.integer("synth_min_length"));
  opts.max_length = static_cast<int>(cfg.integer("synth_max_length"));
  opts.non_enzyme_fraction = cfg.real("synth_non_enzyme_fraction");
  const auto corpus = make_synthetic(static_cast<int>(cfg.integer("synth_proteins")),
                                     static_cast<int>(cfg.integer("synth_reactions")),
                                     static_cast<int>(cfg.integer("synth_motif_length")), derive_seed(cfg.seed(), "synth"), opts);
  run.write("proteins.fasta", write_fasta(corpus.dataset.proteins));
  run.write("annotations.tsv", write_reaction_map(corpus.dataset.annotations));
  std::string table = "#reaction_id\tequation\tsmiles\tec\n";
  for (std::size_t i = 0; i < corpus.reactions.size(); ++i) {
    table += corpus.reactions[i] + "\tmotif " + corpus.motifs[i] + "\t\t\n";
  }
  run.write("reactions.tsv", table);
  run.note(std::to_string(corpus.dataset.proteins.size()) + " proteins, " + std::to_string(corpus.reactions.size()) +
           " reactions");
}

void cmd_ingest(Run& run) {
  const auto& cfg = run.cfg();
  auto fasta = parse_fasta(run.read_path(cfg.path("fasta")));
  if (fasta.normalization_warnings > 0) {
    run.warn(std::to_string(fasta.normalization_warnings) + " residues replaced by the wildcard");
  }
  Annotations ann;
  if (cfg.is_set("annotations")) ann = parse_reaction_map(run.read("annotations"));
  const auto ds = make_dataset(std::move(fasta.records), ann);
  run.write("proteins.fasta", write_fasta(ds.proteins));
  run.write("annotations.tsv", write_reaction_map(ds.annotations));
  run.write("labels.tsv", write_labels(ds.space));
  if (cfg.is_set("embedding_tsv")) {
    run.write("embeddings.rxne", knn::serialize_index(knn::parse_embedding_tsv(run.read("embedding_tsv"))));
  }
  run.note(std::to_string(ds.proteins.size()) + " proteins, " + std::to_string(ds.space.size()) + " labels");
}

void cmd_split(Run& run) {
  const auto ds = load_dataset(run);
  const auto folds =
      stratified_folds(ds, static_cast<int>(run.cfg().integer("folds_k")), derive_seed(run.cfg().seed(), "split"));
  run.write("folds.tsv", write_folds(folds));
}

void cmd_train(Run& run) {
  const auto& cfg = run.cfg();
  const auto ds = load_dataset(run);
  const auto s = fold_split(run, ds);
  auto model = nn::init_model<float>(model_config(cfg, ds.space.size(), "model"));
  const auto tc = train_config(cfg, static_cast<int>(cfg.integer("epochs")), "train");
  nn::FocalLossConfig focal;
  focal.gamma = cfg.real("gamma");
  focal.alpha = nn::alpha_from_frequencies(ds, s.train);
  const auto history = nn::train(model, ds, s.train, s.validation, tc, focal);
  const auto test = nn::evaluate_model(model, ds, s.test, tc.threshold);
  run.write("model.ckpt", nn::serialize_checkpoint(model));
  run.write("labels.tsv", write_labels(ds.space));
  run.write("train_history.tsv", nn::format_history(history));
  run.note(std::to_string(history.size()) + " epochs, held-out mF1 " + format_real(test.mf1));
}

void cmd_al_run(Run& run) {
  const auto& cfg = run.cfg();
  const auto full = load_dataset(run);
  Dataset ds = full;
  if (cfg.str("scope") == "test") {
    auto s = fold_split(run, full);
    auto ids = s.train;
    ids.insert(ids.end(), s.validation.begin(), s.validation.end());
    std::sort(ids.begin(), ids.end());
    ds = subset(full, ids);
  }
  active::ALConfig al;
  al.strategy = active::parse_strategy(cfg.str("al_strategy"));
  al.rounds = static_cast<int>(cfg.integer("al_rounds"));
  al.per_round = static_cast<int>(cfg.integer("al_per_round"));
  al.budget_fraction = cfg.real("al_budget");
  al.init_fraction = cfg.real("al_init_fraction");
  al.val_fraction = cfg.real("al_val_fraction");
  al.validation_refresh = cfg.real("al_validation_refresh");
  al.clusters = static_cast<int>(cfg.integer("al_clusters"));
  al.norm = active::parse_delta_norm(cfg.str("al_norm"));
  al.gamma = cfg.real("gamma");
  al.seed = derive_seed(cfg.seed(), "al");
  al.validate();
  auto model = nn::init_model<float>(model_config(cfg, ds.space.size(), "al-model"));
  active::ALState state;
  const auto history =
      active::al_run(ds, model, al, train_config(cfg, static_cast<int>(cfg.integer("al_epochs")), "al-train"), &state);
  std::string st = "#protein_id\tset\n";
  std::map<std::string, const char*> where;
  for (const auto& id : state.trained) where[id] = "trained";
  for (const auto& id : state.validation) where[id] = "validation";
  for (const auto& id : state.pool) where[id] = "pool";
  for (const auto& [id, set] : where) st += id + "\t" + set + "\n";
  run.write("al_model.ckpt", nn::serialize_checkpoint(model));
  run.write("al_history.tsv", active::format_al_history(history));
  run.write("al_state.tsv", st);
  run.write("labels.tsv", write_labels(full.space));
  run.note(std::to_string(history.size() - 1) + " rounds, " + std::to_string(state.trained.size()) +
           " labeled, validation mF1 " + format_real(history.back().val_mf1));
}

void cmd_predict(Run& run) {
  const auto& cfg = run.cfg();
  const auto ds = load_dataset(run);
  const auto ids = scope_ids(run, ds);
  const double threshold = cfg.real("threshold");
  const bool attention = cfg.flag("use_attention");
  auto predictors = cfg.list("predictors");
  if (predictors.empty()) throw Error(ErrorCode::MissingConfigKey, "predictors is empty");

  std::optional<LabelSpace> space;
  std::optional<Dataset> refs;
  std::optional<nn::Model<float>> nn_model;
  auto labels = [&]() -> const LabelSpace& {
    if (!space) space = load_labels(run, ds);
    return *space;
  };
  auto references = [&]() -> const Dataset& {
    if (!refs) refs = reference_set(run, ds);
    return *refs;
  };
  auto network = [&]() -> const nn::Model<float>& {
    if (!nn_model) nn_model = load_model(run, "checkpoint", "model.ckpt", labels());
    return *nn_model;
  };

  std::string out = "#protein_id\tpredictor_id\treaction_id\tconfidence\n";
  std::set<std::string> seen;
  for (const auto& name : predictors) {
    if (!seen.insert(name).second) throw Error(ErrorCode::DuplicateId, "predictor '" + name + "' listed twice");
    std::vector<PredictionSet> sets;
    if (name == "nn" || name == "al") {
      const auto al_model = name == "al" ? std::optional(load_model(run, "al_checkpoint", "al_model.ckpt", labels()))
                                         : std::nullopt;
      const auto& model = al_model ? *al_model : network();
      for (const auto& id : ids) sets.push_back(nn::predict(model, ds.protein(id), labels(), threshold, attention));
    } else if (name == "align") {
      const double min_id = cfg.real("align_min_identity");
      for (const auto& id : ids) sets.push_back(msa_via_rxn_predict(ds.protein(id), references(), min_id));
    } else if (name == "knn") {
      knn::EmbeddingIndex index;
      if (cfg.is_set("embedding_index")) {
        index = knn::deserialize_index(run.read("embedding_index"));
      } else {
        index = knn::embed_reference_set(network(), references());
        run.write("embeddings.rxne", knn::serialize_index(index));
      }
      if (index.dim != network().config.width()) {
        throw Error(ErrorCode::ShapeMismatch, "embedding index dimension differs from the network representation");
      }
      const auto metric = knn::parse_metric(cfg.str("knn_metric"));
      const int k = static_cast<int>(cfg.integer("knn_k"));
      for (const auto& id : ids) {
        const Eigen::VectorXd q = nn::pooled_representation(network(), tokenize(ds.protein(id).sequence)).cast<double>();
        sets.push_back(knn::knn_predict(id, q, index, metric, k));
      }
    } else {
      throw Error(ErrorCode::InvalidArgument, "unknown predictor '" + name + "' (expected nn, al, align or knn)");
    }
    const auto tsv = ensemble::write_predictions_tsv(sets, name);
    out += tsv.substr(tsv.find('\n') + 1);
    std::size_t abstained = 0;
    for (const auto& s : sets) abstained += s.no_prediction ? 1 : 0;
    run.note(name + ": " + std::to_string(sets.size() - abstained) + " of " + std::to_string(sets.size()) + " predicted");
  }
  run.write("predictions.tsv", out);
}

void cmd_ensemble(Run& run) {
  const auto& cfg = run.cfg();
  ensemble::ExternalPredictions ext;
  if (cfg.is_set("external_predictions")) {
    for (const auto& p : cfg.paths("external_predictions")) {
      auto more = ensemble::parse_external_predictions(run.read_path(p));
      ensemble::merge_predictions(ext, more);
    }
    for (const auto& w : ext.warnings) run.warn(w);
  } else {
    ext = read_predictions(run, "external_predictions");
  }

  ensemble::EnsembleConfig ec;
  ec.mode = ensemble::parse_mode(cfg.str("ensemble_mode"));
  ec.gate_threshold = cfg.real("ensemble_threshold");
  ec.ties = ensemble::parse_tie_rule(cfg.str("ensemble_ties"));
  ec.predictors = cfg.list("ensemble_predictors");
  if (ec.predictors.empty()) ec.predictors = ext.predictors;
  for (const auto& p : ec.predictors) {
    if (std::find(ext.predictors.begin(), ext.predictors.end(), p) == ext.predictors.end()) {
      throw Error(ErrorCode::UnknownId, "predictor '" + p + "' not found in the prediction files");
    }
  }
  ec.s1_id = cfg.is_set("ensemble_s1") ? cfg.str("ensemble_s1") : (ec.predictors.empty() ? "" : ec.predictors.front());
  ec.validate();

  std::optional<Dataset> ds, refs;
  if (ec.mode == ensemble::Mode::Dynamic) {
    ds = load_dataset(run);
    check_known(*ds, ext);
    refs = reference_set(run, *ds);
  }
  std::vector<PredictionSet> out;
  std::size_t gated_majority = 0;
  for (const auto& [id, all] : ext.by_protein) {
    ensemble::PredictorSets sets;
    for (const auto& p : ec.predictors) sets.emplace(p, all.at(p));
    const auto query = ds ? ds->protein(id) : ProteinRecord{id, "", std::nullopt};
    std::span<const ProteinRecord> references;
    if (refs) references = refs->proteins;
    auto s = ensemble::integrate(query, references, sets, ec);
    if (s.metadata.count("mode") && s.metadata.at("mode") == "majority") ++gated_majority;
    out.push_back(std::move(s));
  }
  run.write("ensemble.tsv", ensemble::write_predictions_tsv(out, "ensemble", ec.mode == ensemble::Mode::Dynamic));
  run.note(std::to_string(out.size()) + " proteins integrated" +
           (ec.mode == ensemble::Mode::Dynamic ? ", " + std::to_string(gated_majority) + " through majority" : ""));
}

void cmd_evaluate(Run& run) {
  const auto& cfg = run.cfg();
  const auto ds = load_dataset(run);
  const auto ids = scope_ids(run, ds);
  const auto ext = read_predictions(run, "predictions");
  check_known(ds, ext);
  const auto sets = select_predictor(run, ext, ids);
  Labelings gold;
  for (const auto& id : ids) gold.emplace(id, label_tokens(ds.labels_of(id)));
  MetricsOptions opts;
  opts.global_n = cfg.flag("metrics_global_n");
  opts.per_class_f1 = cfg.flag("metrics_per_class_f1");
  const auto r = macro_metrics(gold, to_labelings(sets), ds.space, opts);

  std::string m = "#metric\tvalue\n";
  auto kv = [&](const char* k, const std::string& v) { m += std::string(k) + "\t" + v + "\n"; };
  kv("n_samples", std::to_string(r.n_samples));
  kv("n_classes", std::to_string(r.n_classes));
  kv("mACC", format_real(r.macc));
  kv("mPR", format_real(r.mpr));
  kv("mRecall", format_real(r.mrecall));
  kv("mF1", format_real(r.mf1));
  kv("mF1_harmonic", format_real(r.mf1_harmonic));
  kv("mF1_per_class_mean", format_real(r.mf1_per_class_mean));
  std::string c = "#label\ttp\tfp\tfn\ttn\tACC\tPPV\tRecall\tF1\n";
  for (const auto& cl : r.classes) {
    c += cl.label + "\t" + std::to_string(cl.counts.tp) + "\t" + std::to_string(cl.counts.fp) + "\t" +
         std::to_string(cl.counts.fn) + "\t" + std::to_string(cl.counts.tn) + "\t" + format_real(cl.acc) + "\t" +
         format_real(cl.ppv) + "\t" + format_real(cl.recall) + "\t" + format_real(cl.f1) + "\n";
  }
  run.write("metrics.tsv", m);
  run.write("classes.tsv", c);
  run.note(std::to_string(r.n_samples) + " proteins, mF1 " + format_real(r.mf1));
}

void cmd_coverage(Run& run) {
  const auto ds = load_dataset(run);
  const auto ids = scope_ids(run, ds);
  const auto ext = read_predictions(run, "predictions");
  check_known(ds, ext);
  const auto r = coverage_report(select_predictor(run, ext, ids), ds.space);
  std::string out = "#measure\tvalue\n";
  out += "n_proteins\t" + std::to_string(r.n_proteins) + "\n";
  out += "enzyme\t" + format_real(r.enzyme) + "\n";
  out += "non_enzyme\t" + format_real(r.non_enzyme) + "\n";
  out += "no_prediction\t" + format_real(r.no_prediction) + "\n";
  out += "reaction_mapped\t" + format_real(r.reaction_mapped) + "\n";
  run.write("coverage.tsv", out);
}

std::string file_stem(const std::string& id) {
  std::string s = id;
  for (auto& ch : s) {
    const bool ok = std::isalnum(static_cast<unsigned char>(ch)) || ch == '.' || ch == '-' || ch == '_';
    if (!ok) ch = '_';
  }
  if (s.empty() || s.front() == '.') s.insert(s.begin(), '_');
  return s;
}

void cmd_prompt_build(Run& run) {
  const auto& cfg = run.cfg();
  auto fasta = parse_fasta(run.read("fasta", "proteins.fasta"));
  Dataset ds = make_dataset(std::move(fasta.records), {});
  const auto ext = read_predictions(run, "predictions");
  check_known(ds, ext);
  std::vector<std::string> ids;
  if (cfg.str("scope") == "test") {
    const auto folds = parse_folds(run.read("folds", "folds.tsv"));
    ids = folds.members(static_cast<int>(cfg.integer("test_fold")));
  } else {
    ids = ds.ids();
  }
  interpret::ReactionTable table;
  if (cfg.is_set("reaction_table")) table = interpret::parse_reaction_table(run.read("reaction_table"));
  const auto sets = select_predictor(run, ext, ids);
  const auto tmpl = cfg.str("prompt_template");
  std::unique_ptr<interpret::LlmClient> client;
  if (cfg.flag("prompt_explain")) client = interpret::client_from_environment();

  std::set<std::string> stems;
  std::size_t missing_meta = 0;
  for (const auto& s : sets) {
    const auto stem = file_stem(s.protein_id);
    if (!stems.insert(stem).second) throw Error(ErrorCode::DuplicateId, "two proteins map to file name '" + stem + "'");
    std::vector<std::string> warnings;
    const auto doc = interpret::build_prompt(ds.protein(s.protein_id), s, table, tmpl, &warnings);
    missing_meta += warnings.size();
    run.write("prompts/" + stem + ".json", interpret::to_json(doc));
    if (client) run.write("explanations/" + stem + ".json", interpret::to_json(interpret::explain(*client, doc)));
  }
  if (missing_meta > 0) run.warn(std::to_string(missing_meta) + " candidate reactions lack metadata");
  run.note(std::to_string(sets.size()) + " prompts");
}

using Handler = void (*)(Run&);

const std::vector<std::pair<std::string, Handler>>& handlers() {
  static const std::vector<std::pair<std::string, Handler>> h = {
      {"ingest", cmd_ingest},     {"split", cmd_split},       {"synth", cmd_synth},
      {"train", cmd_train},       {"predict", cmd_predict},   {"al-run", cmd_al_run},
      {"ensemble", cmd_ensemble}, {"evaluate", cmd_evaluate}, {"coverage", cmd_coverage},
      {"prompt-build", cmd_prompt_build},
  };
  return h;
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const auto& [n, h] : handlers()) v.push_back(n);
    return v;
  }();
  return names;
}

RunResult run_command(std::string_view name, const Config& config, std::ostream* log) {
  for (const auto& [n, handler] : handlers()) {
    if (n == name) {
      Run run(n, config, log);
      handler(run);
      return run.finish();
    }
  }
  throw Error(ErrorCode::InvalidArgument, "unknown command '" + std::string(name) + "'");
}

}  // namespace rxn
