#include "rxn/config.hpp"

#include <charconv>
#include <cmath>
#include <set>

#include "rxn/error.hpp"
#include "rxn/io.hpp"
#include "rxn/random.hpp"

namespace rxn {

namespace {

using K = KeySpec::Kind;

KeySpec path_key(std::string name, std::string help) { return {std::move(name), K::Path, "", -1e300, 1e300, false, false, {}, std::move(help)}; }

KeySpec int_key(std::string name, long long def, double lo, std::string help, double hi = 1e300) {
  return {std::move(name), K::Int, std::to_string(def), lo, hi, false, false, {}, std::move(help)};
}

KeySpec real_key(std::string name, std::string def, double lo, double hi, bool lo_open, bool hi_open,
                 std::string help) {
  return {std::move(name), K::Real, std::move(def), lo, hi, lo_open, hi_open, {}, std::move(help)};
}

KeySpec choice_key(std::string name, std::string def, std::vector<std::string> choices, std::string help) {
  return {std::move(name), K::Choice, std::move(def), -1e300, 1e300, false, false, std::move(choices), std::move(help)};
}

KeySpec bool_key(std::string name, bool def, std::string help) {
  return {std::move(name), K::Bool, def ? "true" : "false", -1e300, 1e300, false, false, {}, std::move(help)};
}

KeySpec list_key(std::string name, std::string def, std::string help) {
  return {std::move(name), K::List, std::move(def), -1e300, 1e300, false, false, {}, std::move(help)};
}

std::string describe_range(const KeySpec& k) {
  std::string s = k.lo_open ? "(" : "[";
  s += k.lo <= -1e300 ? "-inf" : format_real(k.lo);
  s += ", ";
  s += k.hi >= 1e300 ? "inf" : format_real(k.hi);
  s += k.hi_open ? ")" : "]";
  return s;
}

void check_value(const KeySpec& k, std::string_view v) {
  auto type_error = [&](const char* what) {
    throw Error(ErrorCode::ConfigType, "config key '" + k.name + "' expects " + what + ", got '" + std::string(v) + "'");
  };
  auto range = [&](double x) {
    const bool ok = (k.lo_open ? x > k.lo : x >= k.lo) && (k.hi_open ? x < k.hi : x <= k.hi);
    if (!ok) {
      throw Error(ErrorCode::ConfigRange,
                  "config key '" + k.name + "' = " + std::string(v) + " outside " + describe_range(k));
    }
  };
  switch (k.kind) {
    case K::Int: {
      long long x = 0;
      auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
      if (ec != std::errc() || p != v.data() + v.size()) type_error("an integer");
      range(static_cast<double>(x));
      break;
    }
    case K::Real: {
      double x = 0;
      try {
        x = parse_real(v);
      } catch (const Error&) {
        type_error("a number");
      }
      if (!std::isfinite(x)) type_error("a finite number");
      range(x);
      break;
    }
    case K::Bool:
      if (v != "true" && v != "false") type_error("true or false");
      break;
    case K::Choice: {
      bool found = false;
      for (const auto& c : k.choices) found = found || c == v;
      if (!found) {
        std::string all;
        for (const auto& c : k.choices) all += (all.empty() ? "" : ", ") + c;
        throw Error(ErrorCode::ConfigRange, "config key '" + k.name + "' = '" + std::string(v) + "' is not one of " + all);
      }
      break;
    }
    default:
      break;
  }
}

}  // namespace

const std::vector<KeySpec>& config_keys() {
  static const std::vector<KeySpec> keys = [] {
    std::vector<KeySpec> v;
    v.push_back(path_key("output_dir", "directory receiving every output and the run manifest"));
    v.push_back(path_key("fasta", "protein sequences"));
    v.push_back(path_key("annotations", "protein_id<TAB>reactions, '-' for non-enzymes"));
    v.push_back(path_key("folds", "protein_id<TAB>fold"));
    v.push_back(path_key("labels", "label space written by train (defaults to <output_dir>/labels.tsv)"));
    v.push_back(path_key("checkpoint", "network checkpoint (defaults to <output_dir>/model.ckpt)"));
    v.push_back(path_key("al_checkpoint", "active-learning checkpoint (defaults to <output_dir>/al_model.ckpt)"));
    v.push_back(path_key("reference_fasta", "reference proteins for alignment and neighbour predictors"));
    v.push_back(path_key("embedding_index", "binary embedding index used instead of embedding the references"));
    v.push_back(path_key("embedding_tsv", "embedding TSV converted into <output_dir>/embeddings.rxne by ingest"));
    v.push_back({"external_predictions", K::PathList, "", -1e300, 1e300, false, false, {},
                 "comma-separated prediction TSVs for ensemble"});
    v.push_back(path_key("predictions", "prediction TSV read by evaluate, coverage and prompt-build"));
    v.push_back(path_key("reaction_table", "reaction_id<TAB>equation<TAB>smiles<TAB>ec for prompts"));

    v.push_back({"seed", K::Int, "0", 0, 1e300, false, false, {}, "global seed; components derive their own"});
    v.push_back(choice_key("scope", "all", {"all", "test"}, "proteins handled: all, or the test fold only"));
    v.push_back(int_key("folds_k", 10, 2, "number of folds"));
    v.push_back(int_key("test_fold", 0, 0, "held-out fold; validation uses the next fold"));

    v.push_back(int_key("synth_proteins", 1000, 1, "synthetic corpus size"));
    v.push_back(int_key("synth_reactions", 20, 1, "synthetic reaction count"));
    v.push_back(int_key("synth_motif_length", 6, 1, "length of each implanted motif"));
    v.push_back(int_key("synth_min_length", 40, 1, "shortest synthetic sequence"));
    v.push_back(int_key("synth_max_length", 60, 1, "longest synthetic sequence"));
    v.push_back(real_key("synth_non_enzyme_fraction", "0.1", 0, 1, false, true, "share of non-enzymes"));

    v.push_back(int_key("embed_dim", 32, 1, "residue embedding width"));
    v.push_back(int_key("hidden", 64, 1, "recurrent hidden size per direction"));
    v.push_back(int_key("heads", 2, 1, "attention heads"));
    v.push_back(int_key("max_len", 512, 1, "sequences are truncated to this length"));
    v.push_back(bool_key("use_attention", true, "run the attention block"));
    v.push_back(int_key("epochs", 30, 0, "training epochs"));
    v.push_back(int_key("batch_size", 16, 1, "mini-batch size"));
    v.push_back(real_key("learning_rate", "0.001", 0, 1e300, false, false, "step size"));
    v.push_back(real_key("clip_norm", "5", 0, 1e300, false, false, "global gradient-norm clip, 0 disables"));
    v.push_back(int_key("patience", 8, 0, "epochs without validation gain before stopping, 0 disables"));
    v.push_back(real_key("threshold", "0.5", 0, 1, true, true, "decision threshold"));
    v.push_back(real_key("gamma", "2", 0, 1e300, true, false, "focal-loss focusing parameter"));

    v.push_back(choice_key("al_strategy", "random", {"random", "attention", "clustering", "alternate", "phased"},
                           "acquisition strategy"));
    v.push_back(int_key("al_rounds", 10, 1, "acquisition rounds"));
    v.push_back(int_key("al_per_round", 0, 0, "ids acquired per round, 0 spreads the budget evenly"));
    v.push_back(real_key("al_budget", "0.3", 0, 1, true, false, "labeled share at which acquisition stops"));
    v.push_back(real_key("al_init_fraction", "0.01", 0, 1, true, true, "initial labeled share"));
    v.push_back(real_key("al_val_fraction", "0.1", 0, 1, true, true, "validation share"));
    v.push_back(real_key("al_validation_refresh", "0", 0, 1, false, true, "pool share moved to validation per round"));
    v.push_back(int_key("al_clusters", 5, 1, "clusters for error-weighted acquisition"));
    v.push_back(choice_key("al_norm", "linf", {"linf", "l1", "l2"}, "norm of the attention discrepancy"));
    v.push_back(int_key("al_epochs", 10, 0, "training epochs per round"));

    v.push_back(list_key("predictors", "nn", "built-in predictors run by predict: nn, al, align, knn"));
    v.push_back(real_key("align_min_identity", "0", 0, 1, false, false, "alignment predictor abstains below this"));
    v.push_back(choice_key("knn_metric", "cosine", {"cosine", "euclidean"}, "neighbour similarity"));
    v.push_back(int_key("knn_k", 1, 1, "neighbours whose labels are united"));

    v.push_back(choice_key("ensemble_mode", "dynamic", {"dynamic", "majority", "recall_boost", "stacking"},
                           "integration operator"));
    v.push_back(real_key("ensemble_threshold", "0.75", 0, 1, true, true, "identity gate of dynamic mode"));
    v.push_back(list_key("ensemble_predictors", "", "predictors to integrate (default: all in the inputs)"));
    v.push_back({"ensemble_s1", K::String, "", -1e300, 1e300, false, false, {}, "fallback predictor (default: first)"});
    v.push_back(choice_key("ensemble_ties", "all", {"all", "fallback"}, "majority ties: emit all, or fall back"));

    v.push_back({"eval_predictor", K::String, "", -1e300, 1e300, false, false, {},
                 "predictor rows read from the prediction file (default: the only one)"});
    v.push_back(bool_key("metrics_global_n", false, "average over every label of the space"));
    v.push_back(bool_key("metrics_per_class_f1", false, "report the mean per-class F1 as mF1"));

    v.push_back(choice_key("prompt_template", "auto", {"auto", "with_accession", "sequence_only", "no_candidates"},
                           "prompt template"));
    v.push_back(bool_key("prompt_explain", true, "also write re-ranked explanations"));
    return v;
  }();
  return keys;
}

const KeySpec& config_key(std::string_view name) {
  for (const auto& k : config_keys()) {
    if (k.name == name) return k;
  }
  throw Error(ErrorCode::UnknownConfigKey, "unknown config key '" + std::string(name) + "'");
}

Config::Config() {
  for (const auto& k : config_keys()) values_[k.name] = k.default_value;
}

Config Config::parse(std::string_view text) {
  Config c;
  std::set<std::string> seen;
  std::size_t line_no = 0;
  for (auto line : lines(text)) {
    ++line_no;
    const auto hash = line.find('#');
    line = trim(line.substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::ConfigType, "config line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const auto key = trim(line.substr(0, eq));
    if (!seen.insert(std::string(key)).second) {
      throw Error(ErrorCode::ConfigType, "config key '" + std::string(key) + "' set twice");
    }
    c.set(key, trim(line.substr(eq + 1)));
  }
  return c;
}

Config Config::load(const std::filesystem::path& path) { return parse(read_file(path)); }

void Config::set(std::string_view key, std::string_view value) {
  const auto& entry = config_key(key);
  value = trim(value);
  if (!value.empty()) check_value(entry, value);
  values_[entry.name] = value.empty() ? entry.default_value : std::string(value);
}

bool Config::is_set(std::string_view key) const { return !str(key).empty(); }

const std::string& Config::str(std::string_view key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw Error(ErrorCode::UnknownConfigKey, "unknown config key '" + std::string(key) + "'");
  return it->second;
}

long long Config::integer(std::string_view key) const { return parse_int(str(key)); }

std::uint64_t Config::seed() const { return static_cast<std::uint64_t>(integer("seed")); }

double Config::real(std::string_view key) const { return parse_real(str(key)); }

bool Config::flag(std::string_view key) const { return str(key) == "true"; }

std::vector<std::string> Config::list(std::string_view key) const {
  std::vector<std::string> out;
  for (auto item : split(str(key), ',')) {
    item = trim(item);
    if (!item.empty()) out.emplace_back(item);
  }
  return out;
}

std::filesystem::path Config::path(std::string_view key) const {
  if (!is_set(key)) throw Error(ErrorCode::MissingConfigKey, "config key '" + std::string(key) + "' is required here");
  return std::filesystem::path(str(key));
}

std::vector<std::filesystem::path> Config::paths(std::string_view key) const {
  std::vector<std::filesystem::path> out;
  for (const auto& s : list(key)) out.emplace_back(s);
  if (out.empty()) throw Error(ErrorCode::MissingConfigKey, "config key '" + std::string(key) + "' is required here");
  return out;
}

std::string Config::canonical() const {
  std::string out;
  for (const auto& [k, v] : values_) out += k + " = " + v + "\n";
  return out;
}

std::uint64_t Config::hash() const { return fnv1a(canonical()); }

}  // namespace rxn
