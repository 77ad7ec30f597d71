#include "rxn/core.hpp"

#include <algorithm>
#include <array>
#include <cctype>

#include "rxn/error.hpp"
#include "rxn/io.hpp"
#include "rxn/random.hpp"

namespace rxn {

namespace {

constexpr std::array<int, 256> make_token_table() {
  std::array<int, 256> t{};
  for (auto& v : t) v = -1;
  for (int i = 0; i < kAlphabetSize; ++i) {
    const auto c = static_cast<unsigned char>(kAlphabet[static_cast<std::size_t>(i)]);
    t[c] = i;
    t[c - 'A' + 'a'] = i;
  }
  return t;
}

constexpr auto kTokenTable = make_token_table();

}  // namespace

// ---------------------------------------------------------------------------
// LabelSpace / LabelVector

LabelSpace::LabelSpace(std::vector<std::string> reactions) {
  std::sort(reactions.begin(), reactions.end());
  reactions.erase(std::unique(reactions.begin(), reactions.end()), reactions.end());
  labels_.reserve(reactions.size() + 1);
  labels_.emplace_back(kVirtualLabel);
  for (auto& r : reactions) {
    if (r == kVirtualLabel) {
      throw Error(ErrorCode::InvalidArgument, "virtual label passed as a reaction");
    }
    labels_.push_back(std::move(r));
  }
  for (std::size_t i = 0; i < labels_.size(); ++i) index_.emplace(labels_[i], i);
}

bool LabelSpace::contains(std::string_view label) const { return index_.find(label) != index_.end(); }

std::optional<std::size_t> LabelSpace::find(std::string_view label) const {
  auto it = index_.find(label);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t LabelSpace::index(std::string_view label) const {
  auto it = index_.find(label);
  if (it == index_.end()) {
    throw Error(ErrorCode::UnknownLabel, "unknown reaction '" + std::string(label) + "'");
  }
  return it->second;
}

LabelVector::LabelVector(std::vector<std::uint8_t> bits) : bits_(std::move(bits)) {
  if (bits_.size() < 2) throw Error(ErrorCode::InvalidArgument, "label vector shorter than 2");
  const auto set = std::count_if(bits_.begin(), bits_.end(), [](auto b) { return b != 0; });
  if (set == 0) throw Error(ErrorCode::InvalidArgument, "label vector with no bit set");
  if (bits_[LabelSpace::none_index()] && set != 1) {
    throw Error(ErrorCode::InvalidArgument, "virtual label combined with reactions");
  }
}

// ---------------------------------------------------------------------------
// Dataset / folds

const ProteinRecord& Dataset::protein(std::string_view id) const { return proteins[index_of(id)]; }

const ReactionSet& Dataset::labels_of(std::string_view id) const {
  auto it = annotations.find(std::string(id));
  if (it == annotations.end()) throw Error(ErrorCode::UnknownId, "no annotation for '" + std::string(id) + "'");
  return it->second;
}

std::vector<std::string> Dataset::ids() const {
  std::vector<std::string> out;
  out.reserve(proteins.size());
  for (const auto& p : proteins) out.push_back(p.id);
  return out;
}

std::size_t Dataset::index_of(std::string_view id) const {
  if (lookup_.size() == proteins.size()) {
    auto it = lookup_.find(std::string(id));
    if (it != lookup_.end()) return it->second;
  } else {
    for (std::size_t i = 0; i < proteins.size(); ++i) {
      if (proteins[i].id == id) return i;
    }
  }
  throw Error(ErrorCode::UnknownId, "unknown protein '" + std::string(id) + "'");
}

void Dataset::reindex() {
  lookup_.clear();
  for (std::size_t i = 0; i < proteins.size(); ++i) {
    if (!lookup_.emplace(proteins[i].id, i).second) {
      throw Error(ErrorCode::DuplicateId, "duplicate protein id '" + proteins[i].id + "'");
    }
  }
}

std::vector<std::string> FoldAssignment::members(int fold) const {
  std::vector<std::string> out;
  for (const auto& [id, f] : fold_of) {
    if (f == fold) out.push_back(id);
  }
  return out;
}

std::vector<std::string> FoldAssignment::complement(int fold) const {
  std::vector<std::string> out;
  for (const auto& [id, f] : fold_of) {
    if (f != fold) out.push_back(id);
  }
  return out;
}

// ---------------------------------------------------------------------------
// FASTA

bool normalize_residue(char in, char& out) {
  const int t = kTokenTable[static_cast<unsigned char>(in)];
  if (t < 0) {
    out = 'X';
    return false;
  }
  out = kAlphabet[static_cast<std::size_t>(t)];
  return true;
}

int residue_token(char residue) {
  const int t = kTokenTable[static_cast<unsigned char>(residue)];
  return t < 0 ? kWildcardToken : t;
}

std::vector<int> tokenize(std::string_view sequence) {
  std::vector<int> out;
  out.reserve(sequence.size());
  for (char c : sequence) out.push_back(residue_token(c));
  return out;
}

namespace {

// `accession=ACC` anywhere in the header, or a UniProt-style `sp|ACC|NAME` id.
std::optional<std::string> header_accession(std::string_view header) {
  for (auto tok : split(header, ' ')) {
    tok = trim(tok);
    if (tok.starts_with("accession=") && tok.size() > 10) return std::string(tok.substr(10));
  }
  const auto id = header.substr(0, header.find_first_of(" \t"));
  const auto parts = split(id, '|');
  if (parts.size() == 3 && (parts[0] == "sp" || parts[0] == "tr") && !parts[1].empty()) return std::string(parts[1]);
  return std::nullopt;
}

}  // namespace

FastaResult parse_fasta(std::string_view text) {
  FastaResult result;
  std::set<std::string, std::less<>> seen;
  ProteinRecord* current = nullptr;

  auto finish = [&] {
    if (current && current->sequence.empty()) {
      throw Error(ErrorCode::EmptySequence, "record '" + current->id + "' has an empty sequence");
    }
  };

  for (auto line : lines(text)) {
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '>') {
      finish();
      auto header = trim(line.substr(1));
      const auto ws = header.find_first_of(" \t");
      std::string id(header.substr(0, ws));
      if (id.empty()) throw Error(ErrorCode::MalformedLine, "FASTA header without an id");
      if (!seen.insert(id).second) throw Error(ErrorCode::DuplicateId, "duplicate FASTA id '" + id + "'");
      result.records.push_back(ProteinRecord{std::move(id), {}, header_accession(header)});
      current = &result.records.back();
      continue;
    }
    if (!current) throw Error(ErrorCode::MalformedLine, "sequence data before the first FASTA header");
    for (char c : line) {
      if (c == ' ' || c == '\t') continue;
      char norm;
      if (!normalize_residue(c, norm)) ++result.normalization_warnings;
      current->sequence.push_back(norm);
    }
  }
  finish();
  if (result.records.empty()) throw Error(ErrorCode::EmptyInput, "FASTA input has no records");
  return result;
}

std::string write_fasta(std::span<const ProteinRecord> records) {
  std::string out;
  for (const auto& r : records) {
    out += '>';
    out += r.id;
    if (r.accession && header_accession(r.id) != r.accession) out += " accession=" + *r.accession;
    out += '\n';
    for (std::size_t i = 0; i < r.sequence.size(); i += 60) {
      out.append(r.sequence, i, 60);
      out += '\n';
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Annotations / labels

Annotations parse_reaction_map(std::string_view text) {
  Annotations out;
  std::size_t lineno = 0;
  for (auto line : lines(text)) {
    ++lineno;
    if (trim(line).empty() || line.front() == '#') continue;
    const auto cols = split(line, '\t');
    if (cols.size() != 2) {
      throw Error(ErrorCode::MalformedLine,
                  "annotation line " + std::to_string(lineno) + ": expected 2 columns, got " +
                      std::to_string(cols.size()));
    }
    const std::string id(trim(cols[0]));
    const auto field = trim(cols[1]);
    if (id.empty() || field.empty()) {
      throw Error(ErrorCode::MalformedLine, "annotation line " + std::to_string(lineno) + ": empty field");
    }
    ReactionSet set;
    if (field != kVirtualLabel) {
      for (auto r : split(field, ';')) {
        r = trim(r);
        if (r.empty()) continue;
        if (r == kVirtualLabel) {
          throw Error(ErrorCode::MalformedLine,
                      "annotation line " + std::to_string(lineno) + ": '-' mixed with reactions");
        }
        set.emplace(r);
      }
      if (set.empty()) {
        throw Error(ErrorCode::MalformedLine, "annotation line " + std::to_string(lineno) + ": no reactions");
      }
    }
    auto [it, inserted] = out.emplace(id, set);
    if (!inserted && it->second != set) {
      throw Error(ErrorCode::ConflictingAnnotation, "protein '" + id + "' annotated twice with different sets");
    }
  }
  return out;
}

std::string format_reaction_set(const ReactionSet& set) {
  if (set.empty()) return std::string(kVirtualLabel);
  std::string out;
  for (const auto& r : set) {
    if (!out.empty()) out += ';';
    out += r;
  }
  return out;
}

std::string write_reaction_map(const Annotations& annotations) {
  std::string out;
  for (const auto& [id, set] : annotations) {
    out += id;
    out += '\t';
    out += format_reaction_set(set);
    out += '\n';
  }
  return out;
}

LabelSpace build_label_space(const Annotations& annotations) {
  if (annotations.empty()) throw Error(ErrorCode::EmptyInput, "no annotations to build a label space from");
  std::vector<std::string> reactions;
  for (const auto& [id, set] : annotations) reactions.insert(reactions.end(), set.begin(), set.end());
  return LabelSpace(std::move(reactions));
}

LabelVector encode_labels(const ReactionSet& reactions, const LabelSpace& space) {
  std::vector<std::uint8_t> bits(space.size(), 0);
  if (reactions.empty()) {
    bits[LabelSpace::none_index()] = 1;
  } else {
    for (const auto& r : reactions) {
      const auto i = space.index(r);
      if (i == LabelSpace::none_index()) {
        throw Error(ErrorCode::UnknownLabel, "virtual label inside a reaction set");
      }
      bits[i] = 1;
    }
  }
  return LabelVector(std::move(bits));
}

ReactionSet decode_labels(const LabelVector& vec, const LabelSpace& space) {
  ReactionSet out;
  if (vec.size() != space.size()) throw Error(ErrorCode::ShapeMismatch, "label vector length differs from space");
  for (std::size_t i = 1; i < vec.size(); ++i) {
    if (vec[i]) out.insert(space.label(i));
  }
  return out;
}

Dataset make_dataset(std::vector<ProteinRecord> proteins, const Annotations& annotations) {
  Dataset ds;
  ds.proteins = std::move(proteins);
  ds.reindex();
  for (const auto& [id, set] : annotations) {
    ds.index_of(id);  // throws UnknownId for annotations without a sequence
  }
  for (const auto& p : ds.proteins) {
    auto it = annotations.find(p.id);
    ds.annotations.emplace(p.id, it == annotations.end() ? ReactionSet{} : it->second);
  }
  std::vector<std::string> reactions;
  for (const auto& [id, set] : ds.annotations) reactions.insert(reactions.end(), set.begin(), set.end());
  ds.space = LabelSpace(std::move(reactions));
  return ds;
}

std::uint64_t stratum_key(const ReactionSet& labels) {
  // std::set iterates sorted; '\n' cannot occur inside an identifier.
  std::uint64_t h = fnv1a("stratum");
  h = fnv1a(format_reaction_set(labels), h);
  return h;
}

FoldAssignment stratified_folds(const Dataset& dataset, int k, std::uint64_t seed) {
  if (k < 2) throw Error(ErrorCode::InvalidArgument, "fold count must be at least 2");
  if (dataset.proteins.empty()) throw Error(ErrorCode::EmptyInput, "cannot split an empty dataset");
  if (static_cast<std::size_t>(k) > dataset.proteins.size()) {
    throw Error(ErrorCode::TooFewItems, "fold count " + std::to_string(k) + " exceeds dataset size " +
                                            std::to_string(dataset.proteins.size()));
  }

  // Strata ordered by (hash, canonical key) so collisions stay deterministic.
  std::map<std::pair<std::uint64_t, std::string>, std::vector<std::string>> strata;
  for (const auto& p : dataset.proteins) {
    const auto& labels = dataset.labels_of(p.id);
    strata[{stratum_key(labels), format_reaction_set(labels)}].push_back(p.id);
  }

  Rng rng(seed);
  FoldAssignment out;
  out.k = k;
  std::size_t cursor = 0;
  for (auto& [key, members] : strata) {
    std::sort(members.begin(), members.end());
    rng.shuffle(members);
    for (const auto& id : members) {
      out.fold_of[id] = static_cast<int>(cursor % static_cast<std::size_t>(k));
      ++cursor;
    }
  }
  return out;
}

FoldAssignment parse_folds(std::string_view text) {
  FoldAssignment out;
  int max_fold = -1;
  for (auto line : lines(text)) {
    if (trim(line).empty() || line.front() == '#') continue;
    const auto cols = split(line, '\t');
    if (cols.size() != 2) throw Error(ErrorCode::MalformedLine, "fold line needs 2 columns");
    const auto fold = parse_int(cols[1]);
    if (fold < 0) throw Error(ErrorCode::MalformedLine, "negative fold index");
    if (!out.fold_of.emplace(std::string(trim(cols[0])), static_cast<int>(fold)).second) {
      throw Error(ErrorCode::DuplicateId, "protein listed twice in fold file");
    }
    max_fold = std::max(max_fold, static_cast<int>(fold));
  }
  if (out.fold_of.empty()) throw Error(ErrorCode::EmptyInput, "fold file is empty");
  out.k = max_fold + 1;
  return out;
}

std::string write_folds(const FoldAssignment& folds) {
  std::string out = "#protein_id\tfold\n";
  for (const auto& [id, f] : folds.fold_of) {
    out += id;
    out += '\t';
    out += std::to_string(f);
    out += '\n';
  }
  return out;
}

std::vector<std::string> holdout_filter(const Dataset& dataset, std::span<const std::string> test_ids,
                                        std::span<const std::string> train_ids) {
  std::set<std::string> train_id_set(train_ids.begin(), train_ids.end());
  std::set<ReactionSet> train_label_sets;
  for (const auto& id : train_ids) train_label_sets.insert(dataset.labels_of(id));

  std::vector<std::string> kept;
  for (const auto& id : test_ids) {
    if (train_id_set.count(id)) continue;
    if (train_label_sets.count(dataset.labels_of(id))) continue;
    kept.push_back(id);
  }
  return kept;
}

// ---------------------------------------------------------------------------
// Synthetic corpus

ReactionSet scan_motifs(std::string_view sequence, std::span<const std::string> motifs,
                        std::span<const std::string> reactions) {
  ReactionSet out;
  for (std::size_t i = 0; i < motifs.size(); ++i) {
    if (sequence.find(motifs[i]) != std::string_view::npos) out.insert(reactions[i]);
  }
  return out;
}

SyntheticCorpus make_synthetic(int n_proteins, int n_reactions, int motif_len, std::uint64_t seed,
                               const SyntheticOptions& opts) {
  if (n_proteins < 1) throw Error(ErrorCode::InvalidArgument, "n_proteins must be at least 1");
  if (n_reactions < 1) throw Error(ErrorCode::InvalidArgument, "n_reactions must be at least 1");
  if (motif_len < 3) throw Error(ErrorCode::InvalidArgument, "motif_len must be at least 3");
  {
    // 20^motif_len distinct motifs; stop multiplying once it clearly suffices.
    double capacity = 1.0;
    for (int i = 0; i < motif_len && capacity < 1e18; ++i) capacity *= 20.0;
    if (capacity < n_reactions) {
      throw Error(ErrorCode::InvalidArgument, "too few distinct motifs of length " +
                                                  std::to_string(motif_len) + " for " +
                                                  std::to_string(n_reactions) + " reactions");
    }
  }
  const int max_motifs = std::min(3, n_reactions);
  if (opts.min_length < max_motifs * motif_len || opts.max_length < opts.min_length) {
    throw Error(ErrorCode::InvalidArgument, "sequence length range cannot hold the implanted motifs");
  }

  constexpr std::string_view canonical = kAlphabet.substr(0, 20);
  Rng rng(seed);
  auto random_residues = [&](int len) {
    std::string s(static_cast<std::size_t>(len), 'A');
    for (auto& c : s) c = canonical[rng.index(20)];
    return s;
  };

  SyntheticCorpus corpus;
  const int width = std::max(5, static_cast<int>(std::to_string(n_reactions).size()));
  std::set<std::string> used;
  for (int i = 0; i < n_reactions; ++i) {
    std::string motif;
    do {
      motif = random_residues(motif_len);
    } while (!used.insert(motif).second);
    corpus.motifs.push_back(motif);
    auto num = std::to_string(10000 + i);
    num.insert(0, static_cast<std::size_t>(std::max(0, width - static_cast<int>(num.size()))), '0');
    corpus.reactions.push_back("RHEA:" + num);
  }

  const int id_width = static_cast<int>(std::to_string(n_proteins).size());
  std::vector<ProteinRecord> proteins;
  Annotations annotations;
  for (int p = 0; p < n_proteins; ++p) {
    auto num = std::to_string(p);
    num.insert(0, static_cast<std::size_t>(id_width - static_cast<int>(num.size())), '0');
    ProteinRecord rec{"syn" + num, {}, std::nullopt};

    const int len = opts.min_length + static_cast<int>(rng.index(
                                          static_cast<std::size_t>(opts.max_length - opts.min_length + 1)));
    const bool non_enzyme = rng.uniform() < opts.non_enzyme_fraction;
    if (non_enzyme) {
      do {
        rec.sequence = random_residues(len);
      } while (!scan_motifs(rec.sequence, corpus.motifs, corpus.reactions).empty());
    } else {
      rec.sequence = random_residues(len);
      const int count = 1 + static_cast<int>(rng.index(static_cast<std::size_t>(max_motifs)));
      std::vector<int> order(static_cast<std::size_t>(n_reactions));
      for (int i = 0; i < n_reactions; ++i) order[static_cast<std::size_t>(i)] = i;
      rng.shuffle(order);
      // One motif per equal-width segment keeps implants from overlapping.
      const int segment = len / count;
      for (int m = 0; m < count; ++m) {
        const int slack = segment - motif_len;
        const int pos = m * segment + static_cast<int>(rng.index(static_cast<std::size_t>(slack + 1)));
        rec.sequence.replace(static_cast<std::size_t>(pos), static_cast<std::size_t>(motif_len),
                             corpus.motifs[static_cast<std::size_t>(order[static_cast<std::size_t>(m)])]);
      }
    }
    auto labels = scan_motifs(rec.sequence, corpus.motifs, corpus.reactions);
    annotations.emplace(rec.id, std::move(labels));
    proteins.push_back(std::move(rec));
  }

  corpus.dataset = make_dataset(std::move(proteins), annotations);
  // Keep every declared reaction in the space even if no protein drew it.
  corpus.dataset.space = LabelSpace(corpus.reactions);
  return corpus;
}

}  // namespace rxn
