#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace rxn {

// Token of the virtual "no catalytic activity" label in every file format.
inline constexpr std::string_view kVirtualLabel = "-";

// 20 canonical residues followed by the wildcard.
inline constexpr std::string_view kAlphabet = "ACDEFGHIKLMNPQRSTVWYX";
inline constexpr int kAlphabetSize = 21;
inline constexpr int kWildcardToken = 20;

struct ProteinRecord {
  std::string id;
  std::string sequence;
  std::optional<std::string> accession;
};

// A protein's biochemical reactions. The empty set is a non-enzyme, which
// encodes onto the virtual label.
using ReactionSet = std::set<std::string>;
using Annotations = std::map<std::string, ReactionSet>;

class LabelSpace {
 public:
  LabelSpace() = default;
  // `reactions` must not contain the virtual label; they are stored sorted
  // behind the virtual label at index 0.
  explicit LabelSpace(std::vector<std::string> reactions);

  std::size_t size() const { return labels_.size(); }
  static constexpr std::size_t none_index() { return 0; }
  const std::string& label(std::size_t i) const { return labels_.at(i); }
  const std::vector<std::string>& labels() const { return labels_; }
  bool contains(std::string_view label) const;
  std::optional<std::size_t> find(std::string_view label) const;
  std::size_t index(std::string_view label) const;  // throws UnknownLabel

  bool operator==(const LabelSpace& other) const { return labels_ == other.labels_; }

 private:
  std::vector<std::string> labels_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

// Binary membership vector over a LabelSpace. At least one bit is set and the
// virtual bit excludes every other bit.
class LabelVector {
 public:
  explicit LabelVector(std::vector<std::uint8_t> bits);

  std::size_t size() const { return bits_.size(); }
  bool operator[](std::size_t i) const { return bits_[i] != 0; }
  const std::vector<std::uint8_t>& bits() const { return bits_; }
  bool is_non_enzyme() const { return bits_[LabelSpace::none_index()] != 0; }

  bool operator==(const LabelVector&) const = default;

 private:
  std::vector<std::uint8_t> bits_;
};

struct Dataset {
  std::vector<ProteinRecord> proteins;
  Annotations annotations;  // one entry per protein
  LabelSpace space;

  const ProteinRecord& protein(std::string_view id) const;
  const ReactionSet& labels_of(std::string_view id) const;
  std::vector<std::string> ids() const;
  std::size_t index_of(std::string_view id) const;  // throws UnknownId

  // Rebuilds the id lookup after `proteins` changed.
  void reindex();

 private:
  std::unordered_map<std::string, std::size_t> lookup_;
};

struct FoldAssignment {
  std::map<std::string, int> fold_of;
  int k = 0;

  std::vector<std::string> members(int fold) const;
  std::vector<std::string> complement(int fold) const;
};

struct FastaResult {
  std::vector<ProteinRecord> records;
  std::size_t normalization_warnings = 0;
};

FastaResult parse_fasta(std::string_view text);
std::string write_fasta(std::span<const ProteinRecord> records);

// Normalizes one residue onto the alphabet; returns false when it had to be
// replaced by the wildcard.
bool normalize_residue(char in, char& out);
int residue_token(char residue);
std::vector<int> tokenize(std::string_view sequence);

// `protein_id<TAB>rxn;rxn;...` with `-` for non-enzymes.
Annotations parse_reaction_map(std::string_view text);
std::string write_reaction_map(const Annotations& annotations);
std::string format_reaction_set(const ReactionSet& set);

LabelSpace build_label_space(const Annotations& annotations);
LabelVector encode_labels(const ReactionSet& reactions, const LabelSpace& space);
ReactionSet decode_labels(const LabelVector& vec, const LabelSpace& space);

// Joins proteins and annotations; proteins without an annotation line become
// non-enzymes. Annotations for unknown proteins are an error.
Dataset make_dataset(std::vector<ProteinRecord> proteins, const Annotations& annotations);

// Key of a protein's stratum: the canonical hash of its sorted label set.
std::uint64_t stratum_key(const ReactionSet& labels);

FoldAssignment stratified_folds(const Dataset& dataset, int k, std::uint64_t seed);
FoldAssignment parse_folds(std::string_view text);
std::string write_folds(const FoldAssignment& folds);

// Drops test proteins whose id, or whose full label set, already appears in
// the training ids. Order of `test_ids` is preserved.
std::vector<std::string> holdout_filter(const Dataset& dataset,
                                        std::span<const std::string> test_ids,
                                        std::span<const std::string> train_ids);

struct SyntheticOptions {
  int min_length = 40;
  int max_length = 60;
  double non_enzyme_fraction = 0.1;
};

struct SyntheticCorpus {
  Dataset dataset;
  std::vector<std::string> reactions;
  std::vector<std::string> motifs;  // motifs[i] implants reactions[i]
};

SyntheticCorpus make_synthetic(int n_proteins, int n_reactions, int motif_len,
                               std::uint64_t seed, const SyntheticOptions& opts = {});

// Label set recovered by scanning for every motif as a substring.
ReactionSet scan_motifs(std::string_view sequence, std::span<const std::string> motifs,
                        std::span<const std::string> reactions);

}  // namespace rxn
