#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rxn/core.hpp"
#include "rxn/prediction.hpp"

namespace rxn {

// Match/mismatch scoring with affine gaps. A gap of length g costs
// gap_open + (g - 1) * gap_extend.
struct ScoringScheme {
  int match = 2;
  int mismatch = -1;
  int gap_open = 3;
  int gap_extend = 1;

  void validate() const;
  int pair_score(char a, char b) const { return a == b ? match : mismatch; }
  int gap_cost(int length) const { return gap_open + (length - 1) * gap_extend; }
};

// One alignment column; a position of -1 marks a gap on that side.
struct AlignedPair {
  int a = -1;
  int b = -1;
  bool operator==(const AlignedPair&) const = default;
};

struct Alignment {
  int score = 0;
  std::vector<AlignedPair> columns;
  int identities = 0;

  int aligned_len() const { return static_cast<int>(columns.size()); }
  bool empty() const { return columns.empty(); }
};

// Smith-Waterman with Gotoh's three-state recursion. The end cell is the
// first maximal cell in row-major order; traceback prefers the diagonal
// state, and a zero-scoring prefix is trimmed. A best score <= 0 yields the
// empty alignment.
Alignment local_align(std::string_view a, std::string_view b, const ScoringScheme& scheme = {});

// Score and identity count recomputed from the columns alone.
int rescore(const Alignment& aln, std::string_view a, std::string_view b, const ScoringScheme& scheme);

// identities / alignment columns (gaps included); 0 for the empty alignment.
double identity(std::string_view a, std::string_view b, const ScoringScheme& scheme = {});

struct BestHit {
  std::string ref_id;
  double identity = 0.0;
  int aligned_len = 0;
};

// Highest identity over the references; ties go to the lexicographically
// smaller id.
BestHit best_hit_identity(std::string_view query, std::span<const ProteinRecord> references,
                          const ScoringScheme& scheme = {});

// Transfers the best hit's reactions at confidence = identity. No prediction
// when the best alignment is empty or below `min_identity`.
PredictionSet msa_via_rxn_predict(const ProteinRecord& query, const Dataset& reference,
                                  double min_identity = 0.0, const ScoringScheme& scheme = {});

}  // namespace rxn
