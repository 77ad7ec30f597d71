#pragma once

// Exhaustive local-alignment oracle for short sequences: enumerates every
// alignment path explicitly instead of using dynamic programming.

#include <algorithm>
#include <string_view>

#include "rxn/align.hpp"

namespace rxn::test {

namespace detail {

enum class Last { Match, GapB, GapA };

inline void enumerate(std::string_view a, std::string_view b, std::size_t i, std::size_t j, Last last, int score,
                      const ScoringScheme& s, int& best) {
  if (last == Last::Match) best = std::max(best, score);
  if (i < a.size() && j < b.size()) enumerate(a, b, i + 1, j + 1, Last::Match, score + s.pair_score(a[i], b[j]), s, best);
  if (i < a.size()) {
    enumerate(a, b, i + 1, j, Last::GapB, score - (last == Last::GapB ? s.gap_extend : s.gap_open), s, best);
  }
  if (j < b.size()) {
    enumerate(a, b, i, j + 1, Last::GapA, score - (last == Last::GapA ? s.gap_extend : s.gap_open), s, best);
  }
}

}  // namespace detail

// Best score over all local alignments that start and end with an aligned
// residue pair; 0 stands for the empty alignment.
inline int brute_force_best_score(std::string_view a, std::string_view b, const ScoringScheme& s) {
  int best = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) {
      detail::enumerate(a, b, i + 1, j + 1, detail::Last::Match, s.pair_score(a[i], b[j]), s, best);
    }
  }
  return best;
}

// Columns strictly increase on both sides, start and end on aligned pairs,
// and the identity count matches the columns.
inline bool is_valid_local_alignment(const Alignment& aln, std::string_view a, std::string_view b) {
  if (aln.empty()) return aln.identities == 0 && aln.score == 0;
  const auto& f = aln.columns.front();
  const auto& l = aln.columns.back();
  if (f.a < 0 || f.b < 0 || l.a < 0 || l.b < 0) return false;
  int pa = f.a - 1, pb = f.b - 1, ids = 0;
  for (const auto& c : aln.columns) {
    if (c.a < 0 && c.b < 0) return false;
    if (c.a >= 0) {
      if (c.a != pa + 1 || c.a >= static_cast<int>(a.size())) return false;
      pa = c.a;
    }
    if (c.b >= 0) {
      if (c.b != pb + 1 || c.b >= static_cast<int>(b.size())) return false;
      pb = c.b;
    }
    if (c.a >= 0 && c.b >= 0 && a[static_cast<std::size_t>(c.a)] == b[static_cast<std::size_t>(c.b)]) ++ids;
  }
  return ids == aln.identities;
}

}  // namespace rxn::test
