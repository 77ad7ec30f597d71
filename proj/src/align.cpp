#include "rxn/align.hpp"

#include <algorithm>
#include <climits>

#include "rxn/error.hpp"

namespace rxn {

void ScoringScheme::validate() const {
  if (match <= 0) throw Error(ErrorCode::InvalidArgument, "match score must be positive");
  if (mismatch > 0) throw Error(ErrorCode::InvalidArgument, "mismatch score must be <= 0");
  if (gap_open < 0 || gap_extend < 0) throw Error(ErrorCode::InvalidArgument, "gap penalties must be >= 0");
}

namespace {

constexpr long kNegInf = LONG_MIN / 4;

// Row-major (n+1) x (m+1) table.
struct Table {
  std::size_t cols;
  std::vector<long> v;
  Table(std::size_t rows, std::size_t c, long fill) : cols(c), v(rows * c, fill) {}
  long& operator()(std::size_t i, std::size_t j) { return v[i * cols + j]; }
  long operator()(std::size_t i, std::size_t j) const { return v[i * cols + j]; }
};

enum class State { Match, GapB, GapA };  // GapB: a[i] against a gap; GapA: gap against b[j]

}  // namespace

Alignment local_align(std::string_view a, std::string_view b, const ScoringScheme& scheme) {
  if (a.empty() || b.empty()) throw Error(ErrorCode::EmptySequence, "cannot align an empty sequence");
  scheme.validate();

  const std::size_t n = a.size(), m = b.size();
  const long open = scheme.gap_open, ext = scheme.gap_extend;
  Table M(n + 1, m + 1, kNegInf), X(n + 1, m + 1, kNegInf), Y(n + 1, m + 1, kNegInf);

  long best = 0;
  std::size_t bi = 0, bj = 0;
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      const long prev = std::max({0L, M(i - 1, j - 1), X(i - 1, j - 1), Y(i - 1, j - 1)});
      M(i, j) = prev + scheme.pair_score(a[i - 1], b[j - 1]);
      X(i, j) = std::max({M(i - 1, j) - open, X(i - 1, j) - ext, Y(i - 1, j) - open});
      Y(i, j) = std::max({M(i, j - 1) - open, Y(i, j - 1) - ext, X(i, j - 1) - open});
      if (M(i, j) > best) {
        best = M(i, j);
        bi = i;
        bj = j;
      }
    }
  }

  Alignment out;
  if (best <= 0) return out;
  out.score = static_cast<int>(best);

  std::size_t i = bi, j = bj;
  State state = State::Match;
  for (;;) {
    if (state == State::Match) {
      out.columns.push_back({static_cast<int>(i - 1), static_cast<int>(j - 1)});
      if (a[i - 1] == b[j - 1]) ++out.identities;
      const long prev = M(i, j) - scheme.pair_score(a[i - 1], b[j - 1]);
      --i;
      --j;
      if (prev <= 0) break;  // zero-scoring prefix is trimmed
      if (M(i, j) == prev) state = State::Match;
      else if (X(i, j) == prev) state = State::GapB;
      else state = State::GapA;
    } else if (state == State::GapB) {
      out.columns.push_back({static_cast<int>(i - 1), -1});
      const long cur = X(i, j);
      --i;
      if (M(i, j) - open == cur) state = State::Match;
      else if (X(i, j) - ext == cur) state = State::GapB;
      else state = State::GapA;
    } else {
      out.columns.push_back({-1, static_cast<int>(j - 1)});
      const long cur = Y(i, j);
      --j;
      if (M(i, j) - open == cur) state = State::Match;
      else if (Y(i, j) - ext == cur) state = State::GapA;
      else state = State::GapB;
    }
  }
  std::reverse(out.columns.begin(), out.columns.end());
  return out;
}

int rescore(const Alignment& aln, std::string_view a, std::string_view b, const ScoringScheme& scheme) {
  int score = 0;
  enum { None, InA, InB } run = None;
  for (const auto& c : aln.columns) {
    if (c.a >= 0 && c.b >= 0) {
      score += scheme.pair_score(a[static_cast<std::size_t>(c.a)], b[static_cast<std::size_t>(c.b)]);
      run = None;
    } else if (c.b < 0) {
      score -= run == InB ? scheme.gap_extend : scheme.gap_open;
      run = InB;
    } else {
      score -= run == InA ? scheme.gap_extend : scheme.gap_open;
      run = InA;
    }
  }
  return score;
}

double identity(std::string_view a, std::string_view b, const ScoringScheme& scheme) {
  const auto aln = local_align(a, b, scheme);
  if (aln.empty()) return 0.0;
  return static_cast<double>(aln.identities) / static_cast<double>(aln.aligned_len());
}

BestHit best_hit_identity(std::string_view query, std::span<const ProteinRecord> references,
                          const ScoringScheme& scheme) {
  if (references.empty()) throw Error(ErrorCode::EmptyInput, "empty reference set");
  BestHit best;
  bool have = false;
  for (const auto& ref : references) {
    const auto aln = local_align(query, ref.sequence, scheme);
    const double id = aln.empty() ? 0.0 : static_cast<double>(aln.identities) / aln.aligned_len();
    if (!have || id > best.identity || (id == best.identity && ref.id < best.ref_id)) {
      best = {ref.id, id, aln.aligned_len()};
      have = true;
    }
  }
  return best;
}

PredictionSet msa_via_rxn_predict(const ProteinRecord& query, const Dataset& reference, double min_identity,
                                  const ScoringScheme& scheme) {
  const auto hit = best_hit_identity(query.sequence, reference.proteins, scheme);
  if (hit.aligned_len == 0 || hit.identity < min_identity) {
    auto out = PredictionSet::abstain(query.id);
    out.metadata["identity"] = std::to_string(hit.identity);
    return out;
  }
  PredictionSet out;
  out.protein_id = query.id;
  for (const auto& label : label_tokens(reference.labels_of(hit.ref_id))) {
    out.items.push_back({label, hit.identity, {}});
  }
  out.rank();
  out.metadata["hit"] = hit.ref_id;
  return out;
}

}  // namespace rxn
