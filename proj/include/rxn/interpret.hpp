#pragma once

#include <chrono>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rxn/core.hpp"
#include "rxn/error.hpp"
#include "rxn/prediction.hpp"

namespace rxn::interpret {

struct ReactionMeta {
  std::string id;
  std::optional<std::string> equation;
  std::optional<std::string> smiles;
  std::vector<std::string> ec;
};

using ReactionTable = std::map<std::string, ReactionMeta>;

// `reaction_id<TAB>equation<TAB>smiles<TAB>ec;ec`, empty fields allowed.
ReactionTable parse_reaction_table(std::string_view text);

inline constexpr std::string_view kTemplateAuto = "auto";
inline constexpr std::string_view kTemplateWithAccession = "with_accession";
inline constexpr std::string_view kTemplateSequenceOnly = "sequence_only";
inline constexpr std::string_view kTemplateNoCandidates = "no_candidates";

const std::vector<std::string>& registered_templates();

struct Candidate {
  std::string reaction_id;
  std::optional<std::string> equation;
  std::optional<std::string> smiles;
  std::vector<std::string> ec;
  std::vector<std::string> sources;
  double confidence = 0;

  bool operator==(const Candidate&) const = default;
};

struct PromptDocument {
  std::string template_id;
  std::string protein_id;
  std::string sequence;
  std::optional<std::string> accession;
  std::vector<Candidate> candidates;
  std::string instructions;

  bool operator==(const PromptDocument&) const = default;
};

// "auto" picks with_accession, sequence_only or no_candidates from the inputs.
// Candidates absent from `reactions` are kept without equation fields and
// reported through `warnings`.
PromptDocument build_prompt(const ProteinRecord& protein, const PredictionSet& predictions,
                            const ReactionTable& reactions, std::string_view template_id = kTemplateAuto,
                            std::vector<std::string>* warnings = nullptr);

// Canonical JSON: sorted keys, shortest round-trip numbers, two-space indent.
std::string to_json(const PromptDocument& prompt);
PromptDocument parse_prompt(std::string_view text);

struct RankedItem {
  std::string reaction_id;
  int rank = 0;
  double confidence = 0;
  std::string rationale;

  bool operator==(const RankedItem&) const = default;
};

struct RankedExplanation {
  std::vector<RankedItem> ranking;  // ordered by rank

  bool operator==(const RankedExplanation&) const = default;
};

std::string to_json(const RankedExplanation& explanation);

// Validates against the response schema and the prompt's candidates:
// MalformedJson, DuplicateRank, RankGap and ForeignReaction are distinct.
RankedExplanation parse_response(std::string_view text, const PromptDocument& prompt);

// Deterministic stand-in for a language model: confidence descending, then id.
RankedExplanation rerank_stub(const PromptDocument& prompt);

class LlmClient {
 public:
  virtual ~LlmClient() = default;
  virtual std::string complete(const std::string& prompt_json) = 0;

  std::chrono::milliseconds timeout{30000};
  int retries = 2;
};

class StubClient : public LlmClient {
 public:
  std::string complete(const std::string& prompt_json) override;
};

// Posts the prompt JSON to an http:// endpoint and returns the body.
class HttpClient : public LlmClient {
 public:
  HttpClient(std::string endpoint, std::string token);
  std::string complete(const std::string& prompt_json) override;

 private:
  std::string endpoint_, token_;
};

// HttpClient when RXN_LLM_ENDPOINT is set (token from RXN_LLM_TOKEN),
// otherwise the stub.
std::unique_ptr<LlmClient> client_from_environment();

RankedExplanation explain(LlmClient& client, const PromptDocument& prompt);

}  // namespace rxn::interpret
