#include "rxn/interpret.hpp"

#include <algorithm>
#include <json.hpp>
#include <set>

#include "rxn/io.hpp"

namespace rxn::interpret {

using nlohmann::json;

namespace {

std::optional<std::string> non_empty(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  return std::string(s);
}

std::string instructions_for(std::string_view template_id, const std::optional<std::string>& accession) {
  const std::string schema =
      "Answer with a JSON object {\"ranking\": [{\"reaction_id\", \"rank\", \"confidence\", \"rationale\"}]} with "
      "ranks 1..k and reaction ids taken from the candidates only.";
  if (template_id == kTemplateWithAccession) {
    return "The protein is database entry " + accession.value_or("") +
           ". Using its curated annotation together with the sequence, re-rank the candidate reactions by "
           "likelihood and justify each in one sentence. " + schema;
  }
  if (template_id == kTemplateSequenceOnly) {
    return "The protein has no database annotation. Judge the candidate reactions from the sequence alone, re-rank "
           "them by likelihood and justify each in one sentence. " + schema;
  }
  return "No predictor proposed a reaction for this protein. Say whether it is likely to be an enzyme and return an "
         "empty ranking unless a reaction can be named. " + schema;
}

json candidate_json(const Candidate& c) {
  json j;
  j["reaction_id"] = c.reaction_id;
  j["confidence"] = c.confidence;
  j["sources"] = c.sources;
  j["ec"] = c.ec;
  if (c.equation) j["equation"] = *c.equation;
  if (c.smiles) j["smiles"] = *c.smiles;
  return j;
}

[[noreturn]] void malformed(const std::string& what) { throw Error(ErrorCode::MalformedJson, what); }

template <class T>
T field(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) malformed(std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    malformed(std::string("field '") + key + "' has the wrong type");
  }
}

json parse_json(std::string_view text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    malformed(std::string("invalid JSON: ") + e.what());
  }
}

}  // namespace

ReactionTable parse_reaction_table(std::string_view text) {
  ReactionTable table;
  std::size_t line_no = 0;
  for (auto line : lines(text)) {
    ++line_no;
    if (trim(line).empty() || line.front() == '#') continue;
    auto cols = split(line, '\t');
    if (cols.empty() || cols.size() > 4 || trim(cols[0]).empty()) {
      throw Error(ErrorCode::MalformedLine, "reaction table line " + std::to_string(line_no));
    }
    cols.resize(4, std::string_view{});
    ReactionMeta m;
    m.id = std::string(trim(cols[0]));
    m.equation = non_empty(cols[1]);
    m.smiles = non_empty(cols[2]);
    for (auto ec : split(cols[3], ';')) {
      if (!trim(ec).empty()) m.ec.emplace_back(trim(ec));
    }
    if (!table.emplace(m.id, m).second) throw Error(ErrorCode::DuplicateId, "reaction '" + m.id + "' listed twice");
  }
  return table;
}

const std::vector<std::string>& registered_templates() {
  static const std::vector<std::string> t{std::string(kTemplateWithAccession), std::string(kTemplateSequenceOnly),
                                          std::string(kTemplateNoCandidates)};
  return t;
}

PromptDocument build_prompt(const ProteinRecord& protein, const PredictionSet& predictions,
                            const ReactionTable& reactions, std::string_view template_id,
                            std::vector<std::string>* warnings) {
  const bool empty = predictions.no_prediction || predictions.items.empty();
  std::string tmpl(template_id);
  if (template_id == kTemplateAuto) {
    tmpl = empty ? kTemplateNoCandidates : protein.accession ? kTemplateWithAccession : kTemplateSequenceOnly;
  } else if (std::find(registered_templates().begin(), registered_templates().end(), tmpl) ==
             registered_templates().end()) {
    throw Error(ErrorCode::UnknownTemplate, "unknown prompt template '" + tmpl + "'");
  }
  if (empty != (tmpl == kTemplateNoCandidates)) {
    throw Error(ErrorCode::InvalidArgument, "template '" + tmpl + "' does not fit a " +
                                                (empty ? "prediction without" : "prediction with") + " candidates");
  }
  if (tmpl == kTemplateWithAccession && !protein.accession) {
    throw Error(ErrorCode::InvalidArgument, "template 'with_accession' needs an accession");
  }

  PromptDocument doc;
  doc.template_id = tmpl;
  doc.protein_id = protein.id;
  doc.sequence = protein.sequence;
  doc.accession = protein.accession;
  doc.instructions = instructions_for(tmpl, protein.accession);
  PredictionSet ranked = predictions;
  ranked.rank();
  for (const auto& it : ranked.items) {
    Candidate c;
    c.reaction_id = it.reaction;
    c.confidence = it.confidence;
    c.sources = it.sources;
    auto m = reactions.find(it.reaction);
    if (m != reactions.end()) {
      c.equation = m->second.equation;
      c.smiles = m->second.smiles;
      c.ec = m->second.ec;
    } else if (it.reaction != kVirtualLabel && warnings) {
      warnings->push_back("reaction '" + it.reaction + "' has no metadata; emitted without equation fields");
    }
    doc.candidates.push_back(std::move(c));
  }
  return doc;
}

std::string to_json(const PromptDocument& prompt) {
  json j;
  j["template"] = prompt.template_id;
  j["instructions"] = prompt.instructions;
  json p;
  p["id"] = prompt.protein_id;
  p["sequence"] = prompt.sequence;
  if (prompt.accession) p["accession"] = *prompt.accession;
  j["protein"] = p;
  j["candidates"] = json::array();
  for (const auto& c : prompt.candidates) j["candidates"].push_back(candidate_json(c));
  return j.dump(2) + "\n";
}

PromptDocument parse_prompt(std::string_view text) {
  const json j = parse_json(text);
  PromptDocument doc;
  doc.template_id = field<std::string>(j, "template");
  doc.instructions = field<std::string>(j, "instructions");
  const json p = field<json>(j, "protein");
  doc.protein_id = field<std::string>(p, "id");
  doc.sequence = field<std::string>(p, "sequence");
  if (p.contains("accession")) doc.accession = field<std::string>(p, "accession");
  const json cands = field<json>(j, "candidates");
  if (!cands.is_array()) malformed("'candidates' must be an array");
  for (const auto& cj : cands) {
    Candidate c;
    c.reaction_id = field<std::string>(cj, "reaction_id");
    c.confidence = field<double>(cj, "confidence");
    c.sources = field<std::vector<std::string>>(cj, "sources");
    c.ec = field<std::vector<std::string>>(cj, "ec");
    if (cj.contains("equation")) c.equation = field<std::string>(cj, "equation");
    if (cj.contains("smiles")) c.smiles = field<std::string>(cj, "smiles");
    doc.candidates.push_back(std::move(c));
  }
  return doc;
}

std::string to_json(const RankedExplanation& explanation) {
  json j;
  j["ranking"] = json::array();
  for (const auto& r : explanation.ranking) {
    j["ranking"].push_back(
        {{"reaction_id", r.reaction_id}, {"rank", r.rank}, {"confidence", r.confidence}, {"rationale", r.rationale}});
  }
  return j.dump(2) + "\n";
}

RankedExplanation parse_response(std::string_view text, const PromptDocument& prompt) {
  const json j = parse_json(text);
  const json ranking = field<json>(j, "ranking");
  if (!ranking.is_array()) malformed("'ranking' must be an array");
  RankedExplanation out;
  for (const auto& rj : ranking) {
    RankedItem r;
    r.reaction_id = field<std::string>(rj, "reaction_id");
    r.rank = field<int>(rj, "rank");
    r.confidence = field<double>(rj, "confidence");
    r.rationale = field<std::string>(rj, "rationale");
    if (!(r.confidence >= 0.0 && r.confidence <= 1.0)) malformed("confidence outside [0,1]");
    out.ranking.push_back(std::move(r));
  }

  std::set<std::string> allowed;
  for (const auto& c : prompt.candidates) allowed.insert(c.reaction_id);
  std::set<std::string> seen_ids;
  std::set<int> ranks;
  for (const auto& r : out.ranking) {
    if (!allowed.count(r.reaction_id)) {
      throw Error(ErrorCode::ForeignReaction, "response ranks '" + r.reaction_id + "', which was not a candidate");
    }
    if (!seen_ids.insert(r.reaction_id).second) {
      throw Error(ErrorCode::DuplicateId, "response ranks '" + r.reaction_id + "' twice");
    }
    if (!ranks.insert(r.rank).second) throw Error(ErrorCode::DuplicateRank, "rank " + std::to_string(r.rank) + " repeated");
  }
  int expect = 1;
  for (int r : ranks) {
    if (r != expect) throw Error(ErrorCode::RankGap, "ranks must run 1.." + std::to_string(ranks.size()) + " without gaps");
    ++expect;
  }
  std::sort(out.ranking.begin(), out.ranking.end(), [](const auto& a, const auto& b) { return a.rank < b.rank; });
  return out;
}

RankedExplanation rerank_stub(const PromptDocument& prompt) {
  std::vector<const Candidate*> order;
  for (const auto& c : prompt.candidates) order.push_back(&c);
  std::sort(order.begin(), order.end(), [](const Candidate* a, const Candidate* b) {
    if (a->confidence != b->confidence) return a->confidence > b->confidence;
    return a->reaction_id < b->reaction_id;
  });
  RankedExplanation out;
  int rank = 0;
  for (const auto* c : order) {
    std::string why = "Proposed";
    if (!c->sources.empty()) {
      why += " by ";
      for (std::size_t i = 0; i < c->sources.size(); ++i) why += (i ? ", " : "") + c->sources[i];
    }
    why += " with confidence " + format_real(c->confidence) + ".";
    if (c->equation) why += " Equation: " + *c->equation + ".";
    out.ranking.push_back({c->reaction_id, ++rank, c->confidence, why});
  }
  return out;
}

std::string StubClient::complete(const std::string& prompt_json) {
  return to_json(rerank_stub(parse_prompt(prompt_json)));
}

RankedExplanation explain(LlmClient& client, const PromptDocument& prompt) {
  return parse_response(client.complete(to_json(prompt)), prompt);
}

}  // namespace rxn::interpret
