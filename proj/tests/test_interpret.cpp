#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>
#include <httplib.h>

#include <thread>

#include "rxn/interpret.hpp"
#include "rxn/random.hpp"

using namespace rxn;
using namespace rxn::interpret;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an rxn::Error");
  return ErrorCode::InvalidArgument;
}

PredictionSet two_candidates() {
  PredictionSet s;
  s.protein_id = "p1";
  s.items = {{"rA", 0.7, {"blast"}}, {"rB", 0.9, {"clean", "nn"}}};
  return s;
}

const ReactionTable& table() {
  static const auto t = parse_reaction_table(
      "#reaction_id\tequation\tsmiles\tec\n"
      "rA\tA + B = C\tCC>>C\t1.1.1.1\n"
      "rB\tD = E\t\t2.7.1.1;2.7.1.2\n");
  return t;
}

}  // namespace

TEST_CASE("reaction table") {
  const auto& t = table();
  CHECK(t.at("rA").smiles == "CC>>C");
  CHECK_FALSE(t.at("rB").smiles.has_value());
  CHECK(t.at("rB").ec == std::vector<std::string>{"2.7.1.1", "2.7.1.2"});
  CHECK(code_of([] { parse_reaction_table("rA\t\t\t\nrA\t\t\t\n"); }) == ErrorCode::DuplicateId);
}

TEST_CASE("build_prompt: template selection") {
  const auto with = build_prompt({"p1", "MKV", "P12345"}, two_candidates(), table());
  CHECK(with.template_id == "with_accession");
  CHECK(with.candidates.size() == 2);
  CHECK(with.candidates[0].reaction_id == "rB");
  CHECK(with.candidates[0].equation == "D = E");
  CHECK(with.instructions.find("P12345") != std::string::npos);

  const auto seq = build_prompt({"p1", "MKV", std::nullopt}, two_candidates(), table());
  CHECK(seq.template_id == "sequence_only");

  const auto none = build_prompt({"p1", "MKV", std::nullopt}, PredictionSet::abstain("p1"), table());
  CHECK(none.template_id == "no_candidates");
  CHECK(none.candidates.empty());

  CHECK(code_of([&] { build_prompt({"p1", "MKV", {}}, two_candidates(), table(), "fancy"); }) ==
        ErrorCode::UnknownTemplate);
  CHECK(code_of([&] { build_prompt({"p1", "MKV", {}}, two_candidates(), table(), "with_accession"); }) ==
        ErrorCode::InvalidArgument);
  CHECK(code_of([&] { build_prompt({"p1", "MKV", {}}, PredictionSet::abstain("p1"), table(), "sequence_only"); }) ==
        ErrorCode::InvalidArgument);
}

TEST_CASE("build_prompt: missing metadata is a warning") {
  auto s = two_candidates();
  s.items.push_back({"rZ", 0.1, {}});
  std::vector<std::string> warnings;
  const auto doc = build_prompt({"p1", "MKV", {}}, s, table(), "auto", &warnings);
  REQUIRE(warnings.size() == 1);
  CHECK(warnings[0].find("rZ") != std::string::npos);
  CHECK_FALSE(doc.candidates.back().equation.has_value());
}

TEST_CASE("prompt JSON is canonical and round-trips") {
  const auto a = to_json(build_prompt({"p1", "MKV", "P1"}, two_candidates(), table()));
  const auto b = to_json(build_prompt({"p1", "MKV", "P1"}, two_candidates(), table()));
  CHECK(a == b);
  CHECK(a.find("\"candidates\"") < a.find("\"instructions\""));
  CHECK(a.find("\"instructions\"") < a.find("\"protein\""));
  CHECK(a.find("\"confidence\": 0.9") != std::string::npos);
  const auto doc = parse_prompt(a);
  CHECK(to_json(doc) == a);
  CHECK(doc == build_prompt({"p1", "MKV", "P1"}, two_candidates(), table()));
}

TEST_CASE("parse_response: valid and invalid responses") {
  auto s = two_candidates();
  s.items.push_back({"rC", 0.2, {}});
  const auto prompt = build_prompt({"p1", "MKV", {}}, s, table());
  const std::string ok = R"({"ranking": [
      {"reaction_id": "rA", "rank": 2, "confidence": 0.5, "rationale": "x"},
      {"reaction_id": "rB", "rank": 1, "confidence": 0.9, "rationale": "y"},
      {"reaction_id": "rC", "rank": 3, "confidence": 0.1, "rationale": "z"}]})";
  const auto r = parse_response(ok, prompt);
  REQUIRE(r.ranking.size() == 3);
  CHECK(r.ranking[0].reaction_id == "rB");
  CHECK(r.ranking[2].rank == 3);

  CHECK(code_of([&] { parse_response("{not json", prompt); }) == ErrorCode::MalformedJson);
  CHECK(code_of([&] { parse_response(R"({"rank": []})", prompt); }) == ErrorCode::MalformedJson);
  CHECK(code_of([&] {
          parse_response(R"({"ranking": [{"reaction_id": "rA", "rank": "1", "confidence": 0.5, "rationale": ""}]})",
                         prompt);
        }) == ErrorCode::MalformedJson);
  CHECK(code_of([&] {
          parse_response(R"({"ranking": [{"reaction_id": "rQ", "rank": 1, "confidence": 0.5, "rationale": ""}]})",
                         prompt);
        }) == ErrorCode::ForeignReaction);
  CHECK(code_of([&] {
          parse_response(R"({"ranking": [{"reaction_id": "rA", "rank": 1, "confidence": 0.5, "rationale": ""},
                                          {"reaction_id": "rB", "rank": 1, "confidence": 0.5, "rationale": ""}]})",
                         prompt);
        }) == ErrorCode::DuplicateRank);
  CHECK(code_of([&] {
          parse_response(R"({"ranking": [{"reaction_id": "rA", "rank": 1, "confidence": 0.5, "rationale": ""},
                                          {"reaction_id": "rB", "rank": 3, "confidence": 0.5, "rationale": ""}]})",
                         prompt);
        }) == ErrorCode::RankGap);
}

TEST_CASE("rerank_stub") {
  const auto prompt = build_prompt({"p1", "MKV", {}}, two_candidates(), table());
  const auto r = rerank_stub(prompt);
  REQUIRE(r.ranking.size() == 2);
  CHECK(r.ranking[0].reaction_id == "rB");
  CHECK(r.ranking[0].rank == 1);
  CHECK(r.ranking[1].reaction_id == "rA");
  CHECK(r.ranking[0].rationale.find("clean, nn") != std::string::npos);

  PredictionSet tie;
  tie.protein_id = "p";
  tie.items = {{"rZ", 0.5, {}}, {"rA", 0.5, {}}};
  const auto t = rerank_stub(build_prompt({"p", "M", {}}, tie, {}));
  CHECK(t.ranking[0].reaction_id == "rA");

  PredictionSet one;
  one.protein_id = "p";
  one.items = {{"rA", 0.3, {}}};
  CHECK(rerank_stub(build_prompt({"p", "M", {}}, one, {})).ranking[0].rank == 1);
}

TEST_CASE("response serialization round trip and stub permutation property") {
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    PredictionSet s;
    s.protein_id = "p";
    const int n = 1 + static_cast<int>(rng.index(6));
    for (int i = 0; i < n; ++i) s.items.push_back({"r" + std::to_string(i), std::round(rng.uniform() * 4) / 4, {}});
    const auto prompt = build_prompt({"p", "MKV", {}}, s, {});
    const auto r = rerank_stub(prompt);
    CHECK(parse_response(to_json(r), prompt) == r);
    std::set<std::string> ids;
    for (const auto& it : r.ranking) ids.insert(it.reaction_id);
    CHECK(ids == s.labels());
  }
}

TEST_CASE("clients: stub and HTTP") {
  const auto prompt = build_prompt({"p1", "MKV", {}}, two_candidates(), table());
  StubClient stub;
  CHECK(explain(stub, prompt) == rerank_stub(prompt));

  httplib::Server server;
  std::string seen_auth;
  server.Post("/v1/rerank", [&](const httplib::Request& req, httplib::Response& res) {
    seen_auth = req.get_header_value("Authorization");
    res.set_content(to_json(rerank_stub(parse_prompt(req.body))), "application/json");
  });
  server.Post("/broken", [](const httplib::Request&, httplib::Response& res) { res.status = 400; });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread th([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  HttpClient http("http://127.0.0.1:" + std::to_string(port) + "/v1/rerank", "secret");
  CHECK(explain(http, prompt) == rerank_stub(prompt));
  CHECK(seen_auth == "Bearer secret");

  HttpClient broken("http://127.0.0.1:" + std::to_string(port) + "/broken", "");
  CHECK(code_of([&] { broken.complete("{}"); }) == ErrorCode::Io);

  server.stop();
  th.join();

  CHECK(code_of([] { HttpClient("https://example.org", ""); }) == ErrorCode::InvalidArgument);
}
