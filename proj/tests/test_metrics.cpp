#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "metrics_oracle.hpp"
#include "rxn/error.hpp"
#include "rxn/metrics.hpp"
#include "rxn/random.hpp"

using namespace rxn;

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

const LabelSpace& ab_space() {
  static const LabelSpace s({"rA", "rB"});
  return s;
}

struct Instance {
  LabelSpace space;
  Labelings gold, pred;
};

// Up to 5 reaction classes and 10 samples; gold and predictions obey the
// virtual-label exclusion, predictions may abstain.
Instance random_instance(Rng& rng) {
  Instance in;
  const int n_classes = 1 + static_cast<int>(rng.index(5));
  std::vector<std::string> reactions;
  for (int i = 0; i < n_classes; ++i) reactions.push_back("r" + std::to_string(i));
  in.space = LabelSpace(reactions);
  auto draw = [&](bool may_abstain) {
    std::set<std::string> s;
    const double u = rng.uniform();
    if (may_abstain && u < 0.1) return s;
    if (u < 0.3) return std::set<std::string>{"-"};
    for (const auto& r : reactions) {
      if (rng.uniform() < 0.4) s.insert(r);
    }
    if (s.empty()) s.insert(reactions[rng.index(reactions.size())]);
    return s;
  };
  const int n = 1 + static_cast<int>(rng.index(10));
  for (int i = 0; i < n; ++i) {
    const auto id = "s" + std::to_string(i);
    in.gold[id] = draw(false);
    in.pred[id] = draw(true);
  }
  return in;
}

}  // namespace

TEST_CASE("confusion_per_class: worked 2x2 case") {
  const Labelings gold{{"s1", {"rA"}}, {"s2", {"rB"}}};
  const Labelings pred{{"s1", {"rA"}}, {"s2", {"rA"}}};
  const auto c = confusion_per_class(gold, pred, ab_space());
  CHECK(c.at("rA") == ClassCounts{1, 1, 0, 0});
  CHECK(c.at("rB") == ClassCounts{0, 0, 1, 1});
  CHECK(c.at("-") == ClassCounts{0, 0, 0, 2});

  const auto r = macro_metrics(gold, pred, ab_space());
  CHECK(r.n_classes == 2);
  CHECK(r.macc == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(r.mpr == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(r.mrecall == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(std::abs(r.mf1 - 1.0 / 3.0) < 1e-12);
}

TEST_CASE("macro_metrics: perfect predictions, abstention, errors") {
  const Labelings gold{{"s1", {"rA"}}, {"s2", {"-"}}, {"s3", {"rA", "rB"}}};
  const auto r = macro_metrics(gold, gold, ab_space());
  CHECK(r.macc == 1.0);
  CHECK(r.mpr == 1.0);
  CHECK(r.mrecall == 1.0);
  CHECK(r.mf1 == 1.0);
  for (const auto& [l, c] : confusion_per_class(gold, gold, ab_space())) CHECK(c.fp + c.fn == 0);

  Labelings none = gold;
  none["s3"] = {};
  const auto c = confusion_per_class(gold, none, ab_space());
  CHECK(c.at("rA").fn == 1);
  CHECK(c.at("rB").fn == 1);

  CHECK(code_of([] { macro_metrics({}, {}, ab_space()); }) == ErrorCode::EmptyInput);
  CHECK(code_of([&] { confusion_per_class(gold, {{"s1", {"rA"}}}, ab_space()); }) == ErrorCode::IdMismatch);
  CHECK(code_of([&] { confusion_per_class({{"s1", {"rA"}}}, {{"s9", {"rA"}}}, ab_space()); }) ==
        ErrorCode::IdMismatch);
  CHECK(code_of([&] { confusion_per_class({{"s1", {"rA"}}}, {{"s1", {"rQ"}}}, ab_space()); }) ==
        ErrorCode::UnknownLabel);
}

TEST_CASE("macro_metrics: global N and per-class F1 toggles") {
  const Labelings gold{{"s1", {"rA"}}};
  const Labelings pred{{"s1", {"rA"}}};
  MetricsOptions g;
  g.global_n = true;
  const auto r = macro_metrics(gold, pred, ab_space(), g);
  CHECK(r.n_classes == 3);
  CHECK(r.mf1 == 1.0);

  const Labelings gold2{{"s1", {"rA"}}, {"s2", {"rB"}}};
  const Labelings pred2{{"s1", {"rA", "rB"}}, {"s2", {"rB"}}};
  MetricsOptions f;
  f.per_class_f1 = true;
  const auto h = macro_metrics(gold2, pred2, ab_space());
  const auto m = macro_metrics(gold2, pred2, ab_space(), f);
  CHECK(m.mf1 == doctest::Approx((1.0 + 2.0 / 3.0) / 2).epsilon(1e-15));
  CHECK(h.mf1 == doctest::Approx(2 * 0.75 * 1.0 / 1.75).epsilon(1e-15));
  CHECK(m.mf1_harmonic == h.mf1);
}

TEST_CASE("macro_metrics equals the brute-force oracle on random instances") {
  Rng rng(2024);
  int violations = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto in = random_instance(rng);
    for (bool global : {false, true}) {
      MetricsOptions opts;
      opts.global_n = global;
      const auto r = macro_metrics(in.gold, in.pred, in.space, opts);
      const auto o = test::brute_force_metrics(in.gold, in.pred, in.space.labels(), global);
      const bool ok = r.n_classes == o.n_classes && std::abs(r.macc - o.macc) <= 1e-12 &&
                      std::abs(r.mpr - o.mpr) <= 1e-12 && std::abs(r.mrecall - o.mrecall) <= 1e-12 &&
                      std::abs(r.mf1 - o.mf1) <= 1e-12 && std::abs(r.mf1_per_class_mean - o.mf1_per_class) <= 1e-12;
      violations += ok ? 0 : 1;
      for (double x : {r.macc, r.mpr, r.mrecall, r.mf1}) CHECK((x >= 0.0 && x <= 1.0));
    }
  }
  CHECK(violations == 0);
}

TEST_CASE("macro metrics: permutation, duplication and superset properties") {
  Rng rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    const auto in = random_instance(rng);
    const auto base = macro_metrics(in.gold, in.pred, in.space);

    // Renaming classes in reverse order permutes the label space.
    const auto& labels = in.space.labels();
    const std::size_t n = labels.size() - 1;
    std::map<std::string, std::string> rename;
    std::vector<std::string> renamed;
    for (std::size_t i = 1; i <= n; ++i) {
      rename[labels[i]] = "z" + std::to_string(n - i);
      renamed.push_back(rename[labels[i]]);
    }
    rename["-"] = "-";
    auto relabel = [&](const Labelings& l) {
      Labelings out;
      for (const auto& [id, s] : l) {
        for (const auto& x : s) out[id].insert(rename.at(x));
        out[id];
      }
      return out;
    };
    const auto perm = macro_metrics(relabel(in.gold), relabel(in.pred), LabelSpace(renamed));
    CHECK(std::abs(perm.mf1 - base.mf1) < 1e-12);
    CHECK(std::abs(perm.macc - base.macc) < 1e-12);

    Labelings g2 = in.gold, p2 = in.pred;
    for (const auto& [id, s] : in.gold) g2[id + "_dup"] = s;
    for (const auto& [id, s] : in.pred) p2[id + "_dup"] = s;
    const auto dup = macro_metrics(g2, p2, in.space);
    CHECK(std::abs(dup.mf1 - base.mf1) < 1e-12);
    CHECK(std::abs(dup.mpr - base.mpr) < 1e-12);
    CHECK(std::abs(dup.macc - base.macc) < 1e-12);

    // A superset of reaction predictions never lowers a seen class's recall.
    Labelings sup = in.pred;
    for (auto& [id, s] : sup) {
      if (s.count("-")) continue;
      for (std::size_t i = 1; i < labels.size(); ++i) {
        if (rng.uniform() < 0.3) s.insert(labels[i]);
      }
    }
    const auto before = confusion_per_class(in.gold, in.pred, in.space);
    const auto after = confusion_per_class(in.gold, sup, in.space);
    for (const auto& [l, c] : before) CHECK(after.at(l).tp >= c.tp);
  }
}

TEST_CASE("coverage_report") {
  const LabelSpace space({"rA"});
  auto set = [](std::string id, std::vector<std::string> rs) {
    PredictionSet s;
    s.protein_id = std::move(id);
    for (auto& r : rs) s.items.push_back({r, 1.0, {}});
    return s;
  };
  {
    const auto r = coverage_report({PredictionSet::abstain("a"), PredictionSet::abstain("b")}, space);
    CHECK(r.enzyme == 0);
    CHECK(r.non_enzyme == 0);
    CHECK(r.no_prediction == 1);
  }
  CHECK(coverage_report({set("a", {"-"})}, space).non_enzyme == 1.0);

  const auto r = coverage_report(
      {set("a", {"rA"}), set("b", {"rZ"}), set("c", {"-"}), PredictionSet::abstain("d")}, space);
  CHECK(r.n_proteins == 4);
  CHECK(r.enzyme == 0.5);
  CHECK(r.non_enzyme == 0.25);
  CHECK(r.no_prediction == 0.25);
  CHECK(r.reaction_mapped == 0.25);
  CHECK(std::abs(r.enzyme + r.non_enzyme + r.no_prediction - 1.0) < 1e-9);
}
