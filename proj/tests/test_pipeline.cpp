#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>
#include <json.hpp>

#include <filesystem>

#include "rxn/config.hpp"
#include "rxn/core.hpp"
#include "rxn/error.hpp"
#include "rxn/io.hpp"
#include "rxn/pipeline.hpp"

using namespace rxn;
namespace fs = std::filesystem;

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

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("rxn_pipeline_" + name);
  fs::remove_all(p);
  return p;
}

Config small_config(const fs::path& out) {
  auto c = Config::parse(
      "seed = 11\n"
      "synth_proteins = 60\n"
      "synth_reactions = 4\n"
      "folds_k = 4\n"
      "embed_dim = 4\n"
      "hidden = 4\n"
      "epochs = 2\n"
      "al_epochs = 1\n"
      "al_rounds = 2\n"
      "al_init_fraction = 0.1\n"
      "scope = test\n"
      "predictors = nn, al, align, knn\n");
  c.set("output_dir", out.string());
  return c;
}

void run_all(const Config& c) {
  for (const char* cmd : {"synth", "split", "train", "al-run", "predict", "ensemble"}) run_command(cmd, c);
  auto e = c;
  e.set("predictions", (fs::path(c.str("output_dir")) / "ensemble.tsv").string());
  run_command("evaluate", e);
}

}  // namespace

TEST_CASE("config: defaults, comments and overrides") {
  const auto c = Config::parse("# only paths\noutput_dir = out   # trailing comment\nfasta = in.fa\n");
  CHECK(c.str("output_dir") == "out");
  CHECK(c.integer("epochs") == 30);
  CHECK(c.real("ensemble_threshold") == 0.75);
  CHECK(c.str("al_strategy") == "random");
  CHECK(c.flag("use_attention"));
  CHECK_FALSE(c.is_set("folds"));

  auto d = c;
  d.set("predictors", " nn ,align,, ");
  CHECK(d.list("predictors") == std::vector<std::string>{"nn", "align"});
  d.set("predictors", "");
  CHECK(d.list("predictors") == std::vector<std::string>{"nn"});
  CHECK(d.hash() == c.hash());
  d.set("seed", "1");
  CHECK(d.hash() != c.hash());
}

TEST_CASE("config: errors") {
  try {
    Config::parse("gamna = 2\n");
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnknownConfigKey);
    CHECK(std::string(e.what()).find("gamna") != std::string::npos);
  }
  CHECK(code_of([] { Config::parse("threshold = 1.5\n"); }) == ErrorCode::ConfigRange);
  CHECK(code_of([] { Config::parse("threshold = 0\n"); }) == ErrorCode::ConfigRange);
  CHECK(code_of([] { Config::parse("epochs = 2.5\n"); }) == ErrorCode::ConfigType);
  CHECK(code_of([] { Config::parse("use_attention = yes\n"); }) == ErrorCode::ConfigType);
  CHECK(code_of([] { Config::parse("al_strategy = greedy\n"); }) == ErrorCode::ConfigRange);
  CHECK(code_of([] { Config::parse("epochs\n"); }) == ErrorCode::ConfigType);
  CHECK(code_of([] { Config::parse("epochs = 1\nepochs = 2\n"); }) == ErrorCode::ConfigType);
  CHECK(code_of([] { Config().path("output_dir"); }) == ErrorCode::MissingConfigKey);
  CHECK(code_of([] { run_command("train", Config()); }) == ErrorCode::MissingConfigKey);
  for (const auto& k : config_keys()) {
    if (!k.default_value.empty()) CHECK_NOTHROW(Config().set(k.name, k.default_value));
  }
}

TEST_CASE("commands: unknown command, missing input, unsupported mode") {
  const auto out = scratch("errors");
  Config c;
  c.set("output_dir", out.string());
  CHECK(code_of([&] { run_command("stack", c); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([&] { run_command("split", c); }) == ErrorCode::Io);
  CHECK_FALSE(fs::exists(out / "folds.tsv"));
  c.set("ensemble_mode", "stacking");
  c.set("synth_proteins", "20");
  run_command("synth", c);
  write_file_atomic(out / "predictions.tsv", "p\tnn\tr\n");
  CHECK(code_of([&] { run_command("ensemble", c); }) == ErrorCode::UnsupportedMode);
  CHECK(command_names().size() == 10);
}

TEST_CASE("commands never overwrite their inputs") {
  const auto out = scratch("inputs");
  Config c;
  c.set("output_dir", out.string());
  c.set("synth_proteins", "20");
  run_command("synth", c);
  const auto before = read_file(out / "proteins.fasta");
  c.set("fasta", (out / "proteins.fasta").string());
  CHECK(code_of([&] { run_command("ingest", c); }) == ErrorCode::InvalidArgument);
  CHECK(read_file(out / "proteins.fasta") == before);
}

TEST_CASE("pipeline: outputs, manifest and byte-identical reruns") {
  const auto a = scratch("a"), b = scratch("b");
  run_all(small_config(a));
  run_all(small_config(b));
  for (const char* f : {"proteins.fasta", "annotations.tsv", "folds.tsv", "model.ckpt", "al_model.ckpt",
                        "al_history.tsv", "predictions.tsv", "embeddings.rxne", "ensemble.tsv", "metrics.tsv",
                        "classes.tsv"}) {
    INFO(f);
    REQUIRE(fs::exists(a / f));
    CHECK(read_file(a / f) == read_file(b / f));
  }
  for (const char* f : {"predictions.tsv", "ensemble.tsv", "metrics.tsv", "classes.tsv", "folds.tsv"}) {
    CHECK(read_file(a / f).rfind("#", 0) == 0);
  }

  const auto m = nlohmann::json::parse(read_file(a / "manifest.train.json"));
  CHECK(m["command"] == "train");
  CHECK(m["seed"] == 11);
  CHECK(m["config"]["embed_dim"] == "4");
  CHECK(m["inputs"].size() == 3);
  CHECK(m["outputs"].size() == 3);

  const auto first = read_file(a / "manifest.evaluate.json");
  auto e = small_config(a);
  e.set("predictions", (a / "ensemble.tsv").string());
  run_command("evaluate", e);
  CHECK(read_file(a / "manifest.evaluate.json") == first);
}

TEST_CASE("pipeline: coverage, other ensemble modes and prompts") {
  const auto out = scratch("extra");
  auto c = small_config(out);
  run_all(c);
  auto v = c;
  v.set("predictions", (out / "predictions.tsv").string());
  CHECK(code_of([&] { run_command("coverage", v); }) == ErrorCode::MissingConfigKey);
  v.set("eval_predictor", "align");
  run_command("coverage", v);
  const auto cov = read_file(out / "coverage.tsv");
  CHECK(cov.find("n_proteins\t15") != std::string::npos);

  for (const char* mode : {"majority", "recall_boost"}) {
    auto m = c;
    m.set("ensemble_mode", mode);
    m.set("output_dir", (out / mode).string());
    m.set("external_predictions", (out / "predictions.tsv").string());
    m.set("ensemble_ties", "fallback");
    run_command("ensemble", m);
    CHECK(fs::exists(out / mode / "ensemble.tsv"));
  }

  v.set("reaction_table", (out / "reactions.tsv").string());
  const auto res = run_command("prompt-build", v);
  std::size_t prompts = 0;
  for (const auto& p : res.outputs) prompts += p.parent_path().filename() == "prompts" ? 1 : 0;
  CHECK(prompts == 15);
}

TEST_CASE("ingest converts embeddings and normalizes sequences") {
  const auto dir = scratch("ingest");
  fs::create_directories(dir / "in");
  write_file_atomic(dir / "in" / "x.fa", ">p1\nMKB\n>p2\nAC\n");
  write_file_atomic(dir / "in" / "a.tsv", "p1\tr1\n");
  write_file_atomic(dir / "in" / "e.tsv", "p1\t1,0\tr1\np2\t0,1\t-\n");
  Config c;
  c.set("output_dir", (dir / "out").string());
  c.set("fasta", (dir / "in" / "x.fa").string());
  c.set("annotations", (dir / "in" / "a.tsv").string());
  c.set("embedding_tsv", (dir / "in" / "e.tsv").string());
  const auto res = run_command("ingest", c);
  CHECK(res.warnings.size() == 1);
  CHECK(read_file(dir / "out" / "proteins.fasta").find("MKX") != std::string::npos);
  CHECK(read_file(dir / "out" / "annotations.tsv").find("p2\t-") != std::string::npos);
  CHECK(read_file(dir / "out" / "labels.tsv") == "#index\tlabel\n0\t-\n1\tr1\n");
  CHECK(fs::exists(dir / "out" / "embeddings.rxne"));
}
