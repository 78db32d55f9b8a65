#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "repscope/cli.hpp"
#include "repscope/report.hpp"
#include "temp_dir.hpp"

namespace {

const std::string kFixtures = REPSCOPE_FIXTURES_DIR;

struct Result {
  int code;
  std::string out, err;
};

Result run(std::vector<std::string> args, const std::string& input = "") {
  std::istringstream in(input);
  std::ostringstream out, err;
  const int code = repscope::cli::dispatch(args, in, out, err);
  return {code, out.str(), err.str()};
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_CASE("info on the fixture run matches the golden output") {
  const auto r = run({"info", kFixtures + "/run_pooled"});
  CHECK(r.code == 0);
  CHECK(r.out == read_file(kFixtures + "/golden/info_run_pooled.txt"));
  const auto j = nlohmann::json::parse(run({"info", "--json", kFixtures + "/run_tokens"}).out);
  CHECK(j["model_id"] == "tiny-tokens");
  CHECK(j["prompt_count"] == 3);
  CHECK(j["schema_version"] == repscope::kReportSchemaVersion);
}

TEST_CASE("missing required option prints usage and exits 1") {
  const auto r = run({"compute"});
  CHECK(r.code == repscope::cli::kExitValidation);
  CHECK(r.err.find("--run") != std::string::npos);
  CHECK(r.err.find("Usage") != std::string::npos);
  CHECK(run({}).code == 1);
  CHECK(run({"frobnicate"}).code == 1);
}

TEST_CASE("help exits 0") {
  const auto r = run({"--help"});
  CHECK(r.code == 0);
  CHECK(r.out.find("compute") != std::string::npos);
}

TEST_CASE("library errors exit 1 with a message") {
  const auto r = run({"info", kFixtures + "/does-not-exist"});
  CHECK(r.code == 1);
  CHECK(r.err.find("error:") == 0);
  const auto g = run({"compute", "--run", kFixtures + "/run_pooled", "--metrics", "curvature"});
  CHECK(g.code == 1);
  CHECK(g.err.find("pooled") != std::string::npos);
}

TEST_CASE("verify is byte-identical across runs") {
  const auto a = run({"verify", "--suite", "theorems", "--seed", "7"});
  const auto b = run({"verify", "--suite", "theorems", "--seed", "7", "--threads", "3"});
  CHECK(a.out == b.out);
  CHECK(a.code == b.code);
  const auto j = nlohmann::ordered_json::parse(a.out);
  CHECK(j["schema_version"] == repscope::kReportSchemaVersion);
  CHECK(j["seed"] == 7);
  CHECK(j["checks"].size() == 7);
  CHECK(a.code == (j["all_passed"].get<bool>() ? 0 : 1));
}

TEST_CASE("verify --json writes the file and prints one line per check") {
  TempDir dir;
  const auto r = run({"verify", "--seed", "7", "--json", (dir / "v.json").string()});
  const auto j = nlohmann::ordered_json::parse(read_file(dir / "v.json"));
  CHECK(std::count(r.out.begin(), r.out.end(), '\n') == static_cast<long>(j["checks"].size()));
  CHECK(r.out.find("schur_concavity") != std::string::npos);
}

TEST_CASE("seed falls back to the environment") {
  ::setenv("REPSCOPE_SEED", "42", 1);
  const auto env = run({"augment", "--pairs"}, read_file(kFixtures + "/augment/prompts.txt"));
  ::unsetenv("REPSCOPE_SEED");
  CHECK(env.out == read_file(kFixtures + "/augment/pairs_seed42.tsv"));
  ::setenv("REPSCOPE_SEED", "forty-two", 1);
  CHECK(run({"augment"}, "x\n").code == 1);
  ::unsetenv("REPSCOPE_SEED");
}

TEST_CASE("augment matches the golden files") {
  const std::string prompts = read_file(kFixtures + "/augment/prompts.txt");
  CHECK(run({"augment", "--pairs", "--seed", "42"}, prompts).out == read_file(kFixtures + "/augment/pairs_seed42.tsv"));
  CHECK(run({"augment", "--seed", "7", "--p-split", "0", "--p-char", "0", "--p-keyboard", "0.5"}, prompts).out ==
        read_file(kFixtures + "/augment/keyboard_only_seed7.txt"));
  CHECK(run({"augment", "--p-char", "2"}, prompts).code == 1);
}

TEST_CASE("compute, select-layer and correlate chain through files") {
  TempDir dir;
  const std::string report = (dir / "r.json").string(), csv = (dir / "r.csv").string();
  const auto c = run({"compute", "--run", kFixtures + "/run_tokens", "--metrics",
                      "prompt-entropy,curvature,dataset-entropy", "--out", report, "--csv", csv});
  REQUIRE(c.code == 0);
  const auto j = nlohmann::ordered_json::parse(read_file(report));
  CHECK(j["layers"].size() == 3);
  CHECK(read_file(csv).rfind("layer,depth_pct,prompt-entropy,curvature,dataset-entropy", 0) == 0);

  const auto s = run({"select-layer", "--report", report, "--metric", "dataset-entropy", "--direction", "max"});
  REQUIRE(s.code == 0);
  const auto sj = nlohmann::json::parse(s.out);
  const auto rep = repscope::MetricReport::from_json(j);
  const auto curve = rep.curve("dataset-entropy", repscope::Direction::higher_is_better);
  CHECK(sj["layer"] == repscope::select_layer(curve));

  {
    std::ofstream f(dir / "scores.csv");
    f << "layer,sts,retrieval\n0,0.1,0.3\n1,0.5,0.2\n2,0.4,0.9\n";
  }
  const auto k = run({"correlate", "--report", report, "--scores", (dir / "scores.csv").string()});
  REQUIRE(k.code == 0);
  const auto kj = nlohmann::json::parse(k.out);
  CHECK(kj["results"].size() == 6);
  CHECK(kj["results"][0].contains("dcor"));
  CHECK(kj["results"][0]["n"] == 3);
}

TEST_CASE("invariance and sweep subcommands") {
  const auto inv = run({"invariance", "--run-a", kFixtures + "/run_pooled", "--run-b", kFixtures + "/run_pooled",
                        "--metrics", "infonce,dime"});
  REQUIRE(inv.code == 0);
  const auto j = nlohmann::json::parse(inv.out);
  CHECK(j["kind"] == "invariance");
  CHECK(j["layers"][0]["values"]["dime"].get<double>() > 0.0);

  const auto sw = run({"sweep", "--runs", "a=" + kFixtures + "/run_tokens,b=" + kFixtures + "/run_tokens", "--metric",
                       "prompt-entropy"});
  REQUIRE(sw.code == 0);
  const auto sj = nlohmann::json::parse(sw.out);
  CHECK(sj["labels"].size() == 2);
  CHECK(run({"sweep", "--runs", "nolabel"}).code == 1);
}
