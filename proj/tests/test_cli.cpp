#include <doctest.h>

#include <sstream>

#include "chgcorr/cli.hpp"
#include "chgcorr/scene_io.hpp"
#include "support.hpp"

using namespace chgcorr;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "chgcorr");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::vector<json> lines_of(const std::string& text) {
  std::vector<json> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);)
    if (!line.empty()) out.push_back(json::parse(line));
  return out;
}

}  // namespace

TEST_CASE("synth writes deterministic scenes and a manifest") {
  testing::TempDir a("cli_synth_a"), b("cli_synth_b");
  const std::vector<std::string> flags{"--n-scenes", "5", "--seed", "9", "--distractors", "2",
                                       "--transform", "random-affine", "--embedding-noise", "0.1"};
  auto args = flags;
  args.insert(args.begin(), {"synth", "--out-dir", a.path().string()});
  REQUIRE(run_cli(args).code == 0);
  args = flags;
  args.insert(args.begin(), {"synth", "--out-dir", b.path().string()});
  REQUIRE(run_cli(args).code == 0);

  const json manifest = read_json_file(a / "manifest.json");
  REQUIRE(manifest.at("scenes").size() == 5);
  CHECK(manifest.at("config").at("seed") == 9);
  for (int i = 0; i < 5; ++i) {
    const std::string stem = "scene_9_" + std::to_string(i);
    CHECK(manifest.at("scenes").at(i) == stem + ".json");
    for (const std::string leaf : {stem + ".json", stem + "_left.f32", stem + "_right.f32"}) {
      REQUIRE(std::filesystem::exists(a / leaf));
      CHECK(testing::slurp(a / leaf) == testing::slurp(b / leaf));
    }
  }
  CHECK(testing::slurp(a / "manifest.json") == testing::slurp(b / "manifest.json"));
}

TEST_CASE("synth: infeasible placement leaves nothing behind") {
  testing::TempDir d("cli_synth_bad");
  const auto r = run_cli({"synth", "--out-dir", d.path().string(), "--n-scenes", "3", "--n-changes", "1000",
                          "--extent", "64", "64"});
  CHECK(r.code != 0);
  CHECK(r.err.find("PlacementInfeasible") != std::string::npos);
  CHECK_FALSE(std::filesystem::exists(d / "manifest.json"));
  CHECK(std::filesystem::is_empty(d.path()));
}

TEST_CASE("match: one record per scene, errors collected") {
  testing::TempDir d("cli_match");
  REQUIRE(run_cli({"synth", "--out-dir", d.path().string(), "--n-scenes", "2"}).code == 0);
  {
    std::ofstream(d / "broken.json") << "{ not json";
  }
  const auto s0 = (d / "scene_0_0.json").string(), s1 = (d / "scene_0_1.json").string();
  const auto bad = (d / "broken.json").string();

  const auto r = run_cli({"match", s0, bad, s1});
  CHECK(r.code != 0);
  const auto recs = lines_of(r.out);
  REQUIRE(recs.size() == 3);
  CHECK(recs[0].contains("result"));
  CHECK(recs[1].at("error").at("code") == "ParseError");
  CHECK(recs[1].at("scene_path") == bad);
  CHECK(recs[2].contains("result"));

  const auto ok = run_cli({"match", "--manifest", (d / "manifest.json").string()});
  CHECK(ok.code == 0);
  const auto good = lines_of(ok.out);
  REQUIRE(good.size() == 2);
  // Noiseless synthetic scenes: every gt correspondence recovered.
  for (const auto& rec : good) CHECK(rec.at("result").at("pairs").size() == 3);
}

TEST_CASE("match: threshold-only configuration") {
  testing::TempDir d("cli_thresh");
  REQUIRE(run_cli({"synth", "--out-dir", d.path().string(), "--distractors", "4"}).code == 0);
  const auto r = run_cli({"match", "--no-align", "--no-hungarian", "--threshold", "0.25",
                          (d / "scene_0_0.json").string()});
  REQUIRE(r.code == 0);
  const auto rec = lines_of(r.out).at(0);
  const auto& res = rec.at("result");
  CHECK(res.at("pairs").empty());
  CHECK(res.at("stage2").at("left") == res.at("stage1").at("left"));
  CHECK(rec.at("config").at("alignment_enabled") == false);
  for (const auto& b : res.at("stage1").at("left")) CHECK(b.at(4).get<double>() >= 0.25);
}

TEST_CASE("match: jobs do not change output") {
  testing::TempDir d("cli_jobs");
  REQUIRE(run_cli({"synth", "--out-dir", d.path().string(), "--n-scenes", "12", "--distractors", "2",
                   "--no-transform", "--outlier-fraction", "0.2"})
              .code == 0);
  const auto m = (d / "manifest.json").string();
  const auto one = run_cli({"match", "--manifest", m});
  const auto many = run_cli({"match", "--manifest", m, "--jobs", "4"});
  CHECK(one.code == 0);
  CHECK(one.out == many.out);
}

TEST_CASE("evaluate: perfect data, no-change partition, determinism") {
  testing::TempDir change("cli_eval_change"), quiet("cli_eval_quiet");
  REQUIRE(run_cli({"synth", "--out-dir", change.path().string(), "--n-scenes", "4", "--seed", "1"}).code == 0);
  REQUIRE(run_cli({"synth", "--out-dir", quiet.path().string(), "--n-scenes", "3", "--seed", "2",
                   "--n-changes", "0", "--distractors", "3"})
              .code == 0);
  std::vector<std::string> args{"evaluate", "--manifest", (change / "manifest.json").string()};
  for (int i = 0; i < 3; ++i) args.push_back((quiet / ("scene_2_" + std::to_string(i) + ".json")).string());

  const auto r = run_cli(args);
  REQUIRE(r.code == 0);
  const json report = json::parse(r.out);
  CHECK(report.at("map") == 100.0);
  CHECK(report.at("f1").at("f1") == 1.0);
  CHECK(report.at("no_change_rate") == 0.0);
  CHECK(report.at("counts").at("change_scenes") == 4);
  CHECK(report.at("counts").at("no_change_scenes") == 3);
  CHECK(run_cli(args).out == r.out);

  const auto only_quiet = run_cli({"evaluate", "--manifest", (quiet / "manifest.json").string()});
  REQUIRE(only_quiet.code == 0);
  const json q = json::parse(only_quiet.out);
  CHECK_FALSE(q.contains("map"));
  CHECK_FALSE(q.contains("f1"));
  CHECK(q.at("no_change_rate") == 0.0);
  CHECK(q.at("notes") == json::array({"no change scenes"}));
}

TEST_CASE("evaluate: stored predictions and mixed configurations") {
  testing::TempDir d("cli_preds");
  REQUIRE(run_cli({"synth", "--out-dir", d.path().string(), "--n-scenes", "3", "--distractors", "2",
                   "--embedding-noise", "0.3", "--jitter", "2"})
              .code == 0);
  const auto m = (d / "manifest.json").string();
  const auto preds = (d / "preds.jsonl").string();
  REQUIRE(run_cli({"match", "--manifest", m, "--no-align", "-o", preds}).code == 0);

  const auto direct = run_cli({"evaluate", "--manifest", m, "--no-align"});
  const auto stored = run_cli({"evaluate", "--manifest", m, "--predictions", preds});
  REQUIRE(direct.code == 0);
  CHECK(stored.out == direct.out);

  const auto other = run_cli({"match", "--manifest", m});
  {
    std::ofstream(preds, std::ios::app) << other.out;
  }
  const auto mixed = run_cli({"evaluate", "--manifest", m, "--predictions", preds});
  CHECK(mixed.code != 0);
  CHECK(mixed.err.find("MixedConfig") != std::string::npos);
}

TEST_CASE("evaluate: empty dataset and bad flags") {
  const auto r = run_cli({"evaluate"});
  CHECK(r.code != 0);
  CHECK(r.err.find("EmptyDataset") != std::string::npos);
  CHECK(run_cli({"match", "--transform", "projective"}).code != 0);
  CHECK(run_cli({"match", "--threshold", "2"}).code != 0);
  CHECK(run_cli({}).code != 0);
}
