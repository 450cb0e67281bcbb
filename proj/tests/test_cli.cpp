#include <doctest.h>

#include <cstdio>
#include <sys/wait.h>

#include <json.hpp>

#include "support.hpp"

namespace {

struct Result {
  int code = -1;
  std::string out;
};

/// Runs the CLI with `args`, capturing stdout; stderr is discarded.
Result cli(const std::string& args) {
  const std::string cmd = std::string(CROWDQC_CLI) + " " + args + " 2>/dev/null";
  Result r;
  std::FILE* p = ::popen(cmd.c_str(), "r");
  REQUIRE(p);
  char buf[4096];
  for (std::size_t n; (n = std::fread(buf, 1, sizeof buf, p)) > 0;) r.out.append(buf, n);
  const int status = ::pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

}  // namespace

TEST_CASE("usage errors exit with status 2") {
  CHECK(cli("").code == 2);
  CHECK(cli("stats --no-such-flag").code == 2);
  CHECK(cli("frobnicate").code == 2);
  CHECK(cli("--format yaml stats").code == 2);
  CHECK(cli("--help").code == 0);
}

TEST_CASE("runtime errors exit with status 1") {
  testing::TempDir dir;
  CHECK(cli("--config " + (dir / "missing.conf").string() + " stats").code == 1);
  CHECK(cli("evaluate --model " + (dir / "missing.bin").string()).code == 1);
}

TEST_CASE("a fresh campaign reports an empty distribution") {
  testing::TempDir dir;
  REQUIRE(cli("gen-corpus --out " + dir.path().string() + " --reviews 120 --seed 2").code == 0);
  for (auto f : {"reviews.jsonl", "gold.jsonl", "truth.jsonl", "campaign.conf"}) {
    CHECK(std::filesystem::exists(dir / f));
  }
  const auto r = cli("--config " + (dir / "campaign.conf").string() + " --format json stats");
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["distribution"]["total"] == 0);
  for (auto& [k, v] : j["distribution"]["counts"].items()) CHECK(v == 0);
  CHECK(j["progress"]["corpus_size"] == 120);
}

TEST_CASE("simulate is reproducible for a seed") {
  testing::TempDir dir;
  const auto a = cli("simulate --seed 7 --reviews 150 --data-dir " + (dir / "a").string());
  const auto b = cli("simulate --seed 7 --reviews 150 --data-dir " + (dir / "b").string());
  REQUIRE(a.code == 0);
  CHECK(a.out == b.out);
  CHECK(a.out.find("seed 7") != std::string::npos);
  CHECK(testing::slurp(dir / "a" / "events.log").size() > 0);
  // A second run into a used data directory is refused.
  CHECK(cli("simulate --seed 7 --reviews 150 --data-dir " + (dir / "a").string()).code == 1);
}

TEST_CASE("campaign, export, train and evaluate end to end") {
  testing::TempDir dir;
  REQUIRE(cli("gen-corpus --out " + dir.path().string() + " --reviews 300 --seed 5").code == 0);
  const auto conf = "--config " + (dir / "campaign.conf").string();
  REQUIRE(cli(conf + " simulate").code == 0);
  const auto stats = nlohmann::json::parse(cli(conf + " --format json stats").out);
  CHECK(stats["distribution"]["total"].get<int>() > 0);

  const auto labeled = (dir / "labeled.jsonl").string();
  const auto exp = cli(conf + " --format json export --mode per_annotation --out " + labeled);
  REQUIRE(exp.code == 0);
  CHECK(nlohmann::json::parse(exp.out)["rows"].get<int>() > 0);

  const auto model = (dir / "m.bin").string();
  const auto tr = cli("--format json train --data " + labeled + " --model " + model +
                      " --mode spans --epochs 5 --dim 20");
  REQUIRE(tr.code == 0);
  const auto tj = nlohmann::json::parse(tr.out);
  CHECK(tj["mode"] == "spans");
  CHECK(tj["epoch_loss"].size() == 5);

  const auto ev = cli("--format json evaluate --model " + model);
  REQUIRE(ev.code == 0);
  const auto ej = nlohmann::json::parse(ev.out);
  CHECK(ej["weighted"]["f1"].get<double>() > 0.5);
  CHECK(ej["per_class"].contains("other"));
  CHECK(cli("evaluate --model " + model).out.find("weighted") != std::string::npos);

  const auto rows_model = (dir / "rows.bin").string();
  REQUIRE(cli("train --data " + labeled + " --model " + rows_model + " --row-split --epochs 2").code == 0);
  CHECK(cli("--format json evaluate --model " + rows_model).code == 0);
}
