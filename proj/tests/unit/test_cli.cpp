#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <nlohmann/json.hpp>
#include <sstream>

#include "ranknosh/cli.hpp"
#include "ranknosh/config.hpp"
#include "ranknosh/errors.hpp"
#include "ranknosh/report.hpp"

using namespace ranknosh;
namespace fs = std::filesystem;

namespace {

RunConfig parse(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in, "test.cfg");
}

std::string config_error(const std::string& text) {
  try {
    parse(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

struct Cli {
  int code = 0;
  std::string out, err;
};

Cli call(std::vector<std::string> args) {
  args.insert(args.begin(), "ranknosh");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Cli r;
  r.code = cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

nlohmann::json read_json(const fs::path& p) {
  std::ifstream in(p);
  return nlohmann::json::parse(in);
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("ranknosh_cli_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("config files apply the preset first, then the keys") {
  auto c = parse("max_pool_count = 120  # overrides the preset\npreset = c10-12ep\n\ntrain_epochs=7\n");
  CHECK(c.search.max_pool == 120);
  CHECK(c.search.schedule.epochs == std::vector<int>{1, 2, 3, 12});
  CHECK(c.search.train.epochs == 7);
  auto d = parse("schedule_epochs = 5, 10\n");
  CHECK(d.search.schedule.move_ratios.size() == 2);
  auto e = parse("schedule_epochs = 5,10\nmove_ratios_fraction = 1/2, 2/3\n");
  CHECK(e.search.schedule.move_ratios[1] == Ratio(2, 3));
}

TEST_CASE("config errors name the key and line") {
  auto msg = config_error("train_epochs = 3\nbogus_key = 1\nother = 2\n");
  CHECK(msg.find("bogus_key (line 2)") != std::string::npos);
  CHECK(msg.find("other (line 3)") != std::string::npos);
  CHECK(config_error("train_epochs = 3\ntrain_epochs = 4\n").find("test.cfg:2") != std::string::npos);
  CHECK(config_error("train_epochs = many\n").find("test.cfg:1: train_epochs") != std::string::npos);
  CHECK(config_error("just words\n").find("expected") != std::string::npos);
  CHECK(config_error("preset = nope\n").find("test.cfg:1") != std::string::npos);
  CHECK(!config_error("max_pool_count = 10\ninitial_pool_count = 48\n").empty());
}

TEST_CASE("config text round-trips") {
  auto c = parse("preset = nb101-sparse\nuniverse_count = 700\nranker_antisymmetric = false\n");
  auto back = parse(config_to_text(c));
  CHECK(config_to_json(back) == config_to_json(c));
  CHECK(config_to_json(c)["universe_count"] == "700");
}

TEST_CASE("list parsing") {
  CHECK(parse_int_list("1, 2,3") == std::vector<int>{1, 2, 3});
  CHECK_THROWS_AS(parse_int_list(""), ConfigError);
  CHECK_THROWS_AS(parse_int_list("1,x"), ConfigError);
  CHECK(parse_ratio_list("1/3,0.5").size() == 2);
}

TEST_CASE("csv round-trip") {
  CsvTable t{{"a", "b"}, {{"1", "x"}, {"2", ""}}};
  std::ostringstream out;
  write_csv(t, out);
  std::istringstream in(out.str());
  auto back = read_csv(in);
  CHECK(back.header == t.header);
  CHECK(back.rows == t.rows);
}

TEST_CASE("round log csv layout") {
  std::vector<RoundLog> log{{0, 48, 46, 0.5, 0, 0.0}, {1, 78, 80, 0.6, 1200, 0.25}};
  std::ostringstream out;
  write_round_log_csv(log, out);
  std::istringstream in(out.str());
  auto t = read_csv(in);
  CHECK(t.header == std::vector<std::string>{"round", "pool_size", "budget_so_far", "best_so_far", "pairs", "final_loss"});
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[1][4] == "1200");
}

TEST_CASE("command line end to end") {
  TempDir tmp;
  const auto bench = (tmp.path / "bench" / "benchmark.jsonl").string();
  auto g = call({"gen-synthetic", "--count", "150", "--max-epoch", "12", "--seed", "3", "--out-dir",
                 (tmp.path / "bench").string()});
  REQUIRE_MESSAGE(g.code == 0, g.err);
  REQUIRE(fs::exists(bench));
  CHECK(read_json(tmp.path / "bench" / "manifest.json")["generator"]["count"] == 150);

  const auto cfg = (tmp.path / "run.cfg").string();
  {
    std::ofstream o(cfg);
    o << "preset = c10-12ep\nmax_pool_count = 40\ninitial_pool_count = 20\nproposal_count = 10\n"
         "train_epochs = 2\ntrain_pairs_per_epoch_count = 100\nes_max_pool_count = 30\n"
         "es_initial_pool_count = 10\nes_proposal_count = 10\nprior_sample_count = 50\n";
  }

  SUBCASE("run writes reports, aggregate and manifest") {
    const auto out = (tmp.path / "run").string();
    auto r = call({"run", "--config", cfg, "--benchmark", bench, "--out-dir", out, "--seeds", "2"});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    for (const char* f : {"seed_0/report.json", "seed_0/report.txt", "seed_0/rounds.csv", "seed_0/loss.csv",
                          "seed_1/report.json", "aggregate.csv", "aggregate.json", "manifest.json"})
      CHECK_MESSAGE(fs::exists(fs::path(out) / f), f);
    auto m = read_json(fs::path(out) / "manifest.json");
    CHECK(m["runs"].size() == 2);
    CHECK(m["benchmark"].contains("checksum"));
    CHECK(m["config"]["max_pool_count"] == "40");
    auto rep = read_json(fs::path(out) / "seed_0" / "report.json");
    CHECK(rep["method"] == "rank-nosh");

    // Same seed, same bytes.
    const auto again = (tmp.path / "again").string();
    REQUIRE(call({"run", "--config", cfg, "--benchmark", bench, "--out-dir", again, "--seeds", "1"}).code == 0);
    std::ifstream a(fs::path(out) / "seed_0" / "report.json"), b(fs::path(again) / "seed_0" / "report.json");
    std::stringstream sa, sb;
    sa << a.rdbuf();
    sb << b.rdbuf();
    CHECK(sa.str() == sb.str());
  }

  SUBCASE("baselines") {
    for (const char* name : {"random", "prior", "rank-es", "rank-full"}) {
      const auto out = (tmp.path / name).string();
      auto r = call({"baseline", name, "--config", cfg, "--benchmark", bench, "--out-dir", out});
      CHECK_MESSAGE(r.code == 0, name, r.err);
      CHECK(fs::exists(fs::path(out) / "aggregate.json"));
    }
    auto bad = call({"baseline", "nope", "--config", cfg, "--benchmark", bench});
    CHECK(bad.code != 0);
  }

  SUBCASE("analysis") {
    const auto out = (tmp.path / "an").string();
    CHECK(call({"analyze", "spearman", "--benchmark", bench, "--epoch", "1", "--out-dir", out}).code == 0);
    CHECK(call({"analyze", "survival", "--benchmark", bench, "--epoch", "1", "--out-dir", out}).code == 0);
    CHECK(call({"analyze", "trajectory", "--benchmark", bench, "--out-dir", out}).code == 0);
    CHECK(call({"analyze", "prior-corr", "--benchmark", bench, "--out-dir", out}).code == 0);
    CHECK(call({"analyze", "spearman", "--benchmark", bench, "--epoch", "99", "--out-dir", out}).code != 0);
  }

  SUBCASE("ablations") {
    const auto out = (tmp.path / "ab").string();
    auto s = call({"ablate", "schedule", "--config", cfg, "--benchmark", bench, "--out-dir", out, "--values",
                   "1,12;3,12"});
    REQUIRE_MESSAGE(s.code == 0, s.err);
    std::ifstream in(fs::path(out) / "ablation.csv");
    auto t = read_csv(in);
    REQUIRE(t.rows.size() == 2);
    CHECK(t.rows[0][0] == "1-12");
    const auto out2 = (tmp.path / "ab2").string();
    CHECK(call({"ablate", "ratio", "--config", cfg, "--benchmark", bench, "--out-dir", out2, "--values",
                "1/2,1/3"}).code == 0);
  }

  SUBCASE("relative benchmark paths fall back to the benchmark directory") {
    ::setenv("RANKNOSH_BENCH_DIR", (tmp.path / "bench").string().c_str(), 1);
    auto r = call({"baseline", "prior", "--config", cfg, "--benchmark", "benchmark.jsonl", "--out-dir",
                   (tmp.path / "rel").string()});
    ::unsetenv("RANKNOSH_BENCH_DIR");
    CHECK_MESSAGE(r.code == 0, r.err);
  }

  SUBCASE("errors exit non-zero with a message") {
    auto r = call({"run", "--config", (tmp.path / "missing.cfg").string(), "--benchmark", bench});
    CHECK(r.code != 0);
    CHECK(r.err.find("ranknosh: error") != std::string::npos);
    CHECK(call({"run", "--config", cfg, "--benchmark", (tmp.path / "none.jsonl").string()}).code != 0);
    CHECK(call({"frobnicate"}).code != 0);
  }
}

TEST_CASE("shipped example configs parse") {
  int n = 0;
  for (const auto& entry : fs::directory_iterator(fs::path(RANKNOSH_SOURCE_DIR) / "tools" / "configs")) {
    CHECK_NOTHROW(load_config(entry.path()));
    ++n;
  }
  CHECK(n == 4);
}
