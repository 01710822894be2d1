#include "chansel/cli.hpp"
#include "chansel/error.hpp"

#include "unit/fixtures.hpp"

#include <doctest.h>

#include <fcntl.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

extern char **environ;

using namespace chansel;
using namespace fixtures;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string read_text(const fs::path &p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_text(const fs::path &p, const std::string &s) {
  std::ofstream f(p, std::ios::binary);
  f << s;
}

std::size_t count_lines(const fs::path &p) {
  const auto s = read_text(p);
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

// Small, fast experiment: 8 channels, 40 utterances, one training seed.
fs::path small_config(const fs::path &dir, std::size_t epochs = 2) {
  const auto path = dir / "config.json";
  write_text(path, R"({"generator": {"utterances": 40}, "train": {"epochs": )" +
                       std::to_string(epochs) +
                       R"(}, "features": 8, "taps": 3, "search": {"seeds": 1}})");
  return path;
}

std::map<std::string, std::string> snapshot(const fs::path &dir) {
  std::map<std::string, std::string> files;
  for (const auto &e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().parent_path().filename() != "cache")
      files[fs::relative(e.path(), dir).string()] = read_text(e.path());
  }
  return files;
}

} // namespace

TEST_SUITE_BEGIN("cli");

TEST_CASE("usage errors exit with 1") {
  CHECK(cli({}).code == kExitUsage);
  CHECK(cli({"frobnicate"}).code == kExitUsage);
  CHECK(cli({"exhaustive", "--no-such-flag"}).code == kExitUsage);
  CHECK(cli({"exhaustive", "--k", "four"}).code == kExitUsage);
  CHECK(cli({"finetune", "--preset", "3", "--from-scratch"}).code == kExitUsage);
  CHECK(cli({"--help"}).code == kExitOk);
  const auto v = cli({"--version"});
  CHECK(v.code == kExitOk);
  CHECK_FALSE(v.out.empty());
}

TEST_CASE("data and config problems exit with 2") {
  const auto dir = scratch_dir("cli_config");
  write_text(dir / "bad.json", "{not json");
  CHECK(cli({"pretrain", "--config", (dir / "bad.json").string(), "--out", dir.string()}).code ==
        kExitData);
  write_text(dir / "unknown.json", R"({"epochz": 3})");
  CHECK(cli({"pretrain", "--config", (dir / "unknown.json").string(), "--out", dir.string()})
            .code == kExitData);
  CHECK(cli({"pretrain", "--corpus", (dir / "missing").string(), "--out", dir.string()}).code ==
        kExitData);
  CHECK(cli({"pretrain", "--lr", "0", "--out", dir.string()}).code == kExitData);
  CHECK(cli({"pretrain", "--dropout", "1.5", "--out", dir.string()}).code == kExitData);
  CHECK(cli({"exhaustive", "--test-fraction", "1", "--out", dir.string()}).code == kExitData);
  CHECK(cli({"pretrain"}).code == kExitData); // no output directory
  CHECK(cli({"finetune", "--preset", "4", "--subset", "1356", "--from-scratch", "--out",
             dir.string()})
            .code == kExitData);
  CHECK(cli({"finetune", "--preset", "4", "--out", dir.string()}).code == kExitData); // no --init
}

TEST_CASE("divergence exits with 3") {
  const auto dir = scratch_dir("cli_diverge");
  const auto cfg = small_config(dir);
  LayerSizes sizes{8, 3, 8, 13};
  std::vector<std::string> symbols = {"SIL", "AA", "IY", "UW", "EH", "AH", "B",
                                      "T",   "K",  "S",  "F",  "M",  "L"};
  ModelParams bad = init_params(sizes, symbols, 1);
  bad.output_weights.setConstant(1e308);
  bad.hidden_bias.setConstant(3.0);
  write_model(bad, dir / "bad_model.json");
  const auto r = cli({"finetune", "--config", cfg.string(), "--preset", "4", "--init",
                      (dir / "bad_model.json").string(), "--out", (dir / "ft").string()});
  CHECK(r.code == kExitDivergence);
  CHECK_FALSE(r.err.empty());
}

TEST_CASE("gen-data refuses to overwrite without --force") {
  const auto dir = scratch_dir("cli_gen");
  const auto out = (dir / "corpus").string();
  REQUIRE(cli({"gen-data", "--out", out, "--utterances", "6", "--seed", "4"}).code == kExitOk);
  CHECK(fs::exists(dir / "corpus" / "manifest.json"));
  const auto before = snapshot(dir / "corpus");
  const auto again = cli({"gen-data", "--out", out, "--utterances", "9", "--seed", "5"});
  CHECK(again.code == kExitData);
  CHECK(again.err.find("--force") != std::string::npos);
  CHECK(snapshot(dir / "corpus") == before);
  CHECK(cli({"gen-data", "--out", out, "--utterances", "6", "--seed", "4", "--force"}).code ==
        kExitOk);
  CHECK(snapshot(dir / "corpus") == before);
  CHECK(cli({"gen-data", "--out", out, "--utterances", "9", "--seed", "5", "--force"}).code ==
        kExitOk);
  CHECK(snapshot(dir / "corpus") != before);
}

TEST_CASE("exhaustive sweep writes 70 rows and reruns byte-identically from cache") {
  const auto dir = scratch_dir("cli_sweep");
  const auto cfg = small_config(dir).string();
  const auto out = (dir / "run").string();
  const auto first = cli({"exhaustive", "--config", cfg, "--out", out, "--workers", "1"});
  REQUIRE(first.code == kExitOk);
  CHECK(first.out.find("70 fresh evaluations") != std::string::npos);
  const auto sweep = read_text(dir / "run" / "sweep.csv");
  CHECK(sweep.rfind("# chansel ", 0) == 0);
  CHECK(count_lines(dir / "run" / "sweep.csv") == 2 + 70);
  CHECK(count_lines(dir / "run" / "top_k.csv") == 2 + 10 + 1);
  CHECK(count_lines(dir / "run" / "channel_average.csv") == 3);
  const auto files = snapshot(dir / "run");

  const auto second = cli({"exhaustive", "--config", cfg, "--out", out, "--workers", "3"});
  REQUIRE(second.code == kExitOk);
  CHECK(second.out.find(" 0 fresh evaluations") != std::string::npos);
  CHECK(snapshot(dir / "run") == files);

  // A fresh cache with a different worker count gives the same bytes.
  const auto third = cli({"exhaustive", "--config", cfg, "--out", (dir / "other").string(),
                          "--workers", "2"});
  REQUIRE(third.code == kExitOk);
  CHECK(snapshot(dir / "other") == files);

  SUBCASE("report rebuilds the ranking tables from the sweep csv") {
    const auto rep = (dir / "report").string();
    REQUIRE(cli({"report", "--sweep", (dir / "run" / "sweep.csv").string(), "--out", rep})
                .code == kExitOk);
    CHECK(read_text(dir / "report" / "top_k.csv") == read_text(dir / "run" / "top_k.csv"));
    CHECK(read_text(dir / "report" / "channel_average.csv") ==
          read_text(dir / "run" / "channel_average.csv"));
  }
}

TEST_CASE("cache location follows --cache-dir, then CHANSEL_CACHE_DIR") {
  const auto dir = scratch_dir("cli_cache");
  const auto cfg = small_config(dir).string();
  ::setenv("CHANSEL_CACHE_DIR", (dir / "env_cache").string().c_str(), 1);
  REQUIRE(cli({"backward-elim", "--config", cfg, "--out", (dir / "a").string(), "--stop", "7"})
              .code == kExitOk);
  CHECK(count_lines(dir / "env_cache" / "results.jsonl") == 8);
  CHECK_FALSE(fs::exists(dir / "a" / "cache"));
  REQUIRE(cli({"backward-elim", "--config", cfg, "--out", (dir / "b").string(), "--stop", "7",
               "--cache-dir", (dir / "flag_cache").string()})
              .code == kExitOk);
  CHECK(fs::exists(dir / "flag_cache" / "results.jsonl"));
  ::unsetenv("CHANSEL_CACHE_DIR");
  REQUIRE(cli({"backward-elim", "--config", cfg, "--out", (dir / "c").string(), "--stop", "7"})
              .code == kExitOk);
  CHECK(fs::exists(dir / "c" / "cache" / "results.jsonl"));
  CHECK(read_text(dir / "a" / "trace.json") == read_text(dir / "c" / "trace.json"));
}

TEST_CASE("backward elimination outputs") {
  const auto dir = scratch_dir("cli_greedy");
  const auto cfg = small_config(dir).string();
  const auto r = cli({"backward-elim", "--config", cfg, "--out", dir.string()});
  REQUIRE(r.code == kExitOk);
  CHECK(r.out.find("35 fresh evaluations") != std::string::npos); // 8 + 7 + ... + 2
  const auto trace = nlohmann::json::parse(read_text(dir / "trace.json"));
  CHECK(trace["elimination_order"].size() == 7);
  CHECK(trace.contains("provenance"));
  CHECK(count_lines(dir / "summary.csv") == 2 + 7);
}

TEST_CASE("pretrain logs one row per epoch and dropout changes the model") {
  const auto dir = scratch_dir("cli_pretrain");
  const auto cfg = small_config(dir, 3).string();
  REQUIRE(cli({"pretrain", "--config", cfg, "--out", (dir / "p0").string()}).code == kExitOk);
  REQUIRE(cli({"pretrain", "--config", cfg, "--out", (dir / "p25").string(), "--dropout", "0.25"})
              .code == kExitOk);
  const auto log = read_text(dir / "p0" / "train_log.csv");
  CHECK(count_lines(dir / "p0" / "train_log.csv") == 2 + 3);
  CHECK(log.find("epoch,loss,mean_retained\n1,") != std::string::npos);
  CHECK(log.find(",8.000000\n") != std::string::npos);
  const auto e0 = nlohmann::json::parse(read_text(dir / "p0" / "eval.json"));
  const auto e25 = nlohmann::json::parse(read_text(dir / "p25" / "eval.json"));
  CHECK(e0["params_hash"] != e25["params_hash"]);

  REQUIRE(cli({"pretrain", "--config", cfg, "--out", (dir / "again").string()}).code == kExitOk);
  CHECK(read_text(dir / "again" / "eval.json") == read_text(dir / "p0" / "eval.json"));
  CHECK(read_text(dir / "again" / "train_log.csv") == read_text(dir / "p0" / "train_log.csv"));
}

TEST_CASE("fine-tuning presets and the zero-epoch identity") {
  const auto dir = scratch_dir("cli_finetune");
  const auto cfg = small_config(dir, 3).string();
  REQUIRE(cli({"pretrain", "--config", cfg, "--out", (dir / "pre").string(), "--dropout", "0.25"})
              .code == kExitOk);
  const auto model = (dir / "pre" / "model.json").string();

  CHECK(finetune_preset("7", 8).label() == "1234578");
  CHECK(finetune_preset("6", 8).label() == "123458");
  CHECK(finetune_preset("5", 8).label() == "12345");
  CHECK(finetune_preset("4", 8).label() == "1356");
  CHECK_THROWS_AS(finetune_preset("8", 8), ConfigError);

  const auto r = cli({"finetune", "--config", cfg, "--preset", "4", "--init", model, "--out",
                      (dir / "ft").string(), "--compare"});
  REQUIRE(r.code == kExitOk);
  const auto rows = read_text(dir / "ft" / "comparison.csv");
  CHECK(rows.find("\nfinetuned,1356,4,1,") != std::string::npos); // half of 3 epochs
  CHECK(rows.find("\nscratch,1356,4,3,") != std::string::npos);
  const auto ft = read_model(dir / "ft" / "model.json");
  CHECK(ft.provenance.subset == "1356");

  // Zero fine-tuning epochs on the full set reproduces the pretrained evaluation.
  REQUIRE(cli({"finetune", "--config", cfg, "--subset", "12345678", "--init", model,
               "--finetune-epochs", "0", "--out", (dir / "zero").string(), "--dropout", "0.25"})
              .code == kExitOk);
  const auto pre = nlohmann::json::parse(read_text(dir / "pre" / "eval.json"));
  const auto zero = nlohmann::json::parse(read_text(dir / "zero" / "eval.json"));
  CHECK(zero["record"]["wer"] == pre["record"]["wer"]);
  CHECK(zero["record"]["per_total"] == pre["record"]["per_total"]);
  CHECK(zero["record"]["per_category"] == pre["record"]["per_category"]);
}

TEST_CASE("a killed sweep resumes to byte-identical outputs") {
  const auto dir = scratch_dir("cli_kill");
  const auto cfg = small_config(dir, 10).string();
  const std::string tool = CHANSEL_TOOL_PATH;

  REQUIRE(cli({"exhaustive", "--config", cfg, "--out", (dir / "reference").string(), "--workers",
               "1"})
              .code == kExitOk);
  const auto reference = snapshot(dir / "reference");

  const auto out = (dir / "resumed").string();
  std::vector<std::string> args = {tool, "exhaustive", "--config", cfg, "--out", out,
                                   "--workers", "1"};
  std::vector<char *> argv;
  for (auto &a : args)
    argv.push_back(a.data());
  argv.push_back(nullptr);
  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_addopen(&actions, 1, "/dev/null", O_WRONLY, 0);
  pid_t pid = 0;
  REQUIRE(posix_spawn(&pid, tool.c_str(), &actions, nullptr, argv.data(), environ) == 0);
  posix_spawn_file_actions_destroy(&actions);
  const auto cache = dir / "resumed" / "cache" / "results.jsonl";
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(60);
  while (std::chrono::steady_clock::now() < deadline &&
         (!fs::exists(cache) || count_lines(cache) < 5))
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  ::kill(pid, SIGKILL);
  int status = 0;
  ::waitpid(pid, &status, 0);
  REQUIRE(WIFSIGNALED(status)); // killed mid-sweep, not finished
  const auto partial = count_lines(cache);
  CHECK(partial >= 5);
  CHECK(partial < 70);
  CHECK_FALSE(fs::exists(dir / "resumed" / "sweep.csv"));

  const auto resumed = cli({"exhaustive", "--config", cfg, "--out", out, "--workers", "1"});
  REQUIRE(resumed.code == kExitOk);
  CHECK(resumed.out.find(" " + std::to_string(70 - partial) + " fresh evaluations") !=
        std::string::npos);
  CHECK(snapshot(dir / "resumed") == reference);
}

TEST_SUITE_END();
