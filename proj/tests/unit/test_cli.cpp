#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <sys/wait.h>

#include "benchalign/commands.hpp"
#include "benchalign/config.hpp"
#include "test_util.hpp"

using namespace benchalign;
using namespace benchalign::cli;
using test_util::TempDir;
using test_util::read_file;
using test_util::write_file;

namespace {

int run_cli(const std::string& args) {
  const char* bin = std::getenv("BENCHALIGN_CLI");
  REQUIRE(bin != nullptr);
  const std::string cmd = std::string(bin) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

/// Writes a small separable world plus a config pointing at it.
struct Fixture {
  TempDir dir{"cli"};
  std::string config_path;

  explicit Fixture(bool with_target = true) {
    experiments::SynthConfig sc;
    sc.n_models = 30;
    sc.n_questions = 24;
    sc.planted_fraction = 0.25;
    sc.seed = 404;
    const experiments::SynthWorld world = experiments::synth_generate(sc);
    experiments::save_synth_world(world, dir.path().string());

    nlohmann::json cfg{
        {"data",
         {{"models", dir.file("models.csv")},
          {"questions", dir.file("questions.csv")},
          {"responses", dir.file("responses.csv")}}},
        {"exclude_benchmarks", nlohmann::json::array()},
        {"split", {{"type", "random"}, {"holdout_fraction", 0.2}}},
        {"method",
         {{"name", "benchalign"}, {"variant", "ranknet"}, {"learning_rate", 0.01},
          {"epochs", 40}, {"batch_size", 64}}},
        {"seed", 31},
        {"out", dir.file("out")}};
    if (with_target) cfg["target_ranking"] = dir.file("target_ranking.csv");
    config_path = dir.file("config.json");
    write_file(config_path, cfg.dump(2));
  }

  ExperimentConfig config() const { return load_config(config_path); }
};

}  // namespace

TEST_CASE("cmd_validate prints counts and fails on corrupt inputs", "[cli]") {
  Fixture fx;
  std::ostringstream out;
  cmd_validate(fx.config(), out);
  const std::string text = out.str();
  CHECK(text.find("models: 30") != std::string::npos);
  CHECK(text.find("questions: 24") != std::string::npos);
  CHECK(text.find("tasks: 1") != std::string::npos);
  CHECK(text.find("target-ranked models: 30") != std::string::npos);

  SECTION("corrupt responses file names the line") {
    std::ofstream append(fx.dir.file("responses.csv"), std::ios::app);
    append << "m01,q01,0.5\n";
    append.close();
    REQUIRE_THROWS_WITH(cmd_validate(fx.config(), out),
                        Catch::Matchers::ContainsSubstring("non-binary response"));
    CHECK(run_cli("validate --config " + fx.config_path) == 1);
  }
  SECTION("binary exit code is zero on the happy path") {
    CHECK(run_cli("validate --config " + fx.config_path) == 0);
  }
}

TEST_CASE("cmd_train writes benchmark, trace and manifest deterministically", "[cli]") {
  Fixture fx;
  cmd_train(fx.config());
  const std::string bench_path = fx.dir.file("out/weighted_benchmark.csv");
  const std::string trace_path = fx.dir.file("out/training_trace.csv");
  const std::string manifest_path = fx.dir.file("out/manifest.json");
  REQUIRE(std::filesystem::exists(bench_path));
  REQUIRE(std::filesystem::exists(trace_path));
  REQUIRE(std::filesystem::exists(manifest_path));

  const WeightedBenchmark bench = load_weighted_benchmark(bench_path);
  CHECK(bench.question_ids.size() == 24);

  const nlohmann::json manifest = nlohmann::json::parse(read_file(manifest_path));
  CHECK(manifest.at("command") == "train");
  CHECK(manifest.at("seed") == 31);
  CHECK(manifest.at("inputs").contains("responses"));
  CHECK(manifest.at("config_hash").get<std::string>().substr(0, 2) == "0x");

  SECTION("the trace header matches the trained epochs") {
    std::istringstream trace(read_file(trace_path));
    std::string line;
    std::getline(trace, line);
    CHECK(line == "epoch,mean_loss,train_acc_pair");
    std::size_t rows = 0;
    while (std::getline(trace, line)) ++rows;
    CHECK(rows == 40);
  }
  SECTION("rerunning reproduces byte-identical artifacts") {
    const std::string bench_before = read_file(bench_path);
    const std::string trace_before = read_file(trace_path);
    const std::string manifest_before = read_file(manifest_path);
    cmd_train(fx.config());
    CHECK(read_file(bench_path) == bench_before);
    CHECK(read_file(trace_path) == trace_before);
    CHECK(read_file(manifest_path) == manifest_before);
  }
  SECTION("missing target ranking is an error") {
    Fixture no_target(false);
    REQUIRE_THROWS_WITH(cmd_train(no_target.config()),
                        Catch::Matchers::ContainsSubstring("target_ranking"));
    CHECK(run_cli("train --config " + no_target.config_path) == 1);
  }
}

TEST_CASE("cmd_evaluate with the planted benchmark recovers the target exactly", "[cli]") {
  Fixture fx;
  cmd_evaluate(fx.config(), fx.dir.file("planted_weights.csv"));
  const nlohmann::json rep = nlohmann::json::parse(read_file(fx.dir.file("out/eval_report.json")));
  CHECK(rep.at("acc_pair").get<double>() == 1.0);
  CHECK(rep.at("spearman").get<double>() == 1.0);
  CHECK(rep.at("n_models").get<int>() == 6);
  REQUIRE(std::filesystem::exists(fx.dir.file("out/ranking.csv")));

  SECTION("a reversed target flips the accuracy to zero") {
    // rewrite the target with reversed ranks
    const ResponseMatrix data = load_dataset(
        fx.dir.file("models.csv"), fx.dir.file("questions.csv"), fx.dir.file("responses.csv"));
    TargetRanking t = load_target_ranking(fx.dir.file("target_ranking.csv"), data);
    TargetRanking rev;
    const int k = static_cast<int>(t.ranks.size());
    for (const auto& [id, rank] : t.ranks) rev.ranks[id] = k + 1 - rank;
    save_target_ranking(rev, fx.dir.file("target_ranking.csv"));
    cmd_evaluate(fx.config(), fx.dir.file("planted_weights.csv"));
    const nlohmann::json rep2 =
        nlohmann::json::parse(read_file(fx.dir.file("out/eval_report.json")));
    CHECK(rep2.at("acc_pair").get<double>() == 0.0);
    CHECK(rep2.at("spearman").get<double>() == -1.0);
  }
}

TEST_CASE("trained benchmark beats no_ltr on the toy planted world", "[cli]") {
  Fixture fx;
  cmd_train(fx.config());
  cmd_evaluate(fx.config(), fx.dir.file("out/weighted_benchmark.csv"));
  const nlohmann::json rep = nlohmann::json::parse(read_file(fx.dir.file("out/eval_report.json")));
  CHECK(rep.at("acc_pair").get<double>() >= 0.5);
}

TEST_CASE("cmd_baseline artifacts and determinism", "[cli]") {
  Fixture fx;

  SECTION("unknown baseline name lists the valid ones") {
    REQUIRE_THROWS_WITH(cmd_baseline(fx.config(), "nope"),
                        Catch::Matchers::ContainsSubstring("random, metabench, tinybenchmarks, no_ltr"));
    CHECK(run_cli("baseline --config " + fx.config_path + " --name nope") == 1);
  }
  SECTION("no_ltr equals the accuracy ranking of the holdout") {
    cmd_baseline(fx.config(), "no_ltr");
    REQUIRE(std::filesystem::exists(fx.dir.file("out/ranking.csv")));
    REQUIRE(std::filesystem::exists(fx.dir.file("out/eval_report.json")));
    const auto cfg = fx.config();
    const ResponseMatrix data = cli::detail::prepare_dataset(cfg);
    const experiments::Split split = cli::detail::resolve_split(cfg, data);
    std::map<std::string, double> acc;
    const auto midx = data.model_index();
    for (const auto& id : split.test_ids)
      acc[id] = mean_accuracy_score(data.row(midx.at(id)));
    const Ranking expect = rank_models(acc);
    std::ostringstream want;
    want << "model_id,rank\n";
    for (const auto& id : expect.order()) want << id << ',' << expect.ranks.at(id) << '\n';
    CHECK(read_file(fx.dir.file("out/ranking.csv")) == want.str());
  }
  SECTION("random baseline reruns are byte-identical and ignore the target file") {
    cmd_baseline(fx.config(), "random");
    const std::string first = read_file(fx.dir.file("out/ranking.csv"));
    cmd_baseline(fx.config(), "random");
    CHECK(read_file(fx.dir.file("out/ranking.csv")) == first);

    ExperimentConfig no_target = fx.config();
    no_target.target_path.reset();
    no_target.out_dir = fx.dir.file("out2");
    cmd_baseline(no_target, "random");
    CHECK(read_file(fx.dir.file("out2/ranking.csv")) == first);
    CHECK_FALSE(std::filesystem::exists(fx.dir.file("out2/eval_report.json")));
  }
}

TEST_CASE("cmd_sweep produces one row per cell and variant", "[cli]") {
  Fixture fx;
  auto cfg = fx.config();
  cfg.sweep.step = 10;  // 24 train models -> subsets of 10, 20, 24
  cfg.sweep.variants = {ltr::LossVariant::RankNet, ltr::LossVariant::LambdaRank};
  cfg.trainer.epochs = 5;

  cmd_sweep(cfg, "models", 1);
  const std::string text = read_file(fx.dir.file("out/sweep_models.csv"));
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  CHECK(line == "subset_size,variant,acc_pair,acc_halfwidth,spearman,spearman_halfwidth");
  std::vector<std::string> rows;
  while (std::getline(in, line)) rows.push_back(line);
  REQUIRE(rows.size() == 6);
  CHECK(rows[0].substr(0, 10) == "10,ranknet");
  CHECK(rows[1].substr(0, 13) == "10,lambdarank");
  CHECK(rows[4].substr(0, 10) == "24,ranknet");

  SECTION("parallel execution does not change the bytes") {
    cfg.out_dir = fx.dir.file("out_jobs");
    cmd_sweep(cfg, "models", 3);
    CHECK(read_file(fx.dir.file("out_jobs/sweep_models.csv")) == text);
  }
  SECTION("question sweep with an oversized step emits a single cell") {
    cfg.out_dir = fx.dir.file("out_q");
    cfg.sweep.step = 1000;
    cmd_sweep(cfg, "questions", 1);
    const std::string qtext = read_file(fx.dir.file("out_q/sweep_questions.csv"));
    std::size_t lines = 0;
    for (const char c : qtext) lines += c == '\n';
    CHECK(lines == 3);  // header + 2 variants
  }
}

TEST_CASE("cmd_synth writes a loadable world", "[cli]") {
  TempDir dir("synthcmd");
  nlohmann::json cfg{
      {"synth", {{"n_models", 15}, {"n_questions", 12}, {"planted_fraction", 0.5}}},
      {"seed", 77},
      {"out", dir.file("world")}};
  write_file(dir.file("c.json"), cfg.dump());
  cmd_synth(load_config(dir.file("c.json")));
  const ResponseMatrix m = load_dataset(dir.file("world/models.csv"),
                                        dir.file("world/questions.csv"),
                                        dir.file("world/responses.csv"));
  CHECK(m.n_models() == 15);
  CHECK(load_weighted_benchmark(dir.file("world/planted_weights.csv")).question_ids.size() == 12);
  CHECK(run_cli("synth --config " + dir.file("c.json") + " --out " + dir.file("world2")) == 0);
  CHECK(read_file(dir.file("world2/responses.csv")) == read_file(dir.file("world/responses.csv")));
}

TEST_CASE("default IFEval exclusion applies only when present", "[cli]") {
  TempDir dir("ifeval");
  test_util::write_toy_corpus(dir);
  write_file(dir.file("t.csv"), "model_id,rank,score\nm1,1,\nm2,2,\nm3,3,\n");
  nlohmann::json cfg{
      {"data",
       {{"models", dir.file("models.csv")},
        {"questions", dir.file("questions.csv")},
        {"responses", dir.file("responses.csv")}}},
      {"target_ranking", dir.file("t.csv")},
      {"seed", 1},
      {"out", dir.file("out")}};
  write_file(dir.file("c.json"), cfg.dump());

  const auto loaded = load_config(dir.file("c.json"));
  const ResponseMatrix m = cli::detail::prepare_dataset(loaded);
  for (const auto& q : m.questions) CHECK(q.benchmark != "IFEval");
  CHECK(m.n_questions() == 3);

  SECTION("an explicit unknown exclusion is strict") {
    nlohmann::json strict = cfg;
    strict["exclude_benchmarks"] = {"DoesNotExist"};
    write_file(dir.file("c2.json"), strict.dump());
    REQUIRE_THROWS_WITH(cli::detail::prepare_dataset(load_config(dir.file("c2.json"))),
                        Catch::Matchers::ContainsSubstring("unknown benchmark"));
  }
}
