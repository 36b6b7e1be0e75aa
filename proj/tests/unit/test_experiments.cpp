#include <catch2/catch_amalgamated.hpp>

#include <set>
#include <vector>

#include "benchalign/experiments.hpp"
#include "test_util.hpp"

using namespace benchalign;
using namespace benchalign::experiments;

namespace {

ResponseMatrix sized_models(const std::vector<std::optional<std::uint64_t>>& params) {
  ResponseMatrix m;
  for (std::size_t i = 0; i < params.size(); ++i) {
    m.models.push_back({"m" + std::to_string(i), params[i], false});
  }
  m.questions.push_back({"q0", "bench", "t", 1.0});
  m.entries.assign(params.size(), 1);
  return m;
}

}  // namespace

TEST_CASE("size_split", "[experiments]") {
  SECTION("strictly above the threshold is held out") {
    const ResponseMatrix m = sized_models({7, 13, 31, 70});
    const Split s = size_split(m, 30);
    CHECK(s.test_ids == std::vector<std::string>{"m2", "m3"});
    CHECK(s.train_ids == std::vector<std::string>{"m0", "m1"});
  }
  SECTION("threshold exactly at a parameter count keeps it in training") {
    const ResponseMatrix m = sized_models({7, 30, 70});
    const Split s = size_split(m, 30);
    CHECK(s.train_ids == std::vector<std::string>{"m0", "m1"});
    CHECK(s.test_ids == std::vector<std::string>{"m2"});
  }
  SECTION("unknown parameter counts sit on neither side") {
    const ResponseMatrix m = sized_models({7, std::nullopt, 70});
    const Split s = size_split(m, 30);
    CHECK(s.train_ids == std::vector<std::string>{"m0"});
    CHECK(s.test_ids == std::vector<std::string>{"m2"});
  }
  SECTION("an empty holdout is an error") {
    const ResponseMatrix m = sized_models({7, 13});
    REQUIRE_THROWS_WITH(size_split(m, 30), Catch::Matchers::ContainsSubstring("empty holdout"));
  }
}

TEST_CASE("random_split", "[experiments]") {
  std::vector<std::optional<std::uint64_t>> params(100);
  for (std::size_t i = 0; i < 100; ++i) params[i] = i + 1;
  const ResponseMatrix m = sized_models(params);

  SECTION("fraction 0.1 of 100 models holds out exactly 10") {
    const Split s = random_split(m, 0.1, 42);
    CHECK(s.test_ids.size() == 10);
    CHECK(s.train_ids.size() == 90);
  }
  SECTION("train and test partition the model set") {
    const Split s = random_split(m, 0.25, 7);
    std::set<std::string> all(s.train_ids.begin(), s.train_ids.end());
    all.insert(s.test_ids.begin(), s.test_ids.end());
    CHECK(all.size() == 100);
  }
  SECTION("same seed, same split; different seed, different split") {
    const Split a = random_split(m, 0.1, 5);
    const Split b = random_split(m, 0.1, 5);
    const Split c = random_split(m, 0.1, 6);
    CHECK(a.test_ids == b.test_ids);
    CHECK(a.test_ids != c.test_ids);
  }
  SECTION("a one-model holdout is rejected") {
    std::vector<std::optional<std::uint64_t>> p50(50);
    for (std::size_t i = 0; i < 50; ++i) p50[i] = i + 1;
    REQUIRE_THROWS_WITH(random_split(sized_models(p50), 0.02, 1),
                        Catch::Matchers::ContainsSubstring("holdout smaller than 2"));
  }
  SECTION("fraction bounds") {
    REQUIRE_THROWS_AS(random_split(m, 0.0, 1), std::invalid_argument);
    REQUIRE_THROWS_AS(random_split(m, 1.0, 1), std::invalid_argument);
  }
}

TEST_CASE("model_sweep", "[experiments]") {
  std::vector<std::optional<std::uint64_t>> params(250);
  for (std::size_t i = 0; i < 250; ++i) params[i] = 1000 - i;  // reverse size order
  const ResponseMatrix m = sized_models(params);
  std::vector<std::string> train;
  for (const auto& rec : m.models) train.push_back(rec.model_id);

  SECTION("prefix schedule 100, 200, 250") {
    const auto subsets = model_sweep(m, train, 100);
    REQUIRE(subsets.size() == 3);
    CHECK(subsets[0].size() == 100);
    CHECK(subsets[1].size() == 200);
    CHECK(subsets[2].size() == 250);
    // nested prefixes
    for (std::size_t i = 0; i < subsets[0].size(); ++i) CHECK(subsets[0][i] == subsets[1][i]);
    for (std::size_t i = 0; i < subsets[1].size(); ++i) CHECK(subsets[1][i] == subsets[2][i]);
    // sorted by ascending parameter count: smallest params last in the id order
    CHECK(subsets[0][0] == "m249");
  }
  SECTION("step at least the training size collapses to one subset") {
    const auto subsets = model_sweep(m, train, 600);
    REQUIRE(subsets.size() == 1);
    CHECK(subsets[0].size() == 250);
  }
  SECTION("parameter-count ties are ordered by model_id") {
    const ResponseMatrix tied = sized_models({5, 5, 5, 5});
    std::vector<std::string> ids{"m2", "m0", "m3", "m1"};
    const auto subsets = model_sweep(tied, ids, 2);
    REQUIRE(subsets.size() == 2);
    CHECK(subsets[0] == std::vector<std::string>{"m0", "m1"});
  }
  SECTION("unknown param_count models are skipped") {
    const ResponseMatrix holey = sized_models({5, std::nullopt, 7});
    std::vector<std::string> ids{"m0", "m1", "m2"};
    const auto subsets = model_sweep(holey, ids, 10);
    REQUIRE(subsets.size() == 1);
    CHECK(subsets[0] == std::vector<std::string>{"m0", "m2"});
  }
}

TEST_CASE("question_sweep", "[experiments]") {
  ResponseMatrix m;
  m.models.push_back({"m0", 1, false});
  for (int q = 0; q < 150; ++q) m.questions.push_back({"q" + std::to_string(q), "b", "t", 1.0});
  m.entries.assign(150, 0);

  SECTION("prefix schedule 100, 150") {
    const auto subsets = question_sweep(m, 100, 3);
    REQUIRE(subsets.size() == 2);
    CHECK(subsets[0].size() == 100);
    CHECK(subsets[1].size() == 150);
    for (std::size_t i = 0; i < 100; ++i) CHECK(subsets[0][i] == subsets[1][i]);
  }
  SECTION("seeded shuffle is reproducible and seed-sensitive") {
    CHECK(question_sweep(m, 100, 3) == question_sweep(m, 100, 3));
    CHECK(question_sweep(m, 100, 3) != question_sweep(m, 100, 4));
  }
  SECTION("step larger than the question count gives a single full subset") {
    const auto subsets = question_sweep(m, 1000, 3);
    REQUIRE(subsets.size() == 1);
    CHECK(subsets[0].size() == 150);
  }
}

TEST_CASE("synth_generate", "[experiments]") {
  SynthConfig cfg;
  cfg.n_models = 40;
  cfg.n_questions = 50;
  cfg.planted_fraction = 0.2;
  cfg.seed = 12;

  SECTION("planted weights are binary with the configured count") {
    const SynthWorld w = synth_generate(cfg);
    std::size_t ones = 0;
    for (const double v : w.planted_weights.weights) {
      CHECK((v == 0.0 || v == 1.0));
      ones += v == 1.0;
    }
    CHECK(ones == 10);  // round(0.2 * 50)
    CHECK(w.dataset.n_models() == 40);
    CHECK(w.dataset.n_questions() == 50);
    CHECK(w.dataset.models[0].param_count == 1);
    CHECK(w.dataset.models[39].param_count == 40);
  }
  SECTION("planted fraction 1 makes the target the accuracy ranking") {
    SynthConfig full = cfg;
    full.planted_fraction = 1.0;
    const SynthWorld w = synth_generate(full);
    std::map<std::string, double> acc;
    for (std::size_t i = 0; i < w.dataset.n_models(); ++i)
      acc[w.dataset.models[i].model_id] = mean_accuracy_score(w.dataset.row(i));
    CHECK(rank_models(acc).ranks ==
          std::map<std::string, int>(w.target.ranks.begin(), w.target.ranks.end()));
  }
  SECTION("noise-free target is reproducible from the dataset and planted weights") {
    const SynthWorld w = synth_generate(cfg);
    const WeightedBenchmark bench = ltr::to_weighted_benchmark(w.planted_weights);
    const Ranking derived = ltr::apply_benchmark(bench, w.dataset);
    for (const auto& [id, rank] : derived.ranks) CHECK(w.target.ranks.at(id) == rank);
  }
  SECTION("same seed gives a byte-identical world") {
    const SynthWorld a = synth_generate(cfg);
    const SynthWorld b = synth_generate(cfg);
    CHECK(a.dataset.entries == b.dataset.entries);
    CHECK(a.planted_weights.weights == b.planted_weights.weights);
    CHECK(a.target.ranks == b.target.ranks);
  }
  SECTION("config invariants") {
    SynthConfig bad = cfg;
    bad.n_models = 3;
    REQUIRE_THROWS_AS(synth_generate(bad), std::invalid_argument);
    bad = cfg;
    bad.n_questions = 9;
    REQUIRE_THROWS_AS(synth_generate(bad), std::invalid_argument);
    bad = cfg;
    bad.planted_fraction = 0.0;
    REQUIRE_THROWS_AS(synth_generate(bad), std::invalid_argument);
  }
}

TEST_CASE("split and synth world serialization", "[experiments]") {
  test_util::TempDir dir("persist");

  SECTION("split file round-trip") {
    Split s;
    s.train_ids = {"a", "b"};
    s.test_ids = {"c"};
    save_split(s, dir.file("split.csv"));
    CHECK(test_util::read_file(dir.file("split.csv")) ==
          "model_id,role\na,train\nb,train\nc,test\n");
    const Split back = load_split(dir.file("split.csv"));
    CHECK(back.train_ids == s.train_ids);
    CHECK(back.test_ids == s.test_ids);
  }
  SECTION("bad split files are rejected") {
    test_util::write_file(dir.file("bad.csv"), "model_id,role\na,weird\n");
    REQUIRE_THROWS(load_split(dir.file("bad.csv")));
    test_util::write_file(dir.file("dup.csv"), "model_id,role\na,train\na,test\n");
    REQUIRE_THROWS(load_split(dir.file("dup.csv")));
    test_util::write_file(dir.file("onesided.csv"), "model_id,role\na,train\n");
    REQUIRE_THROWS(load_split(dir.file("onesided.csv")));
  }
  SECTION("synth world persists in the corpus formats") {
    SynthConfig cfg;
    cfg.n_models = 12;
    cfg.n_questions = 15;
    cfg.seed = 9;
    const SynthWorld w = synth_generate(cfg);
    save_synth_world(w, dir.path().string());
    const ResponseMatrix data =
        load_dataset(dir.file("models.csv"), dir.file("questions.csv"), dir.file("responses.csv"));
    CHECK(data.entries == w.dataset.entries);
    const TargetRanking t = load_target_ranking(dir.file("target_ranking.csv"), data);
    for (const auto& [id, rank] : t.ranks) CHECK(w.target.ranks.at(id) == rank);
    const WeightedBenchmark bench = load_weighted_benchmark(dir.file("planted_weights.csv"));
    CHECK(bench.weights == w.planted_weights.weights);
  }
}
