#pragma once

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "benchalign/baselines.hpp"
#include "benchalign/config.hpp"
#include "benchalign/dataset.hpp"
#include "benchalign/experiments.hpp"
#include "benchalign/ltr.hpp"
#include "benchalign/metrics.hpp"
#include "benchalign/random.hpp"

namespace benchalign::cli {

/// Records every artifact a command writes so that a failure can remove the
/// partial outputs instead of leaving a stale mixture behind.
class OutputTracker {
 public:
  explicit OutputTracker(std::string dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
  }

  std::string path(const std::string& name) {
    const std::string p = dir_ + "/" + name;
    written_.push_back(p);
    return p;
  }

  const std::vector<std::string>& written() const { return written_; }

  void remove_all() noexcept {
    for (const auto& p : written_) {
      std::error_code ec;
      std::filesystem::remove(p, ec);
    }
  }

 private:
  std::string dir_;
  std::vector<std::string> written_;
};

namespace detail {

inline std::uint64_t file_fingerprint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(path + ": cannot open for fingerprinting");
  std::ostringstream os;
  os << in.rdbuf();
  return fnv1a64(os.str());
}

inline std::string hex64(std::uint64_t v) {
  char buf[19];
  std::snprintf(buf, sizeof(buf), "0x%016llx", static_cast<unsigned long long>(v));
  return buf;
}

/// Loads the corpus and applies the configured model and benchmark filters.
/// Models flagged excluded in the metadata are dropped together with the
/// configured exclusions. When `exclude_benchmarks` is absent from the config
/// the default {IFEval} applies, leniently restricted to benchmarks actually
/// present; an explicit list is enforced strictly.
inline ResponseMatrix prepare_dataset(const ExperimentConfig& cfg) {
  if (cfg.models_path.empty() || cfg.questions_path.empty() || cfg.responses_path.empty())
    throw std::runtime_error("config: data.models, data.questions and data.responses are required");
  ResponseMatrix m = load_dataset(cfg.models_path, cfg.questions_path, cfg.responses_path);

  std::set<std::string> drop(cfg.exclude_models.begin(), cfg.exclude_models.end());
  for (const auto& rec : m.models) {
    if (rec.excluded) drop.insert(rec.model_id);
  }
  if (!drop.empty()) m = filter_models(m, drop);

  std::set<std::string> bench_drop;
  if (cfg.exclude_benchmarks) {
    bench_drop.insert(cfg.exclude_benchmarks->begin(), cfg.exclude_benchmarks->end());
  } else {
    for (const auto& q : m.questions) {
      if (q.benchmark == "IFEval") {
        bench_drop.insert("IFEval");
        break;
      }
    }
  }
  if (!bench_drop.empty()) m = filter_benchmarks(m, bench_drop);
  return m;
}

inline experiments::Split resolve_split(const ExperimentConfig& cfg, const ResponseMatrix& m) {
  if (!cfg.split) throw std::runtime_error("config: this command requires a split");
  const SplitSpec& s = *cfg.split;
  if (s.type == "size") return experiments::size_split(m, s.threshold_params);
  if (s.type == "random")
    return experiments::random_split(m, s.holdout_fraction, cfg.require_seed());
  experiments::Split split = experiments::load_split(s.path);
  const auto midx = m.model_index();
  for (const auto& id : split.train_ids) {
    if (!midx.count(id))
      throw std::runtime_error("split file: model '" + id + "' not in the dataset");
  }
  for (const auto& id : split.test_ids) {
    if (!midx.count(id))
      throw std::runtime_error("split file: model '" + id + "' not in the dataset");
  }
  return split;
}

inline TargetRanking load_target_or_fail(const ExperimentConfig& cfg, const ResponseMatrix& m) {
  if (!cfg.target_path) throw std::runtime_error("config: target_ranking path is required");
  return load_target_ranking(*cfg.target_path, m);
}

inline nlohmann::json base_manifest(const ExperimentConfig& cfg, const std::string& command) {
  nlohmann::json inputs;
  inputs["models"] = {{"path", cfg.models_path},
                      {"fnv1a64", hex64(file_fingerprint(cfg.models_path))}};
  inputs["questions"] = {{"path", cfg.questions_path},
                         {"fnv1a64", hex64(file_fingerprint(cfg.questions_path))}};
  inputs["responses"] = {{"path", cfg.responses_path},
                         {"fnv1a64", hex64(file_fingerprint(cfg.responses_path))}};
  if (cfg.target_path) {
    inputs["target_ranking"] = {{"path", *cfg.target_path},
                                {"fnv1a64", hex64(file_fingerprint(*cfg.target_path))}};
  }
  return nlohmann::json{{"command", command},
                        {"config_hash", hex64(fnv1a64(cfg.raw.dump()))},
                        {"seed", cfg.require_seed()},
                        {"inputs", inputs}};
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Commands. Each throws on error; main() maps exceptions to exit code 1 and
// removes partial artifacts.
// ---------------------------------------------------------------------------

/// Loads everything, prints corpus counts, exits nonzero on any ingestion
/// error. Counts are over the raw corpus, before any filtering.
inline void cmd_validate(const ExperimentConfig& cfg, std::ostream& out = std::cout) {
  if (cfg.models_path.empty() || cfg.questions_path.empty() || cfg.responses_path.empty())
    throw std::runtime_error("config: data.models, data.questions and data.responses are required");
  const ResponseMatrix m = load_dataset(cfg.models_path, cfg.questions_path, cfg.responses_path);

  std::map<std::string, std::size_t> per_benchmark;
  std::set<std::pair<std::string, std::string>> tasks;
  for (const auto& q : m.questions) {
    ++per_benchmark[q.benchmark];
    tasks.insert({q.benchmark, q.task});
  }
  out << "models: " << m.n_models() << "\n";
  out << "questions: " << m.n_questions() << "\n";
  out << "benchmarks: " << per_benchmark.size() << "\n";
  for (const auto& [name, count] : per_benchmark)
    out << "  " << name << ": " << count << "\n";
  out << "tasks: " << tasks.size() << "\n";
  if (cfg.target_path) {
    const TargetRanking t = load_target_ranking(*cfg.target_path, m);
    out << "target-ranked models: " << t.size() << "\n";
  }
}

/// Trains the configured loss variant on the training side of the split (or
/// the whole model set when no split is given) and writes the weighted
/// benchmark, the per-epoch trace, and a manifest.
inline void cmd_train(const ExperimentConfig& cfg) {
  if (cfg.method_name != "benchalign")
    throw std::runtime_error("train: config method.name must be benchalign (got '" +
                             cfg.method_name + "')");
  const ResponseMatrix data = detail::prepare_dataset(cfg);
  const TargetRanking target = detail::load_target_or_fail(cfg, data);

  ResponseMatrix train_data = data;
  if (cfg.split) {
    const experiments::Split split = detail::resolve_split(cfg, data);
    train_data = select_models(
        data, std::set<std::string>(split.train_ids.begin(), split.train_ids.end()));
  }
  std::set<std::string> train_ids;
  for (const auto& rec : train_data.models) train_ids.insert(rec.model_id);
  const TargetRanking train_target = restrict_ranking(target, train_ids);

  ltr::TrainConfig trainer = cfg.trainer;
  trainer.seed = cfg.require_seed();
  const ltr::TrainResult result = ltr::train(train_data, train_target, cfg.loss, trainer);

  OutputTracker outputs(cfg.out_dir);
  try {
    const std::string bench_path = outputs.path("weighted_benchmark.csv");
    save_weighted_benchmark(ltr::to_weighted_benchmark(result.weights), bench_path);
    const std::string trace_path = outputs.path("training_trace.csv");
    ltr::save_training_trace(result.trace, trace_path);

    nlohmann::json manifest = detail::base_manifest(cfg, "train");
    manifest["variant"] = ltr::variant_name(cfg.loss.variant);
    manifest["outputs"] = {"weighted_benchmark.csv", "training_trace.csv"};
    auto mout = open_output(outputs.path("manifest.json"));
    mout << manifest.dump(2) << '\n';
    mout.close();

    // exit-code contract: artifacts must exist and parse
    (void)load_weighted_benchmark(bench_path);
  } catch (...) {
    outputs.remove_all();
    throw;
  }
}

/// Applies a weighted benchmark to the test side of the split and writes the
/// induced ranking plus the evaluation report against the target.
inline void cmd_evaluate(const ExperimentConfig& cfg, const std::string& benchmark_file) {
  const ResponseMatrix data = detail::prepare_dataset(cfg);
  const TargetRanking target = detail::load_target_or_fail(cfg, data);
  const experiments::Split split = detail::resolve_split(cfg, data);
  const WeightedBenchmark bench = load_weighted_benchmark(benchmark_file);

  const std::set<std::string> test_ids(split.test_ids.begin(), split.test_ids.end());
  const ResponseMatrix test_data = select_models(data, test_ids);
  const Ranking predicted = ltr::apply_benchmark(bench, test_data);
  const EvalReport report = evaluate(predicted, restrict_ranking(target, test_ids));

  OutputTracker outputs(cfg.out_dir);
  try {
    save_ranking(predicted, outputs.path("ranking.csv"));
    save_eval_report(report, outputs.path("eval_report.json"));
  } catch (...) {
    outputs.remove_all();
    throw;
  }
}

/// Runs one of the comparison methods over the split and writes its selected
/// items, per-model scores and ranking; adds the evaluation report when a
/// target ranking is configured. Baselines never read the target.
inline void cmd_baseline(const ExperimentConfig& cfg, const std::string& name) {
  const ResponseMatrix data = detail::prepare_dataset(cfg);
  const experiments::Split split = detail::resolve_split(cfg, data);
  const std::set<std::string> test_set(split.test_ids.begin(), split.test_ids.end());

  baselines::BaselineArtifacts art;
  if (name == "random") {
    const baselines::TaskCatalog catalog = baselines::build_task_catalog(data);
    const auto r = baselines::random_task_ranking(select_models(data, test_set), catalog);
    art.selected_question_ids = r.question_ids;
    art.test_scores = r.scores;
    art.ranking = r.ranking;
  } else if (name == "metabench") {
    baselines::MetabenchConfig mb = cfg.metabench;
    mb.seed = cfg.require_seed();
    art = baselines::metabench_rank(data, split.train_ids, split.test_ids, mb);
  } else if (name == "tinybenchmarks") {
    baselines::TinybenchConfig tb = cfg.tinybench;
    tb.seed = cfg.require_seed();
    art = baselines::tinybench_rank(data, split.train_ids, split.test_ids, tb);
  } else if (name == "no_ltr") {
    art = baselines::no_ltr_rank(data, split.test_ids);
  } else {
    throw std::runtime_error("baseline: unknown name '" + name +
                             "' (valid: random, metabench, tinybenchmarks, no_ltr)");
  }

  OutputTracker outputs(cfg.out_dir);
  try {
    {
      auto out = open_output(outputs.path("selected_items.csv"));
      out << "question_id\n";
      for (const auto& id : art.selected_question_ids) out << csv_quote(id) << '\n';
    }
    save_model_scores(art.test_scores, outputs.path("scores.csv"));
    save_ranking(art.ranking, outputs.path("ranking.csv"));
    if (cfg.target_path) {
      const TargetRanking target = load_target_ranking(*cfg.target_path, data);
      const EvalReport report = evaluate(art.ranking, restrict_ranking(target, test_set));
      save_eval_report(report, outputs.path("eval_report.json"));
    }
  } catch (...) {
    outputs.remove_all();
    throw;
  }
}

namespace detail {

struct SweepRow {
  std::size_t subset_size;
  std::string variant;
  EvalReport report;
};

struct SweepCell {
  std::vector<std::string> model_subset;     // models axis
  std::vector<std::string> question_subset;  // questions axis
  std::size_t subset_size;
  ltr::LossVariant variant;
};

}  // namespace detail

/// Trains and evaluates one configuration per (nested subset, loss variant)
/// cell and writes the plot-ready grid. Cells are independent; `jobs` > 1
/// runs them concurrently without changing the output bytes.
inline void cmd_sweep(const ExperimentConfig& cfg, const std::string& axis_arg,
                      unsigned jobs = 1) {
  const std::string axis = axis_arg.empty() ? cfg.sweep.axis : axis_arg;
  if (axis != "models" && axis != "questions")
    throw std::runtime_error("sweep: axis must be models or questions");
  const ResponseMatrix data = detail::prepare_dataset(cfg);
  const TargetRanking target = detail::load_target_or_fail(cfg, data);
  const experiments::Split split = detail::resolve_split(cfg, data);
  const std::uint64_t seed = cfg.require_seed();

  std::vector<ltr::LossVariant> variants = cfg.sweep.variants;
  if (variants.empty()) variants = ltr::all_variants();

  std::vector<std::vector<std::string>> subsets;
  if (axis == "models") {
    subsets = experiments::model_sweep(data, split.train_ids, cfg.sweep.step);
  } else {
    subsets = experiments::question_sweep(data, cfg.sweep.step, seed);
  }

  std::vector<detail::SweepCell> cells;
  for (const auto& subset : subsets) {
    for (const auto variant : variants) {
      detail::SweepCell cell;
      cell.subset_size = subset.size();
      cell.variant = variant;
      if (axis == "models") cell.model_subset = subset;
      else cell.question_subset = subset;
      cells.push_back(std::move(cell));
    }
  }

  const std::set<std::string> test_ids(split.test_ids.begin(), split.test_ids.end());
  const TargetRanking test_target = restrict_ranking(target, test_ids);

  std::vector<detail::SweepRow> rows(cells.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::string first_error;
  std::mutex error_mutex;

  const auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cells.size() || failed.load()) break;
      try {
        const detail::SweepCell& cell = cells[i];
        ResponseMatrix train_data;
        ResponseMatrix test_data;
        if (!cell.model_subset.empty()) {
          const std::set<std::string> ids(cell.model_subset.begin(), cell.model_subset.end());
          train_data = select_models(data, ids);
          test_data = select_models(data, test_ids);
        } else {
          const std::set<std::string> train_set(split.train_ids.begin(), split.train_ids.end());
          train_data = select_questions(select_models(data, train_set), cell.question_subset);
          test_data = select_questions(select_models(data, test_ids), cell.question_subset);
        }
        std::set<std::string> train_set;
        for (const auto& rec : train_data.models) train_set.insert(rec.model_id);

        ltr::LossConfig loss = cfg.loss;
        loss.variant = cell.variant;
        ltr::TrainConfig trainer = cfg.trainer;
        trainer.seed = seed;
        const ltr::TrainResult trained =
            ltr::train(train_data, restrict_ranking(target, train_set), loss, trainer);
        const Ranking predicted =
            ltr::apply_benchmark(ltr::to_weighted_benchmark(trained.weights), test_data);
        rows[i] = {cell.subset_size, ltr::variant_name(cell.variant),
                   evaluate(predicted, test_target)};
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!failed.exchange(true)) first_error = e.what();
      }
    }
  };

  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failed.load()) throw std::runtime_error("sweep cell failed: " + first_error);

  OutputTracker outputs(cfg.out_dir);
  try {
    auto out = open_output(outputs.path(axis == "models" ? "sweep_models.csv"
                                                         : "sweep_questions.csv"));
    out << "subset_size,variant,acc_pair,acc_halfwidth,spearman,spearman_halfwidth\n";
    for (const auto& row : rows) {
      out << row.subset_size << ',' << row.variant << ',' << format_double(row.report.acc_pair)
          << ',' << format_double(row.report.acc_pair_halfwidth) << ','
          << format_double(row.report.spearman) << ','
          << format_double(row.report.spearman_halfwidth) << '\n';
    }
  } catch (...) {
    outputs.remove_all();
    throw;
  }
}

/// Generates a synthetic planted-weight world and persists it in the corpus
/// file formats plus planted_weights.csv.
inline void cmd_synth(const ExperimentConfig& cfg) {
  experiments::SynthConfig synth = cfg.synth;
  synth.seed = cfg.require_seed();
  OutputTracker outputs(cfg.out_dir);
  outputs.path("models.csv");
  outputs.path("questions.csv");
  outputs.path("responses.csv");
  outputs.path("target_ranking.csv");
  outputs.path("planted_weights.csv");
  try {
    const experiments::SynthWorld world = experiments::synth_generate(synth);
    experiments::save_synth_world(world, cfg.out_dir);
    // must re-load cleanly
    (void)load_dataset(cfg.out_dir + "/models.csv", cfg.out_dir + "/questions.csv",
                       cfg.out_dir + "/responses.csv");
  } catch (...) {
    outputs.remove_all();
    throw;
  }
}

}  // namespace benchalign::cli
