#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "benchalign/csv.hpp"
#include "benchalign/dataset.hpp"
#include "benchalign/irt.hpp"
#include "benchalign/ltr.hpp"
#include "benchalign/random.hpp"
#include "benchalign/scoring.hpp"

namespace benchalign::experiments {

/// A train/test partition of (a subset of) the model set.
struct Split {
  std::vector<std::string> train_ids;  // dataset row order
  std::vector<std::string> test_ids;   // dataset row order
  std::string descriptor;
};

/// Holds out every model with param_count strictly above the threshold;
/// models with unknown parameter counts are left out of both sides.
inline Split size_split(const ResponseMatrix& m, std::uint64_t threshold_params) {
  Split s;
  s.descriptor = "gt-" + std::to_string(threshold_params);
  for (const auto& rec : m.models) {
    if (!rec.param_count) continue;
    if (*rec.param_count > threshold_params) s.test_ids.push_back(rec.model_id);
    else s.train_ids.push_back(rec.model_id);
  }
  if (s.test_ids.empty()) throw std::runtime_error("size_split: empty holdout");
  if (s.train_ids.empty()) throw std::runtime_error("size_split: empty training side");
  return s;
}

/// Seeded uniform holdout of round(fraction * K) models, no replacement.
inline Split random_split(const ResponseMatrix& m, double holdout_fraction,
                          std::uint64_t seed) {
  if (!(holdout_fraction > 0.0 && holdout_fraction < 1.0))
    throw std::invalid_argument("random_split: fraction must be in (0,1)");
  const std::size_t k = m.n_models();
  const std::size_t holdout = static_cast<std::size_t>(
      std::llround(holdout_fraction * static_cast<double>(k)));
  if (holdout < 2) throw std::runtime_error("random_split: holdout smaller than 2 models");
  if (holdout >= k) throw std::runtime_error("random_split: holdout leaves no training models");
  SplitMix64 rng(seed);
  const std::vector<std::size_t> test_rows = rng.sample_indices(k, holdout);
  std::vector<std::uint8_t> is_test(k, 0);
  for (const std::size_t r : test_rows) is_test[r] = 1;
  Split s;
  s.descriptor = "random-" + format_double(holdout_fraction) + "-seed" + std::to_string(seed);
  for (std::size_t r = 0; r < k; ++r) {
    (is_test[r] ? s.test_ids : s.train_ids).push_back(m.models[r].model_id);
  }
  return s;
}

/// Nested training prefixes of sizes step, 2*step, ..., |train| with the
/// training models sorted by (param_count, model_id) ascending. Models with
/// unknown parameter counts cannot be placed in the size order and are
/// dropped with a warning.
inline std::vector<std::vector<std::string>> model_sweep(const ResponseMatrix& m,
                                                         std::span<const std::string> train_ids,
                                                         std::size_t step = 100) {
  if (step == 0) throw std::invalid_argument("model_sweep: step must be positive");
  const auto midx = m.model_index();
  std::vector<std::pair<std::uint64_t, std::string>> sortable;
  for (const auto& id : train_ids) {
    const auto it = midx.find(id);
    if (it == midx.end())
      throw std::invalid_argument("model_sweep: model '" + id + "' not in dataset");
    const auto& rec = m.models[it->second];
    if (!rec.param_count) {
      std::cerr << "warning: model_sweep: model '" << id
                << "' has unknown param_count and is skipped\n";
      continue;
    }
    sortable.emplace_back(*rec.param_count, id);
  }
  std::sort(sortable.begin(), sortable.end());
  std::vector<std::vector<std::string>> subsets;
  for (std::size_t size = std::min(step, sortable.size()); size <= sortable.size();) {
    std::vector<std::string> subset;
    subset.reserve(size);
    for (std::size_t i = 0; i < size; ++i) subset.push_back(sortable[i].second);
    subsets.push_back(std::move(subset));
    if (size == sortable.size()) break;
    size = std::min(size + step, sortable.size());
  }
  return subsets;
}

/// Nested question prefixes: one seeded shuffle of the question ids, then
/// prefixes of sizes step, 2*step, ..., all.
inline std::vector<std::vector<std::string>> question_sweep(const ResponseMatrix& m,
                                                            std::size_t step,
                                                            std::uint64_t seed) {
  if (step == 0) throw std::invalid_argument("question_sweep: step must be positive");
  std::vector<std::string> ids;
  ids.reserve(m.n_questions());
  for (const auto& q : m.questions) ids.push_back(q.question_id);
  SplitMix64 rng(seed);
  rng.shuffle(ids);
  std::vector<std::vector<std::string>> subsets;
  for (std::size_t size = std::min(step, ids.size()); size <= ids.size();) {
    subsets.emplace_back(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(size));
    if (size == ids.size()) break;
    size = std::min(size + step, ids.size());
  }
  return subsets;
}

// ---------------------------------------------------------------------------
// Synthetic planted-weight worlds
// ---------------------------------------------------------------------------

struct SynthConfig {
  std::size_t n_models = 0;
  std::size_t n_questions = 0;
  double planted_fraction = 0.1;  // in (0, 1]
  double noise_sd = 0.0;
  double theta_sd = 1.0;    // theta ~ Normal(0, theta_sd)
  double log_a_sd = 0.25;   // log a ~ Normal(0, log_a_sd)
  double b_sd = 1.0;        // b ~ Normal(0, b_sd)
  std::uint64_t seed = 0;

  void validate() const {
    if (n_models < 4) throw std::invalid_argument("synth: n_models must be >= 4");
    if (n_questions < 10) throw std::invalid_argument("synth: n_questions must be >= 10");
    if (!(planted_fraction > 0.0 && planted_fraction <= 1.0))
      throw std::invalid_argument("synth: planted_fraction must be in (0,1]");
    if (noise_sd < 0.0) throw std::invalid_argument("synth: noise_sd must be >= 0");
  }
};

/// A generated world whose target ranking is induced by known sparse
/// nonnegative question weights; the exact end-to-end oracle.
struct SynthWorld {
  ResponseMatrix dataset;
  ltr::WeightVector planted_weights;
  TargetRanking target;
};

namespace detail {
inline std::string padded_id(const char* prefix, std::size_t index, std::size_t total) {
  std::size_t width = 1;
  for (std::size_t v = total; v >= 10; v /= 10) ++width;
  std::string digits = std::to_string(index + 1);
  return prefix + std::string(width > digits.size() ? width - digits.size() : 0, '0') + digits;
}
}  // namespace detail

/// Generates a 2PL response world with a planted weight vector.
///
/// Stream order from the seed: model abilities (one normal each), item
/// parameters (log a then b per item), responses row-major (one uniform per
/// cell), the planted-question shuffle, then per-model ranking noise when
/// noise_sd > 0. Models carry param_count = row index + 1 so that size-based
/// splits and sweeps work on synthetic worlds.
inline SynthWorld synth_generate(const SynthConfig& cfg) {
  cfg.validate();
  SplitMix64 rng(cfg.seed);

  std::vector<double> theta(cfg.n_models);
  for (auto& t : theta) t = rng.next_normal(0.0, cfg.theta_sd);
  std::vector<irt::ItemParams> items(cfg.n_questions);
  for (auto& item : items) {
    item.discrimination = std::exp(rng.next_normal(0.0, cfg.log_a_sd));
    item.difficulty = rng.next_normal(0.0, cfg.b_sd);
  }

  SynthWorld world;
  auto& data = world.dataset;
  data.models.resize(cfg.n_models);
  for (std::size_t i = 0; i < cfg.n_models; ++i) {
    data.models[i].model_id = detail::padded_id("m", i, cfg.n_models);
    data.models[i].param_count = i + 1;
  }
  data.questions.resize(cfg.n_questions);
  for (std::size_t j = 0; j < cfg.n_questions; ++j) {
    data.questions[j].question_id = detail::padded_id("q", j, cfg.n_questions);
    data.questions[j].benchmark = "synth";
    data.questions[j].task = "all";
  }
  data.entries.resize(cfg.n_models * cfg.n_questions);
  for (std::size_t i = 0; i < cfg.n_models; ++i) {
    for (std::size_t j = 0; j < cfg.n_questions; ++j) {
      const double p = irt::irf_2pl(theta[i], items[j]);
      data.entries[i * cfg.n_questions + j] = rng.next_double() < p ? 1 : 0;
    }
  }

  const std::size_t n_planted = static_cast<std::size_t>(
      std::llround(cfg.planted_fraction * static_cast<double>(cfg.n_questions)));
  if (n_planted == 0) throw std::invalid_argument("synth: planted set is empty");
  const std::vector<std::size_t> planted = rng.sample_indices(cfg.n_questions, n_planted);
  world.planted_weights.weights.assign(cfg.n_questions, 0.0);
  world.planted_weights.question_ids.reserve(cfg.n_questions);
  for (const auto& q : data.questions)
    world.planted_weights.question_ids.push_back(q.question_id);
  for (const std::size_t j : planted) world.planted_weights.weights[j] = 1.0;

  const WeightedBenchmark bench = ltr::to_weighted_benchmark(world.planted_weights);
  std::map<std::string, double> target_scores;
  for (std::size_t i = 0; i < cfg.n_models; ++i) {
    double s = weighted_score(data.row(i), bench);
    if (cfg.noise_sd > 0.0) s += rng.next_normal(0.0, cfg.noise_sd);
    target_scores[data.models[i].model_id] = s;
  }
  const Ranking ranked = rank_models(target_scores);
  for (const auto& [id, rank] : ranked.ranks) world.target.ranks[id] = rank;
  for (const auto& [id, score] : ranked.scores) world.target.scores[id] = score;
  return world;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

inline void save_split(const Split& s, const std::string& path) {
  auto out = open_output(path);
  out << "model_id,role\n";
  for (const auto& id : s.train_ids) out << csv_quote(id) << ",train\n";
  for (const auto& id : s.test_ids) out << csv_quote(id) << ",test\n";
}

inline Split load_split(const std::string& path) {
  CsvReader r(path);
  r.expect_header({"model_id", "role"});
  Split s;
  s.descriptor = "file";
  std::set<std::string> seen;
  std::vector<std::string> f;
  while (r.next(f)) {
    if (f.size() != 2) throw r.error("expected 2 fields");
    if (!seen.insert(f[0]).second) throw r.error("duplicate model '" + f[0] + "'");
    if (f[1] == "train") s.train_ids.push_back(f[0]);
    else if (f[1] == "test") s.test_ids.push_back(f[0]);
    else throw r.error("role must be train or test, got '" + f[1] + "'");
  }
  if (s.train_ids.empty() || s.test_ids.empty())
    throw std::runtime_error(path + ": split needs both train and test models");
  return s;
}

/// Persists the world in the dataset file formats plus planted_weights.csv
/// (weighted-benchmark format) and target_ranking.csv (explicit ranks).
inline void save_synth_world(const SynthWorld& world, const std::string& dir) {
  save_dataset(world.dataset, dir + "/models.csv", dir + "/questions.csv",
               dir + "/responses.csv");
  save_target_ranking(world.target, dir + "/target_ranking.csv");
  save_weighted_benchmark(ltr::to_weighted_benchmark(world.planted_weights),
                          dir + "/planted_weights.csv");
}

}  // namespace benchalign::experiments
