#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "benchalign/baselines.hpp"
#include "benchalign/experiments.hpp"
#include "benchalign/ltr.hpp"

namespace benchalign::cli {

struct SplitSpec {
  std::string type;  // "size" | "random" | "file"
  std::uint64_t threshold_params = 0;
  double holdout_fraction = 0.0;
  std::string path;
};

struct SweepSpec {
  std::string axis = "models";  // "models" | "questions"
  std::size_t step = 100;
  std::vector<ltr::LossVariant> variants;  // empty = all five
};

/// One JSON document drives every command; flags may override seed and output
/// directory. A seed must be supplied somewhere — there is no implicit
/// nondeterminism.
struct ExperimentConfig {
  std::string models_path, questions_path, responses_path;
  std::optional<std::string> target_path;
  std::optional<std::vector<std::string>> exclude_benchmarks;  // absent = default rule
  std::vector<std::string> exclude_models;
  std::optional<SplitSpec> split;

  std::string method_name = "benchalign";
  ltr::LossConfig loss;
  ltr::TrainConfig trainer;
  baselines::MetabenchConfig metabench;
  baselines::TinybenchConfig tinybench;
  SweepSpec sweep;
  experiments::SynthConfig synth;

  std::optional<std::uint64_t> seed;
  std::string out_dir = "out";

  nlohmann::json raw;  // exactly what was loaded; hashed into manifests

  std::uint64_t require_seed() const {
    if (!seed) throw std::runtime_error("config: a seed is required (config \"seed\" or --seed)");
    return *seed;
  }
};

namespace detail {
template <typename T>
void read_if(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}
}  // namespace detail

inline ExperimentConfig parse_config(const nlohmann::json& j) {
  ExperimentConfig c;
  c.raw = j;

  if (j.contains("data")) {
    const auto& d = j.at("data");
    detail::read_if(d, "models", c.models_path);
    detail::read_if(d, "questions", c.questions_path);
    detail::read_if(d, "responses", c.responses_path);
  }
  if (j.contains("target_ranking")) c.target_path = j.at("target_ranking").get<std::string>();
  if (j.contains("exclude_benchmarks"))
    c.exclude_benchmarks = j.at("exclude_benchmarks").get<std::vector<std::string>>();
  detail::read_if(j, "exclude_models", c.exclude_models);

  if (j.contains("split")) {
    const auto& s = j.at("split");
    SplitSpec spec;
    spec.type = s.at("type").get<std::string>();
    if (spec.type == "size") spec.threshold_params = s.at("threshold_params").get<std::uint64_t>();
    else if (spec.type == "random") spec.holdout_fraction = s.at("holdout_fraction").get<double>();
    else if (spec.type == "file") spec.path = s.at("path").get<std::string>();
    else throw std::runtime_error("config: split.type must be size, random or file");
    c.split = spec;
  }

  if (j.contains("method")) {
    const auto& m = j.at("method");
    detail::read_if(m, "name", c.method_name);
    if (m.contains("variant")) c.loss.variant = ltr::parse_variant(m.at("variant").get<std::string>());
    detail::read_if(m, "sigma", c.loss.sigma);
    detail::read_if(m, "margin", c.loss.margin);
    detail::read_if(m, "mu", c.loss.mu);
    detail::read_if(m, "learning_rate", c.trainer.learning_rate);
    detail::read_if(m, "batch_size", c.trainer.batch_size);
    detail::read_if(m, "epochs", c.trainer.epochs);
    detail::read_if(m, "weight_decay", c.trainer.weight_decay);
    detail::read_if(m, "init_scale", c.trainer.init_scale);
  }

  if (j.contains("metabench")) {
    const auto& m = j.at("metabench");
    detail::read_if(m, "k_grid", c.metabench.k_grid);
    detail::read_if(m, "candidates_per_k", c.metabench.candidates_per_k);
    detail::read_if(m, "folds", c.metabench.folds);
    detail::read_if(m, "min_variance", c.metabench.min_variance);
    detail::read_if(m, "max_easy_mean", c.metabench.max_easy_mean);
    detail::read_if(m, "min_point_biserial", c.metabench.min_point_biserial);
  }
  if (j.contains("tinybenchmarks")) {
    const auto& t = j.at("tinybenchmarks");
    detail::read_if(t, "n_anchors", c.tinybench.n_anchors);
    detail::read_if(t, "max_iterations", c.tinybench.max_iterations);
    detail::read_if(t, "use_gp_irt", c.tinybench.use_gp_irt);
    detail::read_if(t, "gp_mix", c.tinybench.gp_mix);
  }

  if (j.contains("sweep")) {
    const auto& s = j.at("sweep");
    detail::read_if(s, "axis", c.sweep.axis);
    detail::read_if(s, "step", c.sweep.step);
    if (s.contains("variants")) {
      for (const auto& v : s.at("variants"))
        c.sweep.variants.push_back(ltr::parse_variant(v.get<std::string>()));
    }
  }

  if (j.contains("synth")) {
    const auto& s = j.at("synth");
    detail::read_if(s, "n_models", c.synth.n_models);
    detail::read_if(s, "n_questions", c.synth.n_questions);
    detail::read_if(s, "planted_fraction", c.synth.planted_fraction);
    detail::read_if(s, "noise_sd", c.synth.noise_sd);
    detail::read_if(s, "theta_sd", c.synth.theta_sd);
    detail::read_if(s, "log_a_sd", c.synth.log_a_sd);
    detail::read_if(s, "b_sd", c.synth.b_sd);
  }

  if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
  detail::read_if(j, "out", c.out_dir);
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(path + ": cannot open config");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(path + ": invalid JSON: " + e.what());
  }
  try {
    return parse_config(j);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(path + ": bad config: " + e.what());
  }
}

}  // namespace benchalign::cli
