#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "benchalign/csv.hpp"

namespace benchalign {

/// A benchmark as a list of (question, weight) pairs. `normalized` records
/// whether the weights can be normalized to sum 1 (raw weights are always
/// retained; normalization happens at scoring time).
struct WeightedBenchmark {
  std::vector<std::string> question_ids;
  std::vector<double> weights;
  bool normalized = false;

  double weight_sum() const {
    return std::accumulate(weights.begin(), weights.end(), 0.0);
  }
};

inline WeightedBenchmark make_weighted_benchmark(std::vector<std::string> question_ids,
                                                 std::vector<double> weights) {
  if (question_ids.size() != weights.size())
    throw std::invalid_argument("weighted benchmark: id/weight length mismatch");
  WeightedBenchmark b{std::move(question_ids), std::move(weights), false};
  b.normalized = b.weight_sum() > 0.0;
  return b;
}

/// Total order over models induced by real-valued scores; rank 1 is best,
/// ties broken by ascending model_id.
struct Ranking {
  std::map<std::string, int> ranks;
  std::map<std::string, double> scores;

  std::size_t size() const { return ranks.size(); }

  /// Model ids ordered best first.
  std::vector<std::string> order() const {
    std::vector<std::string> ids(ranks.size());
    for (const auto& [id, rank] : ranks) ids[static_cast<std::size_t>(rank - 1)] = id;
    return ids;
  }
};

/// Unnormalized linear score w . x.
template <typename XRange>
double raw_score(const XRange& x, std::span<const double> weights) {
  if (std::size(x) != weights.size())
    throw std::invalid_argument("raw_score: length mismatch");
  double s = 0.0;
  std::size_t k = 0;
  for (const auto v : x) s += weights[k++] * static_cast<double>(v);
  return s;
}

/// Normalized weighted benchmark score: sum_q (w_q / sum w) x_q. Equals plain
/// accuracy when the weights are uniform. The raw weight sum must be nonzero.
template <typename XRange>
double weighted_score(const XRange& x, const WeightedBenchmark& bench) {
  if (std::size(x) != bench.weights.size())
    throw std::invalid_argument("weighted_score: feature/benchmark length mismatch");
  const double wsum = bench.weight_sum();
  if (wsum == 0.0) throw std::domain_error("weighted_score: weight sum is zero");
  return raw_score(x, bench.weights) / wsum;
}

/// Arithmetic mean of the entries; the no-learning aggregate score.
template <typename XRange>
double mean_accuracy_score(const XRange& x) {
  if (std::size(x) == 0) throw std::invalid_argument("mean_accuracy_score: empty vector");
  double s = 0.0;
  for (const auto v : x) s += static_cast<double>(v);
  return s / static_cast<double>(std::size(x));
}

/// Ranks models by descending score, ties by ascending model_id. NaN scores
/// are rejected.
inline Ranking rank_models(const std::map<std::string, double>& scores) {
  if (scores.empty()) throw std::invalid_argument("rank_models: no models");
  std::vector<std::pair<std::string, double>> v;
  v.reserve(scores.size());
  for (const auto& [id, s] : scores) {
    if (std::isnan(s)) throw std::domain_error("rank_models: NaN score for '" + id + "'");
    v.emplace_back(id, s);
  }
  std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  Ranking r;
  for (std::size_t i = 0; i < v.size(); ++i) {
    r.ranks[v[i].first] = static_cast<int>(i + 1);
    r.scores[v[i].first] = v[i].second;
  }
  return r;
}

/// CSV export: question_id,weight,normalized_weight. The normalized column is
/// left empty when the raw weights cannot be normalized (sum <= 0).
inline void save_weighted_benchmark(const WeightedBenchmark& bench, const std::string& path) {
  const double wsum = bench.weight_sum();
  const bool can_normalize = wsum > 0.0;
  auto out = open_output(path);
  out << "question_id,weight,normalized_weight\n";
  for (std::size_t i = 0; i < bench.question_ids.size(); ++i) {
    out << csv_quote(bench.question_ids[i]) << ',' << format_double(bench.weights[i]) << ',';
    if (can_normalize) out << format_double(bench.weights[i] / wsum);
    out << '\n';
  }
}

inline WeightedBenchmark load_weighted_benchmark(const std::string& path) {
  CsvReader r(path);
  r.expect_header({"question_id", "weight", "normalized_weight"});
  std::vector<std::string> ids;
  std::vector<double> weights;
  std::set<std::string> seen;
  std::vector<std::string> f;
  while (r.next(f)) {
    if (f.size() != 3) throw r.error("expected 3 fields");
    if (f[0].empty()) throw r.error("empty question_id");
    if (!seen.insert(f[0]).second) throw r.error("duplicate question_id '" + f[0] + "'");
    ids.push_back(f[0]);
    weights.push_back(parse_double(r, f[1], "weight"));
  }
  if (ids.empty()) throw std::runtime_error(path + ": empty benchmark");
  return make_weighted_benchmark(std::move(ids), std::move(weights));
}

inline void save_ranking(const Ranking& r, const std::string& path) {
  auto out = open_output(path);
  out << "model_id,rank\n";
  for (const auto& id : r.order()) out << csv_quote(id) << ',' << r.ranks.at(id) << '\n';
}

inline void save_model_scores(const std::map<std::string, double>& scores,
                              const std::string& path) {
  auto out = open_output(path);
  out << "model_id,score\n";
  for (const auto& [id, s] : scores) out << csv_quote(id) << ',' << format_double(s) << '\n';
}

}  // namespace benchalign
