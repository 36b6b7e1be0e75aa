#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "benchalign/dataset.hpp"
#include "benchalign/scoring.hpp"

namespace benchalign {

struct EvalReport {
  double acc_pair = 0.0;
  double acc_pair_halfwidth = 0.0;
  double spearman = 0.0;
  double spearman_halfwidth = 0.0;
  std::int64_t n_models = 0;
  std::int64_t n_pairs = 0;
};

namespace detail {

/// Aligned rank vectors over the common model set; throws on any mismatch.
inline std::pair<std::vector<int>, std::vector<int>> aligned_ranks(const Ranking& predicted,
                                                                   const TargetRanking& target) {
  if (predicted.ranks.size() != target.ranks.size())
    throw std::invalid_argument("metrics: predicted and target model sets differ in size");
  std::vector<int> pred, targ;
  pred.reserve(predicted.ranks.size());
  targ.reserve(predicted.ranks.size());
  for (const auto& [id, pr] : predicted.ranks) {
    const auto it = target.ranks.find(id);
    if (it == target.ranks.end())
      throw std::invalid_argument("metrics: model '" + id + "' missing from target ranking");
    pred.push_back(pr);
    targ.push_back(it->second);
  }
  return {std::move(pred), std::move(targ)};
}

inline double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const std::size_t n = a.size();
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < n; ++i) { ma += a[i]; mb += b[i]; }
  ma /= n; mb /= n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0)
    throw std::domain_error("pearson: zero-variance input");
  return sab / std::sqrt(saa * sbb);
}

/// Average-rank (fractional) ranks of a value vector, high value = rank 1...
/// not needed here; ranks come in as integers. Kept for tie handling when raw
/// scores are correlated directly.
inline std::vector<double> fractional_ranks(const std::vector<double>& v) {
  const std::size_t n = v.size();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t below = 1, equal = 1;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      if (v[j] < v[i]) ++below;
      if (v[j] == v[i]) ++equal;
    }
    out[i] = below + (equal - 1) * 0.5;
  }
  return out;
}

}  // namespace detail

/// Fraction of unordered model pairs whose predicted orientation matches the
/// target orientation, with a 95% binomial half-width over the pair count.
inline std::pair<double, double> acc_pair(const Ranking& predicted, const TargetRanking& target) {
  const auto [pred, targ] = detail::aligned_ranks(predicted, target);
  const std::size_t k = pred.size();
  if (k < 2) throw std::invalid_argument("acc_pair: need at least 2 models");
  std::size_t agree = 0, total = 0;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) {
      ++total;
      if ((pred[i] < pred[j]) == (targ[i] < targ[j])) ++agree;
    }
  }
  const double p = static_cast<double>(agree) / static_cast<double>(total);
  const double halfwidth = 1.96 * std::sqrt(p * (1.0 - p) / static_cast<double>(total));
  return {p, halfwidth};
}

/// Spearman rank correlation between the two rank vectors (Pearson on ranks,
/// average-rank tie handling), with the Fisher-z delta-method 95% half-width
/// 1.96 (1 - rho^2) / sqrt(K - 3). The half-width needs K >= 4 and is
/// reported as 0 below that.
inline std::pair<double, double> spearman(const Ranking& predicted, const TargetRanking& target) {
  const auto [pred, targ] = detail::aligned_ranks(predicted, target);
  const std::size_t k = pred.size();
  if (k < 2) throw std::invalid_argument("spearman: need at least 2 models");
  std::vector<double> a(pred.begin(), pred.end());
  std::vector<double> b(targ.begin(), targ.end());
  const double rho = detail::pearson(detail::fractional_ranks(a), detail::fractional_ranks(b));
  double halfwidth = 0.0;
  if (k >= 4) halfwidth = 1.96 * (1.0 - rho * rho) / std::sqrt(static_cast<double>(k - 3));
  return {rho, halfwidth};
}

inline EvalReport evaluate(const Ranking& predicted, const TargetRanking& target) {
  EvalReport rep;
  const auto [acc, acc_hw] = acc_pair(predicted, target);
  const auto [rho, rho_hw] = spearman(predicted, target);
  rep.acc_pair = acc;
  rep.acc_pair_halfwidth = acc_hw;
  rep.spearman = rho;
  rep.spearman_halfwidth = rho_hw;
  rep.n_models = static_cast<std::int64_t>(predicted.ranks.size());
  rep.n_pairs = rep.n_models * (rep.n_models - 1) / 2;
  return rep;
}

inline nlohmann::json to_json(const EvalReport& r) {
  return nlohmann::json{{"acc_pair", r.acc_pair},
                        {"acc_pair_halfwidth", r.acc_pair_halfwidth},
                        {"spearman", r.spearman},
                        {"spearman_halfwidth", r.spearman_halfwidth},
                        {"n_models", r.n_models},
                        {"n_pairs", r.n_pairs}};
}

inline void save_eval_report(const EvalReport& r, const std::string& path) {
  auto out = open_output(path);
  out << to_json(r).dump(2) << '\n';
}

}  // namespace benchalign
