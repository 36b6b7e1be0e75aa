#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "benchalign/dataset.hpp"
#include "benchalign/irt.hpp"
#include "benchalign/random.hpp"
#include "benchalign/scoring.hpp"

namespace benchalign::baselines {

/// Everything a baseline emits besides its ranking: the item ids it selected
/// and the per-model predicted scores the ranking was derived from.
struct BaselineArtifacts {
  std::vector<std::string> selected_question_ids;
  std::map<std::string, double> test_scores;
  Ranking ranking;
};

// ---------------------------------------------------------------------------
// Random task baseline
// ---------------------------------------------------------------------------

inline constexpr const char* kTaskSeparator = " \xE2\x80\x93 ";  // " – " (en dash)

/// Catalog of "benchmark – task" entries; IFEval tasks are never offered.
struct TaskCatalog {
  std::vector<std::string> entries;  // unique, sorted ascending
};

inline TaskCatalog build_task_catalog(const ResponseMatrix& m) {
  std::set<std::string> set;
  for (const auto& q : m.questions) {
    if (q.benchmark == "IFEval") continue;
    set.insert(q.benchmark + kTaskSeparator + q.task);
  }
  TaskCatalog c;
  c.entries.assign(set.begin(), set.end());
  return c;
}

struct RandomBaselineResult {
  std::string selected_entry;
  std::vector<std::string> question_ids;
  std::map<std::string, double> scores;
  Ranking ranking;
};

/// Reproducible "pick one task at random": the sorted catalog entries are
/// joined with newlines, hashed (FNV-1a 64), expanded through one splitmix64
/// step, and the result modulo the catalog size selects the task. Models are
/// then ranked by mean accuracy on that task's questions.
inline RandomBaselineResult random_task_ranking(const ResponseMatrix& dataset,
                                                const TaskCatalog& catalog) {
  std::vector<std::string> entries = catalog.entries;
  std::sort(entries.begin(), entries.end());
  entries.erase(std::unique(entries.begin(), entries.end()), entries.end());
  if (entries.empty()) throw std::invalid_argument("random_task_ranking: empty catalog");

  std::string joined;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (i) joined += '\n';
    joined += entries[i];
  }
  const std::uint64_t value = splitmix64_once(fnv1a64(joined));
  const std::size_t index = static_cast<std::size_t>(value % entries.size());

  RandomBaselineResult r;
  r.selected_entry = entries[index];
  std::vector<std::size_t> cols;
  for (std::size_t j = 0; j < dataset.n_questions(); ++j) {
    const auto& q = dataset.questions[j];
    if (q.benchmark + kTaskSeparator + q.task == r.selected_entry) {
      cols.push_back(j);
      r.question_ids.push_back(q.question_id);
    }
  }
  if (cols.empty())
    throw std::runtime_error("random_task_ranking: selected task '" + r.selected_entry +
                             "' has no questions in the dataset");
  for (std::size_t i = 0; i < dataset.n_models(); ++i) {
    double s = 0.0;
    for (const std::size_t c : cols) s += dataset.at(i, c);
    r.scores[dataset.models[i].model_id] = s / static_cast<double>(cols.size());
  }
  r.ranking = rank_models(r.scores);
  return r;
}

// ---------------------------------------------------------------------------
// Pinned regressor: degree-3 polynomial ridge on standardized inputs
// ---------------------------------------------------------------------------

/// Least squares over all monomials of total degree <= 3 in the standardized
/// inputs, with an L2 penalty of 1e-3 (sum-of-squares form) on every
/// non-intercept coefficient. Small and deterministic; solved by Gaussian
/// elimination on the normal equations.
class PolyRidge {
 public:
  explicit PolyRidge(std::size_t degree = 3, double lambda = 1e-3)
      : degree_(degree), lambda_(lambda) {}

  void fit(std::span<const std::vector<double>> rows, std::span<const double> y) {
    if (rows.empty() || rows.size() != y.size())
      throw std::invalid_argument("PolyRidge::fit: bad training data");
    dim_ = rows[0].size();
    exponents_ = monomials(dim_, degree_);
    standardize_init(rows);

    const std::size_t p = exponents_.size();
    std::vector<double> ata(p * p, 0.0), aty(p, 0.0);
    std::vector<double> phi(p);
    for (std::size_t n = 0; n < rows.size(); ++n) {
      expand(rows[n], phi);
      for (std::size_t i = 0; i < p; ++i) {
        aty[i] += phi[i] * y[n];
        for (std::size_t j = i; j < p; ++j) ata[i * p + j] += phi[i] * phi[j];
      }
    }
    for (std::size_t i = 0; i < p; ++i) {
      for (std::size_t j = 0; j < i; ++j) ata[i * p + j] = ata[j * p + i];
    }
    for (std::size_t i = 1; i < p; ++i) ata[i * p + i] += lambda_;  // intercept unpenalized
    coef_ = solve(ata, aty, p);
  }

  double predict(std::span<const double> x) const {
    if (coef_.empty()) throw std::logic_error("PolyRidge::predict before fit");
    if (x.size() != dim_) throw std::invalid_argument("PolyRidge::predict: dimension mismatch");
    std::vector<double> phi(exponents_.size());
    expand(x, phi);
    double s = 0.0;
    for (std::size_t i = 0; i < phi.size(); ++i) s += coef_[i] * phi[i];
    return s;
  }

  const std::vector<double>& coefficients() const { return coef_; }

 private:
  /// Exponent tuples of all monomials with total degree <= `degree`,
  /// enumerated by total degree then lexicographically.
  static std::vector<std::vector<unsigned>> monomials(std::size_t dim, std::size_t degree) {
    std::vector<std::vector<unsigned>> out;
    if (dim == 0) return out;
    std::vector<unsigned> tmp(dim, 0);
    const auto gen = [&](auto&& self, std::size_t pos, unsigned remaining) -> void {
      if (pos + 1 == dim) {
        tmp[pos] = remaining;
        out.push_back(tmp);
        return;
      }
      for (unsigned e = 0; e <= remaining; ++e) {
        tmp[pos] = e;
        self(self, pos + 1, remaining - e);
      }
    };
    for (unsigned total = 0; total <= degree; ++total) gen(gen, 0, total);
    return out;
  }

  void standardize_init(std::span<const std::vector<double>> rows) {
    mean_.assign(dim_, 0.0);
    sd_.assign(dim_, 0.0);
    for (const auto& r : rows) {
      for (std::size_t d = 0; d < dim_; ++d) mean_[d] += r[d];
    }
    for (std::size_t d = 0; d < dim_; ++d) mean_[d] /= static_cast<double>(rows.size());
    for (const auto& r : rows) {
      for (std::size_t d = 0; d < dim_; ++d) sd_[d] += (r[d] - mean_[d]) * (r[d] - mean_[d]);
    }
    for (std::size_t d = 0; d < dim_; ++d) {
      sd_[d] = std::sqrt(sd_[d] / static_cast<double>(rows.size()));
      if (sd_[d] == 0.0) sd_[d] = 1.0;  // constant input, standardizes to 0
    }
  }

  void expand(std::span<const double> x, std::vector<double>& phi) const {
    std::vector<double> z(dim_);
    for (std::size_t d = 0; d < dim_; ++d) z[d] = (x[d] - mean_[d]) / sd_[d];
    for (std::size_t i = 0; i < exponents_.size(); ++i) {
      double v = 1.0;
      for (std::size_t d = 0; d < dim_; ++d) {
        for (unsigned e = 0; e < exponents_[i][d]; ++e) v *= z[d];
      }
      phi[i] = v;
    }
  }

  static std::vector<double> solve(std::vector<double> a, std::vector<double> b, std::size_t n) {
    // Gaussian elimination with partial pivoting
    for (std::size_t col = 0; col < n; ++col) {
      std::size_t pivot = col;
      for (std::size_t r = col + 1; r < n; ++r) {
        if (std::abs(a[r * n + col]) > std::abs(a[pivot * n + col])) pivot = r;
      }
      if (std::abs(a[pivot * n + col]) < 1e-300)
        throw std::runtime_error("PolyRidge: singular normal equations");
      if (pivot != col) {
        for (std::size_t c = 0; c < n; ++c) std::swap(a[col * n + c], a[pivot * n + c]);
        std::swap(b[col], b[pivot]);
      }
      for (std::size_t r = col + 1; r < n; ++r) {
        const double f = a[r * n + col] / a[col * n + col];
        if (f == 0.0) continue;
        for (std::size_t c = col; c < n; ++c) a[r * n + c] -= f * a[col * n + c];
        b[r] -= f * b[col];
      }
    }
    std::vector<double> x(n);
    for (std::size_t ri = n; ri-- > 0;) {
      double s = b[ri];
      for (std::size_t c = ri + 1; c < n; ++c) s -= a[ri * n + c] * x[c];
      x[ri] = s / a[ri * n + ri];
    }
    return x;
  }

  std::size_t degree_;
  double lambda_;
  std::size_t dim_ = 0;
  std::vector<std::vector<unsigned>> exponents_;
  std::vector<double> mean_, sd_, coef_;
};

// ---------------------------------------------------------------------------
// MetaBench-style distillation
// ---------------------------------------------------------------------------

struct MetabenchConfig {
  std::vector<std::size_t> k_grid{500, 1000, 1500};
  std::size_t candidates_per_k = 20;
  std::size_t folds = 5;
  std::uint64_t seed = 0;
  double min_variance = 0.01;
  double max_easy_mean = 0.95;
  double min_point_biserial = 0.1;
  irt::IrtFitConfig irt;
};

/// Item filter computed on training models only: keeps items with variance
/// >= 0.01, mean accuracy <= 0.95 and point-biserial correlation to the
/// benchmark total score >= 0.1. Returns retained column indices.
inline std::vector<std::size_t> metabench_preprocess(const irt::BinaryMatrix& train,
                                                     const MetabenchConfig& cfg = {}) {
  if (train.rows == 0 || train.cols == 0)
    throw std::invalid_argument("metabench_preprocess: empty matrix");
  const double n = static_cast<double>(train.rows);
  std::vector<double> total(train.rows, 0.0);
  for (std::size_t r = 0; r < train.rows; ++r) {
    for (std::size_t c = 0; c < train.cols; ++c) total[r] += train.at(r, c);
    total[r] /= static_cast<double>(train.cols);
  }
  double tmean = 0.0;
  for (const double t : total) tmean += t;
  tmean /= n;
  double tvar = 0.0;
  for (const double t : total) tvar += (t - tmean) * (t - tmean);

  std::vector<std::size_t> retained;
  for (std::size_t c = 0; c < train.cols; ++c) {
    double mean = 0.0;
    for (std::size_t r = 0; r < train.rows; ++r) mean += train.at(r, c);
    mean /= n;
    const double variance = mean * (1.0 - mean);
    if (variance < cfg.min_variance) continue;
    if (mean > cfg.max_easy_mean) continue;
    double cov = 0.0;
    for (std::size_t r = 0; r < train.rows; ++r)
      cov += (train.at(r, c) - mean) * (total[r] - tmean);
    const double denom = std::sqrt(variance * n * tvar);
    const double pb = denom > 0.0 ? cov / denom : 0.0;
    if (pb < cfg.min_point_biserial) continue;
    retained.push_back(c);
  }
  if (retained.empty()) throw std::runtime_error("metabench_preprocess: all items dropped");
  return retained;
}

struct DistillationResult {
  std::vector<std::size_t> selected_items;  // column indices into the benchmark
  std::vector<double> coefficients;         // final regressor, full training fit
  double cv_rmse = 0.0;
  std::vector<double> predicted_scores;     // per training model
};

namespace detail {

inline std::vector<double> subtest_scores(const irt::BinaryMatrix& m,
                                          std::span<const std::size_t> items) {
  std::vector<double> s(m.rows, 0.0);
  for (std::size_t r = 0; r < m.rows; ++r) {
    for (const std::size_t c : items) s[r] += m.at(r, c);
    s[r] /= static_cast<double>(items.size());
  }
  return s;
}

/// Pooled out-of-fold RMSE of the pinned regressor on (x -> y) with a fixed
/// fold assignment.
inline double cv_rmse(std::span<const std::vector<double>> x, std::span<const double> y,
                      std::span<const std::size_t> fold_of, std::size_t folds) {
  double sq_sum = 0.0;
  for (std::size_t f = 0; f < folds; ++f) {
    std::vector<std::vector<double>> xt;
    std::vector<double> yt;
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (fold_of[i] != f) {
        xt.push_back(x[i]);
        yt.push_back(y[i]);
      }
    }
    PolyRidge reg;
    reg.fit(xt, yt);
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (fold_of[i] == f) {
        const double err = reg.predict(x[i]) - y[i];
        sq_sum += err * err;
      }
    }
  }
  return std::sqrt(sq_sum / static_cast<double>(x.size()));
}

}  // namespace detail

/// Cross-validated subset search: for each subset size k in the grid, draws
/// seeded candidate subsets of the retained items, regresses the subtest
/// score onto the full-benchmark score and keeps the candidate with minimum
/// five-fold CV RMSE. Ties keep the earlier candidate; a k larger than the
/// retained pool is skipped.
inline DistillationResult metabench_subsample(const irt::BinaryMatrix& train,
                                              std::span<const std::size_t> retained,
                                              std::span<const double> full_scores,
                                              const MetabenchConfig& cfg) {
  if (full_scores.size() != train.rows)
    throw std::invalid_argument("metabench_subsample: score length mismatch");
  if (train.rows < cfg.folds)
    throw std::invalid_argument("metabench_subsample: fewer training models than folds");
  if (retained.empty()) throw std::invalid_argument("metabench_subsample: no retained items");

  SplitMix64 rng(cfg.seed);
  // fold assignment first in the stream, then the candidate draws
  std::vector<std::size_t> order(train.rows);
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);
  std::vector<std::size_t> fold_of(train.rows);
  for (std::size_t i = 0; i < order.size(); ++i)
    fold_of[order[i]] = i * cfg.folds / train.rows;

  std::vector<double> y(full_scores.begin(), full_scores.end());
  bool any_k = false;
  double best_rmse = 0.0;
  std::vector<std::size_t> best_items;
  for (const std::size_t k : cfg.k_grid) {
    if (k == 0 || k > retained.size()) continue;
    any_k = true;
    for (std::size_t cand = 0; cand < cfg.candidates_per_k; ++cand) {
      const std::vector<std::size_t> picks = rng.sample_indices(retained.size(), k);
      std::vector<std::size_t> items;
      items.reserve(k);
      for (const std::size_t p : picks) items.push_back(retained[p]);
      const std::vector<double> sub = detail::subtest_scores(train, items);
      std::vector<std::vector<double>> x(train.rows, std::vector<double>(1));
      for (std::size_t r = 0; r < train.rows; ++r) x[r][0] = sub[r];
      const double rmse = detail::cv_rmse(x, y, fold_of, cfg.folds);
      if (best_items.empty() || rmse < best_rmse) {
        best_rmse = rmse;
        best_items = std::move(items);
      }
    }
  }
  if (!any_k)
    throw std::runtime_error("metabench_subsample: every k in the grid exceeds the item pool");

  DistillationResult result;
  result.selected_items = std::move(best_items);
  result.cv_rmse = best_rmse;
  const std::vector<double> sub = detail::subtest_scores(train, result.selected_items);
  std::vector<std::vector<double>> x(train.rows, std::vector<double>(1));
  for (std::size_t r = 0; r < train.rows; ++r) x[r][0] = sub[r];
  PolyRidge reg;
  reg.fit(x, y);
  result.coefficients = reg.coefficients();
  result.predicted_scores.resize(train.rows);
  for (std::size_t r = 0; r < train.rows; ++r)
    result.predicted_scores[r] = reg.predict(x[r]);
  return result;
}

namespace detail {

struct BenchmarkView {
  std::string name;
  std::vector<std::size_t> cols;  // dataset column indices, file order
};

inline std::vector<BenchmarkView> benchmark_views(const ResponseMatrix& m) {
  std::map<std::string, std::vector<std::size_t>> by_name;
  for (std::size_t j = 0; j < m.n_questions(); ++j)
    by_name[m.questions[j].benchmark].push_back(j);
  std::vector<BenchmarkView> out;
  for (auto& [name, cols] : by_name) out.push_back({name, std::move(cols)});
  return out;  // std::map iterates in benchmark-name order
}

inline std::vector<std::size_t> rows_of(const ResponseMatrix& m,
                                        std::span<const std::string> ids) {
  const auto midx = m.model_index();
  std::vector<std::size_t> rows;
  rows.reserve(ids.size());
  for (const auto& id : ids) {
    const auto it = midx.find(id);
    if (it == midx.end())
      throw std::invalid_argument("split references model '" + id + "' not in dataset");
    rows.push_back(it->second);
  }
  return rows;
}

inline irt::BinaryMatrix submatrix(const ResponseMatrix& m, std::span<const std::size_t> rows,
                                   std::span<const std::size_t> cols) {
  irt::BinaryMatrix out;
  out.rows = rows.size();
  out.cols = cols.size();
  out.values.reserve(rows.size() * cols.size());
  for (const std::size_t r : rows) {
    for (const std::size_t c : cols) out.values.push_back(m.at(r, c));
  }
  return out;
}

inline std::uint64_t stage_seed(std::uint64_t base, const std::string& benchmark) {
  return splitmix64_once(base ^ fnv1a64(benchmark));
}

}  // namespace detail

/// Full MetaBench-style pipeline over a split. Per benchmark: filter items on
/// the training models, pick a distilled subset by CV, fit the 2PL model on
/// it, estimate abilities for everyone, and regress (ability, subtest score)
/// onto the full-benchmark score. The final model score is the unweighted
/// mean of the per-benchmark predictions; the ranking covers the test side.
inline BaselineArtifacts metabench_rank(const ResponseMatrix& dataset,
                                        std::span<const std::string> train_ids,
                                        std::span<const std::string> test_ids,
                                        const MetabenchConfig& cfg) {
  const auto train_rows = detail::rows_of(dataset, train_ids);
  const auto test_rows = detail::rows_of(dataset, test_ids);
  const auto benchmarks = detail::benchmark_views(dataset);

  BaselineArtifacts result;
  std::map<std::string, double> sums;
  for (const auto& id : test_ids) sums[id] = 0.0;

  for (const auto& bench : benchmarks) {
    const irt::BinaryMatrix train = detail::submatrix(dataset, train_rows, bench.cols);
    MetabenchConfig stage_cfg = cfg;
    stage_cfg.seed = detail::stage_seed(cfg.seed, bench.name);
    const std::vector<std::size_t> retained = metabench_preprocess(train, stage_cfg);

    std::vector<double> full_scores(train.rows, 0.0);
    for (std::size_t r = 0; r < train.rows; ++r) {
      for (std::size_t c = 0; c < train.cols; ++c) full_scores[r] += train.at(r, c);
      full_scores[r] /= static_cast<double>(train.cols);
    }
    const DistillationResult dist =
        metabench_subsample(train, retained, full_scores, stage_cfg);

    std::vector<std::size_t> selected_cols;
    selected_cols.reserve(dist.selected_items.size());
    for (const std::size_t c : dist.selected_items) {
      selected_cols.push_back(bench.cols[c]);
      result.selected_question_ids.push_back(dataset.questions[bench.cols[c]].question_id);
    }

    const irt::BinaryMatrix train_sel = detail::submatrix(dataset, train_rows, selected_cols);
    const irt::FitResult fit = irt::fit_2pl(train_sel, stage_cfg.irt);

    const auto features_of = [&](std::size_t dataset_row) {
      std::vector<std::uint8_t> resp(selected_cols.size());
      for (std::size_t c = 0; c < selected_cols.size(); ++c)
        resp[c] = dataset.at(dataset_row, selected_cols[c]);
      const irt::AbilityEstimate ab = irt::map_ability(resp, fit.items);
      double sub = 0.0;
      for (const auto v : resp) sub += v;
      sub /= static_cast<double>(resp.size());
      return std::vector<double>{ab.theta, sub};
    };

    std::vector<std::vector<double>> x_train(train_rows.size());
    for (std::size_t i = 0; i < train_rows.size(); ++i) x_train[i] = features_of(train_rows[i]);
    PolyRidge reg;
    reg.fit(x_train, full_scores);

    for (std::size_t i = 0; i < test_rows.size(); ++i) {
      sums[std::string(test_ids[i])] += reg.predict(features_of(test_rows[i]));
    }
  }

  for (auto& [id, s] : sums) s /= static_cast<double>(benchmarks.size());
  result.test_scores = std::move(sums);
  result.ranking = rank_models(result.test_scores);
  return result;
}

// ---------------------------------------------------------------------------
// TinyBenchmarks-style anchor estimation
// ---------------------------------------------------------------------------

struct TinybenchConfig {
  std::size_t n_anchors = 100;
  std::size_t max_iterations = 50;
  std::uint64_t seed = 0;
  bool use_gp_irt = false;
  double gp_mix = 0.5;
  irt::IrtFitConfig irt;
};

namespace detail {

/// Columns bit-packed for fast Hamming distances.
struct PackedColumns {
  std::size_t n_items = 0;
  std::size_t words_per_item = 0;
  std::vector<std::uint64_t> bits;

  static PackedColumns from(const irt::BinaryMatrix& m) {
    PackedColumns p;
    p.n_items = m.cols;
    p.words_per_item = (m.rows + 63) / 64;
    p.bits.assign(p.n_items * p.words_per_item, 0);
    for (std::size_t c = 0; c < m.cols; ++c) {
      for (std::size_t r = 0; r < m.rows; ++r) {
        if (m.at(r, c))
          p.bits[c * p.words_per_item + r / 64] |= (std::uint64_t{1} << (r % 64));
      }
    }
    return p;
  }

  std::size_t hamming(std::size_t a, std::size_t b) const {
    std::size_t d = 0;
    const std::uint64_t* pa = bits.data() + a * words_per_item;
    const std::uint64_t* pb = bits.data() + b * words_per_item;
    for (std::size_t w = 0; w < words_per_item; ++w)
      d += static_cast<std::size_t>(std::popcount(pa[w] ^ pb[w]));
    return d;
  }
};

}  // namespace detail

/// Seeded k-medoids over item correctness columns (Hamming distance on the
/// training models). Assignment ties go to the earlier medoid; a cluster left
/// empty is reseeded at the item farthest from all current medoids. Returns
/// one medoid item index per cluster, sorted ascending.
inline std::vector<std::size_t> tinybench_select_anchors(const irt::BinaryMatrix& train,
                                                         std::size_t n, std::uint64_t seed,
                                                         std::size_t max_iterations = 50) {
  if (n == 0) throw std::invalid_argument("tinybench_select_anchors: n must be positive");
  if (train.cols < n)
    throw std::runtime_error("tinybench_select_anchors: fewer than n usable items");
  const auto packed = detail::PackedColumns::from(train);
  const std::size_t n_items = train.cols;

  SplitMix64 rng(seed);
  std::vector<std::size_t> medoids = rng.sample_indices(n_items, n);

  std::vector<std::size_t> assign(n_items);
  for (std::size_t iter = 0; iter < max_iterations; ++iter) {
    // assignment
    for (std::size_t item = 0; item < n_items; ++item) {
      std::size_t best = 0;
      std::size_t best_d = packed.hamming(item, medoids[0]);
      for (std::size_t c = 1; c < n; ++c) {
        const std::size_t d = packed.hamming(item, medoids[c]);
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      assign[item] = best;
    }
    // medoid update
    std::vector<std::size_t> next = medoids;
    std::vector<std::vector<std::size_t>> members(n);
    for (std::size_t item = 0; item < n_items; ++item) members[assign[item]].push_back(item);
    for (std::size_t c = 0; c < n; ++c) {
      if (members[c].empty()) {
        // reseed at the item farthest from every current medoid
        std::size_t best_item = n_items;
        std::size_t best_d = 0;
        for (std::size_t item = 0; item < n_items; ++item) {
          std::size_t min_d = packed.hamming(item, medoids[0]);
          for (std::size_t o = 1; o < n; ++o)
            min_d = std::min(min_d, packed.hamming(item, medoids[o]));
          if (min_d > best_d) {
            best_d = min_d;
            best_item = item;
          }
        }
        if (best_item != n_items && best_d > 0) next[c] = best_item;
        continue;
      }
      std::size_t best_item = members[c][0];
      std::size_t best_cost = std::size_t(-1);
      for (const std::size_t cand : members[c]) {
        std::size_t cost = 0;
        for (const std::size_t other : members[c]) cost += packed.hamming(cand, other);
        if (cost < best_cost) {
          best_cost = cost;
          best_item = cand;
        }
      }
      next[c] = best_item;
    }
    if (next == medoids) break;
    medoids = std::move(next);
  }
  std::sort(medoids.begin(), medoids.end());
  medoids.erase(std::unique(medoids.begin(), medoids.end()), medoids.end());
  // duplicate medoids can only collapse when distinct columns are exhausted;
  // pad deterministically so exactly n anchors come back
  for (std::size_t item = 0; item < n_items && medoids.size() < n; ++item) {
    if (!std::binary_search(medoids.begin(), medoids.end(), item)) {
      medoids.insert(std::lower_bound(medoids.begin(), medoids.end(), item), item);
    }
  }
  return medoids;
}

/// TinyBenchmarks-style pipeline over a split: one global 2PL fit per
/// benchmark on the training models, a fixed anchor set per benchmark, then
/// per test model MAP ability from the anchor responses and a p-IRT (or
/// gp-IRT) estimate of the full-benchmark score. Final score is the mean
/// across benchmarks.
inline BaselineArtifacts tinybench_rank(const ResponseMatrix& dataset,
                                        std::span<const std::string> train_ids,
                                        std::span<const std::string> test_ids,
                                        const TinybenchConfig& cfg) {
  const auto train_rows = detail::rows_of(dataset, train_ids);
  const auto test_rows = detail::rows_of(dataset, test_ids);
  const auto benchmarks = detail::benchmark_views(dataset);

  BaselineArtifacts result;
  std::map<std::string, double> sums;
  for (const auto& id : test_ids) sums[id] = 0.0;

  for (const auto& bench : benchmarks) {
    // usable = items with both responses among the training models
    std::vector<std::size_t> usable;
    for (const std::size_t c : bench.cols) {
      std::size_t ones = 0;
      for (const std::size_t r : train_rows) ones += dataset.at(r, c);
      if (ones > 0 && ones < train_rows.size()) usable.push_back(c);
    }
    if (usable.size() < cfg.n_anchors)
      throw std::runtime_error("tinybench_rank: benchmark '" + bench.name + "' has only " +
                               std::to_string(usable.size()) + " usable items, need " +
                               std::to_string(cfg.n_anchors));

    const irt::BinaryMatrix train = detail::submatrix(dataset, train_rows, usable);
    const irt::FitResult fit = irt::fit_2pl(train, cfg.irt);
    const std::vector<std::size_t> anchors_local = tinybench_select_anchors(
        train, cfg.n_anchors, detail::stage_seed(cfg.seed, bench.name), cfg.max_iterations);

    std::vector<std::uint8_t> is_anchor(usable.size(), 0);
    for (const std::size_t a : anchors_local) is_anchor[a] = 1;
    std::vector<irt::ItemParams> anchor_items, unseen_items;
    std::vector<std::size_t> anchor_cols;
    for (std::size_t i = 0; i < usable.size(); ++i) {
      if (is_anchor[i]) {
        anchor_items.push_back(fit.items[i]);
        anchor_cols.push_back(usable[i]);
        result.selected_question_ids.push_back(dataset.questions[usable[i]].question_id);
      } else {
        unseen_items.push_back(fit.items[i]);
      }
    }

    for (std::size_t t = 0; t < test_rows.size(); ++t) {
      std::vector<std::uint8_t> resp(anchor_cols.size());
      double seen_acc = 0.0;
      for (std::size_t a = 0; a < anchor_cols.size(); ++a) {
        resp[a] = dataset.at(test_rows[t], anchor_cols[a]);
        seen_acc += resp[a];
      }
      seen_acc /= static_cast<double>(anchor_cols.size());
      const irt::AbilityEstimate ab = irt::map_ability(resp, anchor_items);
      double est = irt::p_irt(resp, unseen_items, ab.theta);
      if (cfg.use_gp_irt) est = irt::gp_irt(est, seen_acc, cfg.gp_mix);
      sums[std::string(test_ids[t])] += est;
    }
  }

  for (auto& [id, s] : sums) s /= static_cast<double>(benchmarks.size());
  result.test_scores = std::move(sums);
  result.ranking = rank_models(result.test_scores);
  return result;
}

/// Ranking by plain mean accuracy over the included questions; the
/// no-learning ablation.
inline BaselineArtifacts no_ltr_rank(const ResponseMatrix& dataset,
                                     std::span<const std::string> test_ids) {
  const auto test_rows = detail::rows_of(dataset, test_ids);
  BaselineArtifacts result;
  for (const auto& q : dataset.questions) result.selected_question_ids.push_back(q.question_id);
  for (std::size_t t = 0; t < test_rows.size(); ++t) {
    result.test_scores[std::string(test_ids[t])] =
        mean_accuracy_score(dataset.row(test_rows[t]));
  }
  result.ranking = rank_models(result.test_scores);
  return result;
}

}  // namespace benchalign::baselines
