#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "benchalign/csv.hpp"
#include "benchalign/dataset.hpp"
#include "benchalign/metrics.hpp"
#include "benchalign/random.hpp"
#include "benchalign/scoring.hpp"

namespace benchalign::ltr {

enum class LossVariant { RankNet, LambdaRank, NdcgLoss1, NdcgLoss2, NdcgLoss2pp };

inline const char* variant_name(LossVariant v) {
  switch (v) {
    case LossVariant::RankNet: return "ranknet";
    case LossVariant::LambdaRank: return "lambdarank";
    case LossVariant::NdcgLoss1: return "ndcg_loss1";
    case LossVariant::NdcgLoss2: return "ndcg_loss2";
    case LossVariant::NdcgLoss2pp: return "ndcg_loss2pp";
  }
  return "?";
}

inline LossVariant parse_variant(const std::string& name) {
  if (name == "ranknet") return LossVariant::RankNet;
  if (name == "lambdarank") return LossVariant::LambdaRank;
  if (name == "ndcg_loss1") return LossVariant::NdcgLoss1;
  if (name == "ndcg_loss2") return LossVariant::NdcgLoss2;
  if (name == "ndcg_loss2pp") return LossVariant::NdcgLoss2pp;
  throw std::invalid_argument(
      "unknown loss variant '" + name +
      "' (expected ranknet, lambdarank, ndcg_loss1, ndcg_loss2 or ndcg_loss2pp)");
}

inline const std::vector<LossVariant>& all_variants() {
  static const std::vector<LossVariant> v{
      LossVariant::RankNet, LossVariant::LambdaRank, LossVariant::NdcgLoss1,
      LossVariant::NdcgLoss2, LossVariant::NdcgLoss2pp};
  return v;
}

struct LossConfig {
  LossVariant variant = LossVariant::RankNet;
  double sigma = 1.0;   // scale of the logistic; must be positive
  double margin = 0.0;  // separation margin m inside the logistic argument
  double mu = 10.0;     // ndcg_loss2pp mixing factor; ignored by other variants

  void validate() const {
    if (!(sigma > 0.0)) throw std::invalid_argument("loss config: sigma must be > 0");
    if (margin < 0.0) throw std::invalid_argument("loss config: margin must be >= 0");
    if (!(mu > 0.0)) throw std::invalid_argument("loss config: mu must be > 0");
  }
};

struct TrainConfig {
  double learning_rate = 1e-4;
  std::size_t batch_size = 256;  // pairs per batch
  std::size_t epochs = 100;
  std::uint64_t seed = 0;
  double weight_decay = 0.0;
  double init_scale = 0.01;

  void validate() const {
    if (!(learning_rate > 0.0)) throw std::invalid_argument("train config: learning_rate must be > 0");
    if (batch_size < 1) throw std::invalid_argument("train config: batch_size must be >= 1");
    if (init_scale < 0.0) throw std::invalid_argument("train config: init_scale must be >= 0");
  }
};

/// Oriented training pair: `preferred` has the strictly smaller target rank.
struct OrderedPair {
  std::size_t preferred;
  std::size_t other;
};

struct WeightVector {
  std::vector<std::string> question_ids;
  std::vector<double> weights;
};

struct AdamState {
  std::vector<double> first_moment;
  std::vector<double> second_moment;
  std::size_t step_count = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  explicit AdamState(std::size_t n) : first_moment(n, 0.0), second_moment(n, 0.0) {}
};

struct EpochStats {
  std::size_t epoch;  // 1-based
  double mean_loss;
  double train_acc_pair;
};

struct TrainResult {
  WeightVector weights;
  std::vector<EpochStats> trace;
};

// ---------------------------------------------------------------------------
// Pair generation and lambda-weight ingredients
// ---------------------------------------------------------------------------

/// One oriented pair per unordered model pair: (i, j) emitted iff
/// rank_i < rank_j. For a total order over K models this yields K(K-1)/2
/// pairs, in deterministic double-loop order.
inline std::vector<OrderedPair> generate_pairs(std::span<const int> ranks) {
  std::vector<OrderedPair> pairs;
  const std::size_t k = ranks.size();
  if (k > 1) pairs.reserve(k * (k - 1) / 2);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      if (ranks[i] < ranks[j]) pairs.push_back({i, j});
    }
  }
  return pairs;
}

inline std::vector<OrderedPair> generate_pairs(const TargetRanking& target,
                                               std::span<const std::string> model_ids) {
  std::vector<int> ranks;
  ranks.reserve(model_ids.size());
  for (const auto& id : model_ids) {
    const auto it = target.ranks.find(id);
    if (it == target.ranks.end())
      throw std::invalid_argument("generate_pairs: model '" + id + "' has no target rank");
    ranks.push_back(it->second);
  }
  return generate_pairs(ranks);
}

/// 1-based position of each item when scores are sorted descending, ties
/// broken by ascending index.
inline std::vector<std::size_t> current_rank_positions(std::span<const double> scores) {
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (std::isnan(scores[i])) throw std::domain_error("current_rank_positions: NaN score");
    order[i] = i;
  }
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  });
  std::vector<std::size_t> pos(n);
  for (std::size_t p = 0; p < n; ++p) pos[order[p]] = p + 1;
  return pos;
}

/// Logarithmic position discount D(k) = log2(1 + k); D(1) = 1.
inline double position_discount(double k) { return std::log2(1.0 + k); }

/// Graded relevance y_i = (K - r_i) / (K - 1), linear in rank, in [0, 1];
/// the single-model case degenerates to y = [1].
inline std::vector<double> relevance_labels(std::span<const int> ranks) {
  const std::size_t k = ranks.size();
  if (k == 0) return {};
  if (k == 1) return {1.0};
  std::vector<double> y(k);
  for (std::size_t i = 0; i < k; ++i)
    y[i] = static_cast<double>(k - static_cast<std::size_t>(ranks[i])) /
           static_cast<double>(k - 1);
  return y;
}

/// Linear NDCG gains G_i = y_i / maxDCG with maxDCG computed from y sorted
/// descending; all zero when maxDCG is zero.
inline std::vector<double> ndcg_gains(std::span<const double> y) {
  std::vector<double> sorted(y.begin(), y.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double max_dcg = 0.0;
  for (std::size_t k = 0; k < sorted.size(); ++k)
    max_dcg += sorted[k] / position_discount(static_cast<double>(k + 1));
  std::vector<double> g(y.size(), 0.0);
  if (max_dcg > 0.0) {
    for (std::size_t i = 0; i < y.size(); ++i) g[i] = y[i] / max_dcg;
  }
  return g;
}

/// Per-pair lambda weight. `i` is the preferred item of the pair; `positions`
/// are the current 1-based rank positions under the predicted scores.
inline double pair_weight(const LossConfig& cfg, std::span<const double> gains,
                          std::span<const std::size_t> positions, std::size_t i,
                          std::size_t j) {
  switch (cfg.variant) {
    case LossVariant::RankNet:
      return 1.0;
    case LossVariant::LambdaRank: {
      const double inv_di = 1.0 / position_discount(static_cast<double>(positions[i]));
      const double inv_dj = 1.0 / position_discount(static_cast<double>(positions[j]));
      return std::abs(gains[i] - gains[j]) * std::abs(inv_di - inv_dj);
    }
    case LossVariant::NdcgLoss1:
      return gains[i] / position_discount(static_cast<double>(positions[i]));
    case LossVariant::NdcgLoss2: {
      const std::size_t delta = positions[i] > positions[j] ? positions[i] - positions[j]
                                                            : positions[j] - positions[i];
      if (delta == 0) return 0.0;
      const double d = static_cast<double>(delta);
      return std::abs(gains[i] - gains[j]) *
             std::abs(1.0 / position_discount(d) - 1.0 / position_discount(d + 1.0));
    }
    case LossVariant::NdcgLoss2pp: {
      LossConfig two = cfg;
      two.variant = LossVariant::NdcgLoss2;
      LossConfig lam = cfg;
      lam.variant = LossVariant::LambdaRank;
      return cfg.mu * pair_weight(two, gains, positions, i, j) +
             pair_weight(lam, gains, positions, i, j);
    }
  }
  return 0.0;
}

namespace detail {
/// Numerically stable log(1 + exp(z)).
inline double softplus(double z) {
  return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
}
}  // namespace detail

/// Weighted pairwise logistic loss
///   w_ij * ln(1 + exp(-sigma * (yhat_i - yhat_j - margin))),
/// stable for arbitrarily large score gaps.
inline double pair_loss(const LossConfig& cfg, double yhat_i, double yhat_j, double w_ij) {
  return w_ij * detail::softplus(-cfg.sigma * (yhat_i - yhat_j - cfg.margin));
}

// ---------------------------------------------------------------------------
// Batched loss and gradient
// ---------------------------------------------------------------------------

/// Constants frozen at batch start: positions under the full training-set
/// scores and the resulting per-pair lambda weights (aligned to the batch).
/// Loss and gradient treat these as stop-gradients.
struct BatchContext {
  std::vector<std::size_t> positions;
  std::vector<double> pair_weights;
};

inline BatchContext make_batch_context(const LossConfig& cfg,
                                       std::span<const double> all_scores,
                                       std::span<const double> gains,
                                       std::span<const OrderedPair> batch) {
  BatchContext ctx;
  ctx.pair_weights.reserve(batch.size());
  if (cfg.variant == LossVariant::RankNet) {
    ctx.pair_weights.assign(batch.size(), 1.0);
    return ctx;
  }
  ctx.positions = current_rank_positions(all_scores);
  for (const auto& p : batch)
    ctx.pair_weights.push_back(pair_weight(cfg, gains, ctx.positions, p.preferred, p.other));
  return ctx;
}

namespace detail {

inline double dot(std::span<const double> w, std::span<const std::uint8_t> x) {
  double s = 0.0;
  for (std::size_t k = 0; k < w.size(); ++k) s += w[k] * x[k];
  return s;
}

/// Scores for the models touched by a batch, computed on demand from the
/// current weights.
class ScoreCache {
 public:
  ScoreCache(const ResponseMatrix& data, std::span<const double> weights)
      : data_(data), weights_(weights), scores_(data.n_models()), have_(data.n_models(), 0) {}

  double operator()(std::size_t model) {
    if (!have_[model]) {
      scores_[model] = dot(weights_, data_.row(model));
      have_[model] = 1;
    }
    return scores_[model];
  }

 private:
  const ResponseMatrix& data_;
  std::span<const double> weights_;
  std::vector<double> scores_;
  std::vector<std::uint8_t> have_;
};

/// Mean pair loss over the batch; when `gradient` is non-null it receives the
/// gradient of that mean w.r.t. the weights (lambda weights and positions
/// from `ctx` held constant).
inline double batch_step(const ResponseMatrix& data, std::span<const double> weights,
                         std::span<const OrderedPair> batch, const BatchContext& ctx,
                         const LossConfig& cfg, std::vector<double>* gradient) {
  if (batch.empty()) throw std::invalid_argument("ltr: empty batch");
  if (ctx.pair_weights.size() != batch.size())
    throw std::invalid_argument("ltr: batch context does not match batch");
  ScoreCache score(data, weights);
  std::vector<double> alpha;
  std::vector<std::uint8_t> seen;
  std::vector<std::size_t> touched;
  if (gradient) {
    alpha.assign(data.n_models(), 0.0);
    seen.assign(data.n_models(), 0);
    touched.reserve(2 * batch.size());
  }
  double loss_sum = 0.0;
  for (std::size_t p = 0; p < batch.size(); ++p) {
    const auto [i, j] = batch[p];
    const double w_ij = ctx.pair_weights[p];
    const double d = score(i) - score(j);
    loss_sum += pair_loss(cfg, score(i), score(j), w_ij);
    if (gradient) {
      // d/dd of softplus(-sigma (d - m)) = -sigma / (1 + exp(sigma (d - m)))
      const double z = cfg.sigma * (d - cfg.margin);
      const double coeff = w_ij * (-cfg.sigma / (1.0 + std::exp(z)));
      if (!seen[i]) { seen[i] = 1; touched.push_back(i); }
      if (!seen[j]) { seen[j] = 1; touched.push_back(j); }
      alpha[i] += coeff;
      alpha[j] -= coeff;
    }
  }
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  if (gradient) {
    gradient->assign(weights.size(), 0.0);
    for (const std::size_t m : touched) {
      const double a = alpha[m] * inv_b;
      if (a == 0.0) continue;
      const auto row = data.row(m);
      for (std::size_t q = 0; q < row.size(); ++q) (*gradient)[q] += a * row[q];
    }
  }
  return loss_sum * inv_b;
}

}  // namespace detail

inline double batch_loss(const ResponseMatrix& data, std::span<const double> weights,
                         std::span<const OrderedPair> batch, const BatchContext& ctx,
                         const LossConfig& cfg) {
  return detail::batch_step(data, weights, batch, ctx, cfg, nullptr);
}

inline std::vector<double> batch_gradient(const ResponseMatrix& data,
                                          std::span<const double> weights,
                                          std::span<const OrderedPair> batch,
                                          const BatchContext& ctx, const LossConfig& cfg) {
  std::vector<double> grad;
  detail::batch_step(data, weights, batch, ctx, cfg, &grad);
  return grad;
}

/// Bias-corrected Adam step; weight decay (when nonzero) enters as a plain L2
/// term added to the gradient.
inline void adam_update(AdamState& state, std::vector<double>& weights,
                        std::span<const double> gradient, const TrainConfig& cfg) {
  if (state.first_moment.size() != weights.size() || gradient.size() != weights.size())
    throw std::invalid_argument("adam_update: length mismatch");
  state.step_count += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step_count));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step_count));
  for (std::size_t k = 0; k < weights.size(); ++k) {
    double g = gradient[k];
    if (cfg.weight_decay != 0.0) g += cfg.weight_decay * weights[k];
    state.first_moment[k] = state.beta1 * state.first_moment[k] + (1.0 - state.beta1) * g;
    state.second_moment[k] = state.beta2 * state.second_moment[k] + (1.0 - state.beta2) * g * g;
    const double mhat = state.first_moment[k] / bc1;
    const double vhat = state.second_moment[k] / bc2;
    weights[k] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + state.epsilon);
  }
}

// ---------------------------------------------------------------------------
// Training loop and benchmark application
// ---------------------------------------------------------------------------

namespace detail {
inline std::vector<double> all_scores(const ResponseMatrix& data, std::span<const double> w) {
  std::vector<double> s(data.n_models());
  for (std::size_t m = 0; m < data.n_models(); ++m) s[m] = dot(w, data.row(m));
  return s;
}
}  // namespace detail

/// Trains the per-question weights against the target order.
///
/// Determinism contract: a single splitmix64 stream seeded with
/// `train_config.seed` is consumed in this order — first n_questions uniform
/// draws for the weight initialization in (-init_scale, +init_scale), then
/// one Fisher-Yates shuffle of the pair list per epoch. Identical inputs and
/// seed reproduce the returned weights bit for bit.
inline TrainResult train(const ResponseMatrix& data, const TargetRanking& target,
                         const LossConfig& loss_cfg, const TrainConfig& train_cfg) {
  loss_cfg.validate();
  train_cfg.validate();
  const std::size_t n_models = data.n_models();
  const std::size_t n_questions = data.n_questions();
  if (n_models < 2) throw std::invalid_argument("train: need at least 2 models");
  if (target.ranks.size() != n_models)
    throw std::invalid_argument("train: target ranking does not cover the model set");

  std::vector<int> ranks(n_models);
  for (std::size_t m = 0; m < n_models; ++m) {
    const auto it = target.ranks.find(data.models[m].model_id);
    if (it == target.ranks.end())
      throw std::invalid_argument("train: model '" + data.models[m].model_id +
                                  "' has no target rank");
    ranks[m] = it->second;
  }

  std::vector<OrderedPair> pairs = generate_pairs(ranks);
  if (pairs.empty()) throw std::invalid_argument("train: pair set is empty");
  const std::vector<double> y = relevance_labels(ranks);
  const std::vector<double> gains = ndcg_gains(y);

  SplitMix64 rng(train_cfg.seed);
  std::vector<double> weights(n_questions);
  for (auto& w : weights) w = rng.next_uniform(-train_cfg.init_scale, train_cfg.init_scale);

  AdamState state(n_questions);
  std::vector<EpochStats> trace;
  trace.reserve(train_cfg.epochs);
  std::vector<double> grad;

  for (std::size_t epoch = 1; epoch <= train_cfg.epochs; ++epoch) {
    rng.shuffle(pairs);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < pairs.size(); start += train_cfg.batch_size) {
      const std::size_t len = std::min(train_cfg.batch_size, pairs.size() - start);
      const std::span<const OrderedPair> batch(pairs.data() + start, len);
      BatchContext ctx;
      if (loss_cfg.variant == LossVariant::RankNet) {
        ctx.pair_weights.assign(len, 1.0);
      } else {
        const std::vector<double> scores = detail::all_scores(data, weights);
        ctx = make_batch_context(loss_cfg, scores, gains, batch);
      }
      const double mean_loss = detail::batch_step(data, weights, batch, ctx, loss_cfg, &grad);
      loss_sum += mean_loss * static_cast<double>(len);
      adam_update(state, weights, grad, train_cfg);
    }

    std::map<std::string, double> score_map;
    const std::vector<double> scores = detail::all_scores(data, weights);
    for (std::size_t m = 0; m < n_models; ++m)
      score_map[data.models[m].model_id] = scores[m];
    const double acc = acc_pair(rank_models(score_map), target).first;
    trace.push_back({epoch, loss_sum / static_cast<double>(pairs.size()), acc});
  }

  TrainResult result;
  result.weights.weights = std::move(weights);
  result.weights.question_ids.reserve(n_questions);
  for (const auto& q : data.questions) result.weights.question_ids.push_back(q.question_id);
  result.trace = std::move(trace);
  return result;
}

inline WeightedBenchmark to_weighted_benchmark(const WeightVector& w) {
  return make_weighted_benchmark(w.question_ids, w.weights);
}

/// Scores a (possibly entirely unseen) model set on the exported benchmark
/// and ranks it. Every benchmark question must be present in the new dataset;
/// extra questions are ignored with a warning. Uses the normalized score when
/// the weight sum is positive and falls back to the raw linear score
/// otherwise (the induced ranking is what matters).
inline Ranking apply_benchmark(const WeightedBenchmark& bench, const ResponseMatrix& new_models) {
  const auto qidx = new_models.question_index();
  std::vector<std::size_t> cols;
  cols.reserve(bench.question_ids.size());
  for (const auto& id : bench.question_ids) {
    const auto it = qidx.find(id);
    if (it == qidx.end())
      throw std::runtime_error("apply_benchmark: question '" + id +
                               "' is absent from the dataset");
    cols.push_back(it->second);
  }
  if (new_models.n_questions() > bench.question_ids.size()) {
    std::cerr << "warning: apply_benchmark: ignoring "
              << new_models.n_questions() - bench.question_ids.size()
              << " dataset question(s) not in the benchmark\n";
  }
  const double wsum = bench.weight_sum();
  std::map<std::string, double> scores;
  for (std::size_t m = 0; m < new_models.n_models(); ++m) {
    double s = 0.0;
    for (std::size_t k = 0; k < cols.size(); ++k)
      s += bench.weights[k] * new_models.at(m, cols[k]);
    if (wsum > 0.0) s /= wsum;
    scores[new_models.models[m].model_id] = s;
  }
  return rank_models(scores);
}

/// Training trace CSV: epoch,mean_loss,train_acc_pair.
inline void save_training_trace(std::span<const EpochStats> trace, const std::string& path) {
  auto out = open_output(path);
  out << "epoch,mean_loss,train_acc_pair\n";
  for (const auto& e : trace) {
    out << e.epoch << ',' << format_double(e.mean_loss) << ','
        << format_double(e.train_acc_pair) << '\n';
  }
}

}  // namespace benchalign::ltr
