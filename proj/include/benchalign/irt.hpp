#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "benchalign/csv.hpp"

namespace benchalign::irt {

/// Dense binary matrix view used by the fitting routines: rows are models,
/// columns are items.
struct BinaryMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint8_t> values;  // row-major

  std::uint8_t at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
};

struct ItemParams {
  double discrimination = 1.0;  // a > 0
  double difficulty = 0.0;      // b
};

struct AbilityEstimate {
  double theta = 0.0;
  double log_likelihood = 0.0;
};

struct IrtFitConfig {
  std::size_t max_iterations = 500;
  double tolerance = 1e-6;  // on mean log-likelihood change per cell
  double prior_theta_sd = 1.0;
  double prior_log_a_sd = 0.5;
  double prior_b_sd = 2.0;
  std::uint64_t seed = 0;  // reserved; the fit is deterministic in the data
};

inline constexpr double kThetaClamp = 6.0;

/// Two-parameter logistic item response function P(correct) in (0, 1).
inline double irf_2pl(double theta, const ItemParams& item) {
  return 1.0 / (1.0 + std::exp(-item.discrimination * (theta - item.difficulty)));
}

namespace detail {

inline double sq(double x) { return x * x; }

/// Bernoulli log-likelihood of one response under probability p, clipped away
/// from 0/1 for finiteness.
inline double bernoulli_ll(std::uint8_t x, double p) {
  constexpr double eps = 1e-12;
  p = std::min(1.0 - eps, std::max(eps, p));
  return x ? std::log(p) : std::log1p(-p);
}

struct FitWork {
  std::vector<double> theta;
  std::vector<double> log_a;
  std::vector<double> b;
};

inline double penalized_objective(const BinaryMatrix& m, const FitWork& w,
                                  const IrtFitConfig& cfg) {
  double obj = 0.0;
  for (std::size_t i = 0; i < m.cols; ++i) {
    const double a = std::exp(w.log_a[i]);
    for (std::size_t r = 0; r < m.rows; ++r) {
      const double p = 1.0 / (1.0 + std::exp(-a * (w.theta[r] - w.b[i])));
      obj += bernoulli_ll(m.at(r, i), p);
    }
    obj += -sq(w.log_a[i]) / (2.0 * sq(cfg.prior_log_a_sd));
    obj += -sq(w.b[i]) / (2.0 * sq(cfg.prior_b_sd));
  }
  for (const double t : w.theta) obj += -sq(t) / (2.0 * sq(cfg.prior_theta_sd));
  return obj;
}

}  // namespace detail

struct FitResult {
  std::vector<ItemParams> items;
  std::vector<AbilityEstimate> abilities;
  std::vector<double> objective_trace;  // penalized log-likelihood per accepted iteration
  std::size_t iterations = 0;
};

/// Joint MAP fit of the 2PL model by alternating full-batch ascent over the
/// abilities and over the item parameters (log a, b). Steps are scaled by the
/// expected-information diagonal and backtracked so the penalized objective
/// never decreases between accepted iterations. Every item must have both a
/// correct and an incorrect response; constant columns are the caller's
/// responsibility to filter.
inline FitResult fit_2pl(const BinaryMatrix& m, const IrtFitConfig& cfg) {
  if (m.rows == 0 || m.cols == 0) throw std::invalid_argument("fit_2pl: empty matrix");
  std::vector<double> col_mean(m.cols, 0.0), row_mean(m.rows, 0.0);
  for (std::size_t r = 0; r < m.rows; ++r) {
    for (std::size_t i = 0; i < m.cols; ++i) {
      const double x = m.at(r, i);
      col_mean[i] += x;
      row_mean[r] += x;
    }
  }
  for (std::size_t i = 0; i < m.cols; ++i) {
    col_mean[i] /= static_cast<double>(m.rows);
    if (col_mean[i] == 0.0 || col_mean[i] == 1.0)
      throw std::invalid_argument("fit_2pl: item " + std::to_string(i) +
                                  " has constant responses");
  }
  for (std::size_t r = 0; r < m.rows; ++r) row_mean[r] /= static_cast<double>(m.cols);

  detail::FitWork w;
  // Moment-based starting point: standardized row means for theta, unit
  // discrimination, difficulty from the item mean through the logit.
  w.theta.resize(m.rows);
  {
    double mu = 0.0;
    for (const double v : row_mean) mu += v;
    mu /= static_cast<double>(m.rows);
    double var = 0.0;
    for (const double v : row_mean) var += detail::sq(v - mu);
    var /= static_cast<double>(m.rows);
    const double sd = std::sqrt(std::max(var, 1e-12));
    for (std::size_t r = 0; r < m.rows; ++r) {
      w.theta[r] = std::clamp((row_mean[r] - mu) / sd, -kThetaClamp, kThetaClamp);
    }
  }
  w.log_a.assign(m.cols, 0.0);
  w.b.resize(m.cols);
  for (std::size_t i = 0; i < m.cols; ++i) {
    const double p = std::clamp(col_mean[i], 0.02, 0.98);
    w.b[i] = std::clamp(-std::log(p / (1.0 - p)), -4.0, 4.0);
  }

  FitResult result;
  double obj = detail::penalized_objective(m, w, cfg);
  result.objective_trace.push_back(obj);
  const double cells = static_cast<double>(m.rows * m.cols);

  double rate_theta = 1.0, rate_items = 1.0;
  std::vector<double> g_theta(m.rows), h_theta(m.rows);
  std::vector<double> g_la(m.cols), h_la(m.cols), g_b(m.cols), h_b(m.cols);
  std::vector<double> cand;

  for (std::size_t iter = 0; iter < cfg.max_iterations; ++iter) {
    // theta block
    std::fill(g_theta.begin(), g_theta.end(), 0.0);
    std::fill(h_theta.begin(), h_theta.end(), 0.0);
    for (std::size_t i = 0; i < m.cols; ++i) {
      const double a = std::exp(w.log_a[i]);
      for (std::size_t r = 0; r < m.rows; ++r) {
        const double p = 1.0 / (1.0 + std::exp(-a * (w.theta[r] - w.b[i])));
        g_theta[r] += a * (m.at(r, i) - p);
        h_theta[r] += a * a * p * (1.0 - p);
      }
    }
    for (std::size_t r = 0; r < m.rows; ++r) {
      g_theta[r] -= w.theta[r] / detail::sq(cfg.prior_theta_sd);
      h_theta[r] += 1.0 / detail::sq(cfg.prior_theta_sd);
    }
    {
      cand.resize(m.rows);
      double rate = rate_theta;
      bool accepted = false;
      for (int tries = 0; tries < 40; ++tries) {
        for (std::size_t r = 0; r < m.rows; ++r) {
          cand[r] = std::clamp(w.theta[r] + rate * g_theta[r] / h_theta[r], -kThetaClamp,
                               kThetaClamp);
        }
        detail::FitWork trial = w;
        trial.theta = cand;
        const double trial_obj = detail::penalized_objective(m, trial, cfg);
        if (trial_obj >= obj) {
          w.theta = cand;
          obj = trial_obj;
          rate_theta = std::min(rate * 1.2, 1.0);
          accepted = true;
          break;
        }
        rate *= 0.5;
      }
      if (!accepted) rate_theta = std::max(rate_theta * 0.5, 1e-8);
    }

    // item block (log a, b jointly)
    std::fill(g_la.begin(), g_la.end(), 0.0);
    std::fill(h_la.begin(), h_la.end(), 0.0);
    std::fill(g_b.begin(), g_b.end(), 0.0);
    std::fill(h_b.begin(), h_b.end(), 0.0);
    for (std::size_t i = 0; i < m.cols; ++i) {
      const double a = std::exp(w.log_a[i]);
      for (std::size_t r = 0; r < m.rows; ++r) {
        const double t = w.theta[r] - w.b[i];
        const double p = 1.0 / (1.0 + std::exp(-a * t));
        const double resid = m.at(r, i) - p;
        const double info = p * (1.0 - p);
        g_la[i] += a * t * resid;          // chain rule through a = exp(log a)
        h_la[i] += detail::sq(a * t) * info;
        g_b[i] += -a * resid;
        h_b[i] += a * a * info;
      }
      g_la[i] -= w.log_a[i] / detail::sq(cfg.prior_log_a_sd);
      h_la[i] += 1.0 / detail::sq(cfg.prior_log_a_sd);
      g_b[i] -= w.b[i] / detail::sq(cfg.prior_b_sd);
      h_b[i] += 1.0 / detail::sq(cfg.prior_b_sd);
    }
    {
      double rate = rate_items;
      bool accepted = false;
      for (int tries = 0; tries < 40; ++tries) {
        detail::FitWork trial = w;
        for (std::size_t i = 0; i < m.cols; ++i) {
          trial.log_a[i] = std::clamp(w.log_a[i] + rate * g_la[i] / h_la[i], -6.0, 6.0);
          trial.b[i] = std::clamp(w.b[i] + rate * g_b[i] / h_b[i], -20.0, 20.0);
        }
        const double trial_obj = detail::penalized_objective(m, trial, cfg);
        if (trial_obj >= obj) {
          w.log_a = std::move(trial.log_a);
          w.b = std::move(trial.b);
          obj = trial_obj;
          rate_items = std::min(rate * 1.2, 1.0);
          accepted = true;
          break;
        }
        rate *= 0.5;
      }
      if (!accepted) rate_items = std::max(rate_items * 0.5, 1e-8);
    }

    result.objective_trace.push_back(obj);
    result.iterations = iter + 1;
    const std::size_t n = result.objective_trace.size();
    if (std::abs(result.objective_trace[n - 1] - result.objective_trace[n - 2]) / cells <
        cfg.tolerance) {
      break;
    }
  }

  result.items.resize(m.cols);
  for (std::size_t i = 0; i < m.cols; ++i) {
    result.items[i] = {std::exp(w.log_a[i]), w.b[i]};
  }
  result.abilities.resize(m.rows);
  for (std::size_t r = 0; r < m.rows; ++r) {
    double ll = 0.0;
    for (std::size_t i = 0; i < m.cols; ++i)
      ll += detail::bernoulli_ll(m.at(r, i), irf_2pl(w.theta[r], result.items[i]));
    result.abilities[r] = {w.theta[r], ll};
  }
  return result;
}

/// MAP ability under a standard-normal prior, items fixed. Safeguarded 1-D
/// Newton on the strictly concave posterior; the result is clamped to
/// [-6, 6] and the gradient at an interior solution is driven below 1e-10.
inline AbilityEstimate map_ability(std::span<const std::uint8_t> responses,
                                   std::span<const ItemParams> items) {
  if (responses.empty()) throw std::invalid_argument("map_ability: no observed items");
  if (responses.size() != items.size())
    throw std::invalid_argument("map_ability: response/item length mismatch");

  const auto grad = [&](double theta) {
    double g = -theta;  // prior N(0,1)
    for (std::size_t i = 0; i < items.size(); ++i)
      g += items[i].discrimination * (responses[i] - irf_2pl(theta, items[i]));
    return g;
  };
  const auto curv = [&](double theta) {
    double h = -1.0;
    for (std::size_t i = 0; i < items.size(); ++i) {
      const double p = irf_2pl(theta, items[i]);
      h -= detail::sq(items[i].discrimination) * p * (1.0 - p);
    }
    return h;
  };

  // The gradient is strictly decreasing; bracket the root inside the clamp.
  double lo = -kThetaClamp, hi = kThetaClamp;
  double theta;
  if (grad(hi) >= 0.0) {
    theta = hi;
  } else if (grad(lo) <= 0.0) {
    theta = lo;
  } else {
    theta = 0.0;
    for (int it = 0; it < 200; ++it) {
      const double g = grad(theta);
      if (std::abs(g) < 1e-12) break;
      if (g > 0.0) lo = theta;
      else hi = theta;
      double next = theta - g / curv(theta);
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);  // bisection fallback
      if (std::abs(next - theta) < 1e-14) {
        theta = next;
        break;
      }
      theta = next;
    }
  }

  double ll = 0.0;
  for (std::size_t i = 0; i < items.size(); ++i)
    ll += detail::bernoulli_ll(responses[i], irf_2pl(theta, items[i]));
  return {theta, ll};
}

/// Performance-IRT score estimator: blends empirical accuracy on the seen
/// items with the IRT-predicted accuracy on the unseen ones, weighted by the
/// fraction of items observed.
inline double p_irt(std::span<const std::uint8_t> seen_responses,
                    std::span<const ItemParams> unseen_items, double theta) {
  const std::size_t n_seen = seen_responses.size();
  const std::size_t n_unseen = unseen_items.size();
  if (n_seen + n_unseen == 0) throw std::invalid_argument("p_irt: no items at all");
  const double lambda =
      static_cast<double>(n_seen) / static_cast<double>(n_seen + n_unseen);
  double seen_mean = 0.0;
  for (const auto x : seen_responses) seen_mean += x;
  if (n_seen > 0) seen_mean /= static_cast<double>(n_seen);
  double pred_mean = 0.0;
  for (const auto& item : unseen_items) pred_mean += irf_2pl(theta, item);
  if (n_unseen > 0) pred_mean /= static_cast<double>(n_unseen);
  return lambda * seen_mean + (1.0 - lambda) * pred_mean;
}

/// Generalized p-IRT: convex blend of the naive seen accuracy and the p-IRT
/// estimate with a fixed mixing coefficient.
inline double gp_irt(double p_irt_estimate, double seen_accuracy, double mix = 0.5) {
  if (mix < 0.0 || mix > 1.0) throw std::invalid_argument("gp_irt: mix must be in [0,1]");
  return mix * seen_accuracy + (1.0 - mix) * p_irt_estimate;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

inline void save_item_params(std::span<const std::string> question_ids,
                             std::span<const ItemParams> items, const std::string& path) {
  if (question_ids.size() != items.size())
    throw std::invalid_argument("save_item_params: length mismatch");
  auto out = open_output(path);
  out << "question_id,a,b\n";
  for (std::size_t i = 0; i < items.size(); ++i) {
    out << csv_quote(question_ids[i]) << ',' << format_double(items[i].discrimination) << ','
        << format_double(items[i].difficulty) << '\n';
  }
}

inline void save_abilities(std::span<const std::string> model_ids,
                           std::span<const double> thetas, const std::string& path) {
  if (model_ids.size() != thetas.size())
    throw std::invalid_argument("save_abilities: length mismatch");
  auto out = open_output(path);
  out << "model_id,theta\n";
  for (std::size_t i = 0; i < thetas.size(); ++i)
    out << csv_quote(model_ids[i]) << ',' << format_double(thetas[i]) << '\n';
}

}  // namespace benchalign::irt
