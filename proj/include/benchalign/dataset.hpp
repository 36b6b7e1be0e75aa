#pragma once

#include <algorithm>
#include <cstdint>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "benchalign/csv.hpp"

namespace benchalign {

struct ModelRecord {
  std::string model_id;
  std::optional<std::uint64_t> param_count;  // absent = unknown
  bool excluded = false;
};

struct QuestionRecord {
  std::string question_id;
  std::string benchmark;
  std::string task;
  double weight = 1.0;
};

/// Complete binary correctness matrix: rows follow the model file order,
/// columns the question file order. Immutable once loaded; filters return
/// new matrices.
struct ResponseMatrix {
  std::vector<ModelRecord> models;
  std::vector<QuestionRecord> questions;
  std::vector<std::uint8_t> entries;  // row-major, models x questions

  std::size_t n_models() const { return models.size(); }
  std::size_t n_questions() const { return questions.size(); }

  std::uint8_t at(std::size_t row, std::size_t col) const {
    return entries[row * questions.size() + col];
  }
  std::span<const std::uint8_t> row(std::size_t r) const {
    return {entries.data() + r * questions.size(), questions.size()};
  }

  std::unordered_map<std::string, std::size_t> model_index() const {
    std::unordered_map<std::string, std::size_t> m;
    m.reserve(models.size());
    for (std::size_t i = 0; i < models.size(); ++i) m.emplace(models[i].model_id, i);
    return m;
  }
  std::unordered_map<std::string, std::size_t> question_index() const {
    std::unordered_map<std::string, std::size_t> m;
    m.reserve(questions.size());
    for (std::size_t i = 0; i < questions.size(); ++i) m.emplace(questions[i].question_id, i);
    return m;
  }
};

/// Total-order preference over a model set: rank 1 is best. `scores` is kept
/// when the ranks were derived from raw preference scores.
struct TargetRanking {
  std::unordered_map<std::string, int> ranks;
  std::unordered_map<std::string, double> scores;

  std::size_t size() const { return ranks.size(); }
};

// ---------------------------------------------------------------------------
// Loading
// ---------------------------------------------------------------------------

inline std::vector<ModelRecord> load_models_file(const std::string& path) {
  CsvReader r(path);
  r.expect_header({"model_id", "param_count", "excluded"});
  std::vector<ModelRecord> out;
  std::unordered_set<std::string> seen;
  std::vector<std::string> f;
  while (r.next(f)) {
    if (f.size() != 3) throw r.error("expected 3 fields");
    ModelRecord rec;
    rec.model_id = f[0];
    if (rec.model_id.empty()) throw r.error("empty model_id");
    if (!seen.insert(rec.model_id).second) throw r.error("duplicate model_id '" + rec.model_id + "'");
    if (!f[1].empty()) {
      const std::uint64_t pc = parse_u64(r, f[1], "param_count");
      if (pc == 0) throw r.error("param_count must be positive for model '" + rec.model_id + "'");
      rec.param_count = pc;
    }
    if (f[2] == "true") rec.excluded = true;
    else if (f[2] == "false") rec.excluded = false;
    else throw r.error("excluded must be true or false, got '" + f[2] + "'");
    out.push_back(std::move(rec));
  }
  if (out.empty()) throw std::runtime_error(path + ": no models");
  return out;
}

inline std::vector<QuestionRecord> load_questions_file(const std::string& path) {
  CsvReader r(path);
  r.expect_header({"question_id", "benchmark", "task", "weight"});
  std::vector<QuestionRecord> out;
  std::unordered_set<std::string> seen;
  std::vector<std::string> f;
  while (r.next(f)) {
    if (f.size() != 4) throw r.error("expected 4 fields");
    QuestionRecord q;
    q.question_id = f[0];
    if (q.question_id.empty()) throw r.error("empty question_id");
    if (!seen.insert(q.question_id).second)
      throw r.error("duplicate question_id '" + q.question_id + "'");
    q.benchmark = f[1];
    q.task = f[2];
    if (q.benchmark.empty() || q.task.empty())
      throw r.error("benchmark and task must be nonempty for question '" + q.question_id + "'");
    q.weight = f[3].empty() ? 1.0 : parse_double(r, f[3], "weight");
    out.push_back(std::move(q));
  }
  if (out.empty()) throw std::runtime_error(path + ": no questions");
  return out;
}

/// Loads and validates the full corpus. The responses file is order
/// insensitive but must contain exactly one row per (model, question) cell
/// with a score of 0 or 1.
inline ResponseMatrix load_dataset(const std::string& model_file,
                                   const std::string& question_file,
                                   const std::string& response_file) {
  ResponseMatrix m;
  m.models = load_models_file(model_file);
  m.questions = load_questions_file(question_file);
  const auto midx = m.model_index();
  const auto qidx = m.question_index();

  const std::size_t cells = m.models.size() * m.questions.size();
  m.entries.assign(cells, 0);
  std::vector<std::uint8_t> seen(cells, 0);

  CsvReader r(response_file);
  r.expect_header({"model_id", "question_id", "score"});
  std::vector<std::string> f;
  std::size_t consumed = 0;
  while (r.next(f)) {
    if (f.size() != 3) throw r.error("expected 3 fields");
    const auto mi = midx.find(f[0]);
    if (mi == midx.end()) throw r.error("unknown model_id '" + f[0] + "'");
    const auto qi = qidx.find(f[1]);
    if (qi == qidx.end()) throw r.error("unknown question_id '" + f[1] + "'");
    const double score = parse_double(r, f[2], "score");
    if (score != 0.0 && score != 1.0)
      throw r.error("non-binary response " + f[2] + " for (" + f[0] + ", " + f[1] + ")");
    const std::size_t cell = mi->second * m.questions.size() + qi->second;
    if (seen[cell]) throw r.error("duplicate response for (" + f[0] + ", " + f[1] + ")");
    seen[cell] = 1;
    m.entries[cell] = score == 1.0 ? 1 : 0;
    ++consumed;
  }
  if (consumed != cells) {
    for (std::size_t i = 0; i < m.models.size(); ++i) {
      for (std::size_t j = 0; j < m.questions.size(); ++j) {
        if (!seen[i * m.questions.size() + j]) {
          throw std::runtime_error(response_file + ": missing response for (" +
                                   m.models[i].model_id + ", " +
                                   m.questions[j].question_id + ")");
        }
      }
    }
  }
  return m;
}

/// Loads a target ranking. The file carries either explicit ranks or raw
/// preference scores (exactly one of the two columns nonempty, consistently).
/// Scores are converted to ranks by sorting descending, ties broken by
/// ascending model_id. Explicit ranks must form {1..K}.
inline TargetRanking load_target_ranking(const std::string& path, const ResponseMatrix& dataset) {
  const auto midx = dataset.model_index();
  CsvReader r(path);
  r.expect_header({"model_id", "rank", "score"});

  std::vector<std::pair<std::string, std::int64_t>> explicit_ranks;
  std::vector<std::pair<std::string, double>> raw_scores;
  std::unordered_set<std::string> seen;
  std::optional<bool> uses_rank;
  std::vector<std::string> f;
  while (r.next(f)) {
    if (f.size() != 3) throw r.error("expected 3 fields");
    if (!midx.count(f[0])) throw r.error("model '" + f[0] + "' not in dataset");
    if (!seen.insert(f[0]).second) throw r.error("duplicate model '" + f[0] + "'");
    const bool has_rank = !f[1].empty();
    const bool has_score = !f[2].empty();
    if (has_rank == has_score)
      throw r.error("exactly one of rank/score must be nonempty");
    if (uses_rank.has_value() && *uses_rank != has_rank)
      throw r.error("mixed rank and score rows in one file");
    uses_rank = has_rank;
    if (has_rank) explicit_ranks.emplace_back(f[0], parse_i64(r, f[1], "rank"));
    else raw_scores.emplace_back(f[0], parse_double(r, f[2], "score"));
  }
  if (!uses_rank.has_value()) throw std::runtime_error(path + ": no ranked models");

  TargetRanking t;
  if (*uses_rank) {
    const std::int64_t k = static_cast<std::int64_t>(explicit_ranks.size());
    std::set<std::int64_t> rank_set;
    for (const auto& [id, rank] : explicit_ranks) {
      if (!rank_set.insert(rank).second)
        throw std::runtime_error(path + ": duplicate rank " + std::to_string(rank));
      t.ranks[id] = static_cast<int>(rank);
    }
    if (*rank_set.begin() != 1 || *rank_set.rbegin() != k)
      throw std::runtime_error(path + ": rank set must be {1.." + std::to_string(k) + "}");
  } else {
    std::sort(raw_scores.begin(), raw_scores.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return a.first < b.first;
    });
    for (std::size_t i = 0; i < raw_scores.size(); ++i) {
      t.ranks[raw_scores[i].first] = static_cast<int>(i + 1);
      t.scores[raw_scores[i].first] = raw_scores[i].second;
    }
  }
  return t;
}

// ---------------------------------------------------------------------------
// Saving (canonical writers; round-trip with the loaders)
// ---------------------------------------------------------------------------

inline void save_models_file(std::span<const ModelRecord> models, const std::string& path) {
  auto out = open_output(path);
  out << "model_id,param_count,excluded\n";
  for (const auto& m : models) {
    out << csv_quote(m.model_id) << ',';
    if (m.param_count) out << *m.param_count;
    out << ',' << (m.excluded ? "true" : "false") << '\n';
  }
}

inline void save_questions_file(std::span<const QuestionRecord> questions,
                                const std::string& path) {
  auto out = open_output(path);
  out << "question_id,benchmark,task,weight\n";
  for (const auto& q : questions) {
    out << csv_quote(q.question_id) << ',' << csv_quote(q.benchmark) << ','
        << csv_quote(q.task) << ',' << format_double(q.weight) << '\n';
  }
}

inline void save_responses_file(const ResponseMatrix& m, const std::string& path) {
  auto out = open_output(path);
  out << "model_id,question_id,score\n";
  for (std::size_t i = 0; i < m.n_models(); ++i) {
    for (std::size_t j = 0; j < m.n_questions(); ++j) {
      out << csv_quote(m.models[i].model_id) << ',' << csv_quote(m.questions[j].question_id)
          << ',' << int(m.at(i, j)) << '\n';
    }
  }
}

inline void save_dataset(const ResponseMatrix& m, const std::string& model_file,
                         const std::string& question_file, const std::string& response_file) {
  save_models_file(m.models, model_file);
  save_questions_file(m.questions, question_file);
  save_responses_file(m, response_file);
}

/// Writes explicit ranks ordered best-first.
inline void save_target_ranking(const TargetRanking& t, const std::string& path) {
  std::vector<std::pair<int, std::string>> by_rank;
  by_rank.reserve(t.ranks.size());
  for (const auto& [id, rank] : t.ranks) by_rank.emplace_back(rank, id);
  std::sort(by_rank.begin(), by_rank.end());
  auto out = open_output(path);
  out << "model_id,rank,score\n";
  for (const auto& [rank, id] : by_rank) out << csv_quote(id) << ',' << rank << ",\n";
}

// ---------------------------------------------------------------------------
// Filtering
// ---------------------------------------------------------------------------

namespace detail {
inline ResponseMatrix select_columns(const ResponseMatrix& m, const std::vector<std::size_t>& cols) {
  ResponseMatrix out;
  out.models = m.models;
  out.questions.reserve(cols.size());
  for (const std::size_t c : cols) out.questions.push_back(m.questions[c]);
  out.entries.reserve(m.n_models() * cols.size());
  for (std::size_t i = 0; i < m.n_models(); ++i) {
    for (const std::size_t c : cols) out.entries.push_back(m.at(i, c));
  }
  return out;
}

inline ResponseMatrix select_rows(const ResponseMatrix& m, const std::vector<std::size_t>& rows) {
  ResponseMatrix out;
  out.questions = m.questions;
  out.models.reserve(rows.size());
  for (const std::size_t r : rows) out.models.push_back(m.models[r]);
  out.entries.reserve(rows.size() * m.n_questions());
  for (const std::size_t r : rows) {
    const auto row = m.row(r);
    out.entries.insert(out.entries.end(), row.begin(), row.end());
  }
  return out;
}
}  // namespace detail

/// Drops every question belonging to one of the named benchmarks. Unknown
/// names are contract violations; dropping everything is, too.
inline ResponseMatrix filter_benchmarks(const ResponseMatrix& m,
                                        const std::set<std::string>& exclude) {
  std::set<std::string> present;
  for (const auto& q : m.questions) present.insert(q.benchmark);
  for (const auto& name : exclude) {
    if (!present.count(name))
      throw std::runtime_error("filter_benchmarks: unknown benchmark '" + name + "'");
  }
  std::vector<std::size_t> keep;
  for (std::size_t j = 0; j < m.n_questions(); ++j) {
    if (!exclude.count(m.questions[j].benchmark)) keep.push_back(j);
  }
  if (keep.empty()) throw std::runtime_error("filter_benchmarks: no questions remain");
  return detail::select_columns(m, keep);
}

/// Drops the listed models. Unknown ids are ignored with a warning; at least
/// two models must remain.
inline ResponseMatrix filter_models(const ResponseMatrix& m,
                                    const std::set<std::string>& exclude_ids) {
  const auto midx = m.model_index();
  for (const auto& id : exclude_ids) {
    if (!midx.count(id))
      std::cerr << "warning: filter_models: unknown model_id '" << id << "' ignored\n";
  }
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < m.n_models(); ++i) {
    if (!exclude_ids.count(m.models[i].model_id)) keep.push_back(i);
  }
  if (keep.size() < 2) throw std::runtime_error("filter_models: fewer than 2 models remain");
  return detail::select_rows(m, keep);
}

/// Keeps exactly the listed models, preserving dataset row order.
inline ResponseMatrix select_models(const ResponseMatrix& m,
                                    const std::set<std::string>& keep_ids) {
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < m.n_models(); ++i) {
    if (keep_ids.count(m.models[i].model_id)) keep.push_back(i);
  }
  if (keep.size() != keep_ids.size())
    throw std::runtime_error("select_models: some requested models are not in the dataset");
  return detail::select_rows(m, keep);
}

/// Keeps exactly the listed questions, in the order given.
inline ResponseMatrix select_questions(const ResponseMatrix& m,
                                       std::span<const std::string> question_ids) {
  const auto qidx = m.question_index();
  std::vector<std::size_t> cols;
  cols.reserve(question_ids.size());
  for (const auto& id : question_ids) {
    const auto it = qidx.find(id);
    if (it == qidx.end())
      throw std::runtime_error("select_questions: unknown question_id '" + id + "'");
    cols.push_back(it->second);
  }
  return detail::select_columns(m, cols);
}

/// Restricts a target ranking to a model subset, re-ranking 1..K while
/// preserving the relative order.
inline TargetRanking restrict_ranking(const TargetRanking& t,
                                      const std::set<std::string>& keep_ids) {
  std::vector<std::pair<int, std::string>> kept;
  for (const auto& id : keep_ids) {
    const auto it = t.ranks.find(id);
    if (it == t.ranks.end())
      throw std::runtime_error("restrict_ranking: model '" + id + "' has no target rank");
    kept.emplace_back(it->second, id);
  }
  std::sort(kept.begin(), kept.end());
  TargetRanking out;
  for (std::size_t i = 0; i < kept.size(); ++i) {
    out.ranks[kept[i].second] = static_cast<int>(i + 1);
    const auto sc = t.scores.find(kept[i].second);
    if (sc != t.scores.end()) out.scores[kept[i].second] = sc->second;
  }
  return out;
}

}  // namespace benchalign
