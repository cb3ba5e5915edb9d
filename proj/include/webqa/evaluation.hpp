#pragma once

// Ranking quality (AP / MAP / PR area) and the benchmark harness: run the
// pipeline over a query set, and sweep template-set sizes for greedy
// selection against the top-k baseline.

#include <algorithm>
#include <cstddef>
#include <nlohmann/json.hpp>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "webqa/error.hpp"
#include "webqa/pipeline.hpp"
#include "webqa/question_gen.hpp"

namespace webqa {

enum class ApMode {
  kStandard,       // sum of precision at relevant ranks / |truth|
  kListNormalized,  // sum_k p(k) * delta_recall(k) / n, n = number of ranked candidates
};

inline std::string to_string(ApMode m) { return m == ApMode::kStandard ? "standard" : "list-normalized"; }

inline ApMode parse_ap_mode(const std::string& s) {
  if (s == "standard") return ApMode::kStandard;
  if (s == "list-normalized") return ApMode::kListNormalized;
  throw UsageError("unknown AP mode '" + s + "' (standard | list-normalized)");
}

inline double average_precision(std::span<const EntityId> ranked, const std::set<EntityId>& truth,
                                ApMode mode = ApMode::kStandard) {
  std::set<EntityId> seen;
  for (const auto& e : ranked) {
    if (!seen.insert(e).second) throw UsageError("duplicate entity in ranking: " + e.name);
  }
  if (truth.empty() || ranked.empty()) return 0.0;
  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t k = 0; k < ranked.size(); ++k) {
    if (!truth.contains(ranked[k])) continue;
    ++hits;
    sum += static_cast<double>(hits) / static_cast<double>(k + 1);
  }
  if (hits == 0) return 0.0;
  const double standard = sum / static_cast<double>(truth.size());
  return mode == ApMode::kStandard ? standard : standard / static_cast<double>(ranked.size());
}

// Area under the precision-recall curve of a scored list (step
// interpolation, tied scores form one threshold). Labels are 0/1.
inline double pr_auc(std::span<const double> scores, std::span<const int> labels) {
  std::vector<std::size_t> order(scores.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  const auto positives = static_cast<double>(std::count(labels.begin(), labels.end(), 1));
  if (positives == 0) return 0.0;
  double area = 0.0;
  double tp = 0;
  double seen = 0;
  double prev_recall = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      tp += labels[order[j]] == 1 ? 1 : 0;
      ++seen;
      ++j;
    }
    const double recall = tp / positives;
    area += (recall - prev_recall) * (tp / seen);
    prev_recall = recall;
    i = j;
  }
  return area;
}

struct QueryEvaluation {
  KbcQuery query;
  std::vector<RankedAnswer> ranked;
  std::set<EntityId> truth;
  double ap = 0.0;
  bool flagged = false;
  std::string note;
};

inline double mean_average_precision(std::span<const QueryEvaluation> evaluations) {
  if (evaluations.empty()) throw UsageError("MAP over an empty query set");
  double sum = 0.0;
  for (const auto& e : evaluations) sum += e.ap;
  return sum / static_cast<double>(evaluations.size());
}

struct BenchmarkConfig {
  std::vector<std::string> templates;
  SnippetK snippet_k;
  std::uint64_t seed = 0;
  ApMode mode = ApMode::kStandard;
};

struct BenchmarkReport {
  std::string relation;
  double map = 0.0;
  std::vector<QueryEvaluation> per_query;
  BenchmarkConfig config;
};

// Runs every query through the pipeline. Queries that fail or produce no
// candidates score 0 and are flagged; they are not dropped.
inline BenchmarkReport run_benchmark(const Pipeline& pipeline, const std::string& relation,
                                     const TemplateSet& templates, SnippetK snippet_k,
                                     const Models& models, std::span<const KbcQuery> queries,
                                     ApMode mode = ApMode::kStandard) {
  if (!models.ranker) throw UsageError("benchmark needs a ranker model");
  if (snippet_k && !models.filter) throw UsageError("benchmark with snippet filtering needs a filter model");
  pipeline.kb().schema(relation);

  BenchmarkReport report;
  report.relation = relation;
  report.config = {templates.keywords(), snippet_k, pipeline.options().seed, mode};
  report.per_query = parallel_map(queries.size(), pipeline.options().workers, [&](std::size_t i) {
    QueryEvaluation ev;
    ev.query = queries[i];
    ev.truth = pipeline.kb().closed_world_objects(ev.query.subject, relation);
    try {
      auto answer = pipeline.answer(ev.query, templates.templates, models, snippet_k);
      ev.ranked = std::move(answer.ranked);
      if (!answer.evidence.failures.empty()) {
        ev.flagged = true;
        ev.note = answer.evidence.failures.front();
      }
    } catch (const UsageError&) {
      throw;
    } catch (const std::exception& e) {
      ev.flagged = true;
      ev.note = e.what();
      ev.ranked.clear();
    }
    if (ev.ranked.empty() && !ev.flagged) {
      ev.flagged = true;
      ev.note = "no candidates";
    }
    std::vector<EntityId> ids;
    for (const auto& r : ev.ranked) ids.push_back(r.entity);
    ev.ap = average_precision(ids, ev.truth, mode);
    return ev;
  });
  report.map = queries.empty() ? 0.0 : mean_average_precision(report.per_query);
  return report;
}

inline nlohmann::json report_to_json(const BenchmarkReport& r) {
  nlohmann::json per_query = nlohmann::json::array();
  for (const auto& q : r.per_query) {
    nlohmann::json ranked = nlohmann::json::array();
    for (const auto& a : q.ranked) ranked.push_back({{"entity", a.entity.name}, {"probability", a.probability}});
    std::vector<std::string> truth;
    for (const auto& t : q.truth) truth.push_back(t.name);
    per_query.push_back({{"subject", q.query.subject.name},
                         {"ap", q.ap},
                         {"flagged", q.flagged},
                         {"note", q.note},
                         {"truth", truth},
                         {"ranked", ranked}});
  }
  return {{"relation", r.relation},
          {"map", r.map},
          {"config",
           {{"templates", r.config.templates},
            {"snippets", snippet_k_label(r.config.snippet_k)},
            {"seed", r.config.seed},
            {"ap_mode", to_string(r.config.mode)}}},
          {"per_query", per_query}};
}

namespace detail {

inline std::string join(const std::vector<std::string>& parts, char sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out.push_back(sep);
    out += parts[i];
  }
  return out;
}

inline std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace detail

// relation,query_subject,ap,k,templates (templates joined with ';')
inline std::string report_to_csv(const BenchmarkReport& r) {
  std::ostringstream os;
  os << "relation,query_subject,ap,k,templates\n";
  const std::string templates = detail::join(r.config.templates, ';');
  for (const auto& q : r.per_query) {
    os << r.relation << ',' << q.query.subject.name << ',' << detail::format_double(q.ap) << ','
       << snippet_k_label(r.config.snippet_k) << ',' << templates << '\n';
  }
  return os.str();
}

// Benchmark MAP of a template set on one query list: train a ranker on the
// queries using the set's questions, then evaluate it on the same queries
// without snippet filtering. Memoized per (sorted) set. A set whose
// questions yield no positive or no negative training example scores 0.
class TemplateEvaluator {
 public:
  TemplateEvaluator(const Pipeline& pipeline, std::string relation,
                    std::vector<KbcQuery> queries, ApMode mode = ApMode::kStandard)
      : memo_([this](std::span<const QuestionTemplate> set) { return compute(set); }),
        pipeline_(&pipeline), relation_(std::move(relation)), queries_(std::move(queries)),
        mode_(mode) {}

  TemplateEvaluator(const TemplateEvaluator&) = delete;
  TemplateEvaluator& operator=(const TemplateEvaluator&) = delete;

  double operator()(std::span<const QuestionTemplate> set) { return memo_(set); }
  std::size_t distinct_sets() const { return memo_.misses(); }

 private:
  double compute(std::span<const QuestionTemplate> set) const {
    Models models;
    try {
      models.ranker = pipeline_->train_ranker(queries_, set).model;
    } catch (const DataError&) {
      return 0.0;
    }
    TemplateSet ts{{set.begin(), set.end()}, 0.0};
    return run_benchmark(*pipeline_, relation_, ts, std::nullopt, models, queries_, mode_).map;
  }

  MemoizedEvaluator memo_;
  const Pipeline* pipeline_;
  std::string relation_;
  std::vector<KbcQuery> queries_;
  ApMode mode_;
};

struct CurvePoint {
  std::size_t size = 0;
  std::vector<std::string> templates;
  double map = 0.0;
};

struct SweepResult {
  std::vector<CurvePoint> greedy;
  std::vector<CurvePoint> baseline;
  TemplateSet selected;  // greedy choice
};

// Greedy sets of every size (the recorded intermediate sets) next to the
// top-k baseline sets of every size, all scored by the same evaluator.
inline SweepResult sweep_templates(std::span<const QuestionTemplate> candidates,
                                   TemplateEvaluator& evaluate) {
  SweepResult out;
  const auto trace = greedy_select_templates_traced(
      candidates, [&](std::span<const QuestionTemplate> s) { return evaluate(s); });
  for (const auto& step : trace.steps) {
    out.greedy.push_back({step.templates.size(), step.keywords(), step.performance});
  }
  out.selected = trace.selected;
  auto single = [&](const QuestionTemplate& t) { return evaluate(std::span(&t, 1)); };
  for (std::size_t k = 1; k <= candidates.size(); ++k) {
    const auto set = baseline_select_topk(candidates, single, k);
    out.baseline.push_back({k, set.keywords(), evaluate(set.templates)});
  }
  return out;
}

// set_size,algorithm,map
inline std::string sweep_to_csv(const SweepResult& sweep) {
  std::ostringstream os;
  os << "set_size,algorithm,map\n";
  for (const auto& p : sweep.greedy) os << p.size << ",greedy," << detail::format_double(p.map) << '\n';
  for (const auto& p : sweep.baseline) os << p.size << ",baseline," << detail::format_double(p.map) << '\n';
  return os.str();
}

}  // namespace webqa
