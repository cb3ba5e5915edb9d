#pragma once

// Keyword questions from KBC queries, and template-set selection.

#include <algorithm>
#include <cstddef>
#include <functional>
#include <map>
#include <nlohmann/json.hpp>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "webqa/error.hpp"
#include "webqa/kb_store.hpp"

namespace webqa {

// A single lowercase-by-convention keyword appended to the subject name.
class QuestionTemplate {
 public:
  explicit QuestionTemplate(std::string keyword) : keyword_(std::move(keyword)) {
    if (keyword_.empty()) throw UsageError("empty question template");
    if (std::any_of(keyword_.begin(), keyword_.end(), text::is_space)) {
      throw UsageError("question template contains whitespace: '" + keyword_ + "'");
    }
  }

  const std::string& keyword() const { return keyword_; }
  auto operator<=>(const QuestionTemplate&) const = default;

 private:
  std::string keyword_;
};

struct Question {
  std::string text;
  QuestionTemplate tmpl;
  KbcQuery query;
};

struct TemplateSet {
  std::vector<QuestionTemplate> templates;
  double performance = 0.0;

  std::vector<std::string> keywords() const {
    std::vector<std::string> out;
    for (const auto& t : templates) out.push_back(t.keyword());
    return out;
  }
};

inline std::vector<QuestionTemplate> make_templates(const std::vector<std::string>& keywords) {
  std::vector<QuestionTemplate> out;
  for (const auto& k : keywords) out.emplace_back(k);
  return out;
}

// "Marvin_Minsky" + born -> "Marvin Minsky born", one question per template.
inline std::vector<Question> generate_questions(const KbcQuery& query,
                                                std::span<const QuestionTemplate> templates) {
  if (templates.empty()) throw UsageError("generate_questions needs at least one template");
  std::vector<Question> out;
  out.reserve(templates.size());
  const std::string subject = query.subject.display_name();
  for (const auto& t : templates) {
    out.push_back({subject + " " + t.keyword(), t, query});
  }
  return out;
}

// Maps a template set to a benchmark score (MAP). Must be deterministic
// for the duration of one selection run.
using SetEvaluator = std::function<double(std::span<const QuestionTemplate>)>;

struct GreedyTrace {
  // steps[i] holds i + 1 templates and the score the evaluator gave them.
  std::vector<TemplateSet> steps;
  TemplateSet selected;
  std::size_t evaluations = 0;
};

// Greedy forward selection. Each round tries every remaining template
// against the current set and keeps the best extension; equal scores go to
// the lexicographically smaller keyword. The result is the recorded set
// with the highest score, the smallest such set on ties.
inline GreedyTrace greedy_select_templates_traced(std::span<const QuestionTemplate> candidates,
                                                  const SetEvaluator& evaluate) {
  if (candidates.empty()) throw UsageError("greedy template selection needs candidates");
  std::vector<QuestionTemplate> remaining(candidates.begin(), candidates.end());
  std::sort(remaining.begin(), remaining.end());
  if (std::adjacent_find(remaining.begin(), remaining.end()) != remaining.end()) {
    throw UsageError("duplicate candidate templates");
  }

  GreedyTrace trace;
  std::vector<QuestionTemplate> current;
  while (!remaining.empty()) {
    std::size_t best = 0;
    double best_score = 0.0;
    for (std::size_t j = 0; j < remaining.size(); ++j) {
      std::vector<QuestionTemplate> trial = current;
      trial.push_back(remaining[j]);
      const double score = evaluate(trial);
      ++trace.evaluations;
      if (j == 0 || score > best_score) {
        best = j;
        best_score = score;
      }
    }
    current.push_back(remaining[best]);
    remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(best));
    trace.steps.push_back({current, best_score});
  }

  const TemplateSet* chosen = &trace.steps.front();
  for (const auto& step : trace.steps) {
    if (step.performance > chosen->performance) chosen = &step;
  }
  trace.selected = *chosen;
  return trace;
}

inline TemplateSet greedy_select_templates(std::span<const QuestionTemplate> candidates,
                                           const SetEvaluator& evaluate) {
  return greedy_select_templates_traced(candidates, evaluate).selected;
}

// Top-k templates by individual score, ties to the smaller keyword.
// performance holds the k-th template's individual score, not the set's.
inline TemplateSet baseline_select_topk(
    std::span<const QuestionTemplate> candidates,
    const std::function<double(const QuestionTemplate&)>& evaluate_single, std::size_t k) {
  if (k == 0) throw UsageError("baseline top-k needs k >= 1");
  if (k > candidates.size()) {
    throw UsageError("baseline top-k: k = " + std::to_string(k) + " exceeds " +
                     std::to_string(candidates.size()) + " candidates");
  }
  std::vector<std::pair<double, QuestionTemplate>> scored;
  for (const auto& t : candidates) scored.emplace_back(evaluate_single(t), t);
  std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  TemplateSet out;
  for (std::size_t i = 0; i < k; ++i) out.templates.push_back(scored[i].second);
  out.performance = scored[k - 1].first;
  return out;
}

// Memoizes an evaluator on the sorted keyword set, so {a,b} and {b,a}
// share one evaluation.
class MemoizedEvaluator {
 public:
  explicit MemoizedEvaluator(SetEvaluator inner) : inner_(std::move(inner)) {}

  double operator()(std::span<const QuestionTemplate> set) {
    std::vector<QuestionTemplate> key(set.begin(), set.end());
    std::sort(key.begin(), key.end());
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    ++misses_;
    const double score = inner_(key);
    cache_.emplace(std::move(key), score);
    return score;
  }

  std::size_t misses() const { return misses_; }

 private:
  SetEvaluator inner_;
  std::map<std::vector<QuestionTemplate>, double> cache_;
  std::size_t misses_ = 0;
};

inline nlohmann::json template_set_to_json(const std::string& relation, const TemplateSet& set) {
  return {{"relation", relation}, {"templates", set.keywords()}, {"performance", set.performance}};
}

struct StoredTemplateSet {
  std::string relation;
  TemplateSet set;
};

inline StoredTemplateSet template_set_from_json(const nlohmann::json& j) {
  try {
    StoredTemplateSet out;
    out.relation = j.at("relation").get<std::string>();
    out.set.templates = make_templates(j.at("templates").get<std::vector<std::string>>());
    out.set.performance = j.at("performance").get<double>();
    if (out.set.templates.empty()) throw DataError("template set is empty");
    std::set<QuestionTemplate> seen(out.set.templates.begin(), out.set.templates.end());
    if (seen.size() != out.set.templates.size()) throw DataError("duplicate templates in set");
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed template set: ") + e.what());
  }
}

}  // namespace webqa
