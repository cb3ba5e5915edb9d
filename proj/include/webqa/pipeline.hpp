#pragma once

// End-to-end answering of one KBC query:
//   questions -> fetch -> (filter top k) -> link -> type filter -> features -> rank
// plus construction of the training sets for the snippet filter and the
// answer ranker.

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "webqa/answer_rank.hpp"
#include "webqa/entity_linking.hpp"
#include "webqa/kb_store.hpp"
#include "webqa/logistic.hpp"
#include "webqa/parallel.hpp"
#include "webqa/question_gen.hpp"
#include "webqa/snippet_filter.hpp"
#include "webqa/snippet_source.hpp"

namespace webqa {

// Number of snippets kept by the filter; nullopt keeps all and skips it.
using SnippetK = std::optional<std::size_t>;

inline std::string snippet_k_label(SnippetK k) { return k ? std::to_string(*k) : "all"; }

inline SnippetK parse_snippet_k(const std::string& s) {
  if (s == "all") return std::nullopt;
  std::size_t used = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || v == 0) throw UsageError("snippet count must be a positive integer or 'all': " + s);
  return static_cast<std::size_t>(v);
}

struct PipelineOptions {
  std::size_t max_per_question = 50;
  std::size_t workers = 1;
  double max_distance = kDefaultMaxDistance;
  Hyperparams hyperparams;
  std::uint64_t seed = 17;
};

struct Models {
  std::optional<LogisticModel> filter;
  std::optional<LogisticModel> ranker;
};

struct StageTimings {
  double fetch_s = 0;
  double filter_s = 0;
  double link_s = 0;
  double rank_s = 0;
};

// Everything the pipeline learned about one query before ranking.
struct QueryEvidence {
  KbcQuery query;
  std::vector<Question> questions;
  std::size_t fetched = 0;
  std::vector<Snippet> snippets;  // after filtering
  std::vector<CandidateAnswer> rejected;  // wrong type
  std::vector<std::pair<CandidateAnswer, AnswerFeatures>> candidates;
  std::vector<std::string> failures;
  StageTimings timings;
};

struct QueryAnswer {
  QueryEvidence evidence;
  std::vector<RankedAnswer> ranked;
};

struct TrainingSummary {
  std::size_t positives = 0;
  std::size_t negatives = 0;
  std::size_t resampled_each = 0;
  double final_loss = 0;
};

struct TrainingOutcome {
  LogisticModel model;
  TrainingSummary summary;
};

class Pipeline {
 public:
  Pipeline(const KnowledgeBase& kb, const SnippetSource& source, const Linker& linker,
           const Relatedness& relatedness, PipelineOptions options = {})
      : kb_(&kb), source_(&source), linker_(&linker), relatedness_(&relatedness),
        options_(options) {}

  const KnowledgeBase& kb() const { return *kb_; }
  const PipelineOptions& options() const { return options_; }

  QueryEvidence gather(const KbcQuery& query, std::span<const QuestionTemplate> templates,
                       const LogisticModel* filter, SnippetK k,
                       std::size_t fetch_workers = 1) const {
    using Clock = std::chrono::steady_clock;
    auto seconds = [](Clock::time_point a, Clock::time_point b) {
      return std::chrono::duration<double>(b - a).count();
    };
    kb_->schema(query.relation);
    QueryEvidence ev;
    ev.query = query;
    ev.questions = generate_questions(query, templates);

    auto t0 = Clock::now();
    auto fetched = fetch_all(*source_, ev.questions, options_.max_per_question, fetch_workers);
    for (const auto& f : fetched.failures) ev.failures.push_back(f.question + ": " + f.detail);
    ev.fetched = fetched.snippets.size();

    auto t1 = Clock::now();
    if (k) {
      if (filter == nullptr) throw UsageError("snippet filtering requested without a filter model");
      ev.snippets = filter_snippets(*filter, fetched.snippets, *k);
    } else {
      ev.snippets = std::move(fetched.snippets);
    }

    auto t2 = Clock::now();
    auto extraction = extract_candidates(ev.snippets, *linker_, query);
    for (const auto& f : extraction.failures) {
      ev.failures.push_back("linking snippet " + std::to_string(f.snippet_index) + ": " + f.detail);
    }
    auto typed = partition_by_type(std::move(extraction.candidates), *kb_, query.relation);
    ev.rejected = std::move(typed.rejected);
    for (auto& c : typed.kept) {
      auto features = extract_answer_features(c, ev.snippets, query, *relatedness_,
                                              options_.max_distance);
      ev.candidates.emplace_back(std::move(c), features);
    }
    auto t3 = Clock::now();
    ev.timings = {seconds(t0, t1), seconds(t1, t2), seconds(t2, t3), 0.0};
    return ev;
  }

  QueryAnswer answer(const KbcQuery& query, std::span<const QuestionTemplate> templates,
                     const Models& models, SnippetK k, std::size_t fetch_workers = 1) const {
    if (!models.ranker) throw UsageError("answering needs a ranker model");
    QueryAnswer out;
    out.evidence = gather(query, templates, models.filter ? &*models.filter : nullptr, k,
                          fetch_workers);
    const auto t0 = std::chrono::steady_clock::now();
    out.ranked = rank_answers(*models.ranker, out.evidence.candidates);
    out.evidence.timings.rank_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
  }

  // One example per correctly typed candidate; positive iff it is in the
  // closed-world ground truth.
  std::vector<LabeledExample> ranker_examples(std::span<const KbcQuery> queries,
                                              std::span<const QuestionTemplate> templates) const {
    auto per_query = parallel_map(queries.size(), options_.workers, [&](std::size_t i) {
      const auto& q = queries[i];
      const auto truth = kb_->closed_world_objects(q.subject, q.relation);
      const auto ev = gather(q, templates, nullptr, std::nullopt);
      std::vector<LabeledExample> rows;
      for (const auto& [candidate, features] : ev.candidates) {
        rows.push_back({features.to_vector(), truth.contains(candidate.entity) ? 1 : 0,
                        q.subject.name + "/" + q.relation + " -> " + candidate.entity.name});
      }
      return rows;
    });
    return flatten(std::move(per_query));
  }

  // One example per fetched snippet, labeled by whether it links to the truth.
  std::vector<LabeledExample> filter_examples(std::span<const KbcQuery> queries,
                                              std::span<const QuestionTemplate> templates) const {
    auto per_query = parallel_map(queries.size(), options_.workers, [&](std::size_t i) {
      const auto& q = queries[i];
      const auto truth = kb_->closed_world_objects(q.subject, q.relation);
      const auto questions = generate_questions(q, templates);
      const auto fetched = fetch_all(*source_, questions, options_.max_per_question, 1);
      std::vector<LabeledExample> rows;
      for (const auto& s : fetched.snippets) rows.push_back(snippet_example(s, truth, *linker_));
      return rows;
    });
    return flatten(std::move(per_query));
  }

  TrainingOutcome train_ranker(std::span<const KbcQuery> queries,
                               std::span<const QuestionTemplate> templates) const {
    return fit(ranker_examples(queries, templates), answer_feature_names(), "ranker");
  }

  TrainingOutcome train_filter(std::span<const KbcQuery> queries,
                               std::span<const QuestionTemplate> templates) const {
    return fit(filter_examples(queries, templates), snippet_feature_names(), "snippet filter");
  }

 private:
  static std::vector<LabeledExample> flatten(std::vector<std::vector<LabeledExample>> parts) {
    std::vector<LabeledExample> out;
    for (auto& p : parts) {
      for (auto& e : p) out.push_back(std::move(e));
    }
    return out;
  }

  TrainingOutcome fit(const std::vector<LabeledExample>& examples,
                      const std::vector<std::string>& names, const std::string& what) const {
    TrainingOutcome out;
    for (const auto& e : examples) (e.label == 1 ? out.summary.positives : out.summary.negatives)++;
    if (out.summary.positives == 0 || out.summary.negatives == 0) {
      throw DataError("insufficient data to train the " + what + ": " +
                      std::to_string(out.summary.positives) + " positive, " +
                      std::to_string(out.summary.negatives) + " negative examples");
    }
    const auto balanced = resample_balanced(examples, options_.seed);
    out.summary.resampled_each = balanced.size() / 2;
    auto trained = train_logistic(balanced, names, options_.hyperparams, options_.seed);
    out.summary.final_loss = trained.loss_history.back();
    out.model = std::move(trained.model);
    return out;
  }

  const KnowledgeBase* kb_;
  const SnippetSource* source_;
  const Linker* linker_;
  const Relatedness* relatedness_;
  PipelineOptions options_;
};

}  // namespace webqa
