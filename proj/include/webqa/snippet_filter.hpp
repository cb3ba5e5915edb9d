#pragma once

// Query-driven snippet filtering: score each snippet with a logistic model
// over three cheap features and keep the top k.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "webqa/entity_linking.hpp"
#include "webqa/logistic.hpp"
#include "webqa/snippet_source.hpp"
#include "webqa/text.hpp"

namespace webqa {

struct SnippetFeatures {
  int original_rank = 1;
  int has_template_keyword = 0;
  int subject_word_hits = 0;  // distinct words of the subject name present

  bool operator==(const SnippetFeatures&) const = default;
};

inline SnippetFeatures extract_snippet_features(const Snippet& snippet) {
  const auto runs = text::word_runs(snippet.text);
  const std::set<std::string> words(runs.begin(), runs.end());
  SnippetFeatures f;
  f.original_rank = snippet.rank;
  f.has_template_keyword = words.contains(text::fold_case(snippet.question.tmpl.keyword())) ? 1 : 0;
  const auto subject_runs = text::word_runs(snippet.question.query.subject.display_name());
  const std::set<std::string> name_words(subject_runs.begin(), subject_runs.end());
  for (const auto& w : name_words) f.subject_word_hits += words.contains(w) ? 1 : 0;
  return f;
}

inline const std::vector<std::string>& snippet_feature_names() {
  static const std::vector<std::string> names{"original_rank", "has_template_keyword",
                                              "subject_word_hits"};
  return names;
}

// Model input: rank scaled to [0,1] by the question's result count, then
// the two match features as-is.
inline std::vector<double> snippet_feature_vector(const SnippetFeatures& f, int result_count) {
  const double rank = result_count > 1
                          ? static_cast<double>(f.original_rank - 1) / (result_count - 1)
                          : 0.0;
  return {rank, static_cast<double>(f.has_template_keyword),
          static_cast<double>(f.subject_word_hits)};
}

inline std::vector<double> snippet_feature_vector(const Snippet& s) {
  return snippet_feature_vector(extract_snippet_features(s), s.result_count);
}

// 1 iff the linker finds any ground-truth entity in the snippet.
inline int label_snippet(const Snippet& snippet, const std::set<EntityId>& truth,
                         const Linker& linker) {
  if (truth.empty()) return 0;
  for (const auto& m : linker.link(snippet.text)) {
    if (truth.contains(m.entity)) return 1;
  }
  return 0;
}

inline LabeledExample snippet_example(const Snippet& s, const std::set<EntityId>& truth,
                                      const Linker& linker) {
  return {snippet_feature_vector(s), label_snippet(s, truth, linker),
          s.question.text + " #" + std::to_string(s.rank)};
}

inline TrainResult train_filter(std::span<const LabeledExample> examples, const Hyperparams& hp,
                                std::uint64_t seed) {
  return train_resampled(examples, snippet_feature_names(), hp, seed);
}

// Reranks by descending model probability (ties: lower original rank, then
// lower question index) and keeps the first min(k, n).
inline std::vector<Snippet> filter_snippets(const LogisticModel& model,
                                            std::span<const Snippet> snippets, std::size_t k) {
  if (k == 0) throw UsageError("snippet filter k must be >= 1");
  std::vector<std::pair<double, std::size_t>> scored;
  scored.reserve(snippets.size());
  for (std::size_t i = 0; i < snippets.size(); ++i) {
    scored.emplace_back(predict_proba(model, snippet_feature_vector(snippets[i])), i);
  }
  std::stable_sort(scored.begin(), scored.end(), [&](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    const auto& sa = snippets[a.second];
    const auto& sb = snippets[b.second];
    if (sa.rank != sb.rank) return sa.rank < sb.rank;
    return sa.question_index < sb.question_index;
  });
  const std::size_t n = std::min(k, scored.size());
  std::vector<Snippet> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(snippets[scored[i].second]);
  return out;
}

}  // namespace webqa
