#pragma once

// Candidate answer features (snippet evidence fused with KB relatedness)
// and probability ranking.

#include <algorithm>
#include <cstddef>
#include <limits>
#include <map>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "webqa/entity_linking.hpp"
#include "webqa/kb_store.hpp"
#include "webqa/logistic.hpp"
#include "webqa/text.hpp"

namespace webqa {

inline constexpr double kDefaultMaxDistance = 50.0;

struct AnswerFeatures {
  double snippet_count = 0;
  double average_rank = 0;
  double average_distance = 0;
  double relatedness = 0;

  std::vector<double> to_vector() const {
    return {snippet_count, average_rank, average_distance, relatedness};
  }
};

inline const std::vector<std::string>& answer_feature_names() {
  static const std::vector<std::string> names{"snippet_count", "average_rank", "average_distance",
                                              "relatedness"};
  return names;
}

// Tokens strictly between [a_start, a_end) and [b_start, b_end); 0 when the
// spans touch or overlap.
inline std::size_t span_gap(std::size_t a_start, std::size_t a_end, std::size_t b_start,
                            std::size_t b_end) {
  if (b_start >= a_end) return b_start - a_end;
  if (a_start >= b_end) return a_start - b_end;
  return 0;
}

// Whitespace-token positions whose normalized form is a word of the subject name.
inline std::vector<std::size_t> subject_positions(std::string_view snippet, const EntityId& subject) {
  const auto runs = text::word_runs(subject.display_name());
  const std::set<std::string> words(runs.begin(), runs.end());
  std::vector<std::size_t> out;
  const auto tokens = text::normalized_tokens(snippet);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (words.contains(tokens[i])) out.push_back(i);
  }
  return out;
}

// snippet_count: distinct snippets with a mention. average_rank: mean rank of
// those snippets. average_distance: mean over those snippets of the smallest
// token gap between a candidate mention and a subject-name word, max_distance
// when the snippet lacks the subject. relatedness: KB relatedness to the subject.
inline AnswerFeatures extract_answer_features(const CandidateAnswer& candidate,
                                              std::span<const Snippet> snippets,
                                              const KbcQuery& query, const Relatedness& related,
                                              double max_distance = kDefaultMaxDistance) {
  if (candidate.mentions.empty()) throw UsageError("candidate without mentions: " + candidate.entity.name);
  std::map<std::size_t, std::vector<const LinkedMention*>> by_snippet;
  for (const auto& ref : candidate.mentions) by_snippet[ref.snippet_index].push_back(&ref.mention);

  AnswerFeatures f;
  double rank_sum = 0;
  double distance_sum = 0;
  for (const auto& [idx, mentions] : by_snippet) {
    const Snippet& s = snippets[idx];
    rank_sum += s.rank;
    double best = max_distance;
    for (std::size_t pos : subject_positions(s.text, query.subject)) {
      for (const auto* m : mentions) {
        best = std::min(best, static_cast<double>(span_gap(m->start, m->end, pos, pos + 1)));
      }
    }
    distance_sum += best;
  }
  const double n = static_cast<double>(by_snippet.size());
  f.snippet_count = n;
  f.average_rank = rank_sum / n;
  f.average_distance = distance_sum / n;
  f.relatedness = related(candidate.entity, query.subject);
  return f;
}

struct RankedAnswer {
  EntityId entity;
  double probability = 0.0;
};

// Descending probability; ties by more snippets, then smaller entity id.
inline std::vector<RankedAnswer> rank_answers(
    const LogisticModel& model,
    std::span<const std::pair<CandidateAnswer, AnswerFeatures>> candidates) {
  struct Row {
    RankedAnswer answer;
    double snippet_count;
  };
  std::vector<Row> rows;
  rows.reserve(candidates.size());
  for (const auto& [candidate, features] : candidates) {
    rows.push_back({{candidate.entity, predict_proba(model, features.to_vector())},
                    features.snippet_count});
  }
  std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    if (a.answer.probability != b.answer.probability) return a.answer.probability > b.answer.probability;
    if (a.snippet_count != b.snippet_count) return a.snippet_count > b.snippet_count;
    return a.answer.entity < b.answer.entity;
  });
  std::vector<RankedAnswer> out;
  out.reserve(rows.size());
  for (auto& r : rows) out.push_back(std::move(r.answer));
  return out;
}

}  // namespace webqa
