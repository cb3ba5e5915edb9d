#pragma once

// Candidate answer extraction: link mention spans in snippets to KB
// entities, aggregate per entity, drop candidates with the wrong type.

#include <algorithm>
#include <cstddef>
#include <map>
#include <numeric>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "webqa/kb_store.hpp"
#include "webqa/snippet_source.hpp"
#include "webqa/text.hpp"

namespace webqa {

// Mention over whitespace tokens [start, end) of the snippet text.
struct LinkedMention {
  EntityId entity;
  std::size_t start = 0;
  std::size_t end = 0;
  std::string surface;

  bool operator==(const LinkedMention&) const = default;
};

// Returns non-overlapping mentions sorted by start offset.
class Linker {
 public:
  virtual ~Linker() = default;
  virtual std::vector<LinkedMention> link(std::string_view text) const = 0;
};

// Greedy longest match, left to right, over the KB label dictionary.
// A label shared by several entities resolves to the entity with the most
// facts, then the smaller id.
class DictionaryLinker final : public Linker {
 public:
  explicit DictionaryLinker(const KnowledgeBase& kb) {
    for (const auto& [label, entities] : kb.labels()) {
      std::vector<std::string> tokens = text::normalized_tokens(label);
      if (tokens.empty() ||
          std::any_of(tokens.begin(), tokens.end(), [](const auto& t) { return t.empty(); })) {
        continue;
      }
      const EntityId* best = nullptr;
      for (const auto& e : entities) {
        if (best == nullptr || kb.fact_count(e) > kb.fact_count(*best)) best = &e;
      }
      max_tokens_ = std::max(max_tokens_, tokens.size());
      dictionary_.emplace(join(tokens, 0, tokens.size()), *best);
    }
  }

  std::vector<LinkedMention> link(std::string_view snippet) const override {
    const auto raw = text::split_whitespace(snippet);
    std::vector<std::string> tokens;
    tokens.reserve(raw.size());
    for (auto t : raw) tokens.push_back(text::normalize_token(t));

    std::vector<LinkedMention> out;
    std::size_t i = 0;
    while (i < tokens.size()) {
      std::size_t matched = 0;
      if (!tokens[i].empty()) {
        const std::size_t longest = std::min(max_tokens_, tokens.size() - i);
        for (std::size_t len = longest; len >= 1 && matched == 0; --len) {
          bool usable = true;
          for (std::size_t k = i; k < i + len; ++k) usable = usable && !tokens[k].empty();
          if (!usable) continue;
          auto it = dictionary_.find(join(tokens, i, i + len));
          if (it == dictionary_.end()) continue;
          std::string surface;
          for (std::size_t k = i; k < i + len; ++k) {
            if (k > i) surface.push_back(' ');
            surface.append(raw[k]);
          }
          out.push_back({it->second, i, i + len, std::move(surface)});
          matched = len;
        }
      }
      i += matched == 0 ? 1 : matched;
    }
    return out;
  }

 private:
  static std::string join(const std::vector<std::string>& tokens, std::size_t from, std::size_t to) {
    std::string key;
    for (std::size_t k = from; k < to; ++k) {
      if (k > from) key.push_back(' ');
      key.append(tokens[k]);
    }
    return key;
  }

  std::unordered_map<std::string, EntityId> dictionary_;
  std::size_t max_tokens_ = 0;
};

struct MentionRef {
  std::size_t snippet_index = 0;  // into the snippet list given to extract_candidates
  LinkedMention mention;
};

struct CandidateAnswer {
  EntityId entity;
  std::vector<MentionRef> mentions;
};

struct LinkFailure {
  std::size_t snippet_index;
  std::string detail;
};

struct CandidateExtraction {
  std::vector<CandidateAnswer> candidates;  // by first mention in (question, rank) order
  std::vector<LinkFailure> failures;
  std::size_t total_mentions = 0;  // excluding subject self-links
};

// Links every snippet and groups mentions by entity. The query subject is
// never a candidate.
inline CandidateExtraction extract_candidates(std::span<const Snippet> snippets,
                                              const Linker& linker, const KbcQuery& query) {
  std::vector<std::size_t> order(snippets.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (snippets[a].question_index != snippets[b].question_index) {
      return snippets[a].question_index < snippets[b].question_index;
    }
    return snippets[a].rank < snippets[b].rank;
  });

  CandidateExtraction out;
  std::map<EntityId, std::size_t> slot;
  for (std::size_t idx : order) {
    std::vector<LinkedMention> mentions;
    try {
      mentions = linker.link(snippets[idx].text);
    } catch (const std::exception& e) {
      out.failures.push_back({idx, e.what()});
      continue;
    }
    for (auto& m : mentions) {
      if (m.entity == query.subject) continue;
      auto [it, inserted] = slot.emplace(m.entity, out.candidates.size());
      if (inserted) out.candidates.push_back({m.entity, {}});
      out.candidates[it->second].mentions.push_back({idx, std::move(m)});
      ++out.total_mentions;
    }
  }
  return out;
}

struct TypeFilterResult {
  std::vector<CandidateAnswer> kept;
  std::vector<CandidateAnswer> rejected;
};

// Splits candidates by whether their KB types contain the relation's
// object type. Input order is preserved in both lists.
inline TypeFilterResult partition_by_type(std::vector<CandidateAnswer> candidates,
                                          const KnowledgeBase& kb, const std::string& relation) {
  const std::string& wanted = kb.schema(relation).object_type;
  TypeFilterResult out;
  for (auto& c : candidates) {
    (kb.entity_types(c.entity).contains(wanted) ? out.kept : out.rejected).push_back(std::move(c));
  }
  return out;
}

inline std::vector<CandidateAnswer> type_filter(std::vector<CandidateAnswer> candidates,
                                                const KnowledgeBase& kb,
                                                const std::string& relation) {
  return partition_by_type(std::move(candidates), kb, relation).kept;
}

}  // namespace webqa
