#pragma once

// Ranked snippet retrieval behind a pluggable backend. FixtureCorpus is
// the reproducible offline backend (JSON Lines, one
// {"question": ..., "snippets": [...]} object per line).

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <nlohmann/json.hpp>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "webqa/error.hpp"
#include "webqa/question_gen.hpp"
#include "webqa/text.hpp"

namespace webqa {

struct Snippet {
  std::string text;
  int rank = 1;  // 1-based, backend order within its question
  int result_count = 1;  // snippets returned for the question
  std::size_t question_index = 0;
  Question question;
};

class FetchError : public std::runtime_error {
 public:
  FetchError(std::string question, const std::string& detail)
      : std::runtime_error("fetching '" + question + "': " + detail),
        question_(std::move(question)) {}
  const std::string& question() const { return question_; }

 private:
  std::string question_;
};

// Returns up to max_results snippet texts in backend order. Implementations
// must be safe to call concurrently.
class SnippetSource {
 public:
  virtual ~SnippetSource() = default;
  virtual std::vector<std::string> fetch(const std::string& question_text,
                                         std::size_t max_results) const = 0;
};

class FixtureCorpus final : public SnippetSource {
 public:
  FixtureCorpus() = default;

  static FixtureCorpus load_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    FixtureCorpus corpus;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (text::collapse_whitespace(line).empty()) continue;
      const std::string where = path.string() + ":" + std::to_string(line_no);
      try {
        const auto j = nlohmann::json::parse(line);
        corpus.add(j.at("question").get<std::string>(),
                   j.at("snippets").get<std::vector<std::string>>());
      } catch (const nlohmann::json::exception& e) {
        throw DataError(where + ": " + e.what());
      } catch (const DataError& e) {
        throw DataError(where + ": " + e.what());
      }
    }
    return corpus;
  }

  void add(const std::string& question, std::vector<std::string> snippets) {
    std::string key = text::collapse_whitespace(question);
    if (!entries_.emplace(key, std::move(snippets)).second) {
      throw DataError("duplicate corpus entry for question '" + key + "'");
    }
  }

  std::vector<std::string> fetch(const std::string& question_text,
                                 std::size_t max_results) const override {
    auto it = entries_.find(text::collapse_whitespace(question_text));
    if (it == entries_.end()) return {};
    const auto& all = it->second;
    const std::size_t n = std::min(max_results, all.size());
    return {all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n)};
  }

  std::size_t size() const { return entries_.size(); }
  const std::map<std::string, std::vector<std::string>>& entries() const { return entries_; }

 private:
  std::map<std::string, std::vector<std::string>> entries_;
};

// Caches backend responses per question text. Used in front of live
// backends, where template selection re-issues the same questions.
class CachingSource final : public SnippetSource {
 public:
  explicit CachingSource(const SnippetSource& inner) : inner_(&inner) {}

  std::vector<std::string> fetch(const std::string& question_text,
                                 std::size_t max_results) const override {
    const auto key = std::make_pair(text::collapse_whitespace(question_text), max_results);
    {
      std::lock_guard lock(mutex_);
      if (auto it = cache_.find(key); it != cache_.end()) return it->second;
    }
    auto result = inner_->fetch(question_text, max_results);
    std::lock_guard lock(mutex_);
    return cache_.emplace(key, std::move(result)).first->second;
  }

 private:
  const SnippetSource* inner_;
  mutable std::mutex mutex_;
  mutable std::map<std::pair<std::string, std::size_t>, std::vector<std::string>> cache_;
};

inline std::vector<Snippet> fetch_snippets(const SnippetSource& source, const Question& question,
                                           std::size_t max_per_question = 50,
                                           std::size_t question_index = 0) {
  if (max_per_question == 0) throw UsageError("max_per_question must be >= 1");
  std::vector<std::string> texts;
  try {
    texts = source.fetch(question.text, max_per_question);
  } catch (const FetchError&) {
    throw;
  } catch (const std::exception& e) {
    throw FetchError(question.text, e.what());
  }
  if (texts.size() > max_per_question) texts.resize(max_per_question);
  std::vector<Snippet> out;
  out.reserve(texts.size());
  const int count = static_cast<int>(texts.size());
  for (std::size_t i = 0; i < texts.size(); ++i) {
    out.push_back({std::move(texts[i]), static_cast<int>(i) + 1, count, question_index, question});
  }
  return out;
}

struct FetchFailure {
  std::size_t question_index;
  std::string question;
  std::string detail;
};

struct FetchResult {
  std::vector<Snippet> snippets;  // ordered by (question index, rank)
  std::vector<FetchFailure> failures;
};

// Fetches every question, fanning out over `workers` threads. Output order
// does not depend on scheduling.
inline FetchResult fetch_all(const SnippetSource& source, std::span<const Question> questions,
                             std::size_t max_per_question, std::size_t workers = 1) {
  std::vector<std::vector<Snippet>> per_question(questions.size());
  std::vector<std::optional<std::string>> errors(questions.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < questions.size(); i = next++) {
      try {
        per_question[i] = fetch_snippets(source, questions[i], max_per_question, i);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  const std::size_t n_threads = std::min(std::max<std::size_t>(workers, 1), questions.size());
  if (n_threads <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(work);
  }

  FetchResult result;
  for (std::size_t i = 0; i < questions.size(); ++i) {
    if (errors[i]) result.failures.push_back({i, questions[i].text, *errors[i]});
    for (auto& s : per_question[i]) result.snippets.push_back(std::move(s));
  }
  return result;
}

}  // namespace webqa
