#pragma once

// Network adapters, used only when the CLI runs with --live:
//   HttpSearchSource   search API returning {"items":[{"snippet":...}]}
//                      pages (Custom Search style), rate limited
//   RemoteLinker       TagMe-style annotation service returning
//                      {"annotations":[{"start","end","title","rho"}]}
// Both read their credentials from environment variables.

#include <httplib.h>

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <map>
#include <mutex>
#include <nlohmann/json.hpp>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "webqa/entity_linking.hpp"
#include "webqa/error.hpp"
#include "webqa/snippet_source.hpp"
#include "webqa/text.hpp"

namespace webqa {

// Spaces calls at least 1 / per_second apart across all threads.
class RateLimiter {
 public:
  using Clock = std::chrono::steady_clock;

  explicit RateLimiter(double per_second)
      : interval_(per_second > 0 ? std::chrono::duration_cast<Clock::duration>(
                                       std::chrono::duration<double>(1.0 / per_second))
                                 : Clock::duration::zero()) {}

  void acquire() {
    Clock::time_point slot;
    {
      std::lock_guard lock(mutex_);
      const auto now = Clock::now();
      slot = std::max(now, next_);
      next_ = slot + interval_;
    }
    std::this_thread::sleep_until(slot);
  }

 private:
  Clock::duration interval_;
  std::mutex mutex_;
  Clock::time_point next_{};
};

namespace detail {

struct UrlParts {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

inline UrlParts split_url(const std::string& url) {
  const auto scheme = url.find("://");
  if (scheme == std::string::npos) throw UsageError("endpoint needs a scheme: " + url);
  const auto slash = url.find('/', scheme + 3);
  if (slash == std::string::npos) return {url, "/"};
  return {url.substr(0, slash), url.substr(slash)};
}

inline std::string read_env(const std::string& var) {
  if (var.empty()) return {};
  const char* v = std::getenv(var.c_str());
  if (v == nullptr || *v == '\0') throw UsageError("environment variable " + var + " is not set");
  return v;
}

inline nlohmann::json get_json(const UrlParts& url, const httplib::Params& params,
                               std::chrono::seconds timeout) {
  httplib::Client client(url.origin);
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  auto res = client.Get(url.path, params, httplib::Headers{});
  if (!res) throw std::runtime_error("HTTP request failed: " + httplib::to_string(res.error()));
  if (res->status != 200) throw std::runtime_error("HTTP status " + std::to_string(res->status));
  try {
    return nlohmann::json::parse(res->body);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("invalid JSON response: ") + e.what());
  }
}

}  // namespace detail

struct LiveSearchConfig {
  std::string endpoint;
  std::string api_key_env = "WEBQA_SEARCH_API_KEY";
  double requests_per_second = 1.0;
  std::size_t results_per_request = 10;
  std::map<std::string, std::string> extra_params;  // e.g. {"cx": "<engine id>"}
  std::chrono::seconds timeout{20};
};

class HttpSearchSource final : public SnippetSource {
 public:
  explicit HttpSearchSource(LiveSearchConfig config)
      : config_(std::move(config)), url_(detail::split_url(config_.endpoint)),
        api_key_(detail::read_env(config_.api_key_env)), limiter_(config_.requests_per_second) {
    if (config_.results_per_request == 0) throw UsageError("results_per_request must be >= 1");
  }

  std::vector<std::string> fetch(const std::string& question_text,
                                 std::size_t max_results) const override {
    std::vector<std::string> out;
    while (out.size() < max_results) {
      const std::size_t want = std::min(config_.results_per_request, max_results - out.size());
      httplib::Params params{{"q", question_text},
                             {"num", std::to_string(want)},
                             {"start", std::to_string(out.size() + 1)}};
      if (!api_key_.empty()) params.emplace("key", api_key_);
      for (const auto& [k, v] : config_.extra_params) params.emplace(k, v);
      limiter_.acquire();
      nlohmann::json page;
      try {
        page = detail::get_json(url_, params, config_.timeout);
      } catch (const std::exception& e) {
        throw FetchError(question_text, e.what());
      }
      const auto items = page.find("items");
      if (items == page.end() || !items->is_array() || items->empty()) break;
      for (const auto& item : *items) {
        if (out.size() == max_results) break;
        out.push_back(item.value("snippet", ""));
      }
      if (items->size() < want) break;
    }
    return out;
  }

 private:
  LiveSearchConfig config_;
  detail::UrlParts url_;
  std::string api_key_;
  mutable RateLimiter limiter_;
};

struct RemoteLinkerConfig {
  std::string endpoint;
  std::string token_env = "WEBQA_LINKER_TOKEN";
  double min_rho = 0.1;
  std::chrono::seconds timeout{20};
};

// Maps annotation character offsets onto whitespace tokens. Titles are
// turned into ids by replacing spaces with underscores; annotations for
// entities outside the KB or below min_rho are dropped.
class RemoteLinker final : public Linker {
 public:
  RemoteLinker(const KnowledgeBase& kb, RemoteLinkerConfig config)
      : kb_(&kb), config_(std::move(config)), url_(detail::split_url(config_.endpoint)),
        token_(detail::read_env(config_.token_env)) {}

  std::vector<LinkedMention> link(std::string_view snippet) const override {
    httplib::Params params{{"text", std::string(snippet)}, {"lang", "en"}};
    if (!token_.empty()) params.emplace("gcube-token", token_);
    const auto response = detail::get_json(url_, params, config_.timeout);

    const auto tokens = text::split_whitespace(snippet);
    std::vector<std::pair<std::size_t, std::size_t>> spans;  // byte [begin, end) per token
    for (auto t : tokens) {
      const auto begin = static_cast<std::size_t>(t.data() - snippet.data());
      spans.emplace_back(begin, begin + t.size());
    }

    std::vector<LinkedMention> mentions;
    for (const auto& a : response.value("annotations", nlohmann::json::array())) {
      if (a.value("rho", 0.0) < config_.min_rho) continue;
      std::string title = a.value("title", "");
      std::replace(title.begin(), title.end(), ' ', '_');
      EntityId entity(title);
      if (!kb_->contains(entity)) continue;
      const auto begin = a.value("start", std::size_t{0});
      const auto end = a.value("end", std::size_t{0});
      std::size_t first = tokens.size();
      std::size_t last = 0;
      for (std::size_t i = 0; i < spans.size(); ++i) {
        if (spans[i].first < end && begin < spans[i].second) {
          first = std::min(first, i);
          last = i + 1;
        }
      }
      if (first >= last) continue;
      std::string surface(snippet.substr(spans[first].first, spans[last - 1].second - spans[first].first));
      mentions.push_back({std::move(entity), first, last, std::move(surface)});
    }
    std::stable_sort(mentions.begin(), mentions.end(),
                     [](const auto& a, const auto& b) { return a.start < b.start; });
    std::vector<LinkedMention> out;
    for (auto& m : mentions) {
      if (out.empty() || m.start >= out.back().end) out.push_back(std::move(m));
    }
    return out;
  }

 private:
  const KnowledgeBase* kb_;
  RemoteLinkerConfig config_;
  detail::UrlParts url_;
  std::string token_;
};

}  // namespace webqa
