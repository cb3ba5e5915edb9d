#include <gtest/gtest.h>

#include <chrono>
#include <cstdlib>
#include <thread>

#include "support.hpp"
#include "webqa/live.hpp"

using namespace webqa;

namespace {

// Local HTTP server on an ephemeral port, stopped on destruction.
class LocalServer {
 public:
  LocalServer() {
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~LocalServer() {
    server_.stop();
    thread_.join();
  }
  httplib::Server& server() { return server_; }
  std::string url(const std::string& path) const { return "http://127.0.0.1:" + std::to_string(port_) + path; }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

struct EnvVar {
  EnvVar(const char* name, const char* value) : name_(name) { ::setenv(name, value, 1); }
  ~EnvVar() { ::unsetenv(name_); }
  const char* name_;
};

}  // namespace

TEST(RateLimiter, SpacesCalls) {
  RateLimiter limiter(50.0);  // 20 ms apart
  const auto start = std::chrono::steady_clock::now();
  for (int i = 0; i < 4; ++i) limiter.acquire();
  const auto elapsed = std::chrono::steady_clock::now() - start;
  EXPECT_GE(elapsed, std::chrono::milliseconds(55));
}

TEST(HttpSearchSource, PagesThroughResultsAndSendsKey) {
  EnvVar key("WEBQA_TEST_SEARCH_KEY", "secret");
  LocalServer srv;
  std::vector<std::string> seen_starts;
  std::mutex mu;
  srv.server().Get("/search", [&](const httplib::Request& req, httplib::Response& res) {
    if (req.get_param_value("key") != "secret" || req.get_param_value("cx") != "engine") {
      res.status = 403;
      return;
    }
    const int start = std::stoi(req.get_param_value("start"));
    const int num = std::stoi(req.get_param_value("num"));
    {
      std::lock_guard lock(mu);
      seen_starts.push_back(req.get_param_value("start"));
    }
    nlohmann::json items = nlohmann::json::array();
    for (int i = start; i < start + num && i <= 23; ++i) {
      items.push_back({{"snippet", req.get_param_value("q") + " result " + std::to_string(i)}});
    }
    res.set_content(nlohmann::json{{"items", items}}.dump(), "application/json");
  });

  LiveSearchConfig cfg;
  cfg.endpoint = srv.url("/search");
  cfg.api_key_env = "WEBQA_TEST_SEARCH_KEY";
  cfg.requests_per_second = 0;  // unlimited
  cfg.results_per_request = 10;
  cfg.extra_params = {{"cx", "engine"}};
  HttpSearchSource source(cfg);

  const auto texts = source.fetch("Marvin Minsky born", 50);
  ASSERT_EQ(texts.size(), 23u);
  EXPECT_EQ(texts.front(), "Marvin Minsky born result 1");
  EXPECT_EQ(texts.back(), "Marvin Minsky born result 23");
  EXPECT_EQ(seen_starts, (std::vector<std::string>{"1", "11", "21"}));

  const auto capped = source.fetch("x", 5);
  EXPECT_EQ(capped.size(), 5u);

  // Through the generic fetch path: ranks and counts assigned downstream.
  const KbcQuery q{EntityId("Marvin_Minsky"), "wasBornIn"};
  const auto snippets = fetch_snippets(source, generate_questions(q, make_templates({"born"})).front(), 12);
  ASSERT_EQ(snippets.size(), 12u);
  EXPECT_EQ(snippets[11].rank, 12);
}

TEST(HttpSearchSource, HttpErrorsBecomeFetchErrors) {
  EnvVar key("WEBQA_TEST_SEARCH_KEY", "wrong");
  LocalServer srv;
  srv.server().Get("/search", [](const httplib::Request&, httplib::Response& res) { res.status = 500; });
  LiveSearchConfig cfg;
  cfg.endpoint = srv.url("/search");
  cfg.api_key_env = "WEBQA_TEST_SEARCH_KEY";
  cfg.requests_per_second = 0;
  HttpSearchSource source(cfg);
  EXPECT_THROW(source.fetch("q", 10), FetchError);
}

TEST(HttpSearchSource, MissingKeyOrSchemeIsUsageError) {
  LiveSearchConfig cfg;
  cfg.endpoint = "http://127.0.0.1:1/search";
  cfg.api_key_env = "WEBQA_TEST_UNSET_VARIABLE";
  EXPECT_THROW(HttpSearchSource{cfg}, UsageError);
  cfg.api_key_env = "";
  cfg.endpoint = "127.0.0.1/search";
  EXPECT_THROW(HttpSearchSource{cfg}, UsageError);
}

TEST(RemoteLinker, MapsCharacterOffsetsToTokens) {
  EnvVar token("WEBQA_TEST_LINKER_TOKEN", "tok");
  LocalServer srv;
  srv.server().Get("/tag", [](const httplib::Request& req, httplib::Response& res) {
    const std::string text = req.get_param_value("text");
    const auto at = text.find("New York City");
    nlohmann::json annotations = nlohmann::json::array();
    annotations.push_back({{"spot", "New York City"}, {"start", at}, {"end", at + 13},
                           {"title", "New York City"}, {"rho", 0.6}});
    annotations.push_back({{"spot", "surgeon"}, {"start", 0}, {"end", 6}, {"title", "Marvin Minsky"}, {"rho", 0.05}});
    annotations.push_back({{"spot", "eye"}, {"start", 1}, {"end", 2}, {"title", "Ophthalmology"}, {"rho", 0.9}});
    if (req.get_param_value("gcube-token") != "tok") annotations = nlohmann::json::array();
    res.set_content(nlohmann::json{{"annotations", annotations}}.dump(), "application/json");
  });
  RemoteLinker linker(webqa::testing::fixture_kb(), {srv.url("/tag"), "WEBQA_TEST_LINKER_TOKEN", 0.1, std::chrono::seconds(5)});
  const auto m = linker.link("Marvin was born in New York City, to an eye surgeon");
  ASSERT_EQ(m.size(), 1u);  // low rho and entities outside the KB are dropped
  EXPECT_EQ(m[0].entity, EntityId("New_York_City"));
  EXPECT_EQ(m[0].start, 4u);
  EXPECT_EQ(m[0].end, 7u);
  EXPECT_EQ(m[0].surface, "New York City,");
}
