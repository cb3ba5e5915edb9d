#pragma once

#include <array>
#include <cstdio>
#include <cstdlib>
#include <sys/wait.h>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "webqa/kb_store.hpp"
#include "webqa/snippet_source.hpp"

namespace webqa::testing {

inline std::filesystem::path fixture_dir() { return WEBQA_FIXTURE_DIR; }

inline KbPaths fixture_paths() {
  const auto d = fixture_dir();
  return {d / "facts.tsv", d / "types.tsv", d / "labels.tsv", d / "schemas.tsv"};
}

inline const KnowledgeBase& fixture_kb() {
  static const KnowledgeBase kb = load_kb(fixture_paths());
  return kb;
}

inline const FixtureCorpus& fixture_corpus() {
  static const FixtureCorpus corpus = FixtureCorpus::load_jsonl(fixture_dir() / "corpus.jsonl");
  return corpus;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

inline void write_text(const std::filesystem::path& p, const std::string& content) {
  std::filesystem::create_directories(p.parent_path());
  std::ofstream(p, std::ios::binary) << content;
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("webqa-test-" + std::to_string(rd()) + "-" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

struct CommandResult {
  int exit_code = -1;
  std::string out;  // stdout
  std::string err;  // stderr
};

// Runs the CLI with the given argument string; stdout and stderr are
// captured through files so both are available.
inline CommandResult run_cli(const std::string& args) {
  TempDir tmp;
  const auto out = tmp.path() / "stdout";
  const auto err = tmp.path() / "stderr";
  const std::string cmd = std::string("\"") + WEBQA_CLI + "\" " + args + " >\"" + out.string() +
                          "\" 2>\"" + err.string() + "\"";
  const int status = std::system(cmd.c_str());
  CommandResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = read_file(out);
  r.err = read_file(err);
  return r;
}

inline std::string fixture_config() { return "--config \"" + (fixture_dir() / "webqa.toml").string() + "\""; }

// A snippet detached from any real question, for unit-level checks.
inline Snippet make_snippet(std::string text, int rank, int count) {
  Question q{"placeholder", QuestionTemplate("placeholder"), {EntityId("Nobody"), "wasBornIn"}};
  return {std::move(text), rank, count, 0, std::move(q)};
}

}  // namespace webqa::testing
