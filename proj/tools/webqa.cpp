// webqa command-line tool. See README.md for a walkthrough.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <nlohmann/json.hpp>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "webqa/evaluation.hpp"
#include "webqa/live.hpp"
#include "webqa/pipeline.hpp"

namespace fs = std::filesystem;
using namespace webqa;

namespace {

struct Settings {
  std::string config;
  std::string facts, types, labels, schemas, corpus;
  std::string models_dir = "models";
  std::string templates_dir = "templates";
  std::string reports_dir = "reports";
  std::size_t max_per_question = 50;
  std::string filter_k = "10";
  double max_distance = kDefaultMaxDistance;
  std::uint64_t seed = 17;
  std::uint64_t split_seed = 7;
  std::size_t train_queries = 30;
  std::size_t test_queries = 10;
  std::size_t workers = 1;
  std::string ap_mode = "standard";
  double learning_rate = Hyperparams{}.learning_rate;
  int epochs = Hyperparams{}.epochs;
  double l2 = Hyperparams{}.l2;

  bool live = false;
  std::string search_endpoint;
  std::string search_key_env = "WEBQA_SEARCH_API_KEY";
  double search_rate = 1.0;
  std::size_t search_results = 10;
  std::vector<std::string> search_params;
  std::string linker_endpoint;
  std::string linker_token_env = "WEBQA_LINKER_TOKEN";
  double linker_rho = 0.1;
};

// Path options given in the config file are relative to that file; ones
// given on the command line are relative to the working directory.
void resolve_paths(Settings& s, const std::vector<std::string>& argv,
                   const std::vector<std::pair<std::string, std::string*>>& path_options) {
  if (s.config.empty()) return;
  const fs::path base = fs::path(s.config).parent_path();
  for (const auto& [flag, value] : path_options) {
    bool on_command_line = false;
    for (const auto& a : argv) {
      if (a == flag || a.rfind(flag + "=", 0) == 0) on_command_line = true;
    }
    if (on_command_line || value->empty() || fs::path(*value).is_absolute()) continue;
    *value = (base / *value).lexically_normal().string();
  }
}

std::string require(const std::string& value, const std::string& name) {
  if (value.empty()) throw UsageError("missing required setting --" + name);
  return value;
}

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << content;
  if (!out) throw DataError("failed writing " + path.string());
}

std::string format_double(double v, int precision = 6) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(precision);
  os << v;
  return os.str();
}

// Everything a command needs: KB, snippet source, linker, pipeline.
class Context {
 public:
  explicit Context(const Settings& s) : settings_(s) {
    kb_ = load_kb({require(s.facts, "facts"), require(s.types, "types"), require(s.labels, "labels"),
                   require(s.schemas, "schemas")});
    if (s.live) {
      LiveSearchConfig cfg;
      cfg.endpoint = require(s.search_endpoint, "search-endpoint");
      cfg.api_key_env = s.search_key_env;
      cfg.requests_per_second = s.search_rate;
      cfg.results_per_request = s.search_results;
      for (const auto& p : s.search_params) {
        const auto eq = p.find('=');
        if (eq == std::string::npos) throw UsageError("--search-param expects key=value: " + p);
        cfg.extra_params[p.substr(0, eq)] = p.substr(eq + 1);
      }
      backend_ = std::make_unique<HttpSearchSource>(cfg);
      source_ = std::make_unique<CachingSource>(*backend_);
      if (!s.linker_endpoint.empty()) {
        linker_ = std::make_unique<RemoteLinker>(
            kb_, RemoteLinkerConfig{s.linker_endpoint, s.linker_token_env, s.linker_rho, {}});
      }
    } else {
      auto corpus = std::make_unique<FixtureCorpus>(FixtureCorpus::load_jsonl(require(s.corpus, "corpus")));
      corpus_size_ = corpus->size();
      source_ = std::move(corpus);
    }
    if (!linker_) linker_ = std::make_unique<DictionaryLinker>(kb_);
    relatedness_ = std::make_unique<LinkOverlapRelatedness>(kb_);

    PipelineOptions opts;
    opts.max_per_question = s.max_per_question;
    opts.workers = s.workers;
    opts.max_distance = s.max_distance;
    opts.hyperparams = {s.learning_rate, s.epochs, s.l2};
    opts.seed = s.seed;
    pipeline_ = std::make_unique<Pipeline>(kb_, *source_, *linker_, *relatedness_, opts);
  }

  const KnowledgeBase& kb() const { return kb_; }
  const Pipeline& pipeline() const { return *pipeline_; }
  std::optional<std::size_t> corpus_size() const { return corpus_size_; }

  const RelationSchema& relation(const std::string& name) const { return kb_.schema(name); }

  QuerySplit split(const std::string& relation) const {
    return sample_queries(kb_, relation, settings_.train_queries, settings_.test_queries,
                          settings_.split_seed);
  }

  fs::path templates_path(const std::string& relation) const {
    return fs::path(settings_.templates_dir) / (relation + ".json");
  }
  fs::path filter_path(const std::string& relation) const {
    return fs::path(settings_.models_dir) / (relation + ".filter.json");
  }
  fs::path ranker_path(const std::string& relation) const {
    return fs::path(settings_.models_dir) / (relation + ".ranker.json");
  }
  fs::path reports_dir() const { return settings_.reports_dir; }

  // The selected set when one was saved, otherwise every schema template.
  TemplateSet templates(const std::string& relation) const {
    const auto path = templates_path(relation);
    if (!fs::exists(path)) return {make_templates(kb_.schema(relation).templates), 0.0};
    std::ifstream in(path);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw DataError(path.string() + ": " + e.what());
    }
    auto stored = template_set_from_json(j);
    if (stored.relation != relation) {
      throw DataError(path.string() + ": holds templates for " + stored.relation);
    }
    return stored.set;
  }

  Models models(const std::string& relation, bool need_filter) const {
    Models m;
    m.ranker = load_required(ranker_path(relation), relation);
    if (need_filter) m.filter = load_required(filter_path(relation), relation);
    return m;
  }

 private:
  static LogisticModel load_required(const fs::path& path, const std::string& relation) {
    if (!fs::exists(path)) {
      throw DataError("model " + path.string() + " not found; run 'webqa train --relation " +
                      relation + "' first");
    }
    return load_model(path);
  }

  const Settings& settings_;
  KnowledgeBase kb_;
  std::unique_ptr<SnippetSource> backend_;
  std::unique_ptr<SnippetSource> source_;
  std::unique_ptr<Linker> linker_;
  std::unique_ptr<Relatedness> relatedness_;
  std::unique_ptr<Pipeline> pipeline_;
  std::optional<std::size_t> corpus_size_;
};

int cmd_load_check(const Settings& s, bool json) {
  Context ctx(s);
  const auto& kb = ctx.kb();
  std::size_t label_rows = 0;
  for (const auto& [surface, entities] : kb.labels()) label_rows += entities.size();
  nlohmann::json relations = nlohmann::json::object();
  for (const auto& [name, schema] : kb.schemas()) {
    relations[name] = {{"subject_type", schema.subject_type},
                       {"object_type", schema.object_type},
                       {"templates", schema.templates},
                       {"subjects_with_objects", kb.subjects_with_objects(name).size()}};
  }
  nlohmann::json out{{"entities", kb.entity_count()},
                     {"facts", kb.facts().size()},
                     {"labels", label_rows},
                     {"relations", relations}};
  if (ctx.corpus_size()) out["corpus_questions"] = *ctx.corpus_size();
  if (json) {
    std::cout << out.dump(2) << '\n';
    return 0;
  }
  std::cout << "entities: " << kb.entity_count() << '\n'
            << "facts: " << kb.facts().size() << '\n'
            << "labels (incl. canonical names): " << label_rows << '\n';
  if (ctx.corpus_size()) std::cout << "corpus questions: " << *ctx.corpus_size() << '\n';
  for (const auto& [name, schema] : kb.schemas()) {
    std::cout << "relation " << name << " (" << schema.subject_type << " -> " << schema.object_type
              << "): " << kb.subjects_with_objects(name).size() << " subjects, templates "
              << detail::join(schema.templates, ',') << '\n';
  }
  return 0;
}

void print_summary(const std::string& what, const TrainingSummary& t, const fs::path& path) {
  std::cout << what << ": " << t.positives << " positive / " << t.negatives
            << " negative examples, resampled to " << t.resampled_each << " per class, final loss "
            << format_double(t.final_loss) << " -> " << path.string() << '\n';
}

int cmd_train(const Settings& s, const std::string& relation) {
  Context ctx(s);
  ctx.relation(relation);
  const auto templates = ctx.templates(relation);
  const auto split = ctx.split(relation);
  const auto& pipeline = ctx.pipeline();

  const auto filter = pipeline.train_filter(split.train, templates.templates);
  const auto ranker = pipeline.train_ranker(split.train, templates.templates);
  for (const auto& path : {ctx.filter_path(relation), ctx.ranker_path(relation)}) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
  }
  save_model(filter.model, ctx.filter_path(relation));
  save_model(ranker.model, ctx.ranker_path(relation));

  std::cout << "relation " << relation << ", " << split.train.size() << " training queries, templates "
            << detail::join(templates.keywords(), ',') << '\n';
  print_summary("snippet filter", filter.summary, ctx.filter_path(relation));
  print_summary("answer ranker", ranker.summary, ctx.ranker_path(relation));
  return 0;
}

int cmd_select_templates(const Settings& s, const std::string& relation) {
  Context ctx(s);
  const auto candidates = make_templates(ctx.relation(relation).templates);
  const auto split = ctx.split(relation);
  TemplateEvaluator evaluate(ctx.pipeline(), relation, split.train, parse_ap_mode(s.ap_mode));
  const auto sweep = sweep_templates(candidates, evaluate);

  const auto json_path = ctx.templates_path(relation);
  const auto csv_path = ctx.reports_dir() / (relation + ".sweep.csv");
  write_file(json_path, template_set_to_json(relation, sweep.selected).dump(2) + "\n");
  write_file(csv_path, sweep_to_csv(sweep));

  std::cout << "size  greedy     baseline\n";
  for (std::size_t i = 0; i < sweep.baseline.size(); ++i) {
    std::cout << i + 1 << "     "
              << (i < sweep.greedy.size() ? format_double(sweep.greedy[i].map) : std::string("-"))
              << "   " << format_double(sweep.baseline[i].map) << '\n';
  }
  std::cout << "selected {" << detail::join(sweep.selected.keywords(), ',') << "} MAP "
            << format_double(sweep.selected.performance) << " -> " << json_path.string() << '\n';
  return 0;
}

int cmd_answer(const Settings& s, const std::string& subject, const std::string& relation,
               const std::string& snippets, bool json, bool timings) {
  Context ctx(s);
  ctx.relation(relation);
  const EntityId entity(subject);
  if (!ctx.kb().contains(entity)) throw UsageError("unknown subject: " + subject);
  const SnippetK k = parse_snippet_k(snippets);
  const auto templates = ctx.templates(relation);
  const auto models = ctx.models(relation, k.has_value());
  const auto answer = ctx.pipeline().answer({entity, relation}, templates.templates, models, k, s.workers);

  if (json) {
    nlohmann::json answers = nlohmann::json::array();
    for (const auto& a : answer.ranked) answers.push_back({{"entity", a.entity.name}, {"probability", a.probability}});
    nlohmann::json out{{"subject", subject},
                       {"relation", relation},
                       {"snippets", snippet_k_label(k)},
                       {"templates", templates.keywords()},
                       {"answers", answers}};
    std::cout << out.dump(2) << '\n';
  } else {
    std::cout << "rank  probability  entity\n";
    for (std::size_t i = 0; i < answer.ranked.size(); ++i) {
      std::cout << i + 1 << "     " << format_double(answer.ranked[i].probability) << "     "
                << answer.ranked[i].entity.name << '\n';
    }
    if (answer.ranked.empty()) std::cout << "(no answers)\n";
  }
  for (const auto& f : answer.evidence.failures) std::cerr << "warning: " << f << '\n';
  if (timings) {
    const auto& t = answer.evidence.timings;
    std::cerr << "timings (s): fetch " << format_double(t.fetch_s) << ", filter "
              << format_double(t.filter_s) << ", link+features " << format_double(t.link_s)
              << ", rank " << format_double(t.rank_s) << '\n';
  }
  return 0;
}

std::vector<SnippetK> parse_k_list(const std::string& list) {
  std::vector<SnippetK> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_snippet_k(text::collapse_whitespace(item)));
  if (out.empty()) throw UsageError("--snippets needs at least one value");
  return out;
}

int cmd_evaluate(const Settings& s, const std::string& relation, const std::string& snippets,
                 const std::string& query_set, bool timings) {
  Context ctx(s);
  ctx.relation(relation);
  const auto ks = parse_k_list(snippets);
  const auto split = ctx.split(relation);
  std::vector<KbcQuery> queries;
  if (query_set == "train" || query_set == "all") queries.insert(queries.end(), split.train.begin(), split.train.end());
  if (query_set == "test" || query_set == "all") queries.insert(queries.end(), split.test.begin(), split.test.end());

  const auto templates = ctx.templates(relation);
  bool need_filter = false;
  for (const auto& k : ks) need_filter = need_filter || k.has_value();
  const auto models = ctx.models(relation, need_filter);
  const auto mode = parse_ap_mode(s.ap_mode);

  for (const auto& k : ks) {
    const auto start = std::chrono::steady_clock::now();
    const auto report = run_benchmark(ctx.pipeline(), relation, templates, k, models, queries, mode);
    const auto stem = ctx.reports_dir() / (relation + ".k" + snippet_k_label(k));
    write_file(stem.string() + ".json", report_to_json(report).dump(2) + "\n");
    write_file(stem.string() + ".csv", report_to_csv(report));
    std::size_t flagged = 0;
    for (const auto& q : report.per_query) flagged += q.flagged ? 1 : 0;
    std::cout << "k=" << snippet_k_label(k) << " MAP " << format_double(report.map) << " over "
              << report.per_query.size() << " queries";
    if (flagged) std::cout << " (" << flagged << " flagged)";
    std::cout << " -> " << stem.string() << ".{json,csv}\n";
    if (timings) {
      std::cerr << "k=" << snippet_k_label(k) << " benchmark took "
                << format_double(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count())
                << " s\n";
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Knowledge base completion from web search snippets.\n"
               "Settings come from --config (TOML); command-line flags override the file.\n"
               "Relative paths in the config file resolve against the file's directory."};
  app.require_subcommand(1);
  app.fallthrough();
  Settings s;

  auto* config_opt = app.set_config("--config", "", "TOML config file");
  const std::string data_group = "Data";
  app.add_option("--facts", s.facts, "facts TSV (subject, relation, object)")->group(data_group);
  app.add_option("--types", s.types, "entity types TSV")->group(data_group);
  app.add_option("--labels", s.labels, "surface-form labels TSV")->group(data_group);
  app.add_option("--schemas", s.schemas, "relation schemas TSV")->group(data_group);
  app.add_option("--corpus", s.corpus, "snippet corpus JSONL")->group(data_group);
  app.add_option("--models-dir", s.models_dir, "directory for model JSON files")->capture_default_str()->group(data_group);
  app.add_option("--templates-dir", s.templates_dir, "directory for selected template sets")->capture_default_str()->group(data_group);
  app.add_option("--reports-dir", s.reports_dir, "directory for reports and curves")->capture_default_str()->group(data_group);

  const std::string run_group = "Pipeline";
  app.add_option("--max-per-question", s.max_per_question, "snippets fetched per question")
      ->capture_default_str()->check(CLI::PositiveNumber)->group(run_group);
  app.add_option("--filter-k", s.filter_k, "default snippet count for 'answer' (integer or all)")
      ->capture_default_str()->group(run_group);
  app.add_option("--max-distance", s.max_distance, "distance used when a snippet lacks the subject")
      ->capture_default_str()->group(run_group);
  app.add_option("--seed", s.seed, "training seed")->capture_default_str()->group(run_group);
  app.add_option("--split-seed", s.split_seed, "train/test query split seed")->capture_default_str()->group(run_group);
  app.add_option("--train-queries", s.train_queries, "training queries per relation")->capture_default_str()->group(run_group);
  app.add_option("--test-queries", s.test_queries, "test queries per relation")->capture_default_str()->group(run_group);
  app.add_option("--workers", s.workers, "worker threads (output does not depend on it)")
      ->capture_default_str()->check(CLI::PositiveNumber)->group(run_group);
  app.add_option("--ap-mode", s.ap_mode, "standard | list-normalized")->capture_default_str()->group(run_group);
  app.add_option("--learning-rate", s.learning_rate, "gradient descent step")->capture_default_str()->group(run_group);
  app.add_option("--epochs", s.epochs, "gradient descent epochs")->capture_default_str()->group(run_group);
  app.add_option("--l2", s.l2, "L2 penalty")->capture_default_str()->group(run_group);

  const std::string live_group = "Live adapters (only with --live)";
  app.add_flag("--live", s.live, "fetch snippets from the search endpoint instead of the corpus")->group(live_group);
  app.add_option("--search-endpoint", s.search_endpoint, "search API URL")->group(live_group);
  app.add_option("--search-key-env", s.search_key_env, "env var holding the search API key")->capture_default_str()->group(live_group);
  app.add_option("--search-rate", s.search_rate, "max search requests per second")->capture_default_str()->group(live_group);
  app.add_option("--search-results", s.search_results, "results per search request")->capture_default_str()->group(live_group);
  app.add_option("--search-param", s.search_params, "extra query parameter key=value")->group(live_group);
  app.add_option("--linker-endpoint", s.linker_endpoint, "remote entity linker URL (dictionary linker if unset)")->group(live_group);
  app.add_option("--linker-token-env", s.linker_token_env, "env var holding the linker token")->capture_default_str()->group(live_group);
  app.add_option("--linker-rho", s.linker_rho, "minimum linker confidence")->capture_default_str()->group(live_group);

  bool json = false;
  bool timings = false;
  std::string relation, subject, snippets, query_set = "test";

  auto* load_check = app.add_subcommand("load-check", "validate and summarize the KB and corpus");
  load_check->add_flag("--json", json, "machine-readable output");

  auto* train = app.add_subcommand("train", "train the snippet filter and answer ranker");
  train->add_option("--relation", relation, "relation name")->required();

  auto* select = app.add_subcommand("select-templates", "greedy template selection with baseline curve");
  select->add_option("--relation", relation, "relation name")->required();

  auto* answer = app.add_subcommand("answer", "rank answers for one <subject, relation, ?> query");
  answer->add_option("--subject", subject, "subject entity id")->required();
  answer->add_option("--relation", relation, "relation name")->required();
  answer->add_option("--snippets", snippets, "snippets kept by the filter (integer or all; default --filter-k)");
  answer->add_flag("--json", json, "machine-readable output");
  answer->add_flag("--timings", timings, "print per-stage durations to stderr");

  auto* evaluate = app.add_subcommand("evaluate", "benchmark MAP, one report per snippet count");
  evaluate->add_option("--relation", relation, "relation name")->required();
  snippets = "";
  evaluate->add_option("--snippets", snippets, "comma-separated snippet counts (default 10,20,30,all)");
  evaluate->add_option("--queries", query_set, "query set: test | train | all")
      ->capture_default_str()->check(CLI::IsMember({"test", "train", "all"}));
  evaluate->add_flag("--timings", timings, "print benchmark durations to stderr");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (config_opt->count() > 0) s.config = config_opt->as<std::string>();
  const std::vector<std::string> args(argv + 1, argv + argc);
  resolve_paths(s, args,
                {{"--facts", &s.facts}, {"--types", &s.types}, {"--labels", &s.labels},
                 {"--schemas", &s.schemas}, {"--corpus", &s.corpus}, {"--models-dir", &s.models_dir},
                 {"--templates-dir", &s.templates_dir}, {"--reports-dir", &s.reports_dir}});

  try {
    if (*load_check) return cmd_load_check(s, json);
    if (*train) return cmd_train(s, relation);
    if (*select) return cmd_select_templates(s, relation);
    if (*answer) return cmd_answer(s, subject, relation, snippets.empty() ? s.filter_k : snippets, json, timings);
    if (*evaluate) return cmd_evaluate(s, relation, snippets.empty() ? "10,20,30,all" : snippets, query_set, timings);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
