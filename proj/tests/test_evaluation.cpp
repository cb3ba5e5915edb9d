#include <gtest/gtest.h>

#include <algorithm>
#include <functional>

#include "fixture_pipeline.hpp"
#include "webqa/evaluation.hpp"

using namespace webqa;
using webqa::testing::FixturePipeline;

namespace {

std::vector<EntityId> ents(std::initializer_list<const char*> names) {
  std::vector<EntityId> out;
  for (const char* n : names) out.emplace_back(n);
  return out;
}

// Sum over relevant positions of (relevant items in the prefix / prefix length),
// over |truth|; each prefix is recounted from scratch.
double ap_oracle(const std::vector<EntityId>& ranked, const std::set<EntityId>& truth) {
  if (truth.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t k = 1; k <= ranked.size(); ++k) {
    if (!truth.contains(ranked[k - 1])) continue;
    std::size_t rel = 0;
    for (std::size_t i = 0; i < k; ++i) rel += truth.count(ranked[i]);
    sum += static_cast<double>(rel) / static_cast<double>(k);
  }
  return sum / static_cast<double>(truth.size());
}

void for_each_arrangement(const std::vector<EntityId>& universe, std::size_t max_len,
                          const std::function<void(const std::vector<EntityId>&)>& fn) {
  std::vector<EntityId> current;
  std::vector<bool> used(universe.size());
  std::function<void()> rec = [&] {
    fn(current);
    if (current.size() == max_len) return;
    for (std::size_t i = 0; i < universe.size(); ++i) {
      if (used[i]) continue;
      used[i] = true;
      current.push_back(universe[i]);
      rec();
      current.pop_back();
      used[i] = false;
    }
  };
  rec();
}

}  // namespace

TEST(AveragePrecision, Examples) {
  EXPECT_EQ(average_precision(ents({"a", "b"}), {}), 0.0);
  EXPECT_EQ(average_precision(ents({"b", "a"}), {EntityId("a"), EntityId("b")}), 1.0);
  EXPECT_DOUBLE_EQ(average_precision(ents({"w", "r1", "r2"}), {EntityId("r1"), EntityId("r2")}), 7.0 / 12.0);
  EXPECT_EQ(average_precision({}, {EntityId("a")}), 0.0);
  EXPECT_EQ(average_precision(ents({"x", "y"}), {EntityId("a")}), 0.0);
  EXPECT_THROW(average_precision(ents({"a", "a"}), {EntityId("a")}), UsageError);
}

TEST(AveragePrecision, ListNormalizedDividesByListLength) {
  const auto r = ents({"w", "r1", "r2"});
  const std::set<EntityId> t{EntityId("r1"), EntityId("r2")};
  EXPECT_DOUBLE_EQ(average_precision(r, t, ApMode::kListNormalized), (7.0 / 12.0) / 3.0);
  EXPECT_EQ(parse_ap_mode("list-normalized"), ApMode::kListNormalized);
  EXPECT_EQ(parse_ap_mode(to_string(ApMode::kStandard)), ApMode::kStandard);
  EXPECT_THROW(parse_ap_mode("bogus"), UsageError);
}

TEST(AveragePrecision, ExhaustiveOracleEquivalence) {
  const auto universe = ents({"t1", "t2", "t3", "n1", "n2", "n3"});
  const std::vector<std::set<EntityId>> truths{
      {}, {EntityId("t1")}, {EntityId("t1"), EntityId("t2")}, {EntityId("t1"), EntityId("t2"), EntityId("t3")}};
  std::size_t lists = 0;
  for (const auto& truth : truths) {
    for_each_arrangement(universe, 6, [&](const std::vector<EntityId>& ranked) {
      ++lists;
      const double got = average_precision(ranked, truth);
      ASSERT_NEAR(got, ap_oracle(ranked, truth), 1e-12);
      ASSERT_GE(got, 0.0);
      ASSERT_LE(got, 1.0);
      // AP is 1 exactly when every truth entity is ranked ahead of every other entity.
      bool perfect = !truth.empty() && ranked.size() >= truth.size();
      for (std::size_t i = 0; perfect && i < truth.size(); ++i) perfect = truth.contains(ranked[i]);
      ASSERT_EQ(got == 1.0, perfect);
    });
  }
  EXPECT_EQ(lists, 4u * 1957u);
}

TEST(AveragePrecision, InvariantBelowLastRelevantRank) {
  const std::set<EntityId> truth{EntityId("a"), EntityId("b")};
  const double base = average_precision(ents({"x", "a", "b", "p", "q", "r"}), truth);
  EXPECT_EQ(average_precision(ents({"x", "a", "b", "r", "p", "q"}), truth), base);
  EXPECT_EQ(average_precision(ents({"x", "a", "b", "q", "r", "p"}), truth), base);
}

TEST(PrAuc, KnownValues) {
  EXPECT_DOUBLE_EQ(pr_auc(std::vector<double>{0.9, 0.8, 0.1}, std::vector<int>{1, 1, 0}), 1.0);
  // All tied: one threshold at full recall with precision = prevalence.
  EXPECT_DOUBLE_EQ(pr_auc(std::vector<double>{0.5, 0.5, 0.5, 0.5}, std::vector<int>{1, 0, 0, 0}), 0.25);
  // Negative first, then positive: precision 1/2 when recall jumps to 1.
  EXPECT_DOUBLE_EQ(pr_auc(std::vector<double>{0.9, 0.1}, std::vector<int>{0, 1}), 0.5);
  EXPECT_EQ(pr_auc(std::vector<double>{0.3}, std::vector<int>{0}), 0.0);
}

TEST(MeanAveragePrecision, Examples) {
  std::vector<QueryEvaluation> one(1);
  one[0].ap = 0.4;
  EXPECT_EQ(mean_average_precision(one), 0.4);
  std::vector<QueryEvaluation> two(2);
  two[1].ap = 1.0;
  EXPECT_EQ(mean_average_precision(two), 0.5);
  auto doubled = two;
  doubled.insert(doubled.end(), two.begin(), two.end());
  EXPECT_EQ(mean_average_precision(doubled), mean_average_precision(two));
  EXPECT_THROW(mean_average_precision({}), UsageError);
}

class FixtureBenchmark : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    fx_ = new FixturePipeline();
    models_ = new Models(fx_->train(templates()));
  }
  static void TearDownTestSuite() {
    delete models_;
    delete fx_;
  }
  static std::vector<QuestionTemplate> templates() { return make_templates({"birth", "birthplace"}); }
  static TemplateSet template_set() { return {templates(), 0.0}; }

  static FixturePipeline* fx_;
  static Models* models_;
};

FixturePipeline* FixtureBenchmark::fx_ = nullptr;
Models* FixtureBenchmark::models_ = nullptr;

TEST_F(FixtureBenchmark, MapIsMeanOfPerQueryAp) {
  const auto r = run_benchmark(fx_->pipeline, "wasBornIn", template_set(), 10, *models_, fx_->split.test);
  ASSERT_EQ(r.per_query.size(), 10u);
  // Recompute from the CSV dump alone.
  std::stringstream csv(report_to_csv(r));
  std::string line;
  std::getline(csv, line);
  EXPECT_EQ(line, "relation,query_subject,ap,k,templates");
  double sum = 0;
  int rows = 0;
  while (std::getline(csv, line)) {
    std::vector<std::string> f;
    std::stringstream ls(line);
    for (std::string x; std::getline(ls, x, ',');) f.push_back(x);
    ASSERT_EQ(f.size(), 5u);
    EXPECT_EQ(f[0], "wasBornIn");
    EXPECT_EQ(f[3], "10");
    EXPECT_EQ(f[4], "birth;birthplace");
    sum += std::stod(f[2]);
    ++rows;
  }
  EXPECT_EQ(rows, 10);
  EXPECT_NEAR(r.map, sum / rows, 1e-15);
  for (const auto& q : r.per_query) {
    std::vector<EntityId> ids;
    for (const auto& a : q.ranked) ids.push_back(a.entity);
    EXPECT_EQ(q.ap, average_precision(ids, q.truth));
  }
}

TEST_F(FixtureBenchmark, KEqualToSnippetCountMatchesNoFilter) {
  const auto& q = fx_->split.test.front();
  const auto questions = generate_questions(q, templates());
  const auto total = fetch_all(webqa::testing::fixture_corpus(), questions, 50).snippets.size();
  const std::vector<KbcQuery> one{q};
  const auto a = run_benchmark(fx_->pipeline, "wasBornIn", template_set(), std::nullopt, *models_, one);
  const auto b = run_benchmark(fx_->pipeline, "wasBornIn", template_set(), total, *models_, one);
  ASSERT_EQ(a.per_query[0].ranked.size(), b.per_query[0].ranked.size());
  for (std::size_t i = 0; i < a.per_query[0].ranked.size(); ++i) {
    EXPECT_EQ(a.per_query[0].ranked[i].entity, b.per_query[0].ranked[i].entity);
    EXPECT_EQ(a.per_query[0].ranked[i].probability, b.per_query[0].ranked[i].probability);
  }
  EXPECT_EQ(a.map, b.map);
}

TEST_F(FixtureBenchmark, ZeroCandidatesScoreZeroAndAreFlagged) {
  // No corpus entry mentions this template, so nothing is fetched.
  const TemplateSet silent{make_templates({"zodiac"}), 0.0};
  const std::vector<KbcQuery> q{fx_->split.test.front()};
  const auto r = run_benchmark(fx_->pipeline, "wasBornIn", silent, std::nullopt, *models_, q);
  ASSERT_EQ(r.per_query.size(), 1u);
  EXPECT_EQ(r.per_query[0].ap, 0.0);
  EXPECT_TRUE(r.per_query[0].flagged);
  EXPECT_EQ(r.per_query[0].note, "no candidates");
  EXPECT_EQ(r.map, 0.0);
}

TEST_F(FixtureBenchmark, DeterministicAcrossRunsAndWorkerCounts) {
  PipelineOptions eight;
  eight.workers = 8;
  FixturePipeline parallel(eight);
  const auto queries = fx_->all_queries();
  const auto a = report_to_json(run_benchmark(fx_->pipeline, "wasBornIn", template_set(), 20, *models_, queries)).dump();
  const auto b = report_to_json(run_benchmark(fx_->pipeline, "wasBornIn", template_set(), 20, *models_, queries)).dump();
  const auto c = report_to_json(run_benchmark(parallel.pipeline, "wasBornIn", template_set(), 20, *models_, queries)).dump();
  EXPECT_EQ(a, b);
  EXPECT_EQ(a, c);
}

TEST_F(FixtureBenchmark, MissingModelsAreUsageErrors) {
  Models none;
  EXPECT_THROW(run_benchmark(fx_->pipeline, "wasBornIn", template_set(), std::nullopt, none, fx_->split.test), UsageError);
  Models ranker_only;
  ranker_only.ranker = models_->ranker;
  EXPECT_THROW(run_benchmark(fx_->pipeline, "wasBornIn", template_set(), 10, ranker_only, fx_->split.test), UsageError);
  EXPECT_THROW(run_benchmark(fx_->pipeline, "bornIn", template_set(), std::nullopt, *models_, fx_->split.test), UsageError);
}

TEST_F(FixtureBenchmark, SingleCandidateSweepGivesEqualCurves) {
  TemplateEvaluator evaluate(fx_->pipeline, "wasBornIn", fx_->split.train);
  const auto sweep = sweep_templates(make_templates({"birth"}), evaluate);
  ASSERT_EQ(sweep.greedy.size(), 1u);
  ASSERT_EQ(sweep.baseline.size(), 1u);
  EXPECT_EQ(sweep.greedy[0].map, sweep.baseline[0].map);
  EXPECT_EQ(sweep.selected.keywords(), (std::vector<std::string>{"birth"}));
}

TEST_F(FixtureBenchmark, GreedyBeatsBaselineOnOverlappingTemplates) {
  TemplateEvaluator evaluate(fx_->pipeline, "wasBornIn", fx_->split.train);
  const auto candidates = make_templates(webqa::testing::fixture_kb().schema("wasBornIn").templates);
  const auto sweep = sweep_templates(candidates, evaluate);
  ASSERT_EQ(sweep.greedy.size(), 4u);
  ASSERT_EQ(sweep.baseline.size(), 4u);
  // The two individually best templates return identical snippets.
  EXPECT_EQ(sweep.baseline[1].templates, (std::vector<std::string>{"birth", "born"}));
  EXPECT_GE(sweep.greedy[1].map, sweep.baseline[1].map);
  auto best = [](const std::vector<CurvePoint>& curve) {
    const CurvePoint* b = &curve.front();
    for (const auto& p : curve) {
      if (p.map > b->map) b = &p;
    }
    return *b;
  };
  EXPECT_GE(best(sweep.greedy).map, best(sweep.baseline).map);
  EXPECT_LE(best(sweep.greedy).size, best(sweep.baseline).size);
  EXPECT_EQ(sweep.selected.templates.size(), 2u);
  const auto csv = sweep_to_csv(sweep);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "set_size,algorithm,map");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 9);
}
