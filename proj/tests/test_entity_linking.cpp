#include <gtest/gtest.h>

#include "support.hpp"
#include "webqa/entity_linking.hpp"

using namespace webqa;
using webqa::testing::make_snippet;
using webqa::testing::fixture_corpus;
using webqa::testing::fixture_kb;

namespace {

const KbcQuery kMarvin{EntityId("Marvin_Minsky"), "wasBornIn"};

std::vector<Snippet> marvin_table_snippets() {
  const auto questions = generate_questions(kMarvin, make_templates({"born"}));
  auto all = fetch_snippets(fixture_corpus(), questions.front(), 50);
  all.erase(all.begin() + 2, all.end());
  return all;
}

std::set<EntityId> ids(const std::vector<CandidateAnswer>& cs) {
  std::set<EntityId> out;
  for (const auto& c : cs) out.insert(c.entity);
  return out;
}

class ThrowingLinker final : public Linker {
 public:
  std::vector<LinkedMention> link(std::string_view text) const override {
    if (text.find("boom") != std::string_view::npos) throw std::runtime_error("linker failed");
    return DictionaryLinker(fixture_kb()).link(text);
  }
};

}  // namespace

TEST(DictionaryLinker, NoHits) {
  DictionaryLinker linker(fixture_kb());
  EXPECT_TRUE(linker.link("nothing to see here ...").empty());
  EXPECT_TRUE(linker.link("").empty());
}

TEST(DictionaryLinker, LongestMatchWins) {
  std::vector<std::pair<EntityId, std::string>> types{{EntityId("New_York_City"), "city"},
                                                      {EntityId("New_York"), "state"}};
  const auto kb = KnowledgeBase::from_parts({}, types, {{"new york", EntityId("New_York")}}, {});
  DictionaryLinker linker(kb);
  const auto m = linker.link("born in New York City, to an eye surgeon");
  ASSERT_EQ(m.size(), 1u);
  EXPECT_EQ(m[0].entity, EntityId("New_York_City"));
  EXPECT_EQ(m[0].start, 2u);
  EXPECT_EQ(m[0].end, 5u);
  EXPECT_EQ(m[0].surface, "New York City,");
}

TEST(DictionaryLinker, AmbiguityResolvesToEntityWithMoreFacts) {
  std::vector<std::pair<EntityId, std::string>> types;
  for (const char* e : {"Henry_A", "Henry_B", "x1", "x2", "x3", "x4", "x5"}) types.emplace_back(EntityId(e), "t");
  std::vector<Fact> facts;
  for (const char* o : {"x1", "x2", "x3", "x4", "x5"}) facts.push_back({EntityId("Henry_B"), "r", EntityId(o)});
  for (const char* o : {"x1", "x2"}) facts.push_back({EntityId("Henry_A"), "r", EntityId(o)});
  const auto kb = KnowledgeBase::from_parts(
      facts, types, {{"Henry", EntityId("Henry_A")}, {"Henry", EntityId("Henry_B")}}, {});
  const auto m = DictionaryLinker(kb).link("a letter from Henry.");
  ASSERT_EQ(m.size(), 1u);
  EXPECT_EQ(m[0].entity, EntityId("Henry_B"));
}

TEST(DictionaryLinker, EqualFactCountsPickSmallerId) {
  std::vector<std::pair<EntityId, std::string>> types{{EntityId("B_Henry"), "t"}, {EntityId("A_Henry"), "t"}};
  const auto kb = KnowledgeBase::from_parts({}, types, {{"henry", EntityId("B_Henry")}, {"henry", EntityId("A_Henry")}}, {});
  EXPECT_EQ(DictionaryLinker(kb).link("Henry").at(0).entity, EntityId("A_Henry"));
}

TEST(DictionaryLinker, CaseInsensitiveWithPunctuation) {
  DictionaryLinker linker(fixture_kb());
  const auto m = linker.link("BIRTH: NEW YORK CITY, August 9 ... (Boston)");
  ASSERT_EQ(m.size(), 2u);
  EXPECT_EQ(m[0].entity, EntityId("New_York_City"));
  EXPECT_EQ(m[1].entity, EntityId("Boston"));
}

TEST(DictionaryLinker, SpansAreDisjointAndSorted) {
  DictionaryLinker linker(fixture_kb());
  for (const auto& [q, snippets] : fixture_corpus().entries()) {
    for (const auto& s : snippets) {
      const auto m = linker.link(s);
      for (std::size_t i = 0; i < m.size(); ++i) {
        EXPECT_LT(m[i].start, m[i].end);
        if (i > 0) {
          EXPECT_LE(m[i - 1].end, m[i].start) << s;
        }
      }
    }
  }
}

TEST(ExtractCandidates, EmptyAndDedup) {
  DictionaryLinker linker(fixture_kb());
  EXPECT_TRUE(extract_candidates({}, linker, kMarvin).candidates.empty());

  std::vector<Snippet> three;
  for (int r = 1; r <= 3; ++r) three.push_back(make_snippet("Visited Boston again.", r, 3));
  const auto out = extract_candidates(three, linker, kMarvin);
  ASSERT_EQ(out.candidates.size(), 1u);
  EXPECT_EQ(out.candidates[0].entity, EntityId("Boston"));
  EXPECT_EQ(out.candidates[0].mentions.size(), 3u);
}

TEST(ExtractCandidates, TableOneSnippetsYieldHenryAndNewYorkButNotSubject) {
  DictionaryLinker linker(fixture_kb());
  const auto snippets = marvin_table_snippets();
  const auto out = extract_candidates(snippets, linker, kMarvin);
  const auto found = ids(out.candidates);
  EXPECT_TRUE(found.contains(EntityId("New_York_City")));
  EXPECT_TRUE(found.contains(EntityId("Henry_Minsky")));
  EXPECT_TRUE(found.contains(EntityId("Boston")));
  EXPECT_FALSE(found.contains(EntityId("Marvin_Minsky")));

  // Mention bookkeeping: the candidates account for every non-subject mention.
  std::size_t linked = 0;
  for (const auto& s : snippets) {
    for (const auto& m : linker.link(s.text)) linked += m.entity == kMarvin.subject ? 0 : 1;
  }
  std::size_t grouped = 0;
  for (const auto& c : out.candidates) grouped += c.mentions.size();
  EXPECT_EQ(grouped, linked);
  EXPECT_EQ(out.total_mentions, linked);
}

TEST(ExtractCandidates, LinkerFailuresAreRecorded) {
  ThrowingLinker linker;
  std::vector<Snippet> snippets{make_snippet("boom", 1, 2), make_snippet("Boston", 2, 2)};
  const auto out = extract_candidates(snippets, linker, kMarvin);
  ASSERT_EQ(out.failures.size(), 1u);
  EXPECT_EQ(out.failures[0].snippet_index, 0u);
  EXPECT_EQ(ids(out.candidates), (std::set<EntityId>{EntityId("Boston")}));
}

TEST(TypeFilter, WrongTypesAreDiscarded) {
  const auto& kb = fixture_kb();
  std::vector<CandidateAnswer> cs{{EntityId("New_York_City"), {}}, {EntityId("Henry_Minsky"), {}}};
  const auto split = partition_by_type(cs, kb, "wasBornIn");
  EXPECT_EQ(ids(split.kept), (std::set<EntityId>{EntityId("New_York_City")}));
  EXPECT_EQ(ids(split.rejected), (std::set<EntityId>{EntityId("Henry_Minsky")}));
  EXPECT_TRUE(type_filter({}, kb, "wasBornIn").empty());
  std::vector<CandidateAnswer> cities{{EntityId("Boston"), {}}, {EntityId("Paris"), {}}};
  const auto same = type_filter(cities, kb, "wasBornIn");
  ASSERT_EQ(same.size(), 2u);
  EXPECT_EQ(same[0].entity, EntityId("Boston"));
  EXPECT_EQ(same[1].entity, EntityId("Paris"));
  EXPECT_THROW(type_filter(cities, kb, "bornIn"), UsageError);
}

TEST(TypeFilter, Idempotent) {
  DictionaryLinker linker(fixture_kb());
  const auto snippets = marvin_table_snippets();
  const auto once = type_filter(extract_candidates(snippets, linker, kMarvin).candidates, fixture_kb(), "wasBornIn");
  const auto twice = type_filter(once, fixture_kb(), "wasBornIn");
  EXPECT_EQ(ids(once), ids(twice));
  EXPECT_EQ(once.size(), twice.size());
  EXPECT_FALSE(ids(once).contains(EntityId("Henry_Minsky")));
}
