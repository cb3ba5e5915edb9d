// End-to-end library use on the bundled fixture: pick templates, train
// both models on the training queries, then rank birthplaces for one person.
//
//   complete_fact [fixture-dir] [subject]

#include <iomanip>
#include <iostream>

#include "webqa/evaluation.hpp"
#include "webqa/pipeline.hpp"

int main(int argc, char** argv) {
  using namespace webqa;
  const std::filesystem::path dir = argc > 1 ? argv[1] : WEBQA_FIXTURE_DIR;
  const std::string subject = argc > 2 ? argv[2] : "Marvin_Minsky";
  const std::string relation = "wasBornIn";

  try {
    const auto kb = load_kb({dir / "facts.tsv", dir / "types.tsv", dir / "labels.tsv", dir / "schemas.tsv"});
    const auto corpus = FixtureCorpus::load_jsonl(dir / "corpus.jsonl");
    DictionaryLinker linker(kb);
    LinkOverlapRelatedness related(kb);
    Pipeline pipeline(kb, corpus, linker, related, PipelineOptions{});

    const auto split = sample_queries(kb, relation, 30, 10, 7);
    TemplateEvaluator evaluate(pipeline, relation, split.train);
    const auto selected = sweep_templates(make_templates(kb.schema(relation).templates), evaluate).selected;
    std::cout << "templates:";
    for (const auto& k : selected.keywords()) std::cout << ' ' << k;
    std::cout << "  (training MAP " << selected.performance << ")\n";

    Models models;
    models.filter = pipeline.train_filter(split.train, selected.templates).model;
    models.ranker = pipeline.train_ranker(split.train, selected.templates).model;

    const auto result = pipeline.answer({EntityId(subject), relation}, selected.templates, models, std::size_t{10});
    std::cout << subject << ' ' << relation << " ?\n";
    for (std::size_t i = 0; i < result.ranked.size() && i < 5; ++i) {
      std::cout << "  " << i + 1 << ". " << std::left << std::setw(16) << result.ranked[i].entity.name
                << std::fixed << std::setprecision(3) << result.ranked[i].probability << '\n';
    }
    if (result.ranked.empty()) std::cout << "  no candidates found\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
